#!/usr/bin/env python3
"""
Integration tests for the hardylab command-line entry point
"""

import json
import math
import os

import pytest

from hardylab import build_parser, main
from projects.hardylab.cli.commands import COMMANDS, run
from projects.hardylab.cli.config import parse_config
from projects.hardylab.core.persistence import read_csv, read_json, sha256_file

pytestmark = [pytest.mark.integration, pytest.mark.cli]


def _manifest(out_dir: str, command: str) -> dict:
    return read_json(os.path.join(out_dir, f"manifest_{command.replace('-', '_')}.json"))


def _write_config(temp_dir: str, data: dict, name: str = "config.json") -> str:
    path = os.path.join(temp_dir, name)
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(data, handle)
    return path


class TestArguments:
    """Test argument parsing and usage errors"""

    def test_commands_listed(self):
        parser = build_parser()
        args = parser.parse_args(["norm", "--config", "c.json", "--seed", "5", "--threads", "2"])
        assert args.command == "norm"
        assert args.seed == 5
        assert args.threads == 2
        assert set(COMMANDS) == {"certify-weight", "norm", "maximal", "decompose", "validate-atoms",
                                 "reconstruct", "cz-bench", "duality", "sweep"}

    def test_unknown_command_exits_with_config_code(self, config_file):
        assert main(["integrate", "--config", config_file]) == 1

    def test_missing_config_flag(self):
        assert main(["norm"]) == 1

    def test_missing_config_file(self, temp_dir):
        assert main(["norm", "--config", os.path.join(temp_dir, "absent.json"), "--out", temp_dir]) == 1

    def test_invalid_config(self, temp_dir, config_data, capsys):
        config_data["grid"]["J"] = 2
        path = _write_config(temp_dir, config_data)
        assert main(["norm", "--config", path, "--out", temp_dir]) == 1
        report = json.loads(capsys.readouterr().err.strip().splitlines()[-1])
        assert report["code"] == "config_invalid"
        assert report["command"] == "norm"

    def test_seed_out_of_range(self, config_file, temp_dir):
        assert main(["norm", "--config", config_file, "--out", temp_dir, "--seed", str(2 ** 64)]) == 1

    def test_reconstruct_without_decomposition(self, config_file, temp_dir):
        assert main(["reconstruct", "--config", config_file, "--out", temp_dir]) == 1


class TestCertifyWeight:
    """Test the certify-weight command end to end"""

    def test_identity_weight(self, config_file, temp_dir):
        code = main(["certify-weight", "--config", config_file, "--out", temp_dir])
        manifest = _manifest(temp_dir, "certify-weight")
        assert code == (0 if all(manifest["commands"][0]["contracts"].values()) else 2)
        certificate = read_json(os.path.join(temp_dir, "certificate.json"))
        assert certificate["config_hash"] == manifest["config_hash"]
        assert certificate["data"]["ap_char"] == pytest.approx(1.0, rel=1e-2)
        assert certificate["data"]["m"] == 2
        for name in ("certificate.csv", "reverse_holder.csv", "lh.csv"):
            assert os.path.exists(os.path.join(temp_dir, name))

    def test_manifest_checksums(self, config_file, temp_dir):
        main(["certify-weight", "--config", config_file, "--out", temp_dir])
        manifest = _manifest(temp_dir, "certify-weight")
        assert manifest["seed"] == 11
        assert manifest["environment"]["threads"] >= 1
        for output in manifest["commands"][0]["outputs"]:
            assert sha256_file(os.path.join(temp_dir, output["path"])) == output["sha256"]

    def test_outputs_are_deterministic(self, config_file, temp_dir):
        first, second = os.path.join(temp_dir, "a"), os.path.join(temp_dir, "b")
        main(["certify-weight", "--config", config_file, "--out", first])
        main(["certify-weight", "--config", config_file, "--out", second, "--threads", "2"])
        assert (_manifest(first, "certify-weight")["commands"][0]["outputs"]
                == _manifest(second, "certify-weight")["commands"][0]["outputs"])


class TestNorm:
    """Test the norm command and certificate reuse"""

    def test_norm_rows(self, config_file, temp_dir):
        main(["certify-weight", "--config", config_file, "--out", temp_dir])
        code = main(["norm", "--config", config_file, "--out", temp_dir])
        assert code in (0, 2)
        rows = read_csv(os.path.join(temp_dir, "norm.csv"))
        assert len(rows) == 2
        assert all(float(row["hardy_norm"]) > 0 for row in rows)
        summary = read_json(os.path.join(temp_dir, "norm.json"))["data"]
        assert summary["members"] == 2
        assert summary["ratio_bracket"] >= 1.0

    def test_seed_flag_changes_hash(self, config_data, temp_dir):
        config = parse_config(config_data)
        first = run("norm", config, out_dir=os.path.join(temp_dir, "a"), seed=1)
        second = run("norm", config, out_dir=os.path.join(temp_dir, "b"), seed=2)
        assert first.seed == 1
        assert second.seed == 2
        assert first.config_hash != second.config_hash


@pytest.mark.slow
class TestDecomposeAndReconstruct:
    """Test decompose followed by a bit-exact reconstruct"""

    def test_round_trip(self, config_file, temp_dir):
        assert main(["decompose", "--config", config_file, "--out", temp_dir]) in (0, 2)
        rows = read_csv(os.path.join(temp_dir, "decompose.csv"))
        assert len(rows) == 2
        assert all(math.isfinite(float(row["relative_error"])) for row in rows)
        assert main(["reconstruct", "--config", config_file, "--out", temp_dir]) == 0
        rebuilt = read_csv(os.path.join(temp_dir, "reconstruct.csv"))
        assert [row["bit_exact"] for row in rebuilt] == ["True", "True"]

    def test_reconstruct_rejects_other_config(self, config_file, config_data, temp_dir):
        main(["decompose", "--config", config_file, "--out", temp_dir])
        config_data["suite"]["seed"] = 12
        other = _write_config(temp_dir, config_data, "other.json")
        assert main(["reconstruct", "--config", other, "--out", temp_dir]) == 1


@pytest.mark.slow
class TestRemainingCommands:
    """Every other command produces its outputs and a manifest"""

    @pytest.mark.parametrize("command,outputs", [
        ("maximal", ["maximal_equivalence.csv", "maximal_boundedness.csv"]),
        ("validate-atoms", ["atoms.csv", "atoms.json", "fs_checks.csv"]),
        ("cz-bench", ["kernel_certificate.json", "cz_bench.csv", "cz_moments.csv", "cz_decay.csv"]),
        ("sweep", ["sweep.csv"]),
    ])
    def test_command(self, config_file, temp_dir, command, outputs):
        code = main([command, "--config", config_file, "--out", temp_dir])
        manifest = _manifest(temp_dir, command)
        contracts = manifest["commands"][0]["contracts"]
        assert code == (0 if all(contracts.values()) else 2)
        for name in outputs:
            assert os.path.exists(os.path.join(temp_dir, name))

    def test_cz_bench_checks_pipeline_atoms(self, config_file, temp_dir):
        main(["cz-bench", "--config", config_file, "--out", temp_dir])
        contracts = _manifest(temp_dir, "cz-bench")["commands"][0]["contracts"]
        assert "moments_preserved" in contracts
        moments = read_csv(os.path.join(temp_dir, "cz_moments.csv"))
        decay = read_csv(os.path.join(temp_dir, "cz_decay.csv"))
        pipeline = [row for row in decay if row["source"] == "pipeline"]
        assert len(pipeline) == len(moments)
        assert contracts["moments_preserved"] == all(row["passed"] == "True" for row in moments)
        assert any(row["source"] == "synthetic" for row in decay)
        for row in decay:
            if row["passed"] != "True":
                assert row["exemption"]

    def test_duality_needs_small_exponent(self, config_file, temp_dir):
        assert main(["duality", "--config", config_file, "--out", temp_dir]) == 2

    def test_duality_annihilates_polynomials(self, config_data, temp_dir):
        config_data["exponent"]["params"]["p"] = 1.0
        path = _write_config(temp_dir, config_data, "p_one.json")
        code = main(["duality", "--config", path, "--out", temp_dir])
        assert os.path.exists(os.path.join(temp_dir, "duality.csv"))
        assert code in (0, 2)
        contracts = _manifest(temp_dir, "duality")["commands"][0]["contracts"]
        assert contracts["polynomials_annihilated"]
