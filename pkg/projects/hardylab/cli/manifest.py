#!/usr/bin/env python3
"""
Run manifests and the output writer that feeds them
"""

import logging
from datetime import datetime
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

import numpy as np
from pydantic import BaseModel, Field

from .. import __version__
from ..core.grid import GridFunction
from ..core.persistence import dump_blocks, dump_grid_function, write_csv, write_json

logger = logging.getLogger(__name__)

MANIFEST_NAME = "manifest.json"


class OutputRecord(BaseModel):
    """One written file with its checksum"""
    path: str = Field(..., description="Path relative to the run directory")
    sha256: str


class CommandRecord(BaseModel):
    """Outputs and outcome of one executed command"""
    command: str
    outputs: List[OutputRecord] = Field(default_factory=list)
    contracts: Dict[str, bool] = Field(default_factory=dict)
    wall_seconds: float = Field(default=0.0, ge=0)

    @property
    def passed(self) -> bool:
        return all(self.contracts.values())


class RunManifest(BaseModel):
    """What a run produced, with enough to reproduce and verify it"""
    config_hash: str
    seed: int = Field(..., ge=0)
    tool_version: str = __version__
    created_at: str = Field(default_factory=lambda: datetime.now().isoformat())
    commands: List[CommandRecord] = Field(default_factory=list)
    environment: Dict[str, Any] = Field(default_factory=dict)
    metrics: Dict[str, Any] = Field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(record.passed for record in self.commands)

    def checksums(self) -> Dict[str, str]:
        return {out.path: out.sha256 for record in self.commands for out in record.outputs}


class OutputWriter:
    """Writes files under the run directory and records their checksums"""

    def __init__(self, root: Path, config_hash: str, command: str):
        self.root = Path(root)
        self.config_hash = config_hash
        self.record = CommandRecord(command=command)

    def _track(self, path: Path, digest: str) -> None:
        self.record.outputs.append(OutputRecord(path=path.relative_to(self.root).as_posix(), sha256=digest))

    def path(self, name: str) -> Path:
        return self.root / name

    def json(self, name: str, payload: Any) -> Path:
        path = self.path(name)
        body = payload.model_dump(mode="json") if isinstance(payload, BaseModel) else payload
        self._track(path, write_json(path, {"config_hash": self.config_hash, "data": body}))
        return path

    def csv(self, name: str, rows: Sequence[Dict[str, Any]]) -> Path:
        path = self.path(name)
        stamped = [{"config_hash": self.config_hash, **row} for row in rows]
        self._track(path, write_csv(path, stamped))
        return path

    def grid_function(self, stem: str, f: GridFunction) -> Path:
        stem_path = self.path(stem)
        for written, digest in dump_grid_function(stem_path, f).items():
            self._track(Path(written), digest)
        return stem_path

    def blocks(self, name: str, blocks: Sequence[np.ndarray]) -> List[List[int]]:
        path = self.path(name)
        digest, offsets = dump_blocks(path, blocks)
        self._track(path, digest)
        return [list(pair) for pair in offsets]

    def contract(self, name: str, passed: bool) -> bool:
        self.record.contracts[name] = bool(passed)
        if not passed:
            logger.warning(f"⚠️ Contract {name} failed for {self.record.command}")
        return bool(passed)


def write_manifest(manifest: RunManifest, out_dir: Path, name: Optional[str] = None) -> Path:
    """Atomic JSON write of the manifest"""
    path = Path(out_dir) / (name or MANIFEST_NAME)
    write_json(path, manifest.model_dump(mode="json"))
    logger.info(f"✅ Manifest written to {path}")
    return path
