"""
Atomic, byte-deterministic output files: JSON, CSV and raw float64 grid dumps.
"""

import csv
import hashlib
import io
import json
import logging
import math
import os
import tempfile
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np

from .errors import ConfigInvalid
from .grid import Grid, GridFunction

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]
RAW_DTYPE = "<f8"


def sha256_bytes(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def sha256_file(path: PathLike) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as handle:
        for block in iter(lambda: handle.read(1 << 20), b""):
            digest.update(block)
    return digest.hexdigest()


def atomic_write_bytes(path: PathLike, data: bytes) -> str:
    """Write through a temp file in the target directory, then os.replace"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=str(path.parent), prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as handle:
            handle.write(data)
        os.replace(tmp, path)
    except Exception:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return sha256_bytes(data)


def _json_default(value: Any) -> Any:
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, (np.floating, np.integer, np.bool_)):
        return value.item()
    if isinstance(value, Path):
        return str(value)
    if hasattr(value, "model_dump"):
        return value.model_dump(mode="json")
    raise TypeError(f"Object of type {type(value).__name__} is not JSON serializable")


def _finite_floats(value: Any) -> Any:
    """Replace non-finite floats by strings so the JSON stays standard"""
    if isinstance(value, float) and not math.isfinite(value):
        return "inf" if value > 0 else ("-inf" if value < 0 else "nan")
    if isinstance(value, dict):
        return {k: _finite_floats(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_finite_floats(v) for v in value]
    return value


def canonical_json(obj: Any) -> str:
    plain = json.loads(json.dumps(obj, default=_json_default))
    return json.dumps(_finite_floats(plain), sort_keys=True, indent=2) + "\n"


def write_json(path: PathLike, obj: Any) -> str:
    return atomic_write_bytes(path, canonical_json(obj).encode("utf-8"))


def read_json(path: PathLike) -> Any:
    with open(path, "r", encoding="utf-8") as handle:
        return json.load(handle)


def write_csv(path: PathLike, rows: Sequence[Dict[str, Any]],
              fieldnames: Optional[List[str]] = None) -> str:
    """UTF-8 CSV with a header row"""
    if fieldnames is None:
        fieldnames = []
        for row in rows:
            for key in row:
                if key not in fieldnames:
                    fieldnames.append(key)
    buffer = io.StringIO()
    writer = csv.DictWriter(buffer, fieldnames=fieldnames, lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({k: _csv_value(row.get(k)) for k in fieldnames})
    return atomic_write_bytes(path, buffer.getvalue().encode("utf-8"))


def read_csv(path: PathLike) -> List[Dict[str, str]]:
    with open(path, "r", encoding="utf-8", newline="") as handle:
        return list(csv.DictReader(handle))


def _csv_value(value: Any) -> Any:
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if value is None:
        return ""
    return value


# ============================================================================
# RAW GRID DUMPS
# ============================================================================

def grid_sidecar(grid: Grid, codomain: str, m: int, **extra: Any) -> Dict[str, Any]:
    sidecar = {"n": grid.n, "J": grid.J, "L_box": grid.box, "codomain": codomain, "m": m}
    sidecar.update(extra)
    return sidecar


def dump_grid_function(stem: PathLike, f: GridFunction) -> Dict[str, str]:
    """Write <stem>.bin (little-endian float64, row-major) and <stem>.json"""
    stem = Path(stem)
    data = np.ascontiguousarray(f.samples, dtype=RAW_DTYPE).tobytes()
    bin_path = stem.with_suffix(".bin")
    json_path = stem.with_suffix(".json")
    checksums = {
        str(bin_path): atomic_write_bytes(bin_path, data),
        str(json_path): write_json(json_path, grid_sidecar(f.grid, f.codomain, f.m))
    }
    logger.debug(f"Dumped {f.codomain} grid function to {bin_path}")
    return checksums


def load_grid_function(path: PathLike) -> GridFunction:
    """Read a dump written by dump_grid_function (either .bin or .json path)"""
    stem = Path(path).with_suffix("")
    sidecar = read_json(stem.with_suffix(".json"))
    try:
        grid = Grid(int(sidecar["n"]), int(sidecar["J"]), float(sidecar["L_box"]))
        codomain = sidecar["codomain"]
        m = int(sidecar["m"])
    except KeyError as e:
        raise ConfigInvalid("grid dump sidecar is missing a field", field=str(e), path=str(stem))
    values = np.fromfile(stem.with_suffix(".bin"), dtype=RAW_DTYPE)
    shape = {"scalar": (grid.size,), "vector": (grid.size, m), "matrix": (grid.size, m, m)}[codomain]
    if values.size != int(np.prod(shape)):
        raise ConfigInvalid("grid dump size does not match its sidecar", path=str(stem),
                            expected=int(np.prod(shape)), found=int(values.size))
    return GridFunction(grid, values.reshape(shape).astype(float), codomain)


def dump_blocks(path: PathLike, blocks: Iterable[np.ndarray]) -> Tuple[str, List[Tuple[int, int]]]:
    """Concatenate float64 blocks into one raw file; returns checksum and (offset, count) per block"""
    offsets = []
    chunks = []
    position = 0
    for block in blocks:
        raw = np.ascontiguousarray(block, dtype=RAW_DTYPE).ravel()
        offsets.append((position, int(raw.size)))
        chunks.append(raw.tobytes())
        position += int(raw.size)
    return atomic_write_bytes(path, b"".join(chunks)), offsets


def load_block(path: PathLike, offset: int, count: int) -> np.ndarray:
    with open(path, "rb") as handle:
        handle.seek(offset * 8)
        return np.frombuffer(handle.read(count * 8), dtype=RAW_DTYPE).astype(float)
