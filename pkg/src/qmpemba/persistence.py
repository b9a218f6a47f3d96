"""CSV series files and JSON run manifests, written atomically."""

from __future__ import annotations

import hashlib
import json
import os
import tempfile
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

OUTPUT_ROOT_ENV = "QMPEMBA_OUTPUT_ROOT"


class SchemaError(ValueError):
    pass


def resolve_output(path: str | os.PathLike) -> Path:
    """Relative output paths are placed under ``$QMPEMBA_OUTPUT_ROOT`` when set."""
    p = Path(path)
    root = os.environ.get(OUTPUT_ROOT_ENV)
    if root and not p.is_absolute():
        return Path(root) / p
    return p


def atomic_write_bytes(path: Path, data: bytes) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _fmt(value) -> str:
    if isinstance(value, str):
        if "," in value or "\n" in value:
            raise SchemaError(f"text field {value!r} contains a separator")
        return value
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return format(float(value), ".17g")


def csv_bytes(columns: Sequence[str], rows: Iterable[Sequence]) -> bytes:
    lines = [",".join(columns)]
    for row in rows:
        if len(row) != len(columns):
            raise SchemaError(f"row of length {len(row)} does not match {len(columns)} columns")
        lines.append(",".join(_fmt(v) for v in row))
    return ("\n".join(lines) + "\n").encode("ascii")


def write_csv(path: Path, columns: Sequence[str], rows: Iterable[Sequence]) -> str:
    """Write a CSV atomically and return its sha256 hex digest."""
    data = csv_bytes(columns, rows)
    atomic_write_bytes(path, data)
    return hashlib.sha256(data).hexdigest()


def write_columns(path: Path, cols: Mapping[str, np.ndarray]) -> str:
    names = list(cols)
    n = len(next(iter(cols.values())))
    rows = ([cols[c][i] for c in names] for i in range(n))
    return write_csv(path, names, rows)


def read_csv(path: str | os.PathLike) -> dict[str, np.ndarray]:
    path = Path(path)
    lines = path.read_text().splitlines()
    if not lines or not lines[0].strip():
        raise SchemaError(f"{path}: empty file")
    names = lines[0].strip().split(",")
    rows = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        fields = line.split(",")
        if len(fields) != len(names):
            raise SchemaError(f"{path}:{lineno}: {len(fields)} fields, header has {len(names)}")
        rows.append([float(x) for x in fields])
    data = np.array(rows, dtype=float).reshape(len(rows), len(names))
    return {name: data[:, i] for i, name in enumerate(names)}


def sha256_file(path: Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def write_manifest(path: Path, manifest: dict) -> None:
    data = json.dumps(manifest, indent=2, sort_keys=True, default=_json_default) + "\n"
    atomic_write_bytes(path, data.encode("utf-8"))


def read_manifest(path: str | os.PathLike) -> dict:
    with open(path) as fh:
        return json.load(fh)


def _json_default(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, Path):
        return str(obj)
    raise TypeError(f"cannot serialize {type(obj).__name__}")
