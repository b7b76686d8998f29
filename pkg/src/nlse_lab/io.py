"""CSV persistence of fields, trajectories and tables.

All CSV files start with a ``# schema: <name> v<version>`` comment line and a
header row.  Field files hold one grid point per row (x, re, im); the grid is
recovered from the x column (uniform, periodic).
"""

from __future__ import annotations

import csv
import json
import os
import tempfile
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .core_field import WaveField, make_grid

FIELD_SCHEMA = "field v1"
TRAJECTORY_SCHEMA = "trajectory v1"
DIAGNOSTICS_SCHEMA = "diagnostics v1"
FRESNEL_SCHEMA = "fresnel v1"
SPECTRUM_SCHEMA = "spectrum v1"
CONVERGENCE_SCHEMA = "convergence v1"
SCAN_SCHEMA = "scan v1"


def _atomic_write(path: Path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_table(path, schema: str, header: Sequence[str], rows: Iterable[Sequence]) -> Path:
    lines = [f"# schema: {schema}", ",".join(header)]
    for row in rows:
        lines.append(",".join(_fmt(v) for v in row))
    _atomic_write(Path(path), "\n".join(lines) + "\n")
    return Path(path)


def _fmt(v) -> str:
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def read_table(path) -> tuple[str, list[str], list[list[str]]]:
    with open(path, newline="") as fh:
        first = fh.readline().strip()
        if not first.startswith("# schema:"):
            raise ValueError(f"{path}: missing schema line")
        schema = first.split(":", 1)[1].strip()
        reader = csv.reader(fh)
        header = next(reader)
        rows = [r for r in reader if r]
    return schema, header, rows


def write_field_csv(path, field: WaveField) -> Path:
    """Columns: x (slow length units), re, im (envelope U, dimensionless)."""
    rows = zip(field.grid.x, field.values.real, field.values.imag)
    return write_table(path, FIELD_SCHEMA, ["x", "re", "im"], rows)


def read_field_csv(path) -> WaveField:
    schema, header, rows = read_table(path)
    if schema != FIELD_SCHEMA:
        raise ValueError(f"{path}: expected schema '{FIELD_SCHEMA}', found '{schema}'")
    arr = np.array(rows, dtype=float)
    x = arr[:, 0]
    n = x.size
    dx = x[1] - x[0]
    grid = make_grid(n, dx * n)
    if np.max(np.abs(grid.x - x)) > 1e-9 * grid.length:
        raise ValueError(f"{path}: x column is not the standard centred grid")
    return WaveField(grid, arr[:, 1] + 1j * arr[:, 2])


def write_trajectory_csv(path, traj) -> Path:
    """Long format: t2, x, re, im per snapshot point."""
    x = traj.grid.x

    def rows():
        for t, v in zip(traj.times, traj.values):
            for xi, vi in zip(x, v):
                yield (float(t), float(xi), float(vi.real), float(vi.imag))

    return write_table(path, TRAJECTORY_SCHEMA, ["t2", "x", "re", "im"], rows())


def write_trajectory_npz(path, traj) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    np.savez(path, t2=traj.times, x=traj.grid.x, U=traj.values,
             length=traj.grid.length, epsilon=traj.epsilon)
    return path


def write_json(path, data: dict) -> Path:
    _atomic_write(Path(path), json.dumps(data, indent=2, sort_keys=True, default=_jsonable) + "\n")
    return Path(path)


def _jsonable(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    if isinstance(obj, Path):
        return str(obj)
    raise TypeError(f"not JSON serialisable: {type(obj)}")
