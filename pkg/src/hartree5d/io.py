"""Decimal text formats: checkpoints and trajectory CSV."""
from __future__ import annotations

import os
from dataclasses import astuple, dataclass, fields
from pathlib import Path
from typing import Optional, TextIO

import numpy as np

from .evolution import TrajectorySample
from .grid import GridMismatch, RadialField, RadialGrid, build_grid

CKPT_HEADER = "hartree5d-ckpt v1"
CSV_HEADER = "t,mass,energy,grad_norm_sq,eta,variance,variance_rate,z_R,tail_mass_outer,dt"


class CheckpointError(ValueError):
    pass


class CheckpointVersionError(CheckpointError):
    pass


class CheckpointTruncated(CheckpointError):
    pass


def fmt(x: float) -> str:
    return f"{x:.17g}"


@dataclass(frozen=True)
class Checkpoint:
    field: RadialField
    t: float


def checkpoint_save(state: Checkpoint, path: str | Path) -> None:
    g = state.field.grid
    s = state.field.samples
    lines = [CKPT_HEADER, f"n_points {g.n_points}", f"r_max {fmt(g.r_max)}", f"t {fmt(state.t)}"]
    lines += [f"{fmt(z.real)} {fmt(z.imag)}" for z in s]
    tmp = Path(str(path) + ".tmp")
    tmp.write_text("\n".join(lines) + "\n", encoding="utf-8")
    os.replace(tmp, path)


def checkpoint_load(path: str | Path, grid: Optional[RadialGrid] = None) -> Checkpoint:
    """Read a checkpoint; with ``grid`` given, refuse one saved on another grid."""
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if not lines or lines[0] != CKPT_HEADER:
        got = lines[0] if lines else "<empty>"
        raise CheckpointVersionError(f"expected header {CKPT_HEADER!r}, got {got!r}")
    try:
        n = int(lines[1].split()[1])
        r_max = float(lines[2].split()[1])
        t = float(lines[3].split()[1])
    except (IndexError, ValueError):
        raise CheckpointTruncated(f"{path}: incomplete checkpoint preamble") from None
    saved = build_grid(n, r_max, min_points=2)
    if grid is not None:
        grid.check_same(saved)
    body = lines[4:]
    if len(body) != n:
        raise CheckpointTruncated(f"{path}: expected {n} node lines, found {len(body)}")
    try:
        vals = np.array([[float(p) for p in ln.split()] for ln in body])
    except ValueError:
        raise CheckpointTruncated(f"{path}: unreadable node line") from None
    if vals.shape != (n, 2):
        raise CheckpointTruncated(f"{path}: each node line needs a real and an imaginary part")
    return Checkpoint(RadialField(grid or saved, vals[:, 0] + 1j * vals[:, 1]), t)


class TrajectoryCSV:
    """Row-at-a-time CSV writer that flushes after every row."""

    def __init__(self, fh: TextIO):
        self.fh = fh
        fh.write(CSV_HEADER + "\n")
        fh.flush()

    def write(self, row: TrajectorySample) -> None:
        self.fh.write(",".join(fmt(v) for v in astuple(row)) + "\n")
        self.fh.flush()


def read_trajectory(path: str | Path) -> list[TrajectorySample]:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if not lines or lines[0] != CSV_HEADER:
        raise ValueError(f"{path}: not a trajectory CSV")
    n = len(fields(TrajectorySample))
    out = []
    for ln in lines[1:]:
        vals = [float(v) for v in ln.split(",")]
        if len(vals) != n:
            raise ValueError(f"{path}: row has {len(vals)} columns, expected {n}")
        out.append(TrajectorySample(*vals))
    return out
