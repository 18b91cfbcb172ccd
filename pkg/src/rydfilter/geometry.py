"""Atom positions and the pairwise van der Waals shift matrix."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .atom_model import DomainError

# Shifts above this are blockade-saturating; capping protects step-size control.
DELTA_CAP = 1.0e6
DEFAULT_MIN_SEPARATION = 0.2
DEFAULT_BOX_SIDE = 2.0
# C6 (1/us um^6) giving Delta >= 10 w_max at the diagonal of a 2 um cube for the
# widest scheme-A preset. See scripts/calibrate_c6.py.
DEFAULT_C6 = 1.3e6
MAX_REJECTION_ROUNDS = 10_000


class SamplingError(RuntimeError):
    pass


@dataclass(frozen=True)
class EnsembleGeometry:
    """Pairwise Rydberg-Rydberg shifts, optionally backed by explicit positions."""

    pair_shifts: np.ndarray
    positions: np.ndarray | None = None
    c6: float | None = None
    seed: int | None = None

    @property
    def n(self) -> int:
        return self.pair_shifts.shape[0]

    def subset(self, atoms) -> "EnsembleGeometry":
        idx = np.asarray(atoms, dtype=int)
        pos = None if self.positions is None else self.positions[idx]
        return EnsembleGeometry(self.pair_shifts[np.ix_(idx, idx)], pos, self.c6, self.seed)

    def to_dict(self) -> dict:
        d = {"pair_shifts": self.pair_shifts.tolist()}
        if self.positions is not None:
            d["positions"] = self.positions.tolist()
            d["c6"] = self.c6
            d["seed"] = self.seed
        return d


def vdw_shift(c6: float, d):
    return c6 / np.asarray(d, dtype=float) ** 6


def pair_shift_matrix(positions: np.ndarray, c6: float, cap: float = DELTA_CAP) -> np.ndarray:
    positions = np.asarray(positions, dtype=float).reshape(-1, 3)
    n = len(positions)
    shifts = np.zeros((n, n))
    if n < 2:
        return shifts
    diff = positions[:, None, :] - positions[None, :, :]
    dist = np.sqrt((diff**2).sum(-1))
    off = ~np.eye(n, dtype=bool)
    shifts[off] = np.minimum(c6 / dist[off] ** 6, cap)
    return shifts


def sample_positions(
    n: int,
    box_side: float = DEFAULT_BOX_SIDE,
    min_separation: float = DEFAULT_MIN_SEPARATION,
    rng: np.random.Generator | int | None = None,
    c6: float = DEFAULT_C6,
) -> EnsembleGeometry:
    """Uniform positions in a cube, redrawn until every pair is >= min_separation apart."""
    if n < 0:
        raise ValueError("n must be >= 0")
    if box_side <= 0 or min_separation < 0:
        raise ValueError("box_side must be > 0 and min_separation >= 0")
    seed = rng if isinstance(rng, int) else None
    rng = np.random.default_rng(rng)
    for _ in range(MAX_REJECTION_ROUNDS):
        pos = rng.uniform(0.0, box_side, size=(n, 3))
        if n < 2:
            break
        d = np.sqrt(((pos[:, None] - pos[None]) ** 2).sum(-1))
        if d[np.triu_indices(n, 1)].min() >= min_separation:
            break
    else:
        raise SamplingError(
            f"could not place {n} atoms {min_separation} um apart in a {box_side} um cube"
        )
    return EnsembleGeometry(pair_shift_matrix(pos, c6), pos, c6, seed)


def uniform_blockade_geometry(n: int, delta_uniform: float) -> EnsembleGeometry:
    """All-to-all interaction of fixed strength, independent of positions."""
    if delta_uniform < 0:
        raise ValueError("delta_uniform must be >= 0")
    shifts = np.full((n, n), float(delta_uniform))
    np.fill_diagonal(shifts, 0.0)
    return EnsembleGeometry(shifts)


def blockade_distance(c6: float, w_max: float) -> float:
    if not (c6 > 0 and w_max > 0) or not (math.isfinite(c6) and math.isfinite(w_max)):
        raise DomainError("blockade distance needs c6 > 0 and w_max > 0")
    return (c6 / w_max) ** (1.0 / 6.0)


def min_blockade_ratio(geometry: EnsembleGeometry, w_max: float) -> float:
    """Smallest pair shift in units of w_max (inf for fewer than two atoms)."""
    n = geometry.n
    if n < 2:
        return math.inf
    return float(geometry.pair_shifts[np.triu_indices(n, 1)].min() / w_max)
