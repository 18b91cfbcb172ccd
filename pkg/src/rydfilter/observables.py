"""Survival-number projectors, trapped-atom statistics and Poisson averaging."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from .operators import S, basis_digits

NORM_TOL = 1e-6


class ContractViolation(ValueError):
    pass


def _probabilities(psi: np.ndarray) -> np.ndarray:
    p = np.abs(psi) ** 2
    if abs(p.sum() - 1.0) > NORM_TOL:
        raise ContractViolation(f"state not normalized (|psi|^2 = {p.sum():.8f})")
    return p


def _trapped_counts(n_atoms: int) -> np.ndarray:
    return n_atoms - (basis_digits(n_atoms) == S).sum(1)


def binned_survival(probs: np.ndarray, trapped_counts: np.ndarray, n_atoms: int) -> np.ndarray:
    """P(n) by binning basis-state weights on their number of non-|s> atoms."""
    return np.bincount(trapped_counts, weights=probs, minlength=n_atoms + 1)[: n_atoms + 1]


def survival_distribution(psi: np.ndarray, n_atoms: int) -> np.ndarray:
    """Vector of <Pi^(n)> for n = 0..n_atoms on the full 4^N basis."""
    return binned_survival(_probabilities(psi), _trapped_counts(n_atoms), n_atoms)


def survival_projection(psi: np.ndarray, n_target: int, n_atoms: int) -> float:
    if not 0 <= n_target <= n_atoms:
        raise ValueError("n_target must lie in [0, n_atoms]")
    return float(survival_distribution(psi, n_atoms)[n_target])


def mean_trapped(psi: np.ndarray, n_atoms: int) -> float:
    p = _probabilities(psi)
    return float(p @ _trapped_counts(n_atoms))


@dataclass
class SurvivalDistribution:
    """Final-time P_N(n) for one initial atom number N."""

    n_atoms: int
    probabilities: np.ndarray
    stderr: np.ndarray = field(default=None)

    def __post_init__(self):
        self.probabilities = np.asarray(self.probabilities, dtype=float)
        if self.stderr is None:
            self.stderr = np.zeros_like(self.probabilities)
        if len(self.probabilities) != self.n_atoms + 1:
            raise ValueError("need one probability per n in 0..N")

    @property
    def mean(self) -> float:
        return float(np.arange(self.n_atoms + 1) @ self.probabilities)


def poisson_weights(mean_n: float, n_max: int) -> tuple[np.ndarray, float]:
    """P_init(N) for N = 0..n_max and the truncated tail sum_{N > n_max} P_init(N)."""
    if mean_n <= 0:
        raise ValueError("mean_n must be > 0")
    w = stats.poisson.pmf(np.arange(n_max + 1), mean_n)
    return w, float(stats.poisson.sf(n_max, mean_n))


@dataclass
class PoissonAverage:
    probabilities: np.ndarray
    mean_n: float
    n_max: int
    truncated_weight: float
    stderr: np.ndarray

    def to_dict(self) -> dict:
        return {
            "P": self.probabilities.tolist(),
            "stderr": self.stderr.tolist(),
            "mean_N": self.mean_n,
            "N_max": self.n_max,
            "truncated_weight": self.truncated_weight,
            "tail_rule": "excluded, renormalized",
        }


def poisson_average(per_n: dict[int, SurvivalDistribution], mean_n: float, n_max: int | None = None):
    """P(n) = sum_N P_init(N) P_N(n) over N = 0..n_max, tail excluded and renormalized.

    N = 0 needs no simulation: P_0(0) = 1.
    """
    if n_max is None:
        n_max = max(per_n) if per_n else 0
    missing = [k for k in range(1, n_max + 1) if k not in per_n]
    if missing:
        raise ValueError(f"missing survival distributions for N = {missing}")
    w, tail = poisson_weights(mean_n, n_max)
    p = np.zeros(n_max + 1)
    var = np.zeros(n_max + 1)
    p[0] += w[0]
    for k in range(1, n_max + 1):
        d = per_n[k]
        p[: k + 1] += w[k] * d.probabilities
        var[: k + 1] += (w[k] * d.stderr) ** 2
    norm = 1.0 - tail
    return PoissonAverage(p / norm, mean_n, n_max, tail, np.sqrt(var) / norm)


def poisson_init(n: int, mean_n: float) -> float:
    return mean_n**n * math.exp(-mean_n) / math.factorial(n)
