"""Many-body operators on the product space of N four-level atoms.

Basis convention: local levels g, s, e, r carry digits 0, 1, 2, 3 and atom j
is base-4 digit j of the basis index (atom 0 least significant). A reduced
basis that omits |s> for every atom (digits g, e, r -> 0, 1, 2) is used by the
engine once decoupled atoms are pruned; it is exact because |s> is only ever
reached through a projecting jump.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.sparse as sp

from .atom_model import AtomRates
from .geometry import EnsembleGeometry
from .pulses import PulseSchedule

G, S, E, R = 0, 1, 2, 3
LEVEL_NAMES = "gser"
FULL_LEVELS = (G, S, E, R)
ACTIVE_LEVELS = (G, E, R)
MAX_ATOMS = 10

# coupling kinds stored in the off-diagonal pattern
KIND_GE, KIND_ER = 0, 1
CHANNELS = ("ge", "se", "er", "r")


class CapacityError(ValueError):
    pass


def _check_n(n: int, limit: int = MAX_ATOMS) -> None:
    if n < 1:
        raise ValueError("need at least one atom")
    if n > limit:
        raise CapacityError(f"{n} atoms exceeds the exact-treatment limit of {limit}")


def basis_digits(n: int, levels=FULL_LEVELS) -> np.ndarray:
    """(dim, n) array of level codes for every basis index."""
    d = len(levels)
    idx = np.arange(d**n, dtype=np.int64)
    digits = (idx[:, None] // d ** np.arange(n, dtype=np.int64)) % d
    return np.asarray(levels, dtype=np.int8)[digits]


def index_to_levels(index: int, n: int) -> str:
    if not 0 <= index < 4**n:
        raise ValueError("index out of range")
    return "".join(LEVEL_NAMES[(index // 4**j) % 4] for j in range(n))


def levels_to_index(levels: str) -> int:
    return sum(LEVEL_NAMES.index(c) * 4**j for j, c in enumerate(levels))


def product_state(levels: str) -> np.ndarray:
    psi = np.zeros(4 ** len(levels), dtype=complex)
    psi[levels_to_index(levels)] = 1.0
    return psi


@dataclass(frozen=True)
class ManyBodyOperator:
    matrix: sp.csr_matrix
    hermitian: bool = False

    @property
    def dimension(self) -> int:
        return self.matrix.shape[0]

    def apply(self, psi: np.ndarray) -> np.ndarray:
        if psi.shape[0] != self.dimension:
            raise ValueError(f"state of length {psi.shape[0]} for operator of dim {self.dimension}")
        return self.matrix @ psi

    def toarray(self) -> np.ndarray:
        return self.matrix.toarray()


class Basis:
    """Digit tables for `n` atoms restricted to `levels`; builds the operator pieces."""

    def __init__(self, n: int, levels=FULL_LEVELS):
        self.n = n
        self.levels = tuple(levels)
        self.d = len(levels)
        self.dim = self.d**n
        self.digits = basis_digits(n, levels)

    def stride(self, j: int) -> int:
        return self.d**j

    def pos(self, level: int) -> int:
        return self.levels.index(level)

    def occupation(self, level: int) -> np.ndarray:
        """(dim, n) boolean: atom j in `level`."""
        return self.digits == level

    @cached_property
    def n_rydberg(self) -> np.ndarray:
        return self.occupation(R).sum(1)

    @cached_property
    def n_trapped(self) -> np.ndarray:
        return self.n - self.occupation(S).sum(1)

    def pair_diagonal(self, pair_shifts: np.ndarray) -> np.ndarray:
        """sum_{i<j} Delta_ij sigma_rr^i sigma_rr^j on the diagonal."""
        rr = self.occupation(R).astype(float)
        # x^T D x / 2 for symmetric zero-diagonal D
        return 0.5 * np.einsum("ki,ij,kj->k", rr, pair_shifts, rr)

    def transition_pairs(self, lower: int, upper: int, j: int):
        """Index pairs (i_lower, i_upper) differing only by atom j: lower <-> upper."""
        if lower not in self.levels or upper not in self.levels:
            empty = np.zeros(0, dtype=np.int64)
            return empty, empty
        lo = np.flatnonzero(self.digits[:, j] == lower)
        return lo, lo + (self.pos(upper) - self.pos(lower)) * self.stride(j)

    @cached_property
    def coupling_pattern(self) -> sp.csr_matrix:
        """Symmetric pattern with entry 1 for g<->e and 2 for e<->r transitions."""
        rows, cols, vals = [], [], []
        for j in range(self.n):
            for lower, upper, kind in ((G, E, KIND_GE), (E, R, KIND_ER)):
                a, b = self.transition_pairs(lower, upper, j)
                rows += [a, b]
                cols += [b, a]
                vals += [np.full(2 * len(a), kind + 1, dtype=np.int8)]
        if not rows:
            rows = cols = [np.zeros(0, np.int64)]
            vals = [np.zeros(0, np.int8)]
        rows = np.concatenate(rows)
        cols = np.concatenate(cols)
        vals = np.concatenate(vals)
        m = sp.csr_matrix((vals, (rows, cols)), shape=(self.dim, self.dim))
        m.sort_indices()
        return m

    def coupling(self, kind: int) -> sp.csr_matrix:
        p = self.coupling_pattern
        m = sp.csr_matrix(
            ((p.data == kind + 1).astype(float), p.indices.copy(), p.indptr.copy()), shape=p.shape
        )
        m.eliminate_zeros()
        return m

    def hermitian_diagonal(self, delta_e: float, pair_shifts: np.ndarray) -> np.ndarray:
        return delta_e * self.occupation(E).sum(1) + self.pair_diagonal(pair_shifts)

    def damping_diagonal(self, rates: AtomRates, n_frozen: int = 0) -> np.ndarray:
        """Diagonal of sum_j L_j^dag L_j; frozen atoms contribute their gamma_r offset."""
        occ_e = self.occupation(E).sum(1)
        occ_r = self.occupation(R).sum(1)
        return (
            rates.gamma_e_total * occ_e
            + rates.gamma_re * occ_r
            + rates.gamma_r * (self.n + n_frozen)
        ).astype(float)


def _full_basis(n: int) -> Basis:
    _check_n(n)
    return Basis(n, FULL_LEVELS)


def build_hamiltonian(
    t: float, schedule: PulseSchedule, geometry: EnsembleGeometry, n: int
) -> ManyBodyOperator:
    """Hermitian H(t): single-atom drive terms plus pairwise Rydberg shifts."""
    basis = _full_basis(n)
    if geometry.n != n:
        raise ValueError(f"geometry describes {geometry.n} atoms, not {n}")
    diag = basis.hermitian_diagonal(schedule.delta_e(t), geometry.pair_shifts)
    h = (
        sp.diags(diag)
        + schedule.omega_ge(t) * basis.coupling(KIND_GE)
        + schedule.omega_er(t) * basis.coupling(KIND_ER)
    )
    return ManyBodyOperator(sp.csr_matrix(h, dtype=complex), hermitian=True)


def sigma(mu: int, nu: int, j: int, n: int) -> sp.csr_matrix:
    """|mu><nu| acting on atom j of the full 4^n space."""
    basis = _full_basis(n)
    cols = np.flatnonzero(basis.digits[:, j] == nu)
    rows = cols + (mu - nu) * basis.stride(j)
    return sp.csr_matrix((np.ones(len(cols)), (rows, cols)), shape=(basis.dim, basis.dim))


def build_jump_operators(rates: AtomRates, n: int, keep_zero: bool = False):
    """Lindblad generators as [(operator, (atom, channel))]; zero-rate channels dropped."""
    _check_n(n)
    ident = sp.identity(4**n, format="csr")
    out = []
    for j in range(n):
        ops = {
            "ge": (rates.gamma_eg, sigma(G, E, j, n)),
            "se": (rates.gamma_es, sigma(S, E, j, n)),
            "er": (rates.gamma_re, sigma(E, R, j, n)),
            "r": (rates.gamma_r, 2.0 * sigma(R, R, j, n) - ident),
        }
        for name in CHANNELS:
            rate, op = ops[name]
            if rate > 0 or keep_zero:
                out.append((ManyBodyOperator(sp.csr_matrix(np.sqrt(rate) * op, dtype=complex)), (j, name)))
    return out


def build_damping(rates: AtomRates, n: int) -> ManyBodyOperator:
    basis = _full_basis(n)
    return ManyBodyOperator(sp.diags(basis.damping_diagonal(rates)).tocsr().astype(complex), True)


def apply_effective_hamiltonian(
    h: ManyBodyOperator, l2: ManyBodyOperator, psi: np.ndarray
) -> np.ndarray:
    """d psi/dt = -i H psi - L^2 psi / 2."""
    if not (h.dimension == l2.dimension == psi.shape[0]):
        raise ValueError("dimension mismatch between H, L^2 and psi")
    return -1j * h.apply(psi) - 0.5 * l2.apply(psi)
