"""Lindblad master-equation reference for up to three atoms.

d rho/dt = -i (H_eff rho - rho H_eff^dag) + sum_k L_k rho L_k^dag,
with H_eff = H - i L^2 / 2. The superoperator is never materialized; the
right-hand side is evaluated with left/right operator products.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.integrate import solve_ivp

from .mcwf import EnsembleResult, SimulationConfig, max_step
from .observables import binned_survival
from .operators import (
    KIND_GE,
    KIND_ER,
    S,
    Basis,
    CapacityError,
    build_damping,
    build_jump_operators,
)

MAX_ORACLE_ATOMS = 3
TRACE_TOL = 1e-8
HERMITIAN_TOL = 1e-10
POSITIVITY_TOL = 1e-8
# the reference runs 100x tighter than the engine default it is checked against
ORACLE_RTOL = 1e-10
ORACLE_ATOL = 1e-12


class OracleInvariantError(RuntimeError):
    pass


@dataclass
class DensityState:
    rho: np.ndarray
    t: float

    def check(self) -> None:
        rho = self.rho
        if np.abs(rho - rho.conj().T).max() > HERMITIAN_TOL:
            raise OracleInvariantError(f"rho not Hermitian at t={self.t}")
        if abs(np.trace(rho).real - 1.0) > TRACE_TOL:
            raise OracleInvariantError(f"trace drifted to {np.trace(rho).real} at t={self.t}")
        if np.linalg.eigvalsh(0.5 * (rho + rho.conj().T)).min() < -POSITIVITY_TOL:
            raise OracleInvariantError(f"rho lost positivity at t={self.t}")


class LindbladOracle:
    def __init__(self, config: SimulationConfig):
        n = config.n_atoms
        if n > MAX_ORACLE_ATOMS:
            raise CapacityError(f"master-equation oracle limited to {MAX_ORACLE_ATOMS} atoms")
        self.config = config
        self.basis = Basis(n)
        sched = config.schedule
        self.h_static = sp.csr_matrix(
            sp.diags(self.basis.hermitian_diagonal(sched.delta_e_level, config.geometry.pair_shifts))
            + sched.omega_er_level * self.basis.coupling(KIND_ER),
            dtype=complex,
        )
        self.h_ge = sp.csr_matrix(self.basis.coupling(KIND_GE), dtype=complex)
        self.l2 = build_damping(config.rates, n).matrix
        self.jumps = [op.matrix for op, _ in build_jump_operators(config.rates, n)]
        self.dim = self.basis.dim

    def h_eff(self, t: float) -> sp.csr_matrix:
        return self.h_static + self.config.schedule.omega_ge(t) * self.h_ge - 0.5j * self.l2

    def rhs(self, t: float, y: np.ndarray) -> np.ndarray:
        rho = y.reshape(self.dim, self.dim)
        hr = self.h_eff(t) @ rho
        # rho H_eff^dag = (H_eff rho)^dag for Hermitian rho
        out = -1j * hr + 1j * hr.conj().T
        for L in self.jumps:
            lr = L @ rho
            out += L @ lr.conj().T
        return out.ravel()

    def integrate(self, rho0: np.ndarray | None = None) -> list[DensityState]:
        cfg = self.config
        if rho0 is None:
            rho0 = np.zeros((self.dim, self.dim), dtype=complex)
            rho0[0, 0] = 1.0
        ts = np.asarray(cfg.output_times)
        sol = solve_ivp(
            self.rhs,
            (0.0, ts[-1]),
            rho0.astype(complex).ravel(),
            method="RK45",
            t_eval=ts,
            rtol=min(cfg.rtol, ORACLE_RTOL),
            atol=min(cfg.atol, ORACLE_ATOL),
            max_step=max_step(cfg),
        )
        if not sol.success:
            raise RuntimeError(f"Lindblad integration failed: {sol.message}")
        states = [DensityState(sol.y[:, k].reshape(self.dim, self.dim), t) for k, t in enumerate(ts)]
        for st in states:
            st.check()
        return states

    def observables(self, rho: np.ndarray):
        n = self.config.n_atoms
        probs = np.clip(np.real(np.diag(rho)), 0.0, None)
        probs = probs / probs.sum()
        digits = self.basis.digits
        pops = np.array([(probs[:, None] * (digits == lv)).sum(0).mean() for lv in range(4)])
        dist = binned_survival(probs, self.basis.n_trapped, n)
        dbl = probs[self.basis.n_rydberg >= 2].sum()
        mean_n = n * (1.0 - pops[S])
        return np.concatenate([[mean_n], pops, [dbl]]), dist


def integrate_lindblad(config: SimulationConfig) -> EnsembleResult:
    """Exact observable time series in the same schema as an MCWF ensemble (zero errors)."""
    oracle = LindbladOracle(config)
    states = oracle.integrate()
    rows, dist = [], None
    for st in states:
        row, dist = oracle.observables(st.rho)
        rows.append(row)
    mean = np.array(rows)
    return EnsembleResult(
        n_atoms=config.n_atoms,
        M=0,
        base_seed=0,
        times=np.asarray(config.output_times),
        mean=mean,
        stderr=np.zeros_like(mean),
        final_distribution=dist,
        final_stderr=np.zeros_like(dist),
    )

