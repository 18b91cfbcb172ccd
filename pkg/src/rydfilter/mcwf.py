"""Quantum-jump trajectories and seeded ensembles.

Each trajectory starts in |g...g>, evolves under H - i L^2/2 until the squared
norm falls to a uniform random threshold, then applies one jump chosen with
probability proportional to <L^dag L>. Atoms that jump to |s> are decoupled
from the drive; with pruning enabled they are removed from the state vector
and the remaining atoms are represented without their (empty) |s> level.
"""

from __future__ import annotations

import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import partial

import numpy as np

from . import integrator
from .atom_model import AtomRates
from .geometry import EnsembleGeometry
from .observables import binned_survival
from .operators import (
    ACTIVE_LEVELS,
    CHANNELS,
    E,
    FULL_LEVELS,
    G,
    MAX_ATOMS,
    R,
    S,
    Basis,
    CapacityError,
)
from .pulses import PulseSchedule

log = logging.getLogger(__name__)

OBSERVABLES = ("mean_n", "pop_g", "pop_s", "pop_e", "pop_r", "double_rydberg")
MAX_STEP_SCALE = 0.5


class PropagationError(RuntimeError):
    def __init__(self, msg, t=None, seed=None, diagnostics=None):
        super().__init__(msg)
        self.t = t
        self.seed = seed
        self.diagnostics = diagnostics or {}


@dataclass(frozen=True)
class SimulationConfig:
    """Everything one trajectory needs; picklable for worker processes."""

    n_atoms: int
    rates: AtomRates
    schedule: PulseSchedule
    geometry: EnsembleGeometry
    output_times: tuple
    prune: bool = True
    rtol: float = 1e-8
    atol: float = 1e-10
    max_step_scale: float = MAX_STEP_SCALE

    def __post_init__(self):
        if not 1 <= self.n_atoms <= MAX_ATOMS:
            raise CapacityError(f"n_atoms must be in [1, {MAX_ATOMS}]")
        if self.geometry.n != self.n_atoms:
            raise ValueError("geometry size does not match n_atoms")
        ts = np.asarray(self.output_times, dtype=float)
        if ts.ndim != 1 or len(ts) == 0 or np.any(np.diff(ts) <= 0):
            raise ValueError("output_times must be strictly increasing")
        if ts[0] < 0 or ts[-1] > self.schedule.total_duration + 1e-12:
            raise ValueError("output_times must lie inside the schedule")
        object.__setattr__(self, "output_times", tuple(float(t) for t in ts))

    @property
    def final_time(self) -> float:
        return self.output_times[-1]


def default_output_times(schedule: PulseSchedule, points: int = 41) -> tuple:
    return tuple(np.linspace(0.0, schedule.total_duration, points))


class _Sector:
    """Generator and jump bookkeeping for one set of coupled (non-|s>) atoms."""

    def __init__(self, config: SimulationConfig, active: tuple, levels, coupled: tuple):
        self.active = active
        self.coupled = coupled
        self.levels = levels
        k = len(active)
        n_frozen = config.n_atoms - k
        basis = Basis(k, levels)
        self.basis = basis
        self.digits = basis.digits
        shifts = config.geometry.pair_shifts[np.ix_(active, active)]
        sched = config.schedule
        hdiag = basis.hermitian_diagonal(sched.delta_e_level, shifts)
        damp = basis.damping_diagonal(config.rates, n_frozen)
        self.diag = (-1j * hdiag - 0.5 * damp).astype(np.complex128)
        pat = basis.coupling_pattern
        self.indptr = pat.indptr.astype(np.int64)
        self.indices = pat.indices.astype(np.int64)
        self.kinds = (pat.data - 1).astype(np.int8)
        self.trapped = basis.n_trapped
        self.multi_rydberg = basis.n_rydberg >= 2
        self.hmax = max_step(config, coupled)

    def populations(self, probs: np.ndarray) -> np.ndarray:
        """(k, 4) per-atom level populations indexed by g, s, e, r."""
        k = len(self.active)
        out = np.zeros((k, 4))
        for a in range(k):
            out[a] = np.bincount(self.digits[:, a], weights=probs, minlength=4)[:4]
        return out

    def transition(self, psi: np.ndarray, a: int, src: int, dst: int) -> np.ndarray:
        b = self.basis
        idx = np.flatnonzero(self.digits[:, a] == src)
        out = np.zeros_like(psi)
        out[idx + (b.pos(dst) - b.pos(src)) * b.stride(a)] = psi[idx]
        return out

    def drop_atom(self, psi: np.ndarray, a: int) -> np.ndarray:
        """Project atom a out of the e level and remove it from the vector."""
        return psi[self.digits[:, a] == E].copy()

    def dephase(self, psi: np.ndarray, a: int) -> np.ndarray:
        return np.where(self.digits[:, a] == R, psi, -psi)


def max_step(config: SimulationConfig, coupled: tuple | None = None) -> float:
    """Step-size ceiling: max_step_scale over the fastest rate among coupled atoms."""
    if coupled is None:
        coupled = tuple(range(config.n_atoms))
    r, sched = config.rates, config.schedule
    fastest = max(
        r.gamma_e_total,
        sched.omega_ge_peak,
        sched.omega_er_level,
        abs(sched.delta_e_level),
        _max_pair_shift(config.geometry, coupled),
    )
    return config.max_step_scale / fastest


def _max_pair_shift(geometry: EnsembleGeometry, atoms: tuple) -> float:
    if len(atoms) < 2:
        return 0.0
    return float(geometry.pair_shifts[np.ix_(atoms, atoms)].max())


class TrajectorySimulator:
    """Holds the per-sector operator cache for one configuration."""

    def __init__(self, config: SimulationConfig):
        self.config = config
        self._cache: dict = {}
        sched = config.schedule
        self.pulse = np.array(
            [float(x) for x in sched.profile_args()], dtype=np.float64
        )

    def sector(self, coupled: tuple) -> _Sector:
        """Operators for the atoms in `coupled` (those not yet lost to |s>)."""
        cfg = self.config
        if cfg.prune:
            levels, active = ACTIVE_LEVELS, coupled
        else:
            levels, active = FULL_LEVELS, tuple(range(cfg.n_atoms))
        g = cfg.geometry.pair_shifts
        key = (levels, g[np.ix_(active, active)].tobytes(), _max_pair_shift(cfg.geometry, coupled))
        sec = self._cache.get(key)
        if sec is None:
            sec = self._cache[key] = _Sector(cfg, active, levels, coupled)
        if sec.active != active or sec.coupled != coupled:
            # same operators, different atom labels
            sec = _relabel(sec, active, coupled)
        return sec

    def _observe(self, sec: _Sector, psi: np.ndarray):
        n = self.config.n_atoms
        probs = np.abs(psi) ** 2
        probs /= probs.sum()
        pops = sec.populations(probs)
        level_pop = pops.sum(0)
        level_pop[S] += n - len(sec.active)
        level_pop /= n
        dist = binned_survival(probs, sec.trapped, n)
        dbl = float(probs[sec.multi_rydberg].sum())
        return level_pop, dist, dbl, pops

    def run(self, seed: int) -> "TrajectoryRecord":
        cfg = self.config
        n = cfg.n_atoms
        rng = np.random.Generator(np.random.Philox(seed))
        rates = cfg.rates
        sec = self.sector(tuple(range(n)))
        psi = np.zeros(sec.basis.dim, dtype=np.complex128)
        psi[0] = 1.0
        t = 0.0
        h = 0.0
        threshold = rng.random()
        times = cfg.output_times
        T = len(times)
        pops_t = np.zeros((T, 4))
        dbl_t = np.zeros(T)
        jumps = []
        steps = rejected = 0
        max_rise = 0.0
        dist = None
        hmin = 1e-14 * max(cfg.final_time, 1.0)
        for k, t_out in enumerate(times):
            while t < t_out:
                y = psi
                t, h, status, na, nr, rise = integrator.advance(
                    y, t, t_out, h, threshold, sec.diag, sec.indptr, sec.indices,
                    sec.kinds, cfg.schedule.omega_er_level, self.pulse,
                    cfg.rtol, cfg.atol, sec.hmax, hmin,
                )
                steps += na
                rejected += nr
                max_rise = max(max_rise, rise)
                if status == integrator.UNDERFLOW:
                    raise PropagationError(
                        f"step size underflow at t={t:.6g}", t=t, seed=seed,
                        diagnostics={"h": h, "steps": steps, "rejected": rejected},
                    )
                if status == integrator.CROSSED:
                    psi, sec, label = self._jump(sec, psi, rng)
                    jumps.append((t, *label))
                    threshold = rng.random()
            pops, dist, dbl, _ = self._observe(sec, psi)
            pops_t[k] = pops
            dbl_t[k] = dbl
        return TrajectoryRecord(
            seed=seed,
            times=np.asarray(times),
            jumps=jumps,
            populations=pops_t,
            double_rydberg=dbl_t,
            final_distribution=dist,
            steps=steps,
            rejected_steps=rejected,
            max_norm_rise=max_rise,
        )

    def channel_weights(self, sec: _Sector, psi: np.ndarray) -> np.ndarray:
        """(N, 4) jump weights <L^dag L> on the normalized state, channels ge, se, er, r."""
        cfg = self.config
        r = cfg.rates
        probs = np.abs(psi) ** 2
        probs /= probs.sum()
        pops = sec.populations(probs)
        w = np.zeros((cfg.n_atoms, 4))
        w[:, 3] = r.gamma_r
        for a, j in enumerate(sec.active):
            w[j, 0] = r.gamma_eg * pops[a, E]
            w[j, 1] = r.gamma_es * pops[a, E]
            w[j, 2] = r.gamma_re * pops[a, R]
        return w

    def _jump(self, sec: _Sector, psi: np.ndarray, rng):
        w = self.channel_weights(sec, psi).ravel()
        cum = np.cumsum(w)
        choice = int(np.searchsorted(cum, rng.random() * cum[-1], side="right"))
        choice = min(choice, len(w) - 1)
        atom, ch = divmod(choice, 4)
        name = CHANNELS[ch]
        coupled = tuple(j for j in sec.coupled if j != atom)
        if atom not in sec.active:
            # dephasing of a decoupled atom only flips the global sign
            new = -psi
        else:
            a = sec.active.index(atom)
            if name == "ge":
                new = sec.transition(psi, a, E, G)
            elif name == "er":
                new = sec.transition(psi, a, R, E)
            elif name == "r":
                new = sec.dephase(psi, a)
            elif self.config.prune:
                new = sec.drop_atom(psi, a)
                sec = self.sector(coupled)
            else:
                new = sec.transition(psi, a, E, S)
                sec = self.sector(coupled)
        nrm = np.linalg.norm(new)
        if nrm == 0.0:
            raise PropagationError(f"jump {name} on atom {atom} annihilated the state")
        return new / nrm, sec, (atom, name)


def _relabel(sec: _Sector, active: tuple, coupled: tuple) -> _Sector:
    clone = object.__new__(_Sector)
    clone.__dict__.update(sec.__dict__)
    clone.active = active
    clone.coupled = coupled
    return clone


@dataclass
class TrajectoryRecord:
    seed: int
    times: np.ndarray
    jumps: list
    populations: np.ndarray  # (T, 4) atom-averaged g, s, e, r
    double_rydberg: np.ndarray
    final_distribution: np.ndarray
    steps: int = 0
    rejected_steps: int = 0
    max_norm_rise: float = 0.0

    @property
    def n_atoms(self) -> int:
        return len(self.final_distribution) - 1

    @property
    def mean_n(self) -> np.ndarray:
        return self.n_atoms * (1.0 - self.populations[:, S])

    def observables(self) -> np.ndarray:
        """(T, 6) in OBSERVABLES order."""
        return np.column_stack([self.mean_n, self.populations, self.double_rydberg])

    def to_dict(self) -> dict:
        return {
            "seed": self.seed,
            "jumps": [{"t": t, "atom": a, "channel": c} for t, a, c in self.jumps],
            "final_distribution": self.final_distribution.tolist(),
        }


@dataclass
class EnsembleResult:
    n_atoms: int
    M: int
    base_seed: int
    times: np.ndarray
    mean: np.ndarray  # (T, 6) in OBSERVABLES order
    stderr: np.ndarray
    final_distribution: np.ndarray
    final_stderr: np.ndarray
    records: list = field(default_factory=list, repr=False)

    def series(self, name: str) -> np.ndarray:
        return self.mean[:, OBSERVABLES.index(name)]

    def series_stderr(self, name: str) -> np.ndarray:
        return self.stderr[:, OBSERVABLES.index(name)]

    def to_dict(self) -> dict:
        return {
            "N": self.n_atoms,
            "M": self.M,
            "base_seed": self.base_seed,
            "P_N": self.final_distribution.tolist(),
            "P_N_stderr": self.final_stderr.tolist(),
            "mean_n_final": float(self.series("mean_n")[-1]),
        }


def _stderr(x: np.ndarray) -> np.ndarray:
    m = x.shape[0]
    if m < 2:
        return np.zeros(x.shape[1:])
    return x.std(axis=0, ddof=1) / np.sqrt(m)


def reduce_records(records: list, base_seed: int = 0) -> EnsembleResult:
    """Order-independent reduction (records are sorted by seed first)."""
    records = sorted(records, key=lambda r: r.seed)
    obs = np.stack([r.observables() for r in records])
    fin = np.stack([r.final_distribution for r in records])
    r0 = records[0]
    return EnsembleResult(
        n_atoms=r0.n_atoms,
        M=len(records),
        base_seed=base_seed,
        times=r0.times,
        mean=obs.mean(0),
        stderr=_stderr(obs),
        final_distribution=fin.mean(0),
        final_stderr=_stderr(fin),
        records=records,
    )


def worker_count(requested: int | None = None) -> int:
    if requested is not None:
        return max(1, int(requested))
    env = os.environ.get("RFS_WORKERS")
    cap = os.cpu_count() or 1
    return max(1, min(int(env), cap)) if env else cap


def _run_chunk(config: SimulationConfig, seeds):
    sim = TrajectorySimulator(config)
    out = []
    for s in seeds:
        try:
            out.append(sim.run(s))
        except PropagationError as exc:
            exc.seed = s
            raise
    return out


def evolve_trajectory(config: SimulationConfig, seed: int) -> TrajectoryRecord:
    return TrajectorySimulator(config).run(seed)


def run_ensemble(
    config: SimulationConfig, M: int, base_seed: int = 0, workers: int | None = None
) -> EnsembleResult:
    """M trajectories with seeds base_seed + m; bitwise independent of `workers`."""
    if M < 1:
        raise ValueError("M must be >= 1")
    seeds = [base_seed + m for m in range(M)]
    nw = min(worker_count(workers), M)
    if nw == 1:
        records = _run_chunk(config, seeds)
    else:
        chunks = [seeds[i::nw] for i in range(nw)]
        with ProcessPoolExecutor(max_workers=nw) as pool:
            records = [r for part in pool.map(partial(_run_chunk, config), chunks) for r in part]
    return reduce_records(records, base_seed)
