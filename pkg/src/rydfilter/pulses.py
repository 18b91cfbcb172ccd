"""Drive schedule: constant Omega_er, a smooth Omega_ge pulse, constant detuning."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numba
import numpy as np

from .atom_model import DomainError, lambda_eigensystem

RAMP_KINDS = ("sine_squared", "tanh")
# tanh ramps are truncated at +-TANH_WIDTH half-widths and rescaled to hit 0 and peak exactly.
TANH_WIDTH = 3.0
MIN_PEAK_RATIO = 5.0
FD_STEP = 1e-3


@dataclass(frozen=True)
class PulseSchedule:
    """Omega_er switched on first and held; Omega_ge rises, holds and falls.

    The pulse occupies [t_start_ge, t_start_ge + t_rise + t_hold + t_fall];
    total_duration defaults to the end of the fall.
    """

    omega_er_level: float
    omega_ge_peak: float
    t_start_ge: float
    t_rise: float
    t_hold: float
    t_fall: float
    ramp_kind: str = "sine_squared"
    delta_e_level: float = 0.0
    total_duration: float | None = None

    def __post_init__(self):
        if self.total_duration is None:
            object.__setattr__(self, "total_duration", self.pulse_end)
        if self.ramp_kind not in RAMP_KINDS:
            raise ValueError(f"ramp_kind must be one of {RAMP_KINDS}")
        if min(self.t_start_ge, self.t_hold) < 0 or min(self.t_rise, self.t_fall) <= 0:
            raise ValueError("pulse times must be non-negative, ramps strictly positive")
        if self.omega_er_level <= 0:
            raise ValueError("omega_er_level must be > 0")
        if self.omega_ge_peak < MIN_PEAK_RATIO * self.omega_er_level:
            raise ValueError(
                f"omega_ge_peak must be >= {MIN_PEAK_RATIO} x omega_er_level"
            )
        if self.total_duration < self.pulse_end - 1e-12:
            raise ValueError("total_duration ends before the Omega_ge pulse does")

    @property
    def pulse_end(self) -> float:
        return self.t_start_ge + self.t_rise + self.t_hold + self.t_fall

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "PulseSchedule":
        return cls(**d)

    def _check_t(self, t: float) -> None:
        if not (-1e-12 <= t <= self.total_duration + 1e-12):
            raise DomainError(f"t={t} outside schedule [0, {self.total_duration}]")

    def omega_ge(self, t: float) -> float:
        self._check_t(t)
        return float(
            omega_ge_profile(
                t,
                self.omega_ge_peak,
                self.t_start_ge,
                self.t_rise,
                self.t_hold,
                self.t_fall,
                self.ramp_kind == "tanh",
            )
        )

    def omega_er(self, t: float) -> float:
        self._check_t(t)
        return self.omega_er_level

    def delta_e(self, t: float) -> float:
        self._check_t(t)
        return self.delta_e_level

    def profile_args(self) -> tuple:
        """Positional arguments for `omega_ge_profile` (used by compiled kernels)."""
        return (
            self.omega_ge_peak,
            self.t_start_ge,
            self.t_rise,
            self.t_hold,
            self.t_fall,
            self.ramp_kind == "tanh",
        )


@numba.njit(cache=True)
def _ramp(x: float, tanh: bool) -> float:
    # x in [0, 1] -> [0, 1]
    if tanh:
        a = math.tanh(TANH_WIDTH)
        return 0.5 * (1.0 + math.tanh(TANH_WIDTH * (2.0 * x - 1.0)) / a)
    s = math.sin(0.5 * math.pi * x)
    return s * s


@numba.njit(cache=True)
def omega_ge_profile(t, peak, t_start, t_rise, t_hold, t_fall, tanh):
    t1 = t_start + t_rise
    t2 = t1 + t_hold
    t3 = t2 + t_fall
    if t <= t_start or t >= t3:
        return 0.0
    if t < t1:
        return peak * _ramp((t - t_start) / t_rise, tanh)
    if t <= t2:
        return peak
    return peak * _ramp((t3 - t) / t_fall, tanh)


def adiabaticity_margin(t: float, schedule: PulseSchedule) -> float:
    """|d(omega_0)/dt| / (omega_0 * min|lambda_+-|), central difference with step 1e-3 us."""
    omega0 = math.hypot(schedule.omega_ge(t), schedule.omega_er(t))
    if omega0 == 0.0:
        raise DomainError("adiabaticity margin undefined where omega_0 = 0")
    lo = max(t - FD_STEP, 0.0)
    hi = min(t + FD_STEP, schedule.total_duration)

    def w0(s):
        return math.hypot(schedule.omega_ge(s), schedule.omega_er(s))

    dw = (w0(hi) - w0(lo)) / (hi - lo)
    es = lambda_eigensystem(schedule.omega_ge(t), schedule.omega_er(t), schedule.delta_e(t))
    gap = min(abs(es.lambda_plus), abs(es.lambda_minus))
    return abs(dw) / (omega0 * gap)


def max_adiabaticity_margin(schedule: PulseSchedule, points: int = 1000) -> float:
    ts = np.linspace(0.0, schedule.total_duration, points)
    return max(adiabaticity_margin(float(t), schedule) for t in ts)
