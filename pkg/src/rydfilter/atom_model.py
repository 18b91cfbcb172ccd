"""Single-atom level scheme, decay rates and analytic three-level quantities.

Units: rates, Rabi frequencies and detunings in 1/us (hbar = 1), times in us.
"""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

# Scheme (a): 87Rb 5P1/2 intermediate state, equal branching to g and s.
SCHEME_A_GAMMA_E = 36.0
# Scheme (b): closed 5P3/2 transition, bare decay rate.
SCHEME_B_GAMMA_E = 38.0
SCHEME_B_GAMMA_E_PRIME = 36.0
# Microwave Rabi frequency giving gamma_es = 2.4 with gamma_e' = 36.
SCHEME_B_OMEGA_EE_PRIME = math.sqrt(2.4 * 3.0 * SCHEME_B_GAMMA_E_PRIME / 8.0)


class DomainError(ValueError):
    """Raised when an analytic formula is evaluated outside its domain."""


def _check_finite_nonneg(**values: float) -> None:
    for name, v in values.items():
        if not math.isfinite(v) or v < 0:
            raise DomainError(f"{name} must be finite and >= 0, got {v!r}")


@dataclass(frozen=True)
class AtomRates:
    """Decay and dephasing rates of one four-level atom (g, s, e, r)."""

    gamma_eg: float
    gamma_es: float
    gamma_re: float = 0.0
    gamma_r: float = 0.0

    def __post_init__(self):
        _check_finite_nonneg(
            gamma_eg=self.gamma_eg,
            gamma_es=self.gamma_es,
            gamma_re=self.gamma_re,
            gamma_r=self.gamma_r,
        )

    @property
    def gamma_e_total(self) -> float:
        return self.gamma_eg + self.gamma_es

    def replace(self, **changes) -> "AtomRates":
        d = {**self.__dict__, **changes}
        return AtomRates(**d)


class Scheme(str, enum.Enum):
    A = "A"
    B = "B"


@dataclass(frozen=True)
class SchemeConfig:
    """Level-scheme variant; `rates()` resolves it to concrete AtomRates.

    Scheme A has a fixed 1:1 branching of the 36/us intermediate decay.
    Scheme B has a closed transition plus a microwave-opened loss channel.
    """

    variant: Scheme = Scheme.A
    gamma_e: float = field(default=float("nan"))
    omega_ee_prime: float = SCHEME_B_OMEGA_EE_PRIME
    gamma_e_prime: float = SCHEME_B_GAMMA_E_PRIME

    def __post_init__(self):
        object.__setattr__(self, "variant", Scheme(self.variant))
        if math.isnan(self.gamma_e):
            default = SCHEME_A_GAMMA_E if self.variant is Scheme.A else SCHEME_B_GAMMA_E
            object.__setattr__(self, "gamma_e", default)

    def rates(self, gamma_re: float = 0.0, gamma_r: float = 0.0) -> AtomRates:
        if self.variant is Scheme.A:
            half = 0.5 * self.gamma_e
            return AtomRates(half, half, gamma_re, gamma_r)
        g_eg, g_es = engineered_rates(self.omega_ee_prime, self.gamma_e_prime, self.gamma_e)
        return AtomRates(g_eg, g_es, gamma_re, gamma_r)


def engineered_rates(
    omega_ee_prime: float, gamma_e_prime: float, gamma_e_bare: float
) -> tuple[float, float]:
    """Rates (gamma_eg, gamma_es) after adiabatic elimination of the auxiliary level e'.

    The microwave admixes e', which decays to g and s with branching 1:2.
    The loss channel e->s opens at 8|W|^2/(3G'); the trapped channel keeps
    the bare rate plus 4|W|^2/G'.
    """
    _check_finite_nonneg(omega_ee_prime=omega_ee_prime, gamma_e_bare=gamma_e_bare)
    if not math.isfinite(gamma_e_prime) or gamma_e_prime <= 0:
        raise DomainError(f"gamma_e_prime must be > 0, got {gamma_e_prime!r}")
    if omega_ee_prime >= 0.5 * gamma_e_prime:
        warnings.warn(
            "omega_ee_prime >= gamma_e_prime/2: adiabatic elimination of e' is unreliable",
            RuntimeWarning,
            stacklevel=2,
        )
    w2 = omega_ee_prime**2
    gamma_es = 8.0 * w2 / (3.0 * gamma_e_prime)
    gamma_eg = gamma_e_bare + 4.0 * w2 / gamma_e_prime
    return gamma_eg, gamma_es


def excitation_linewidth(omega_ge: float, omega_er: float, gamma_e_total: float) -> float:
    """Two-photon excitation linewidth w of the Rydberg state."""
    _check_finite_nonneg(gamma_e_total=gamma_e_total)
    denom = math.sqrt(2.0 * omega_ge**2 + 0.25 * gamma_e_total**2)
    if denom == 0.0:
        raise DomainError("linewidth undefined for omega_ge = 0 and gamma_e = 0")
    return (omega_ge**2 + omega_er**2) / denom


@dataclass(frozen=True)
class Eigensystem:
    lambda_0: float
    lambda_plus: float
    lambda_minus: float
    # (c_g, c_e, c_r) of the dark state
    dark_state: np.ndarray

    def bright_state(self, sign: int) -> np.ndarray:
        """Normalized (c_g, c_e, c_r) of psi_+ (sign=+1) or psi_- (sign=-1)."""
        lam = self.lambda_plus if sign > 0 else self.lambda_minus
        og, oe = self._omegas
        v = np.array([og, lam, oe])
        return v / np.linalg.norm(v)

    _omegas: tuple[float, float] = (0.0, 0.0)


def lambda_eigensystem(omega_ge: float, omega_er: float, delta_e: float = 0.0) -> Eigensystem:
    """Dressed states of the g-e-r ladder on two-photon resonance."""
    omega0 = math.hypot(omega_ge, omega_er)
    if omega0 == 0.0:
        raise DomainError("dark state undefined when both Rabi frequencies vanish")
    root = math.sqrt(omega_ge**2 + omega_er**2 + (0.5 * delta_e) ** 2)
    dark = np.array([omega_er / omega0, 0.0, -omega_ge / omega0])
    return Eigensystem(
        lambda_0=0.0,
        lambda_plus=0.5 * delta_e + root,
        lambda_minus=0.5 * delta_e - root,
        dark_state=dark,
        _omegas=(omega_ge, omega_er),
    )


def three_level_hamiltonian(omega_ge: float, omega_er: float, delta_e: float = 0.0) -> np.ndarray:
    """Dense 3x3 atom-field Hamiltonian in the (g, e, r) basis."""
    return np.array(
        [
            [0.0, omega_ge, 0.0],
            [omega_ge, delta_e, omega_er],
            [0.0, omega_er, 0.0],
        ]
    )


def last_atom_loss_estimate(
    gamma_es: float, gamma_eg: float, omega_ge: float, omega_er: float
) -> float:
    """Probability of losing the last Rydberg atom through a bright-state decay."""
    _check_finite_nonneg(gamma_es=gamma_es, gamma_eg=gamma_eg)
    gsum = gamma_es + gamma_eg
    osum = omega_ge**2 + omega_er**2
    if gsum == 0.0 or osum == 0.0:
        raise DomainError("loss estimate needs nonzero total decay and nonzero drive")
    return (gamma_es * omega_er**2) / (gsum * osum)


def coherence_relaxation_rate(gamma_re: float, gamma_r: float) -> float:
    """g-r coherence relaxation rate from Rydberg decay plus dephasing."""
    _check_finite_nonneg(gamma_re=gamma_re, gamma_r=gamma_r)
    return 0.5 * gamma_re + 2.0 * gamma_r
