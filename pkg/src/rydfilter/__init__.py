"""Quantum-trajectory simulation of single-atom filtering by Rydberg blockade and STIRAP."""

from .atom_model import AtomRates, Scheme, SchemeConfig, lambda_eigensystem, last_atom_loss_estimate
from .config import RunConfig, load_preset
from .geometry import EnsembleGeometry, sample_positions, uniform_blockade_geometry
from .master import integrate_lindblad
from .mcwf import EnsembleResult, SimulationConfig, TrajectorySimulator, run_ensemble
from .observables import poisson_average
from .pulses import PulseSchedule

__all__ = [
    "AtomRates",
    "EnsembleGeometry",
    "EnsembleResult",
    "PulseSchedule",
    "RunConfig",
    "Scheme",
    "SchemeConfig",
    "SimulationConfig",
    "TrajectorySimulator",
    "integrate_lindblad",
    "lambda_eigensystem",
    "last_atom_loss_estimate",
    "load_preset",
    "poisson_average",
    "run_ensemble",
    "sample_positions",
    "uniform_blockade_geometry",
]
