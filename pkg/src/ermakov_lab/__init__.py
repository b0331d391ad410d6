"""Numerical checks for the time-dependent harmonic oscillator and its invariants."""

from .classical import (
    Trajectory, TrajectoryPoint, amplitude_phase, classical_invariants, default_initial_pair,
    ermakov_residual, integrate_tdho,
)
from .errors import ConfigError, ErmakovLabError
from .profiles import FrequencyProfile
from .quantum import FockSpace, build_fock
from .runner import RunReport, run, sweep
from .scenario import Scenario, load_scenario, parse_scenario

__version__ = "0.1.0"

__all__ = [
    "ConfigError", "ErmakovLabError", "FockSpace", "FrequencyProfile", "RunReport", "Scenario",
    "Trajectory", "TrajectoryPoint", "amplitude_phase", "build_fock", "classical_invariants",
    "default_initial_pair", "ermakov_residual", "integrate_tdho", "load_scenario",
    "parse_scenario", "run", "sweep",
]
