"""Simulation and synchronization analysis for generalized Kuramoto networks."""

__version__ = "0.1.0"

from .analysis import ClassifierConfig, Flag, SyncVerdict, classify, energy_record, equivalence_report
from .equilibria import EquilibriumSet, find_equilibria
from .integrator import IntegrationError, IntegratorConfig, Trajectory, integrate
from .runner import ExperimentConfig, execute, run_experiment
from .model import OscillatorSystem, ValidationError, normalize_frequencies, order_parameter, validate, vector_field
from .thresholds import critical_coupling, r_upper_bound, theta_opt, two_oscillator_threshold

__all__ = [
    "ClassifierConfig",
    "EquilibriumSet",
    "ExperimentConfig",
    "Flag",
    "IntegrationError",
    "IntegratorConfig",
    "OscillatorSystem",
    "SyncVerdict",
    "Trajectory",
    "ValidationError",
    "classify",
    "critical_coupling",
    "energy_record",
    "execute",
    "equivalence_report",
    "find_equilibria",
    "integrate",
    "normalize_frequencies",
    "order_parameter",
    "r_upper_bound",
    "run_experiment",
    "theta_opt",
    "two_oscillator_threshold",
    "validate",
    "vector_field",
]
