"""relaxfree - energy-conserving Runge-Kutta integrators with fixed step sizes."""

__version__ = "1.0.0"

from relaxfree.config import ExperimentConfig
from relaxfree.harness import RunSummary, convergence_table, reproduce, run
from relaxfree.integrators import convergence_study, integrate, step
from relaxfree.problems import (
    advection_problem,
    burgers_problem,
    dissipative_system,
    fourier_grid,
    oscillator_problem,
)
from relaxfree.stability import imaginary_axis_limit, stability_polynomial
from relaxfree.tableau import ButcherTableau, KVector, builtin_tableau, validate_k

__all__ = [
    "ButcherTableau",
    "KVector",
    "builtin_tableau",
    "validate_k",
    "integrate",
    "step",
    "convergence_study",
    "stability_polynomial",
    "imaginary_axis_limit",
    "fourier_grid",
    "advection_problem",
    "dissipative_system",
    "oscillator_problem",
    "burgers_problem",
    "ExperimentConfig",
    "RunSummary",
    "run",
    "reproduce",
    "convergence_table",
    "__version__",
]
