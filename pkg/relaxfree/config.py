"""Configuration management for relaxfree experiments."""

import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Dict, Literal, Optional, Tuple

from relaxfree.integrators import METHODS
from relaxfree.tableau import UnknownSchemeError, builtin_tableau, validate_k

Experiment = Literal[
    "advection-noise",
    "advection-smooth",
    "dissipative",
    "oscillator",
    "burgers",
    "stability-regions",
    "convergence",
]
EXPERIMENTS: Tuple[str, ...] = (
    "advection-noise",
    "advection-smooth",
    "dissipative",
    "oscillator",
    "burgers",
    "stability-regions",
    "convergence",
)

# Which step-size convention each experiment uses
STEP_CONVENTION: Dict[str, Optional[str]] = {
    "advection-noise": "mu",
    "advection-smooth": "mu",
    "dissipative": "dt",
    "oscillator": "dt",
    "burgers": "cfl",
    "stability-regions": None,
}

DEFAULT_STEP: Dict[str, float] = {
    "advection-noise": 0.9,
    "advection-smooth": 0.9,
    "dissipative": 0.5,
    "oscillator": 0.1,
    "burgers": 0.3,
}

DEFAULT_T_END: Dict[str, float] = {
    "advection-noise": 1.0,
    "advection-smooth": 1.0,
    "dissipative": 0.5,
    "oscillator": 100.0,
    "burgers": 2.0,
    "convergence": 10.0,
}

CONVERGENCE_PROBLEMS = ("oscillator", "burgers")


@dataclass
class ExperimentConfig:
    """Settings for one experiment run.

    Attributes:
        experiment: Which experiment to run.
        scheme: Base tableau name (e.g. "RK44").
        mode: "classical", "idt", "r" or "rf".
        k: RF multipliers overriding the scheme default.
        dt: Raw step size (dissipative, oscillator, oscillator convergence).
        mu: Fraction of the linearly stable step (advection).
        cfl: Step size over grid spacing (Burgers, Burgers convergence).
        t_end: Final time. Defaults per experiment.
        seed: White-noise seed.
        m: Spectral grid size for advection.
        problem: Problem studied by the convergence experiment.
        levels: Number of halvings of the coarsest step in convergence runs.
        output_path: Directory for CSV artifacts.
        record_every: Time-series CSV stride.
        verbose: Enable debug logging.
    """

    experiment: Experiment = "oscillator"
    scheme: str = "RK44"
    mode: Literal["classical", "idt", "r", "rf"] = "rf"
    k: Optional[Tuple[float, ...]] = None
    dt: Optional[float] = None
    mu: Optional[float] = None
    cfl: Optional[float] = None
    t_end: Optional[float] = None
    seed: int = 0
    m: int = 128
    problem: str = "oscillator"
    levels: int = 6
    output_path: Path = field(default_factory=lambda: Path("./results"))
    record_every: int = 1
    verbose: bool = False

    def __post_init__(self) -> None:
        """Validate configuration after initialization."""
        if isinstance(self.output_path, str):
            self.output_path = Path(self.output_path)

        if self.experiment not in EXPERIMENTS:
            raise ValueError(f"Unknown experiment: {self.experiment}. Use one of: {list(EXPERIMENTS)}")

        if self.mode not in METHODS:
            raise ValueError(f"Unknown mode: {self.mode}. Use one of: {list(METHODS)}")

        try:
            tableau = builtin_tableau(self.scheme)
        except UnknownSchemeError as e:
            raise ValueError(str(e.args[0]))
        self.scheme = tableau.name

        if self.k is not None:
            self.k = tuple(float(v) for v in self.k)
            if len(self.k) != tableau.s:
                raise ValueError(f"k has {len(self.k)} entries but {tableau.name} has {tableau.s} stages")
            validate_k(tableau, self.k)

        if self.problem not in CONVERGENCE_PROBLEMS:
            raise ValueError(f"Convergence problem must be one of {list(CONVERGENCE_PROBLEMS)}, got {self.problem}")

        self._check_step()

        if self.t_end is None:
            self.t_end = self._default_t_end()
        if self.experiment != "stability-regions" and not (math.isfinite(self.t_end) and self.t_end > 0):
            raise ValueError("t_end must be positive")

        if self.m < 4 or self.m % 2:
            raise ValueError("Grid size m must be even and at least 4")

        if self.levels < 2:
            raise ValueError("Convergence needs at least 2 levels")

        if self.record_every < 1:
            raise ValueError("record_every must be at least 1")

        if self.seed < 0:
            raise ValueError("Seed must be non-negative")

    @property
    def step_convention(self) -> Optional[str]:
        """Name of the step field this experiment expects ("dt", "mu", "cfl" or None)."""
        if self.experiment == "convergence":
            return "cfl" if self.problem == "burgers" else "dt"
        return STEP_CONVENTION[self.experiment]

    @property
    def step_value(self) -> Optional[float]:
        convention = self.step_convention
        return None if convention is None else getattr(self, convention)

    def _check_step(self) -> None:
        given = {name: getattr(self, name) for name in ("dt", "mu", "cfl") if getattr(self, name) is not None}
        convention = self.step_convention

        if convention is None:
            if given:
                raise ValueError(f"{self.experiment} takes no step size, got {sorted(given)}")
            return

        if len(given) > 1:
            raise ValueError(f"Give exactly one of dt/mu/cfl, got {sorted(given)}")
        if given and convention not in given:
            wrong = next(iter(given))
            raise ValueError(f"{self.experiment} uses {convention}, not {wrong}")

        if not given:
            setattr(self, convention, self._default_step())

        value = getattr(self, convention)
        if not (math.isfinite(value) and value > 0):
            raise ValueError(f"{convention} must be positive, got {value}")

    def _default_step(self) -> float:
        if self.experiment == "convergence":
            return 0.3 if self.problem == "burgers" else 0.2
        return DEFAULT_STEP[self.experiment]

    def _default_t_end(self) -> float:
        if self.experiment == "convergence" and self.problem == "burgers":
            return 0.2
        return DEFAULT_T_END.get(self.experiment, 0.0)

    def to_dict(self) -> Dict[str, Any]:
        """Flat dictionary suitable for :func:`relaxfree.config_file.save_config_file`."""
        result = asdict(self)
        result["output_path"] = str(self.output_path)
        if self.k is not None:
            result["k"] = list(self.k)
        return result

    def run_name(self) -> str:
        """File-name stem identifying this run."""
        step = self.step_convention
        label = f"_{step}{self.step_value:g}" if step else ""
        return f"{self.experiment}_{self.mode}-{self.scheme}{label}"
