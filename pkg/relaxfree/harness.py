"""Experiment runner and reproduction targets.

``run`` executes one configured experiment and writes its CSV artifacts.
``reproduce`` runs the configuration matrix behind one published table or
figure and grades the results against golden checks.
"""

import logging
import math
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from relaxfree.config import ExperimentConfig
from relaxfree.exporter import Exporter, fmt
from relaxfree.integrators import (
    STEP_COUNT_TOL,
    ConvergenceError,
    ConvergenceResult,
    IntegrationError,
    StepRecord,
    convergence_study,
    integrate,
)
from relaxfree.problems import (
    Problem,
    SpectralGrid,
    advection_problem,
    burgers_problem,
    dft_amplitudes,
    dissipative_system,
    dt_max,
    fourier_grid,
    oscillator_problem,
    relative_amplification,
    white_noise_init,
)
from relaxfree.stability import (
    NoStableIntervalError,
    eval_poly,
    imaginary_axis_limit,
    real_axis_limit,
    region_scan,
    rf_limits,
    rf_polynomial,
    stability_polynomial,
)
from relaxfree.tableau import ButcherTableau, KVector, available_schemes, builtin_tableau, default_k, validate_k
from relaxfree.utils import format_duration

logger = logging.getLogger("relaxfree")

TARGETS = ("table1", "fig1", "fig2-5", "fig6", "fig7", "fig8", "fig9", "fig10")

EPS_SWEEP = (-0.05, -0.025, 0.0, 0.025, 0.05)
REGION_RESOLUTION = 201
FIG1_SCHEMES = ("SSPRK22", "SSPRK33", "RK44")

ADVECTION_MUS = (0.3, 0.6, 0.9)
ADVECTION_EDGE_MU = 0.99
FIG6_MUS = (0.99, 1.0001)
FIG6_T_END = 400.0 * math.pi
FIG6_RECORD_EVERY = 200

EVOLUTION_T_END = 100.0
OSCILLATOR_DTS = tuple(0.2 * 0.5**j for j in range(6))
OSCILLATOR_CONVERGENCE_T_END = 10.0
EPSILON_DTS = tuple(0.1 * 0.5**j for j in range(4))
BURGERS_CFLS = tuple(0.3 * 0.5**j for j in range(7))
BURGERS_CONVERGENCE_T_END = 0.2
# schemes whose max|ε| shrinks like dt^p rather than dt^(p−1) with their default k
EPSILON_RATE_OVERRIDES = {"SSPRK22": 2, "RK44": 4}
# accepted spread of a halving ratio around 2^−rate
EPSILON_BAND = (0.75, 1.25)
# step-to-step energy changes below this fraction of E_0 count as round-off
MONOTONE_TOL = 1e-14


# RESULT TYPES =========================================================================

@dataclass(frozen=True)
class FailureInfo:
    """Where and why a run aborted."""

    step: Optional[int]
    time: Optional[float]
    reason: str


@dataclass
class RunSummary:
    """Outcome of one experiment run.

    Attributes:
        name: Run identifier, also the CSV file stem.
        dt: Step size actually used (after fitting t_end).
        steps: Steps completed.
        final_time: Time reached.
        energy_drift: Final minus initial energy.
        max_energy_error: max_n |E_n − E_0| / E_0.
        linear_drift: max_n |Σu_n − Σu_0|.
        max_abs_epsilon: max |ε_n| (RF mode).
        min_gamma, max_gamma: Range of γ_n (R and IDT modes).
        min_effective_dt, max_effective_dt: Range of the time actually advanced.
        error: Distance to the exact or reference solution at the final time.
        slope: Fitted convergence order (convergence experiment).
        failure: Set iff the run aborted.
        records: Every accepted step.
    """

    name: str
    experiment: str
    scheme: str
    mode: str
    dt: float = float("nan")
    steps: int = 0
    final_time: float = 0.0
    initial_energy: float = float("nan")
    final_energy: float = float("nan")
    energy_drift: float = float("nan")
    max_energy_error: float = float("nan")
    initial_sum: float = float("nan")
    linear_drift: float = float("nan")
    max_abs_epsilon: Optional[float] = None
    min_epsilon: Optional[float] = None
    max_epsilon: Optional[float] = None
    min_gamma: Optional[float] = None
    max_gamma: Optional[float] = None
    min_effective_dt: Optional[float] = None
    max_effective_dt: Optional[float] = None
    error: Optional[float] = None
    slope: Optional[float] = None
    failure: Optional[FailureInfo] = None
    elapsed: float = 0.0
    notes: List[str] = field(default_factory=list)
    artifacts: List[Path] = field(default_factory=list)
    records: List[StepRecord] = field(default_factory=list, repr=False)

    @property
    def aborted(self) -> bool:
        return self.failure is not None

    def energies(self) -> np.ndarray:
        """Initial energy followed by the energy after every step."""
        return np.array([self.initial_energy] + [r.energy for r in self.records])

    def lines(self) -> List[str]:
        """Human-readable summary lines."""
        out = [
            f"run: {self.name}",
            f"steps: {self.steps}, final time: {self.final_time:.10g}, dt: {self.dt:.10g}",
            f"energy: {self.initial_energy:.17g} -> {self.final_energy:.17g} (drift {self.energy_drift:.3e})",
            f"max relative energy error: {self.max_energy_error:.3e}",
            f"linear invariant drift: {self.linear_drift:.3e}",
        ]
        if self.max_abs_epsilon is not None:
            out.append(f"epsilon: [{self.min_epsilon:.6e}, {self.max_epsilon:.6e}], max |eps| {self.max_abs_epsilon:.6e}")
        if self.min_gamma is not None:
            out.append(f"gamma: [{self.min_gamma:.12g}, {self.max_gamma:.12g}]")
        if self.min_effective_dt is not None:
            out.append(f"effective dt: [{self.min_effective_dt:.12g}, {self.max_effective_dt:.12g}]")
        if self.error is not None:
            out.append(f"error vs exact: {self.error:.6e}")
        if self.slope is not None:
            out.append(f"observed order: {self.slope:.4f}")
        out.extend(self.notes)
        if self.failure is not None:
            out.append(f"FAILED at step {self.failure.step}, t = {self.failure.time}: {self.failure.reason}")
        out.append(f"elapsed: {format_duration(self.elapsed)}")
        return out


@dataclass(frozen=True)
class GoldenCheck:
    """One graded expectation of a reproduction target."""

    name: str
    measured: str
    expected: str
    passed: bool


@dataclass
class TargetResult:
    """Checks, artifacts and sub-run failures of one reproduction target."""

    target: str
    checks: List[GoldenCheck] = field(default_factory=list)
    failures: List[str] = field(default_factory=list)
    notes: List[str] = field(default_factory=list)
    artifacts: List[Path] = field(default_factory=list)
    report_path: Optional[Path] = None

    @property
    def passed(self) -> bool:
        return not self.failures and all(c.passed for c in self.checks)

    def failed_checks(self) -> List[GoldenCheck]:
        return [c for c in self.checks if not c.passed]


@dataclass
class ConvergenceTable:
    """Convergence studies of several schemes in one mode.

    Attributes:
        problem: "oscillator" or "burgers".
        mode: Integration mode.
        steps: Requested step sizes (oscillator) or CFL numbers (Burgers).
        results: Scheme → study; absent when too few runs were usable.
        slopes: Scheme → fitted order (NaN when the fit failed).
        failures: Scheme → reason the study produced no slope.
    """

    problem: str
    mode: str
    steps: Tuple[float, ...]
    results: Dict[str, ConvergenceResult] = field(default_factory=dict)
    slopes: Dict[str, float] = field(default_factory=dict)
    failures: Dict[str, str] = field(default_factory=dict)


# RUN ==================================================================================

def resolve_step(dt: float, t_end: float, t0: float = 0.0) -> Tuple[float, int]:
    """Fit a step size to the interval.

    Returns ``dt`` unchanged when (t_end − t0)/dt is an integer, otherwise
    the largest step below ``dt`` that divides the interval.

    Returns:
        (step size, number of steps).
    """
    ratio = (t_end - t0) / dt
    n = int(round(ratio))
    if n >= 1 and abs(ratio - n) <= STEP_COUNT_TOL:
        return dt, n
    n = max(1, int(math.ceil(ratio)))
    return (t_end - t0) / n, n


def prepare(config: ExperimentConfig, tableau: ButcherTableau) -> Tuple[Problem, float, Optional[SpectralGrid]]:
    """Build the problem of a time-stepping experiment and its nominal step.

    Returns:
        (problem, requested step size, spectral grid or None).
    """
    experiment = config.experiment
    if experiment in ("advection-noise", "advection-smooth"):
        grid = fourier_grid(config.m)
        if experiment == "advection-noise":
            problem = advection_problem(grid, white_noise_init(config.m, config.seed), name=experiment)
        else:
            problem = advection_problem(grid, name=experiment)
        return problem, config.mu * dt_max(tableau, config.m), grid

    if experiment == "dissipative":
        return dissipative_system(), config.dt, None

    if experiment == "oscillator":
        return oscillator_problem(), config.dt, None

    if experiment == "burgers":
        problem = burgers_problem()
        return problem, config.cfl * problem.dx, None

    raise ValueError(f"{experiment} is not a time-stepping experiment")


def _resolve_k(config: ExperimentConfig, tableau: ButcherTableau) -> Optional[KVector]:
    if config.k is not None:
        return validate_k(tableau, config.k)
    if config.mode == "rf":
        return default_k(tableau.name)
    return None


def summarize(
    name: str,
    config: ExperimentConfig,
    problem: Problem,
    dt: float,
    records: List[StepRecord],
    failure: Optional[FailureInfo] = None,
) -> RunSummary:
    """Collect the statistics of a finished or aborted run."""
    u0 = problem.initial
    e0 = float(u0 @ u0)
    sum0 = float(np.sum(u0))
    summary = RunSummary(
        name=name,
        experiment=config.experiment,
        scheme=config.scheme,
        mode=config.mode,
        dt=dt,
        initial_energy=e0,
        initial_sum=sum0,
        failure=failure,
        records=records,
    )
    if not records:
        summary.final_energy = e0
        summary.energy_drift = 0.0
        summary.max_energy_error = 0.0
        summary.linear_drift = 0.0
        return summary

    energies = np.array([r.energy for r in records])
    sums = np.array([float(np.sum(r.state)) for r in records])
    effective = np.array([r.effective_dt for r in records])
    final = records[-1]

    summary.steps = final.step
    summary.final_time = final.t
    summary.final_energy = final.energy
    summary.energy_drift = final.energy - e0
    summary.max_energy_error = float(np.max(np.abs(energies - e0))) / e0 if e0 > 0 else float("nan")
    summary.linear_drift = float(np.max(np.abs(sums - sum0)))
    summary.min_effective_dt = float(effective.min())
    summary.max_effective_dt = float(effective.max())

    controls = np.array([r.control for r in records if r.control is not None])
    if controls.size and config.mode == "rf":
        summary.min_epsilon = float(controls.min())
        summary.max_epsilon = float(controls.max())
        summary.max_abs_epsilon = float(np.max(np.abs(controls)))
    elif controls.size:
        summary.min_gamma = float(controls.min())
        summary.max_gamma = float(controls.max())

    if failure is None and problem.exact is not None:
        summary.error = float(np.linalg.norm(final.state - problem.exact(final.t)))
    return summary


def run(config: ExperimentConfig) -> RunSummary:
    """Run one experiment and write its CSV artifacts.

    Integration failures do not raise: they are recorded in the summary
    and the steps taken before the failure are still written.

    Raises:
        ValueError: On invalid configuration.
    """
    if config.experiment == "stability-regions":
        return _run_stability(config)
    if config.experiment == "convergence":
        return _run_convergence(config)

    tableau = builtin_tableau(config.scheme)
    k = _resolve_k(config, tableau)
    problem, nominal, grid = prepare(config, tableau)
    dt, n = resolve_step(nominal, config.t_end)
    if dt != nominal:
        logger.debug(f"Step size {nominal:.12g} adjusted to {dt:.12g} ({n} steps to t = {config.t_end:g})")

    name = config.run_name()
    logger.info(f"Running {name}: {n} steps of {dt:.6g} to t = {config.t_end:g}")
    start = time.perf_counter()

    failure = None
    try:
        records = integrate(problem, config.mode, tableau, dt, config.t_end, k=k)
    except IntegrationError as e:
        logger.warning(f"{name} aborted: {e}")
        records = e.records
        failure = FailureInfo(step=e.step, time=e.time, reason=str(e))

    summary = summarize(name, config, problem, dt, records, failure)
    summary.elapsed = time.perf_counter() - start

    exporter = Exporter(config.output_path)
    exporter.write_time_series(name, summary.initial_energy, summary.initial_sum, records, every=config.record_every)

    final = records[-1].state if records else problem.initial
    if grid is not None:
        before = dft_amplitudes(problem.initial)
        after = dft_amplitudes(final)
        exporter.write_amplification(name, before, after, relative_amplification(before, after))
    if problem.x is not None:
        columns = ["initial", "final"]
        values = [problem.initial, final]
        if summary.error is not None and problem.exact is not None:
            columns.append("exact")
            values.append(problem.exact(summary.final_time))
        exporter.write_profile(name, problem.x, columns, values)

    summary.artifacts = list(exporter.written)
    logger.info(f"Finished {name} in {format_duration(summary.elapsed)}")
    return summary


def stability_study(
    tableau: ButcherTableau,
    k: KVector,
    exporter: Exporter,
    name: str,
    eps_values: Sequence[float] = EPS_SWEEP,
    resolution: int = REGION_RESOLUTION,
) -> List[Tuple[float, float, float]]:
    """Scan the RF stability region for each ε and write grids and axis limits.

    Returns:
        (ε, imaginary limit, real limit) rows, NaN where no interval exists.
    """
    grids = {float(eps): region_scan(rf_polynomial(tableau, k, eps), resolution=resolution) for eps in eps_values}
    exporter.write_region(name, grids)
    limits = rf_limits(tableau, k, eps_values)
    exporter.write_rf_limits(name, limits)
    return limits


def _run_stability(config: ExperimentConfig) -> RunSummary:
    tableau = builtin_tableau(config.scheme)
    k = validate_k(tableau, config.k) if config.k is not None else default_k(tableau.name)
    name = f"stability_{tableau.name}"
    start = time.perf_counter()

    exporter = Exporter(config.output_path)
    limits = stability_study(tableau, k, exporter, name)

    summary = RunSummary(name=name, experiment=config.experiment, scheme=tableau.name, mode=config.mode)
    for eps, imag, real in limits:
        summary.notes.append(f"eps = {eps:+.3f}: imaginary limit {imag:.6f}, real limit {real:.6f}")
    summary.elapsed = time.perf_counter() - start
    summary.artifacts = list(exporter.written)
    return summary


def _run_convergence(config: ExperimentConfig) -> RunSummary:
    steps = tuple(config.step_value * 0.5**j for j in range(config.levels))
    name = config.run_name()
    start = time.perf_counter()
    exporter = Exporter(config.output_path)
    ks = {config.scheme: config.k} if config.k is not None else None

    table = convergence_table(config.problem, [config.scheme], config.mode, steps, config.t_end, ks=ks)
    write_convergence_table(exporter, name, table)

    summary = RunSummary(name=name, experiment=config.experiment, scheme=config.scheme, mode=config.mode)
    summary.slope = table.slopes.get(config.scheme)
    result = table.results.get(config.scheme)
    if result is not None:
        for dt, err in zip(result.dts, result.errors):
            summary.notes.append(f"dt = {dt:.6e}: error {err:.6e}")
    if config.scheme in table.failures:
        summary.failure = FailureInfo(step=None, time=None, reason=table.failures[config.scheme])
    summary.elapsed = time.perf_counter() - start
    summary.artifacts = list(exporter.written)
    return summary


# CONVERGENCE ==========================================================================

def convergence_table(
    problem_id: str,
    schemes: Sequence[str],
    mode: str,
    steps: Sequence[float],
    t_end: float,
    ks: Optional[Mapping[str, Sequence[float]]] = None,
) -> ConvergenceTable:
    """Convergence studies of several schemes on one problem.

    Args:
        problem_id: "oscillator" (steps are dt) or "burgers" (steps are CFL
            numbers, dt = CFL·Δx).
        schemes: Scheme names.
        mode: Integration mode.
        steps: Step sizes or CFL numbers, coarsest first.
        t_end: Final time; each dt is fitted to it with :func:`resolve_step`.
        ks: Optional k overrides per scheme for RF mode.

    Returns:
        Per-scheme results and slopes; failed runs become NaN entries that
        are excluded from the fit.
    """
    if problem_id == "oscillator":
        problem = oscillator_problem()
        dts = [resolve_step(float(s), t_end)[0] for s in steps]
    elif problem_id == "burgers":
        problem = burgers_problem()
        dts = [resolve_step(float(s) * problem.dx, t_end)[0] for s in steps]
    else:
        raise ValueError(f"Unknown convergence problem: {problem_id}")

    table = ConvergenceTable(problem=problem_id, mode=mode, steps=tuple(float(s) for s in steps))
    for scheme in schemes:
        tableau = builtin_tableau(scheme)
        k = None
        if mode == "rf":
            override = (ks or {}).get(scheme)
            k = validate_k(tableau, override) if override is not None else default_k(tableau.name)
        try:
            result = convergence_study(problem, mode, tableau, dts, t_end, k=k)
        except ConvergenceError as e:
            logger.warning(f"{mode}-{tableau.name} on {problem_id}: {e}")
            table.slopes[tableau.name] = float("nan")
            table.failures[tableau.name] = str(e)
            continue
        table.results[tableau.name] = result
        table.slopes[tableau.name] = result.slope
    return table


def write_convergence_table(exporter: Exporter, name: str, table: ConvergenceTable) -> None:
    labels = [f"{table.mode}-{scheme}" for scheme in table.results]
    exporter.write_convergence(name, list(table.results.values()), labels)
    exporter.write_slopes(name, [(f"{table.mode}-{scheme}", slope) for scheme, slope in table.slopes.items()])


# GOLDEN CHECKS ========================================================================

def _within(name: str, value: float, target: float, tol: float) -> GoldenCheck:
    return GoldenCheck(name, f"{value:.6g}", f"{target:g} ± {tol:g}", bool(abs(value - target) <= tol))


def _at_least(name: str, value: float, bound: float) -> GoldenCheck:
    return GoldenCheck(name, f"{value:.6g}", f">= {bound:g}", bool(value >= bound))


def _at_most(name: str, value: float, bound: float) -> GoldenCheck:
    return GoldenCheck(name, f"{value:.6g}", f"<= {bound:g}", bool(value <= bound))


def _holds(name: str, condition: bool, measured: str, expected: str) -> GoldenCheck:
    return GoldenCheck(name, measured, expected, bool(condition))


class _Target:
    """Accumulates sub-runs and checks for one reproduction target."""

    def __init__(self, target: str, output_dir: Path) -> None:
        self.result = TargetResult(target=target)
        self.output_dir = Path(output_dir) / target
        self.exporter = Exporter(self.output_dir)

    def run(self, expected_failure: bool = False, **kwargs) -> RunSummary:
        summary = run(ExperimentConfig(output_path=self.output_dir, **kwargs))
        self.result.artifacts.extend(summary.artifacts)
        if summary.failure is not None:
            if expected_failure:
                self.note(f"{summary.name} stopped at step {summary.failure.step}: {summary.failure.reason}")
            else:
                self.result.failures.append(f"{summary.name}: {summary.failure.reason}")
        return summary

    def check(self, check: GoldenCheck) -> None:
        level = logging.INFO if check.passed else logging.WARNING
        logger.log(level, f"[{'PASS' if check.passed else 'FAIL'}] {check.name}: {check.measured} (expected {check.expected})")
        self.result.checks.append(check)

    def note(self, text: str) -> None:
        self.result.notes.append(text)

    def finish(self) -> TargetResult:
        self.result.report_path = self.exporter.write_report(
            self.result.target, self.result.checks, self.result.notes + self.result.failures
        )
        self.result.artifacts.extend(self.exporter.written)
        return self.result


def _table1(tg: _Target, t_end: Optional[float]) -> None:
    rows = []
    expected_change = {("r", 0.5): 0.12, ("r", 0.7): 0.40, ("rf", 0.5): 0.0, ("rf", 0.7): 0.0}
    expected_actual = {("r", 0.5): 0.44, ("r", 0.7): 0.42, ("rf", 0.5): 0.50, ("rf", 0.7): 0.70}

    for dt in (0.5, 0.7):
        classical = tg.run(experiment="dissipative", scheme="RK44", mode="classical", dt=dt, t_end=dt)
        if classical.records:
            tg.check(_holds(
                f"classical RK44 dt={dt} increases energy",
                classical.energy_drift > 0,
                f"{classical.energy_drift:.3e}",
                "> 0",
            ))

        for mode in ("r", "rf"):
            s = tg.run(experiment="dissipative", scheme="RK44", mode=mode, dt=dt, t_end=dt)
            if not s.records:
                continue
            actual = s.records[0].effective_dt
            change = (dt - actual) / dt
            rows.append([f"{mode}-RK44", fmt(dt), fmt(actual), fmt(change)])
            tg.check(_within(f"{mode}-RK44 dt={dt} actual step", actual, expected_actual[(mode, dt)], 0.01))
            tg.check(_within(f"{mode}-RK44 dt={dt} relative change", change, expected_change[(mode, dt)], 0.01))
            if mode == "rf":
                tg.check(_holds(f"rf-RK44 dt={dt} keeps the step", actual == dt, f"{actual!r}", f"{dt!r}"))
            tg.check(_holds(
                f"{mode}-RK44 dt={dt} decreases energy",
                s.records[0].energy < s.initial_energy,
                f"{s.records[0].energy - s.initial_energy:.3e}",
                "< 0",
            ))

    tg.exporter.write_table("table1", ["scheme", "assigned_dt", "actual_dt", "relative_change"], rows)


def epsilon_halving_band(scheme: str) -> Tuple[int, float, float]:
    """Expected ε decay rate of a scheme and the band its halving ratios must fall in.

    Returns:
        (rate, lower, upper) with the band EPSILON_BAND·2^−rate; rate is p − 1
        unless the scheme is listed in EPSILON_RATE_OVERRIDES.
    """
    tableau = builtin_tableau(scheme)
    rate = EPSILON_RATE_OVERRIDES.get(tableau.name, tableau.p - 1)
    return rate, EPSILON_BAND[0] * 2.0**-rate, EPSILON_BAND[1] * 2.0**-rate


def energy_direction(energies: np.ndarray, rel_tol: float = MONOTONE_TOL) -> str:
    """Classify an energy history as "increasing", "decreasing", "flat" or "mixed".

    Step changes within ``rel_tol``·E_0 of zero are ignored; a history is
    monotone when every remaining change has one sign.
    """
    diffs = np.diff(np.asarray(energies, dtype=np.float64))
    tol = rel_tol * abs(float(energies[0]))
    up = bool(np.any(diffs > tol))
    down = bool(np.any(diffs < -tol))
    if up and down:
        return "mixed"
    if up:
        return "increasing"
    if down:
        return "decreasing"
    return "flat"


def _linear_step_check(tableau: ButcherTableau, lam: complex, dt: float) -> float:
    """Relative gap between one classical step on u' = λu and R(λdt)."""
    a, b = lam.real, lam.imag
    L = np.array([[a, -b], [b, a]])
    problem = Problem(name="linear", dimension=2, rhs=lambda t, u: L @ u, initial=np.array([1.0, 0.0]))
    u1 = integrate(problem, "classical", tableau, dt, dt)[-1].state
    expected = complex(eval_poly(stability_polynomial(tableau), lam * dt))
    return abs(complex(u1[0], u1[1]) - expected) / abs(expected)


def _fig1(tg: _Target, t_end: Optional[float]) -> None:
    for scheme in FIG1_SCHEMES:
        tableau = builtin_tableau(scheme)
        stability_study(tableau, default_k(scheme), tg.exporter, f"fig1_{scheme}")

    rk44 = stability_polynomial(builtin_tableau("RK44"))
    tg.check(_within("RK44 imaginary-axis limit", imaginary_axis_limit(rk44), 2.8284, 1e-3))
    tg.check(_within("RK44 real-axis limit", real_axis_limit(rk44), 2.785, 1e-3))
    tg.check(_within(
        "SSPRK33 imaginary-axis limit",
        imaginary_axis_limit(stability_polynomial(builtin_tableau("SSPRK33"))),
        1.7321,
        1e-3,
    ))
    try:
        limit = imaginary_axis_limit(stability_polynomial(builtin_tableau("SSPRK22")))
        tg.check(_holds("SSPRK22 has no imaginary-axis interval", False, f"{limit:.6g}", "none"))
    except NoStableIntervalError:
        tg.check(_holds("SSPRK22 has no imaginary-axis interval", True, "none", "none"))

    gap = _linear_step_check(builtin_tableau("RK44"), complex(-0.3, 1.2), 0.5)
    tg.check(_at_most("RK44 step on u'=λu matches R(z)", gap, 1e-13))


def _fig2_5(tg: _Target, t_end: Optional[float]) -> None:
    horizon = t_end if t_end is not None else 1.0
    classical_energy = []
    before = dft_amplitudes(white_noise_init(128, 0))

    for mu in ADVECTION_MUS:
        s = tg.run(experiment="advection-noise", scheme="RK44", mode="classical", mu=mu, t_end=horizon)
        classical_energy.append(s.final_energy)
        if mu <= 0.6 and s.records:
            rel = relative_amplification(before, dft_amplitudes(s.records[-1].state))
            upper = rel[len(rel) // 2:]
            tg.check(_holds(
                f"classical RK44 mu={mu} high-k damping monotone",
                bool(np.all(np.diff(upper) <= 1e-12)),
                f"max increase {float(np.max(np.diff(upper))):.3e}",
                "<= 1e-12",
            ))

        for mode in ("r", "rf"):
            s = tg.run(experiment="advection-noise", scheme="RK44", mode=mode, mu=mu, t_end=horizon)
            if s.records:
                tg.check(_at_most(f"{mode}-RK44 mu={mu} relative energy error", s.max_energy_error, 1e-10))

    tg.check(_holds(
        "classical RK44 energy decreases with larger mu",
        classical_energy[0] > classical_energy[1] > classical_energy[2],
        ", ".join(f"{e:.10g}" for e in classical_energy),
        "strictly decreasing",
    ))

    edge = tg.run(experiment="advection-noise", scheme="RK44", mode="rf", mu=ADVECTION_EDGE_MU, t_end=horizon)
    tg.check(_holds(
        f"rf-RK44 mu={ADVECTION_EDGE_MU} completes",
        not edge.aborted,
        "aborted" if edge.aborted else "completed",
        "completed",
    ))
    tg.run(
        experiment="advection-noise", scheme="RK44", mode="r", mu=ADVECTION_EDGE_MU, t_end=horizon,
        expected_failure=True,
    )

    for mu in ADVECTION_MUS:
        for mode in ("classical", "r", "rf"):
            s = tg.run(experiment="advection-smooth", scheme="RK44", mode=mode, mu=mu, t_end=horizon)
            if mode != "classical" and s.records:
                tg.check(_at_most(f"{mode}-RK44 smooth mu={mu} relative energy error", s.max_energy_error, 1e-10))


def _fig6(tg: _Target, t_end: Optional[float]) -> None:
    horizon = t_end if t_end is not None else FIG6_T_END
    tg.note(f"long-time runs to t = {horizon:.10g}")
    for mu in FIG6_MUS:
        for mode in ("r", "rf"):
            expected_failure = mode == "r" and mu > 1.0
            s = tg.run(
                experiment="advection-smooth", scheme="RK44", mode=mode, mu=mu, t_end=horizon,
                record_every=FIG6_RECORD_EVERY, expected_failure=expected_failure,
            )
            bounded = not s.aborted and bool(s.records) and float(np.max(np.abs(s.records[-1].state))) <= 1.5
            if expected_failure:
                tg.note(f"{s.name}: {'bounded' if bounded else 'unbounded or aborted'}")
                continue
            tg.check(_holds(f"{mode}-RK44 mu={mu} stays bounded", bounded, "bounded" if bounded else "unbounded", "bounded"))
            if mode == "rf" and s.max_abs_epsilon is not None:
                tg.check(_at_most(f"rf-RK44 mu={mu} max |eps|", s.max_abs_epsilon, 1.25e-3))


def _fig7(tg: _Target, t_end: Optional[float]) -> None:
    horizon = t_end if t_end is not None else EVOLUTION_T_END
    tg.note(f"energy evolution runs to t = {horizon:g}")
    for scheme in available_schemes():
        for mode in ("classical", "r", "rf"):
            s = tg.run(experiment="oscillator", scheme=scheme, mode=mode, dt=0.1, t_end=horizon)
            if not s.records or mode == "classical":
                continue
            tg.check(_at_most(f"{mode}-{scheme} energy error", s.max_energy_error, 1e-10))
            if scheme != "RK44":
                continue
            if mode == "rf":
                tg.check(GoldenCheck(
                    "rf-RK44 eps range",
                    f"[{s.min_epsilon:.6g}, {s.max_epsilon:.6g}]",
                    "in [-0.0015, 0]",
                    bool(s.min_epsilon >= -0.0015 and s.max_epsilon <= 0.0),
                ))
                tg.check(_holds(
                    "rf-RK44 keeps dt",
                    s.min_effective_dt == s.max_effective_dt == 0.1,
                    f"[{s.min_effective_dt!r}, {s.max_effective_dt!r}]",
                    "0.1",
                ))
            else:
                tg.check(GoldenCheck(
                    "r-RK44 effective dt range",
                    f"[{s.min_effective_dt:.8g}, {s.max_effective_dt:.8g}]",
                    "[0.0995, 0.1]",
                    bool(s.min_effective_dt >= 0.0995 and s.max_effective_dt <= 0.1 + 1e-12),
                ))


def _fig8(tg: _Target, t_end: Optional[float]) -> None:
    horizon = t_end if t_end is not None else OSCILLATOR_CONVERGENCE_T_END
    schemes = available_schemes()
    for mode in ("classical", "rf"):
        table = convergence_table("oscillator", schemes, mode, OSCILLATOR_DTS, horizon)
        write_convergence_table(tg.exporter, f"fig8_{mode}", table)
        for scheme in schemes:
            p = builtin_tableau(scheme).p
            slope = table.slopes.get(scheme, float("nan"))
            if mode == "rf":
                tg.check(_at_least(f"rf-{scheme} order", slope, p - 0.2))
            else:
                tg.check(_within(f"classical-{scheme} order", slope, p, 0.2))
            if scheme in table.failures:
                tg.result.failures.append(f"{mode}-{scheme}: {table.failures[scheme]}")

    rows = []
    for scheme in schemes:
        p = builtin_tableau(scheme).p
        eps_max = []
        for dt in EPSILON_DTS:
            s = tg.run(experiment="oscillator", scheme=scheme, mode="rf", dt=dt, t_end=horizon)
            eps_max.append(s.max_abs_epsilon if s.max_abs_epsilon is not None else float("nan"))
            rows.append([scheme, fmt(dt), fmt(eps_max[-1])])
        ratios = [b / a for a, b in zip(eps_max, eps_max[1:])]
        rate, lo, hi = epsilon_halving_band(scheme)
        tg.check(GoldenCheck(
            f"rf-{scheme} max|eps| halving ratios",
            ", ".join(f"{r:.4f}" for r in ratios),
            f"in [{lo:.4f}, {hi:.4f}]",
            bool(all(lo <= r <= hi for r in ratios)),
        ))
        if rate != p - 1:
            observed = -math.log2(ratios[-1]) if ratios and ratios[-1] > 0 else float("nan")
            tg.note(
                f"rf-{scheme}: max|eps| graded at rate dt^{rate} instead of dt^{p - 1} "
                f"(observed rate {observed:.2f})"
            )
    tg.exporter.write_table("fig8_epsilon", ["scheme", "dt", "max_abs_eps"], rows)


def _fig9(tg: _Target, t_end: Optional[float]) -> None:
    horizon = t_end if t_end is not None else 2.0
    for scheme in available_schemes():
        for mode in ("classical", "r", "rf"):
            s = tg.run(experiment="burgers", scheme=scheme, mode=mode, cfl=0.3, t_end=horizon)
            if not s.records:
                continue
            tg.check(_at_most(f"{mode}-{scheme} linear invariant drift", s.linear_drift / abs(s.initial_sum), 1e-12))
            if mode == "classical":
                direction = energy_direction(s.energies())
                tg.check(_holds(
                    f"classical-{scheme} energy drifts monotonically",
                    direction in ("increasing", "decreasing"),
                    f"{direction}, drift {s.energy_drift:.3e}",
                    "increasing or decreasing",
                ))
                tg.note(f"classical-{scheme} energy is {direction} (drift {s.energy_drift:.3e})")
            else:
                tg.check(_at_most(f"{mode}-{scheme} energy error", s.max_energy_error, 1e-11))


def _fig10(tg: _Target, t_end: Optional[float]) -> None:
    horizon = t_end if t_end is not None else BURGERS_CONVERGENCE_T_END
    expectations = {"idt": (3.0, 0.3), "r": (3.7, None), "rf": (3.7, None)}
    for mode in ("idt", "r", "rf"):
        table = convergence_table("burgers", available_schemes(), mode, BURGERS_CFLS, horizon)
        write_convergence_table(tg.exporter, f"fig10_{mode}", table)
        for scheme, reason in table.failures.items():
            tg.result.failures.append(f"{mode}-{scheme}: {reason}")
        slope = table.slopes.get("RK44", float("nan"))
        target, tol = expectations[mode]
        if tol is None:
            tg.check(_at_least(f"{mode}-RK44 order", slope, target))
        else:
            tg.check(_within(f"{mode}-RK44 order", slope, target, tol))


_TARGETS: Dict[str, Callable[[_Target, Optional[float]], None]] = {
    "table1": _table1,
    "fig1": _fig1,
    "fig2-5": _fig2_5,
    "fig6": _fig6,
    "fig7": _fig7,
    "fig8": _fig8,
    "fig9": _fig9,
    "fig10": _fig10,
}


def reproduce(target: str, output_dir: Path = Path("./results"), t_end: Optional[float] = None) -> TargetResult:
    """Run a reproduction target and grade it.

    Args:
        target: One of :data:`TARGETS`.
        output_dir: Artifacts go to ``output_dir/target``.
        t_end: Override of the target's final time (fig2-5, fig6 to fig10).

    Returns:
        Checks, failures and artifacts; ``passed`` is True iff every check
        passed and no sub-run failed unexpectedly.

    Raises:
        ValueError: On an unknown target.
    """
    if target not in _TARGETS:
        raise ValueError(f"Unknown target: {target}. Use one of: {list(TARGETS)}")

    start = time.perf_counter()
    logger.info(f"Reproducing {target}")
    tg = _Target(target, output_dir)
    _TARGETS[target](tg, t_end)
    result = tg.finish()

    status = "passed" if result.passed else "FAILED"
    failed = len(result.failed_checks())
    logger.info(
        f"{target} {status}: {len(result.checks) - failed}/{len(result.checks)} checks "
        f"in {format_duration(time.perf_counter() - start)}"
    )
    return result
