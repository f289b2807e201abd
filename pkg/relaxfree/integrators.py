"""Explicit Runge-Kutta steppers with energy control.

Four update rules share one stage computation:

- classical: u + dt Σ b_j f_j
- idt: relaxation-scaled update γ b, time still advances by dt
- r: relaxation-scaled update γ b, time advances by γ dt
- rf: perturbed weights b + k ε, time advances by dt

All energy algebra runs on the stage Gram matrix, so each step costs
s(s+1)/2 inner products on top of the base scheme.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Literal, Optional, Protocol, Sequence, Tuple

import numpy as np

from relaxfree.state_space import GramMatrix, State, as_state, energy, gram, inner, linear_combination
from relaxfree.tableau import ButcherTableau, KVector, default_k

logger = logging.getLogger("relaxfree")

Method = Literal["classical", "idt", "r", "rf"]
METHODS = ("classical", "idt", "r", "rf")

Rhs = Callable[[float, State], State]


class ProblemLike(Protocol):
    """What the drivers need from a problem (see problems.Problem)."""

    name: str
    rhs: Rhs
    initial: State
    exact: Optional[Callable[[float], State]]


# Relative size of Σ b_i b_j G_ij below which γ falls back to 1
GAMMA_DEGENERATE_TOL = 1e-28
# γ at or below this means the relaxed step has collapsed
GAMMA_STALL = 1e-8
# |A*| below TOL_A · max|k|² · max|G| is treated as zero
EPSILON_TOL_A = 1e-14
# (t_end - t0)/dt must be this close to an integer for fixed-step modes
STEP_COUNT_TOL = 1e-9
# Errors below this are treated as roundoff when fitting slopes
ROUNDOFF_FLOOR = 1e-12


class IntegrationError(RuntimeError):
    """A step could not be completed.

    Attributes:
        step: Index of the failing step (filled in by :func:`integrate`).
        time: Start time of the failing step.
        records: Steps recorded before the failure.
    """

    def __init__(self, message: str, step: Optional[int] = None, time: Optional[float] = None):
        super().__init__(message)
        self.step = step
        self.time = time
        self.records: List["StepRecord"] = []

    def __str__(self) -> str:
        message = super().__str__()
        if self.step is not None:
            return f"{message} (step {self.step}, t = {self.time:.6g})"
        return message


class NonFiniteError(IntegrationError):
    """The right-hand side or the update produced non-finite values."""


class NoRealRootError(IntegrationError):
    """The ε quadratic has no real root; the step is too large for RF mode."""


class StalledRelaxationError(IntegrationError):
    """γ_n collapsed towards zero and time no longer advances."""


class ConvergenceError(ValueError):
    """Too few usable points to fit a convergence slope."""


@dataclass(frozen=True, eq=False)
class StageData:
    """Stage states, derivatives and their inner products for one step.

    Attributes:
        y: s×m stage solutions.
        f: s×m stage derivatives.
        G: Gram matrix of ``f``.
        uf_terms: <y_j, f_j> per stage, kept for diagnostics only.
    """

    y: np.ndarray
    f: np.ndarray
    G: GramMatrix
    uf_terms: np.ndarray

    @property
    def g_scale(self) -> float:
        return float(np.max(np.abs(self.G))) if self.G.size else 0.0


@dataclass(frozen=True, eq=False)
class StepRecord:
    """One accepted step.

    Attributes:
        t: Time at the end of the step.
        state: Solution at ``t``.
        energy: ‖state‖².
        effective_dt: Time actually advanced (γ dt in R mode).
        control: ε_n in RF mode, γ_n in R/IDT modes, None for classical.
        method: Stepper that produced the record.
        step: 1-based step index.
        uf_terms: <y_j, f_j> of the step's stages.
    """

    t: float
    state: State
    energy: float
    effective_dt: float
    control: Optional[float] = None
    method: str = "classical"
    step: int = 0
    uf_terms: Optional[np.ndarray] = None


@dataclass(frozen=True)
class QuadraticCoeffs:
    """Coefficients of A*ε² + B*ε + C* = 0 and its discriminant."""

    A_star: float
    B_star: float
    C_star: float
    discriminant: float

    @classmethod
    def from_terms(cls, A_star: float, B_star: float, C_star: float) -> "QuadraticCoeffs":
        return cls(A_star, B_star, C_star, B_star * B_star - 4.0 * A_star * C_star)


# STAGES ===============================================================================

def compute_stages(t: ButcherTableau, rhs: Rhs, tn: float, u: State, dt: float) -> StageData:
    """Evaluate the s stages of one explicit step.

    Args:
        t: Base tableau.
        rhs: Right-hand side f(t, u).
        tn: Step start time.
        u: Step start state.
        dt: Requested step size.

    Returns:
        Stage data with Gram matrix and <y_j, f_j> filled in.

    Raises:
        ValueError: If dt is not positive.
        NonFiniteError: If an rhs evaluation fails or returns non-finite values.
    """
    if not dt > 0:
        raise ValueError(f"Step size must be positive, got {dt}")

    s = t.s
    m = u.shape[0]
    Y = np.empty((s, m), dtype=np.float64)
    F = np.empty((s, m), dtype=np.float64)

    for i in range(s):
        Y[i] = u + dt * (t.A[i, :i] @ F[:i]) if i else u
        time = tn + t.c[i] * dt
        try:
            F[i] = rhs(time, Y[i])
        except ArithmeticError as e:
            raise NonFiniteError(f"rhs evaluation failed at stage {i + 1}: {e}") from e
        if not np.all(np.isfinite(F[i])):
            raise NonFiniteError(f"rhs returned non-finite values at stage {i + 1}")

    uf_terms = np.array([inner(Y[j], F[j]) for j in range(s)])
    return StageData(y=Y, f=F, G=gram(F), uf_terms=uf_terms)


# ENERGY ALGEBRA =======================================================================

def _bAG(t: ButcherTableau, w: np.ndarray, G: GramMatrix) -> float:
    """Σ_ij w_i a_ij G_ij."""
    return float(np.einsum("i,ij,ij->", w, t.A, G))


def energy_drift(t: ButcherTableau, sd: StageData, dt: float) -> float:
    """Spurious energy ΔE of the classical update.

    ΔE = −2dt² Σ b_i a_ij G_ij + dt² Σ b_i b_j G_ij
    """
    return dt * dt * (-2.0 * _bAG(t, t.b, sd.G) + float(t.b @ sd.G @ t.b))


def physical_energy_change(t: ButcherTableau, sd: StageData, dt: float) -> float:
    """The semi-discretization term 2dt Σ b_j <y_j, f_j> of the energy change."""
    return 2.0 * dt * float(t.b @ sd.uf_terms)


def gamma_relaxation(t: ButcherTableau, sd: StageData) -> float:
    """Relaxation parameter γ_n cancelling the spurious energy.

    Returns 1 when ‖Σ b_j f_j‖² is negligible relative to max|G|.
    """
    denominator = float(t.b @ sd.G @ t.b)
    if denominator <= GAMMA_DEGENERATE_TOL * sd.g_scale:
        return 1.0
    return 2.0 * _bAG(t, t.b, sd.G) / denominator


def epsilon_coefficients(t: ButcherTableau, k: KVector, sd: StageData) -> QuadraticCoeffs:
    """Coefficients of the per-step quadratic for ε_n.

    A* = Σ k_i k_j G_ij
    B* = −2 Σ k_i a_ij G_ij + 2 Σ k_i b_j G_ij
    C* = −2 Σ b_i a_ij G_ij + Σ b_i b_j G_ij   (so C* dt² = ΔE)
    """
    G = sd.G
    A_star = float(k.k @ G @ k.k)
    B_star = -2.0 * _bAG(t, k.k, G) + 2.0 * float(k.k @ G @ t.b)
    C_star = -2.0 * _bAG(t, t.b, G) + float(t.b @ G @ t.b)
    return QuadraticCoeffs.from_terms(A_star, B_star, C_star)


def solve_epsilon(q: QuadraticCoeffs, tol_A: float = EPSILON_TOL_A, scale: float = 1.0) -> Optional[float]:
    """Smallest-magnitude real root of A*ε² + B*ε + C* = 0.

    Args:
        q: Quadratic coefficients.
        tol_A: Relative threshold under which A* (and B*, C*) count as zero.
        scale: Magnitude the threshold is relative to.

    Returns:
        ε_n, or None when no real root exists.
    """
    tol = tol_A * scale
    A, B, C = q.A_star, q.B_star, q.C_star

    if abs(A) <= tol:
        if abs(B) <= tol:
            return 0.0 if abs(C) <= tol else None
        # linear fallback keeps conservation near steady states
        return -C / B

    if q.discriminant < 0:
        return None

    # cancellation-free: q_big carries the large root, C/q_big the small one
    q_big = -0.5 * (B + math.copysign(math.sqrt(q.discriminant), B))
    if q_big == 0.0:
        return 0.0
    return C / q_big


# STEPPERS =============================================================================

def _finish(
    u_new: State,
    tn: float,
    effective_dt: float,
    control: Optional[float],
    method: str,
    sd: StageData,
) -> StepRecord:
    if not np.all(np.isfinite(u_new)):
        raise NonFiniteError(f"{method} update produced non-finite values")
    return StepRecord(
        t=tn + effective_dt,
        state=u_new,
        energy=energy(u_new),
        effective_dt=effective_dt,
        control=control,
        method=method,
        uf_terms=sd.uf_terms,
    )


def classical_step(t: ButcherTableau, sd: StageData, u: State, tn: float, dt: float) -> StepRecord:
    """Plain Runge-Kutta update with weights b."""
    u_new = linear_combination(u, dt, t.b, sd.f)
    return _finish(u_new, tn, dt, None, "classical", sd)


def _relaxed_state(t: ButcherTableau, sd: StageData, u: State, dt: float) -> Tuple[float, State]:
    gamma = gamma_relaxation(t, sd)
    if gamma <= GAMMA_STALL:
        raise StalledRelaxationError(f"Relaxation parameter collapsed (gamma = {gamma:.3e})")
    return gamma, linear_combination(u, dt, gamma * t.b, sd.f)


def rrk_step(t: ButcherTableau, sd: StageData, u: State, tn: float, dt: float) -> StepRecord:
    """Relaxation step: update scaled by γ_n, time advances by γ_n·dt."""
    gamma, u_new = _relaxed_state(t, sd, u, dt)
    return _finish(u_new, tn, gamma * dt, gamma, "r", sd)


def idt_step(t: ButcherTableau, sd: StageData, u: State, tn: float, dt: float) -> StepRecord:
    """Incremental direction step: relaxation update, time advances by dt."""
    gamma, u_new = _relaxed_state(t, sd, u, dt)
    return _finish(u_new, tn, dt, gamma, "idt", sd)


def rf_weights(t: ButcherTableau, k: KVector, eps: float) -> np.ndarray:
    """Perturbed weights b̂ = b + k ε."""
    return t.b + k.k * eps


def rfrk_step(t: ButcherTableau, k: KVector, sd: StageData, u: State, tn: float, dt: float) -> StepRecord:
    """Relaxation-free step: weights b + k ε_n, time advances by dt.

    Raises:
        NoRealRootError: If the ε quadratic has no real root.
    """
    q = epsilon_coefficients(t, k, sd)
    eps = solve_epsilon(q, EPSILON_TOL_A, k.max_abs**2 * sd.g_scale)
    if eps is None:
        raise NoRealRootError(
            f"No real epsilon (A*={q.A_star:.3e}, B*={q.B_star:.3e}, "
            f"C*={q.C_star:.3e}, disc={q.discriminant:.3e})"
        )
    u_new = linear_combination(u, dt, rf_weights(t, k, eps), sd.f)
    return _finish(u_new, tn, dt, eps, "rf", sd)


def step(
    method: Method,
    t: ButcherTableau,
    rhs: Rhs,
    tn: float,
    u: State,
    dt: float,
    k: Optional[KVector] = None,
) -> StepRecord:
    """Compute stages and apply one update of the given method."""
    sd = compute_stages(t, rhs, tn, u, dt)
    if method == "classical":
        return classical_step(t, sd, u, tn, dt)
    if method == "idt":
        return idt_step(t, sd, u, tn, dt)
    if method == "r":
        return rrk_step(t, sd, u, tn, dt)
    if method == "rf":
        if k is None:
            raise ValueError("RF mode requires a k-vector")
        return rfrk_step(t, k, sd, u, tn, dt)
    raise ValueError(f"Unknown method: {method}. Use one of: {list(METHODS)}")


# DRIVERS ==============================================================================

def step_count(t0: float, dt: float, t_end: float) -> int:
    """Number of fixed steps from t0 to t_end.

    Raises:
        ValueError: If (t_end − t0)/dt is not within 1e-9 of an integer.
    """
    ratio = (t_end - t0) / dt
    n = int(round(ratio))
    if abs(ratio - n) > STEP_COUNT_TOL or n < 1:
        raise ValueError(
            f"(t_end - t0)/dt = {ratio:.12g} is not a positive integer; "
            "choose dt that divides the interval"
        )
    return n


def integrate(
    problem: ProblemLike,
    method: Method,
    t: ButcherTableau,
    dt: float,
    t_end: float,
    k: Optional[KVector] = None,
    u0: Optional[State] = None,
    t0: float = 0.0,
    record_every: int = 1,
    max_steps: Optional[int] = None,
) -> List[StepRecord]:
    """Fixed-step integration of a problem.

    Fixed-time modes take exactly round((t_end − t0)/dt) steps. R mode
    marches until the accumulated time first reaches t_end; the last step
    is not truncated.

    Args:
        problem: Anything with ``rhs`` and ``initial`` attributes.
        method: "classical", "idt", "r" or "rf".
        t: Base tableau.
        dt: Requested step size.
        t_end: Final time.
        k: Multipliers for RF mode (defaults to the scheme's registered k).
        u0: Initial state (defaults to ``problem.initial``).
        t0: Initial time.
        record_every: Keep every n-th step; the final step is always kept.
        max_steps: Safety cap for R mode (default 1000× the nominal count).

    Returns:
        Recorded steps in time order.

    Raises:
        ValueError: On invalid arguments.
        IntegrationError: With ``step`` and ``time`` set, if a step fails.
    """
    if method not in METHODS:
        raise ValueError(f"Unknown method: {method}. Use one of: {list(METHODS)}")
    if not dt > 0:
        raise ValueError(f"Step size must be positive, got {dt}")
    if not t_end > t0:
        raise ValueError(f"t_end must exceed t0 ({t_end} <= {t0})")
    if record_every < 1:
        raise ValueError("record_every must be at least 1")

    if method == "rf" and k is None:
        k = default_k(t.name)

    u = as_state(problem.initial if u0 is None else u0)
    rhs = problem.rhs

    records: List[StepRecord] = []
    tn = t0
    n = 0

    if method == "r":
        nominal = int(math.ceil((t_end - t0) / dt))
        cap = max_steps if max_steps is not None else 1000 * nominal + 10

        def more() -> bool:
            return t_end - tn > STEP_COUNT_TOL * dt
    else:
        total = step_count(t0, dt, t_end)
        cap = total

        def more() -> bool:
            return n < total

    logger.debug(f"Integrating {getattr(problem, 'name', 'problem')} with {method}-{t.name}, dt={dt:g}")

    while more():
        if n >= cap:
            raise StalledRelaxationError(
                f"Exceeded {cap} steps before reaching t_end = {t_end}", step=n + 1, time=tn
            )
        try:
            rec = step(method, t, rhs, tn, u, dt, k)
        except IntegrationError as e:
            e.step = n + 1
            e.time = tn
            e.records = records
            raise
        n += 1
        # fixed-step times are t0 + n·dt so round-off does not accumulate
        t_next = rec.t if method == "r" else t0 + n * dt
        rec = StepRecord(
            t=t_next,
            state=rec.state,
            energy=rec.energy,
            effective_dt=rec.effective_dt,
            control=rec.control,
            method=rec.method,
            step=n,
            uf_terms=rec.uf_terms,
        )
        u, tn = rec.state, rec.t

        if n % record_every == 0 or not more():
            records.append(rec)
            if rec.control is not None:
                logger.debug(f"step {n}: t={tn:.6g} energy={rec.energy:.17g} control={rec.control:.6e}")

    return records


@dataclass
class ConvergenceResult:
    """Final-time errors over a sequence of step sizes.

    Attributes:
        dts: Requested step sizes.
        errors: L2 error at the final time (NaN where the run failed).
        slope: Least-squares slope of log(error) against log(dt).
        used: Mask of points entering the fit.
        failures: Step size → failure message for aborted runs.
    """

    dts: np.ndarray
    errors: np.ndarray
    slope: float
    used: np.ndarray
    failures: Dict[float, str] = field(default_factory=dict)


def fit_slope(dts: Sequence[float], errors: Sequence[float], floor: float = ROUNDOFF_FLOOR) -> Tuple[float, np.ndarray]:
    """Least-squares slope of log(error) vs log(dt) above the roundoff floor.

    Returns:
        (slope, used mask).

    Raises:
        ConvergenceError: If fewer than two points are usable.
    """
    dts_arr = np.asarray(dts, dtype=np.float64)
    err_arr = np.asarray(errors, dtype=np.float64)
    used = np.isfinite(err_arr) & (err_arr > floor)
    if used.sum() < 2:
        raise ConvergenceError(f"Need at least 2 errors above {floor:g}, got {int(used.sum())}")
    slope, _ = np.polyfit(np.log(dts_arr[used]), np.log(err_arr[used]), 1)
    return float(slope), used


def convergence_study(
    problem: ProblemLike,
    method: Method,
    t: ButcherTableau,
    dts: Sequence[float],
    t_end: float,
    k: Optional[KVector] = None,
    t0: float = 0.0,
) -> ConvergenceResult:
    """Measure the convergence order of a method on a problem with a known solution.

    The error is ‖u_N − u_exact(t_N)‖ at the actual final time t_N (which
    overshoots t_end slightly in R mode).

    Raises:
        ValueError: If the problem has no exact solution.
        ConvergenceError: If fewer than two runs give usable errors.
    """
    if problem.exact is None:
        raise ValueError(f"Problem '{problem.name}' has no exact solution")

    errors = []
    failures: Dict[float, str] = {}
    for dt in dts:
        try:
            records = integrate(problem, method, t, dt, t_end, k=k, t0=t0, record_every=10**9)
        except IntegrationError as e:
            logger.warning(f"{method}-{t.name} dt={dt:g} failed: {e}")
            failures[float(dt)] = str(e)
            errors.append(float("nan"))
            continue
        final = records[-1]
        errors.append(float(np.linalg.norm(final.state - problem.exact(final.t))))

    slope, used = fit_slope(dts, errors)
    logger.info(f"{method}-{t.name} on {problem.name}: observed order {slope:.2f}")
    return ConvergenceResult(
        dts=np.asarray(dts, dtype=np.float64),
        errors=np.asarray(errors),
        slope=slope,
        used=used,
        failures=failures,
    )
