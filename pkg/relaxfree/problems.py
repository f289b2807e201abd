"""Test problems and their supporting numerics.

- periodic linear advection with a Fourier spectral differentiation matrix
- a 3×3 linear dissipative system whose classical RK(4,4) step gains energy
- a nonlinear oscillator with exact solution [cos t, sin t]
- inviscid Burgers with an entropy-conservative two-point flux
"""

import logging
import math
from dataclasses import dataclass
from typing import Any, Callable, Dict, Literal, Optional

import numpy as np
from scipy.integrate import solve_ivp
from scipy.linalg import expm

from relaxfree.stability import imaginary_axis_limit, stability_polynomial
from relaxfree.state_space import State, as_state
from relaxfree.tableau import ButcherTableau, builtin_tableau

logger = logging.getLogger("relaxfree")

ConservationClass = Literal["conservative", "dissipative", "generic"]

UNDEFINED_MODE_TOL = 1e-14

DISSIPATIVE_L = np.array(
    [[-1.0, -2.0, -2.0],
     [0.0, -1.0, -2.0],
     [0.0, 0.0, -1.0]]
)
# round-off allowance on the top eigenvalue of L + Lᵀ, relative to max|L|
DISSIPATIVE_TOL = 1e-12

BURGERS_POINTS = 50
BURGERS_DOMAIN = (-1.0, 1.0)

SINGULAR_VECTOR_TOL = 1e-14
SINGULAR_VECTOR_MAX_ITER = 100_000


class GridError(ValueError):
    """Raised for unsupported spectral grid sizes."""


class SingularVectorError(RuntimeError):
    """Power iteration did not isolate a dominant singular vector."""


class ZeroStateError(ZeroDivisionError):
    """The oscillator right-hand side is undefined at u = 0."""


@dataclass(frozen=True, eq=False)
class Problem:
    """An ODE u' = rhs(t, u) over a real inner-product state.

    Attributes:
        name: Short identifier used in logs and file names.
        dimension: Length m of the state.
        rhs: Right-hand side f(t, u).
        initial: Initial state u0 at t = 0.
        conservation_class: "conservative" (<u, f> = 0), "dissipative"
            (<u, f> ≤ 0) or "generic".
        exact: Solution u(t), when known or approximated by a reference.
        description: Human-readable summary.
        dx: Grid spacing for PDE semi-discretizations.
        x: Grid nodes for PDE semi-discretizations.
    """

    name: str
    dimension: int
    rhs: Callable[[float, State], State]
    initial: State
    conservation_class: ConservationClass = "generic"
    exact: Optional[Callable[[float], State]] = None
    description: str = ""
    dx: Optional[float] = None
    x: Optional[np.ndarray] = None


# SPECTRAL GRID ========================================================================

@dataclass(frozen=True, eq=False)
class SpectralGrid:
    """Equispaced periodic grid on [−π, π) with its differentiation matrix."""

    m: int
    x: np.ndarray
    D: np.ndarray


def fourier_grid(m: int) -> SpectralGrid:
    """Fourier spectral grid with m points.

    D_jl = ½(−1)^{j−l} cot((x_j − x_l)/2) off the diagonal, 0 on it.

    Raises:
        GridError: If m is odd or smaller than 4.
    """
    if m < 4 or m % 2:
        raise GridError(f"Spectral grid needs an even m >= 4, got {m}")

    j = np.arange(m)
    x = -np.pi + 2.0 * np.pi * j / m
    diff = j[:, np.newaxis] - j[np.newaxis, :]
    D = np.zeros((m, m))
    off = diff != 0
    sign = np.where(diff % 2 == 0, 1.0, -1.0)
    D[off] = 0.5 * sign[off] / np.tan((x[:, np.newaxis] - x[np.newaxis, :])[off] / 2.0)
    # exact skew-symmetry
    D = 0.5 * (D - D.T)
    return SpectralGrid(m=m, x=x, D=D)


def advection_problem(g: SpectralGrid, initial: Optional[State] = None, name: str = "advection") -> Problem:
    """Periodic advection u' = −Du on a spectral grid.

    The exact solution shifts the initial profile, which for a
    trigonometric interpolant is the modal phase rotation e^{−ikt}.
    """
    D = g.D
    u0 = smooth_init(g) if initial is None else as_state(initial)
    modes = _dft(u0)
    wavenumbers = _signed_wavenumbers(g.m)

    def rhs(t: float, u: State) -> State:
        return -(D @ u)

    def exact(t: float) -> State:
        return _idft(modes * np.exp(-1j * wavenumbers * t)).real

    return Problem(
        name=name,
        dimension=g.m,
        rhs=rhs,
        initial=u0,
        conservation_class="conservative",
        exact=exact,
        description=f"Fourier spectral advection, m={g.m}",
        dx=2.0 * np.pi / g.m,
        x=g.x,
    )


# DFT TOOLS ============================================================================

def _signed_wavenumbers(m: int) -> np.ndarray:
    """Wavenumbers 0..m/2−1, 0 for Nyquist, then −(m/2−1)..−1."""
    k = np.arange(m, dtype=np.float64)
    k[k > m // 2] -= m
    k[m // 2] = 0.0
    return k


def _dft_matrix(m: int, sign: float) -> np.ndarray:
    j = np.arange(m)
    x = -np.pi + 2.0 * np.pi * j / m
    return np.exp(sign * 1j * np.outer(np.arange(m), x))


def _dft(u: State) -> np.ndarray:
    """û_k = (1/m) Σ_j u_j e^{−ikx_j}, k = 0..m−1."""
    m = u.shape[0]
    return _dft_matrix(m, -1.0) @ u / m


def _idft(u_hat: np.ndarray) -> np.ndarray:
    """u_j = Σ_k û_k e^{ikx_j} with the Nyquist mode as e^{i(m/2)x}."""
    m = u_hat.shape[0]
    return _dft_matrix(m, 1.0).T @ u_hat


def dft_amplitudes(u: State) -> np.ndarray:
    """Mode amplitudes |û_k| for k = 0..m/2−1 (direct O(m²) transform)."""
    m = u.shape[0]
    return np.abs(_dft(u))[: m // 2]


def relative_amplification(before: np.ndarray, after: np.ndarray) -> np.ndarray:
    """Per-mode (after − before)/before; NaN marks modes with |before| ≤ 1e-14."""
    before = np.asarray(before, dtype=np.float64)
    after = np.asarray(after, dtype=np.float64)
    if before.shape != after.shape:
        raise ValueError(f"Amplitude vectors differ in shape: {before.shape} vs {after.shape}")
    result = np.full(before.shape, np.nan)
    defined = np.abs(before) > UNDEFINED_MODE_TOL
    result[defined] = (after[defined] - before[defined]) / before[defined]
    return result


class SplitMix64:
    """SplitMix64 generator (Steele, Lea & Flood, 2014).

    state ← state + 0x9E3779B97F4A7C15, then the output is mixed with two
    xor-shift-multiply rounds. ``uniform`` uses the top 53 bits.
    """

    MASK = 0xFFFFFFFFFFFFFFFF

    def __init__(self, seed: int) -> None:
        self.state = seed & self.MASK

    def next(self) -> int:
        self.state = (self.state + 0x9E3779B97F4A7C15) & self.MASK
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & self.MASK
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & self.MASK
        return z ^ (z >> 31)

    def uniform(self) -> float:
        return (self.next() >> 11) * 2.0**-53


def white_noise_init(m: int, seed: int) -> State:
    """Real state with unit amplitude in every mode 0 < k < m/2.

    û_k = e^{iθ_k} with θ_k = 2π·U(0,1) from :class:`SplitMix64`,
    û_{m−k} = conj(û_k), û_0 = 1 and the Nyquist mode zero.
    """
    if m < 4 or m % 2:
        raise GridError(f"White noise needs an even m >= 4, got {m}")

    rng = SplitMix64(seed)
    u_hat = np.zeros(m, dtype=np.complex128)
    u_hat[0] = 1.0
    for k in range(1, m // 2):
        theta = 2.0 * math.pi * rng.uniform()
        u_hat[k] = complex(math.cos(theta), math.sin(theta))
        u_hat[m - k] = u_hat[k].conjugate()

    u = _idft(u_hat)
    residue = float(np.max(np.abs(u.imag)))
    if residue > 1e-10:
        logger.warning(f"White noise state has imaginary residue {residue:.3e}")
    return as_state(u.real)


def sech2_profile(x: np.ndarray) -> np.ndarray:
    """sech²(7.5(x + 1))."""
    return 1.0 / np.cosh(7.5 * (np.asarray(x, dtype=np.float64) + 1.0)) ** 2


def smooth_init(g: SpectralGrid) -> State:
    """The sech² pulse sampled on the grid nodes."""
    return as_state(sech2_profile(g.x))


def dt_max(t: ButcherTableau, m: int) -> float:
    """Largest linearly stable step for spectral advection: I(A, b)/(m/2 − 1).

    Raises:
        NoStableIntervalError: If the scheme has no imaginary-axis interval.
    """
    if m < 4 or m % 2:
        raise GridError(f"Spectral grid needs an even m >= 4, got {m}")
    return imaginary_axis_limit(stability_polynomial(t)) / (m // 2 - 1)


# DISSIPATIVE SYSTEM ===================================================================

def right_singular_vector(M: np.ndarray) -> np.ndarray:
    """Dominant right singular vector of a small square matrix.

    Power iteration on MᵀM from [1, …, 1]/√n; the sign is fixed so the
    first nonzero component is positive.

    Raises:
        SingularVectorError: If the iteration stalls or the top singular
            value is not separated from the next one.
    """
    M = np.asarray(M, dtype=np.float64)
    S = M.T @ M
    n = S.shape[0]
    v = np.ones(n) / math.sqrt(n)

    converged = False
    for _ in range(SINGULAR_VECTOR_MAX_ITER):
        w = S @ v
        norm = float(np.linalg.norm(w))
        if norm == 0.0:
            raise SingularVectorError("Matrix is zero")
        w /= norm
        if np.linalg.norm(w - v) <= SINGULAR_VECTOR_TOL:
            v = w
            converged = True
            break
        v = w

    if not converged:
        raise SingularVectorError(f"Power iteration did not converge in {SINGULAR_VECTOR_MAX_ITER} iterations")

    sigma2 = float(v @ S @ v)
    if np.linalg.norm(S @ v - sigma2 * v) > 1e-12 * sigma2:
        raise SingularVectorError("Power iteration residual too large")

    # equal top singular values leave the direction undetermined
    deflated = S - sigma2 * np.outer(v, v)
    if n > 1 and np.max(np.linalg.eigvalsh(deflated)) >= sigma2 * (1.0 - 1e-8):
        raise SingularVectorError("Dominant singular value is not simple")

    nonzero = np.flatnonzero(np.abs(v) > 1e-15)
    if nonzero.size and v[nonzero[0]] < 0:
        v = -v
    return v


def matrix_polynomial(coeffs: np.ndarray, Z: np.ndarray) -> np.ndarray:
    """Σ d_j Z^j by Horner's rule."""
    n = Z.shape[0]
    result = coeffs[-1] * np.eye(n)
    for d in coeffs[-2::-1]:
        result = result @ Z + d * np.eye(n)
    return result


def dissipative_system(scheme: str = "RK44", scale: float = 0.5) -> Problem:
    """The 3×3 system u' = Lu with L + Lᵀ negative semidefinite.

    The initial state is the dominant right singular vector of R(scale·L),
    R being the stability polynomial of ``scheme``: the direction a single
    classical step amplifies most.
    """

    L = DISSIPATIVE_L
    P = stability_polynomial(builtin_tableau(scheme))
    u0 = right_singular_vector(matrix_polynomial(P.coeffs, scale * L))

    symmetric_part = L + L.T
    if np.max(np.linalg.eigvalsh(symmetric_part)) > DISSIPATIVE_TOL * np.max(np.abs(L)):
        raise ValueError("L + L^T is not negative semidefinite")

    def rhs(t: float, u: State) -> State:
        return L @ u

    def exact(t: float) -> State:
        return expm(t * L) @ u0

    return Problem(
        name="dissipative",
        dimension=3,
        rhs=rhs,
        initial=u0,
        conservation_class="dissipative",
        exact=exact,
        description="3x3 linear dissipative system",
    )


# OSCILLATOR ===========================================================================

def oscillator_problem() -> Problem:
    """u' = [−u₂, u₁]/‖u‖², u(0) = [1, 0], exact solution [cos t, sin t]."""

    def rhs(t: float, u: State) -> State:
        norm2 = float(u @ u)
        if norm2 == 0.0:
            raise ZeroStateError("Oscillator right-hand side is undefined at u = 0")
        return np.array([-u[1], u[0]]) / norm2

    def exact(t: float) -> State:
        return np.array([math.cos(t), math.sin(t)])

    return Problem(
        name="oscillator",
        dimension=2,
        rhs=rhs,
        initial=np.array([1.0, 0.0]),
        conservation_class="conservative",
        exact=exact,
        description="Nonlinear oscillator",
    )


# BURGERS ==============================================================================

def burgers_flux(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Entropy-conservative flux F(a, b) = (a² + ab + b²)/6."""
    return (a * a + a * b + b * b) / 6.0


def burgers_problem(
    n_points: int = BURGERS_POINTS,
    domain: tuple = BURGERS_DOMAIN,
    reference_tol: float = 1e-13,
) -> Problem:
    """Inviscid Burgers on a periodic interval with the symmetric flux.

    rhs_i = −(F_{i+1/2} − F_{i−1/2})/Δx with periodic wraparound
    (u_n ≡ u_0). The exact solution is replaced by a DOP853 reference
    computed lazily on first use.
    """
    left, right = domain
    dx = (right - left) / n_points
    x = left + dx * np.arange(n_points)
    u0 = np.exp(-30.0 * x**2)

    def rhs(t: float, u: State) -> State:
        flux = burgers_flux(u, np.roll(u, -1))
        return -(flux - np.roll(flux, 1)) / dx

    reference: Dict[str, Any] = {}

    def exact(t: float) -> State:
        # extend the dense reference when a later time is requested
        horizon = max(2.0, 2.0 * t)
        solution = reference.get("sol")
        if solution is None or reference.get("horizon", 0.0) < t:
            logger.debug(f"Computing Burgers reference solution to t = {horizon:g}")
            solution = solve_ivp(
                rhs, (0.0, horizon), u0, method="DOP853",
                rtol=reference_tol, atol=reference_tol, dense_output=True,
            )
            reference["sol"] = solution
            reference["horizon"] = horizon
        return np.asarray(solution.sol(t))  # type: ignore[attr-defined]

    return Problem(
        name="burgers",
        dimension=n_points,
        rhs=rhs,
        initial=u0,
        conservation_class="conservative",
        exact=exact,
        description=f"Inviscid Burgers, {n_points} points, symmetric flux",
        dx=dx,
        x=x,
    )


PROBLEMS: Dict[str, Callable[[], Problem]] = {
    "oscillator": oscillator_problem,
    "burgers": burgers_problem,
    "dissipative": dissipative_system,
}
