"""Linear stability of explicit Runge-Kutta and relaxation-free schemes.

On u' = λu one step multiplies the solution by R(z), z = λΔt. For an
explicit tableau R is a polynomial of degree s with coefficients
d_0 = 1, d_j = bᵀA^{j−1}e. Replacing b by b + εk perturbs each
d_j by ε·kᵀA^{j−1}e.
"""

import logging
from dataclasses import dataclass
from typing import Iterable, List, Tuple, Union

import numpy as np
from scipy.optimize import bisect

from relaxfree.tableau import ButcherTableau, KVector

logger = logging.getLogger("relaxfree")

# |R| may exceed 1 by this much and still count as stable
BOUNDARY_TOL = 1e-12
SCAN_STEP = 0.01
SCAN_LIMIT = 100.0

DEFAULT_RE_RANGE = (-5.0, 1.0)
DEFAULT_IM_RANGE = (-5.0, 5.0)
DEFAULT_RESOLUTION = 800


class NoStableIntervalError(ValueError):
    """Raised when |R| exceeds 1 immediately along the scanned axis."""


@dataclass(frozen=True, eq=False)
class StabilityPolynomial:
    """R(z) = Σ d_j z^j.

    Attributes:
        coeffs: d_0..d_s in ascending order.
        label: Scheme name, plus ε for perturbed polynomials.
    """

    coeffs: np.ndarray
    label: str = ""

    def __post_init__(self) -> None:
        coeffs = np.array(self.coeffs, dtype=np.float64)
        coeffs.flags.writeable = False
        object.__setattr__(self, "coeffs", coeffs)

    @property
    def degree(self) -> int:
        return int(self.coeffs.size - 1)

    def __call__(self, z: Union[complex, np.ndarray]) -> Union[complex, np.ndarray]:
        return eval_poly(self, z)


@dataclass(frozen=True, eq=False)
class RegionGrid:
    """|R(z)| sampled on a rectangle; rows run over Im z, columns over Re z."""

    re: np.ndarray
    im: np.ndarray
    abs_r: np.ndarray
    label: str = ""

    def stable_mask(self) -> np.ndarray:
        return self.abs_r <= 1.0 + BOUNDARY_TOL

    def samples(self) -> Iterable[Tuple[float, float, float]]:
        """(re, im, |R|) triples in row-major order."""
        for i, y in enumerate(self.im):
            for j, x in enumerate(self.re):
                yield float(x), float(y), float(self.abs_r[i, j])


def _krylov_weights(t: ButcherTableau, w: np.ndarray) -> np.ndarray:
    """wᵀA^{j−1}e for j = 1..s."""
    v = np.ones(t.s)
    out = np.empty(t.s)
    for j in range(t.s):
        out[j] = w @ v
        v = t.A @ v
    return out


def stability_polynomial(t: ButcherTableau) -> StabilityPolynomial:
    """Stability polynomial of a tableau.

    The Neumann series of the resolvent terminates because A is nilpotent,
    so d_j = bᵀA^{j−1}e is exact.
    """
    coeffs = np.concatenate(([1.0], _krylov_weights(t, t.b)))
    return StabilityPolynomial(coeffs=coeffs, label=t.name)


def rf_polynomial(t: ButcherTableau, k: KVector, eps: float) -> StabilityPolynomial:
    """Stability polynomial of the relaxation-free scheme at a fixed ε."""
    base = stability_polynomial(t)
    perturbation = np.concatenate(([0.0], _krylov_weights(t, k.k)))
    return StabilityPolynomial(coeffs=base.coeffs + eps * perturbation, label=f"{t.name} eps={eps:g}")


def eval_poly(P: StabilityPolynomial, z: Union[complex, np.ndarray]) -> Union[complex, np.ndarray]:
    """Horner evaluation of R at z (scalar or array)."""
    z_arr = np.asarray(z, dtype=np.complex128)
    result = np.full(z_arr.shape, P.coeffs[-1], dtype=np.complex128)
    for d in P.coeffs[-2::-1]:
        result = result * z_arr + d
    if result.ndim == 0:
        return complex(result)
    return result


def _axis_limit(P: StabilityPolynomial, direction: complex, tol: float, axis: str) -> float:
    def excess(r: float) -> float:
        return abs(eval_poly(P, r * direction)) - 1.0 - BOUNDARY_TOL

    lo = 0.0
    hi = SCAN_STEP
    while excess(hi) <= 0.0:
        lo, hi = hi, hi + SCAN_STEP
        if hi > SCAN_LIMIT:
            raise NoStableIntervalError(f"{P.label}: no boundary crossing on the {axis} axis below {SCAN_LIMIT}")

    if lo == 0.0:
        raise NoStableIntervalError(f"{P.label}: |R| > 1 immediately along the {axis} axis")

    limit = bisect(excess, lo, hi, xtol=tol)
    logger.debug(f"{P.label}: {axis}-axis stability limit {limit:.6f}")
    return float(limit)


def imaginary_axis_limit(P: StabilityPolynomial, tol: float = 1e-10) -> float:
    """Imaginary-axis stability limit I(A, b).

    Scans y upward from 0 in steps of 0.01 for the first point with
    |R(iy)| > 1, then bisects the bracket to ``tol``.

    Raises:
        NoStableIntervalError: If no stable interval starts at 0.
    """
    return _axis_limit(P, 1j, tol, "imaginary")


def real_axis_limit(P: StabilityPolynomial, tol: float = 1e-10) -> float:
    """Length of the stable interval [−x*, 0] on the negative real axis."""
    return _axis_limit(P, -1.0 + 0j, tol, "real")


def region_scan(
    P: StabilityPolynomial,
    re_range: Tuple[float, float] = DEFAULT_RE_RANGE,
    im_range: Tuple[float, float] = DEFAULT_IM_RANGE,
    resolution: Union[int, Tuple[int, int]] = DEFAULT_RESOLUTION,
) -> RegionGrid:
    """Sample |R(z)| over a rectangle of the complex plane.

    Args:
        P: Stability polynomial.
        re_range: (min, max) of Re z.
        im_range: (min, max) of Im z.
        resolution: Points per axis, or (n_re, n_im).
    """
    n_re, n_im = (resolution, resolution) if isinstance(resolution, int) else resolution
    re = np.linspace(re_range[0], re_range[1], n_re)
    im = np.linspace(im_range[0], im_range[1], n_im)
    Z = re[np.newaxis, :] + 1j * im[:, np.newaxis]
    return RegionGrid(re=re, im=im, abs_r=np.abs(eval_poly(P, Z)), label=P.label)


def rf_limits(t: ButcherTableau, k: KVector, eps_values: Iterable[float]) -> List[Tuple[float, float, float]]:
    """Imaginary and real axis limits of the RF polynomial for each ε.

    Returns:
        (ε, imaginary limit, real limit) rows; NaN where no interval exists.
    """
    rows = []
    for eps in eps_values:
        P = rf_polynomial(t, k, eps)
        limits = []
        for finder in (imaginary_axis_limit, real_axis_limit):
            try:
                limits.append(finder(P))
            except NoStableIntervalError:
                limits.append(float("nan"))
        rows.append((float(eps), limits[0], limits[1]))
    return rows
