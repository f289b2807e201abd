"""Butcher tableaus for explicit Runge-Kutta schemes.

Holds the scheme registry (SSPRK(2,2), SSPRK(3,3), RK(4,4), BSRK(8,5)),
consistency checks, the rooted-tree order conditions through order 5, and
validation of the k multipliers used by the relaxation-free schemes.
"""

import logging
import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

logger = logging.getLogger("relaxfree")

# Exact-by-construction identities (row sums, consistency, Σk = 0)
IDENTITY_TOL = 1e-14
# Non-degeneracy threshold for |Σ k_i c_i|
KC_TOL = 1e-12
# Order conditions of the declared order must hold to this residual
ORDER_TOL = 1e-13

MAX_ORDER = 5

DATA_FILE = "tableaus.txt"


class UnknownSchemeError(KeyError):
    """Raised when a scheme name is not in the registry."""


class TableauFileError(ValueError):
    """Raised when a tableau data file cannot be parsed."""


class KVectorError(ValueError):
    """Raised when a k-vector cannot define a relaxation-free scheme."""


class KSumError(KVectorError):
    """The multipliers do not sum to zero."""


class DegenerateKError(KVectorError):
    """Σ k_i c_i vanishes, so the perturbation would not preserve order."""


@dataclass(frozen=True, eq=False)
class ButcherTableau:
    """Coefficients of an explicit Runge-Kutta scheme.

    Attributes:
        name: Registry identifier, e.g. "RK44".
        A: s×s strictly lower triangular stage matrix.
        b: Length-s quadrature weights.
        c: Length-s abscissae.
        p: Declared order.
    """

    name: str
    A: np.ndarray
    b: np.ndarray
    c: np.ndarray
    p: int

    def __post_init__(self) -> None:
        A = np.array(self.A, dtype=np.float64)
        b = np.array(self.b, dtype=np.float64)
        c = np.array(self.c, dtype=np.float64)

        if b.ndim != 1 or b.size == 0:
            raise ValueError("b must be a non-empty vector")
        s = b.size
        if A.shape != (s, s):
            raise ValueError(f"A must be {s}x{s}, got {A.shape}")
        if c.shape != (s,):
            raise ValueError(f"c must have length {s}, got {c.shape}")
        if self.p < 1:
            raise ValueError("Declared order must be a positive integer")

        for arr in (A, b, c):
            arr.flags.writeable = False

        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "c", c)

    @property
    def s(self) -> int:
        """Number of stages."""
        return int(self.b.size)

    def with_b(self, b: Sequence[float], name: Optional[str] = None) -> "ButcherTableau":
        """Return a copy of this tableau with different weights."""
        return ButcherTableau(
            name=name or f"{self.name}*",
            A=self.A,
            b=np.asarray(b, dtype=np.float64),
            c=self.c,
            p=self.p,
        )

    def __repr__(self) -> str:
        return f"ButcherTableau(name={self.name!r}, s={self.s}, p={self.p})"


@dataclass(frozen=True)
class Check:
    """Outcome of one invariant check."""

    name: str
    passed: bool
    residual: float


@dataclass(frozen=True)
class ValidationReport:
    """Per-invariant results of :func:`validate_tableau`."""

    tableau: str
    checks: Tuple[Check, ...] = field(default_factory=tuple)

    @property
    def passed(self) -> bool:
        return all(check.passed for check in self.checks)

    def failures(self) -> List[Check]:
        return [check for check in self.checks if not check.passed]

    def get(self, name: str) -> Check:
        for check in self.checks:
            if check.name == name:
                return check
        raise KeyError(name)


@dataclass(frozen=True)
class OrderCondition:
    """Residual of one rooted-tree order condition."""

    label: str
    order: int
    residual: float

    @property
    def satisfied(self) -> bool:
        return abs(self.residual) <= ORDER_TOL


@dataclass(frozen=True, eq=False)
class KVector:
    """Relaxation-free multipliers k attached to a tableau.

    Attributes:
        k: Length-s multipliers with Σk = 0.
        kc_sum: Cached Σ k_i c_i, nonzero.
    """

    k: np.ndarray
    kc_sum: float

    def __post_init__(self) -> None:
        k = np.array(self.k, dtype=np.float64)
        k.flags.writeable = False
        object.__setattr__(self, "k", k)

    @property
    def max_abs(self) -> float:
        return float(np.max(np.abs(self.k)))


def validate_tableau(t: ButcherTableau) -> ValidationReport:
    """Check explicitness, row sums and consistency of a tableau.

    Args:
        t: Tableau to check.

    Returns:
        Report with one entry per invariant and its measured residual.
    """
    upper = np.triu(t.A)
    explicit_residual = float(np.max(np.abs(upper))) if upper.size else 0.0
    row_sum_residual = float(np.max(np.abs(t.A.sum(axis=1) - t.c)))
    consistency_residual = float(abs(t.b.sum() - 1.0))

    checks = (
        Check("explicit", explicit_residual == 0.0, explicit_residual),
        Check("row_sums", row_sum_residual <= IDENTITY_TOL, row_sum_residual),
        Check("consistency", consistency_residual <= IDENTITY_TOL, consistency_residual),
    )
    report = ValidationReport(tableau=t.name, checks=checks)

    for check in report.failures():
        logger.debug(f"{t.name}: {check.name} check failed (residual {check.residual:.3e})")

    return report


def _order_conditions(A: np.ndarray, b: np.ndarray, c: np.ndarray) -> List[Tuple[str, int, float, float]]:
    """All 17 rooted-tree conditions through order 5 as (label, order, value, target)."""
    Ac = A @ c
    Ac2 = A @ c**2
    Ac3 = A @ c**3
    AAc = A @ Ac
    AAc2 = A @ Ac2
    AcAc = A @ (c * Ac)
    AAAc = A @ AAc

    return [
        ("b", 1, b.sum(), 1.0),
        ("b.c", 2, b @ c, 1 / 2),
        ("b.c^2", 3, b @ c**2, 1 / 3),
        ("b.A.c", 3, b @ Ac, 1 / 6),
        ("b.c^3", 4, b @ c**3, 1 / 4),
        ("b.c.A.c", 4, b @ (c * Ac), 1 / 8),
        ("b.A.c^2", 4, b @ Ac2, 1 / 12),
        ("b.A.A.c", 4, b @ AAc, 1 / 24),
        ("b.c^4", 5, b @ c**4, 1 / 5),
        ("b.c^2.A.c", 5, b @ (c**2 * Ac), 1 / 10),
        ("b.c.A.c^2", 5, b @ (c * Ac2), 1 / 15),
        ("b.c.A.A.c", 5, b @ (c * AAc), 1 / 30),
        ("b.(A.c)^2", 5, b @ Ac**2, 1 / 20),
        ("b.A.c^3", 5, b @ Ac3, 1 / 20),
        ("b.A.(c.A.c)", 5, b @ AcAc, 1 / 40),
        ("b.A.A.c^2", 5, b @ AAc2, 1 / 60),
        ("b.A.A.A.c", 5, b @ AAAc, 1 / 120),
    ]


def check_order_conditions(t: ButcherTableau, up_to: int) -> List[OrderCondition]:
    """Evaluate the classical order conditions of a tableau.

    Args:
        t: Tableau to check.
        up_to: Highest order to include (1-5).

    Returns:
        One :class:`OrderCondition` per rooted tree of order ≤ ``up_to``,
        residual = value − 1/γ(tree).

    Raises:
        ValueError: If ``up_to`` is outside 1..5.
    """
    if not 1 <= up_to <= MAX_ORDER:
        raise ValueError(f"Order conditions are available for orders 1-{MAX_ORDER}, got {up_to}")

    return [
        OrderCondition(label, order, float(value - target))
        for label, order, value, target in _order_conditions(t.A, t.b, t.c)
        if order <= up_to
    ]


def declared_order_holds(t: ButcherTableau) -> bool:
    """True when every condition up to the declared order is satisfied."""
    return all(cond.satisfied for cond in check_order_conditions(t, min(t.p, MAX_ORDER)))


def validate_k(t: ButcherTableau, k: Sequence[float]) -> KVector:
    """Validate relaxation-free multipliers against a tableau.

    Args:
        t: Base tableau.
        k: Raw multipliers, one per stage.

    Returns:
        Validated :class:`KVector` with Σ k_i c_i cached.

    Raises:
        ValueError: If ``k`` has the wrong length.
        KSumError: If Σ k_i ≠ 0.
        DegenerateKError: If |Σ k_i c_i| ≤ 1e-12.
    """
    k_arr = np.asarray(k, dtype=np.float64)
    if k_arr.shape != (t.s,):
        raise ValueError(f"k must have {t.s} entries for {t.name}, got {k_arr.size}")

    k_sum = float(k_arr.sum())
    if abs(k_sum) > IDENTITY_TOL * max(1.0, float(np.max(np.abs(k_arr)))):
        raise KSumError(f"Multipliers must sum to zero, got sum(k) = {k_sum:.3e}")

    kc_sum = float(k_arr @ t.c)
    if abs(kc_sum) <= KC_TOL:
        raise DegenerateKError(
            f"sum(k*c) = {kc_sum:.3e} for {t.name}; choose k with sum(k*c) != 0"
        )

    return KVector(k=k_arr, kc_sum=kc_sum)


# REGISTRY =============================================================================

def _ssprk22() -> ButcherTableau:
    return ButcherTableau(
        name="SSPRK22",
        A=[[0.0, 0.0],
           [1.0, 0.0]],
        b=[1 / 2, 1 / 2],
        c=[0.0, 1.0],
        p=2,
    )


def _ssprk33() -> ButcherTableau:
    return ButcherTableau(
        name="SSPRK33",
        A=[[0.0, 0.0, 0.0],
           [1.0, 0.0, 0.0],
           [1 / 4, 1 / 4, 0.0]],
        b=[1 / 6, 1 / 6, 2 / 3],
        c=[0.0, 1.0, 1 / 2],
        p=3,
    )


def _rk44() -> ButcherTableau:
    return ButcherTableau(
        name="RK44",
        A=[[0.0, 0.0, 0.0, 0.0],
           [1 / 2, 0.0, 0.0, 0.0],
           [0.0, 1 / 2, 0.0, 0.0],
           [0.0, 0.0, 1.0, 0.0]],
        b=[1 / 6, 1 / 3, 1 / 3, 1 / 6],
        c=[0.0, 1 / 2, 1 / 2, 1.0],
        p=4,
    )


def _bsrk85() -> ButcherTableau:
    return _packaged_tableaus()["BSRK85"]


_REGISTRY: Dict[str, Callable[[], ButcherTableau]] = {
    "SSPRK22": _ssprk22,
    "SSPRK33": _ssprk33,
    "RK44": _rk44,
    "BSRK85": _bsrk85,
}

# k multipliers used for the relaxation-free variant of each scheme
DEFAULT_K: Dict[str, Tuple[float, ...]] = {
    "SSPRK22": (1.0, -1.0),
    "SSPRK33": (2.0, -1.0, -1.0),
    "RK44": (1.0, 2.0, -2.0, -1.0),
    "BSRK85": (2.0, -1.0, -1.0, 0.0, 0.0, 0.0, 0.0, 0.0),
}

_cache: Dict[str, ButcherTableau] = {}


def normalize_scheme_name(name: str) -> str:
    """Map spellings like "RK(4,4)" or "ssprk-33" onto registry keys."""
    return re.sub(r"[\s(),_\-]", "", name).upper()


def available_schemes() -> List[str]:
    """Names of all registered schemes."""
    return list(_REGISTRY)


def builtin_tableau(name: str) -> ButcherTableau:
    """Look up a registered scheme.

    Args:
        name: Scheme identifier ("SSPRK22", "SSPRK33", "RK44", "BSRK85").

    Returns:
        The tableau; instances are cached and immutable.

    Raises:
        UnknownSchemeError: If the name is not registered.
    """
    key = normalize_scheme_name(name)
    if key not in _REGISTRY:
        raise UnknownSchemeError(
            f"Unknown scheme: {name}. Use one of: {available_schemes()}"
        )
    if key not in _cache:
        _cache[key] = _REGISTRY[key]()
    return _cache[key]


def default_k(name: str) -> KVector:
    """Validated default multipliers for a registered scheme."""
    t = builtin_tableau(name)
    return validate_k(t, DEFAULT_K[t.name])


# DATA FILES ===========================================================================

def parse_tableau_text(text: str) -> Dict[str, ButcherTableau]:
    """Parse tableau records from the plain-text data format.

    Records are whitespace-separated tokens: name, s, p, then A row-major,
    b and c. ``#`` starts a comment. Records follow one another; line
    layout inside a record is free.

    Raises:
        TableauFileError: On truncated records or non-numeric tokens.
    """
    tokens: List[str] = []
    for line in text.splitlines():
        tokens.extend(line.split("#", 1)[0].split())

    tableaus: Dict[str, ButcherTableau] = {}
    pos = 0
    while pos < len(tokens):
        name = tokens[pos]
        try:
            s = int(tokens[pos + 1])
            p = int(tokens[pos + 2])
        except (IndexError, ValueError) as e:
            raise TableauFileError(f"Bad header for record '{name}': {e}")

        count = s * s + 2 * s
        values = tokens[pos + 3:pos + 3 + count]
        if len(values) != count:
            raise TableauFileError(
                f"Record '{name}' expects {count} coefficients, found {len(values)}"
            )
        try:
            numbers = np.array([float(v) for v in values], dtype=np.float64)
        except ValueError as e:
            raise TableauFileError(f"Non-numeric coefficient in record '{name}': {e}")

        tableaus[name] = ButcherTableau(
            name=name,
            A=numbers[:s * s].reshape(s, s),
            b=numbers[s * s:s * s + s],
            c=numbers[s * s + s:],
            p=p,
        )
        pos += 3 + count

    return tableaus


def load_tableau_file(path: Union[str, Path]) -> Dict[str, ButcherTableau]:
    """Load every record of a tableau data file."""
    path = Path(path)
    tableaus = parse_tableau_text(path.read_text(encoding="utf-8"))
    logger.debug(f"Loaded {len(tableaus)} tableau(s) from {path}")
    return tableaus


def _packaged_tableaus() -> Dict[str, ButcherTableau]:
    text = resources.files("relaxfree").joinpath("data").joinpath(DATA_FILE).read_text(encoding="utf-8")
    return parse_tableau_text(text)


def format_tableau(t: ButcherTableau) -> str:
    """Render a tableau in the usual c | A over b layout."""
    lines = []
    for i in range(t.s):
        row = " ".join(f"{a:>10.6f}" for a in t.A[i, :i]) if i else ""
        lines.append(f"{t.c[i]:>10.6f} | {row}")
    lines.append("-" * 13 + "+" + "-" * (11 * t.s))
    lines.append(" " * 11 + "| " + " ".join(f"{w:>10.6f}" for w in t.b))
    return "\n".join(lines)
