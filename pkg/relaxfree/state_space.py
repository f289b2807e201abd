"""Real inner-product states and the stage Gram matrix.

States are 1-D ``float64`` numpy arrays. Every energy formula in the
integrators consumes the Gram matrix G_ij = <f_i, f_j> of the stage
derivatives, computed once per step.
"""

from typing import Sequence, Union

import numpy as np
from numpy.typing import ArrayLike, NDArray

State = NDArray[np.float64]
GramMatrix = NDArray[np.float64]

Stages = Union[NDArray[np.float64], Sequence[State]]


class DimensionError(ValueError):
    """Raised when vectors of different lengths are combined."""


def as_state(values: ArrayLike) -> State:
    """Copy ``values`` into a finite 1-D float64 state.

    Raises:
        ValueError: If the result is not 1-D or has non-finite entries.
    """
    state = np.array(values, dtype=np.float64)
    if state.ndim != 1:
        raise ValueError(f"State must be one-dimensional, got shape {state.shape}")
    if not np.all(np.isfinite(state)):
        raise ValueError("State has non-finite components")
    return state


def _stack(stages: Stages) -> NDArray[np.float64]:
    try:
        F = np.asarray(stages, dtype=np.float64)
    except ValueError as e:
        raise DimensionError(f"Stages have inconsistent lengths: {e}")
    if F.ndim == 1:
        if F.size == 0:
            raise DimensionError("At least one stage is required")
        F = F.reshape(1, -1)
    if F.ndim != 2:
        raise DimensionError(f"Stages must stack to an s×m array, got shape {F.shape}")
    return F


def inner(u: State, v: State) -> float:
    """Unweighted L2 inner product Σ u_i v_i."""
    if u.shape != v.shape:
        raise DimensionError(f"Length mismatch: {u.shape} vs {v.shape}")
    return float(np.dot(u, v))


def energy(u: State) -> float:
    """Energy ‖u‖² = <u, u>."""
    return inner(u, u)


def linear_combination(base: State, dt: float, coeffs: ArrayLike, stages: Stages) -> State:
    """Return base + dt·Σ_j coeffs_j·stages_j.

    Args:
        base: Starting state u.
        dt: Step size scaling the sum.
        coeffs: One weight per stage.
        stages: s states, as a sequence or an s×m array.

    Raises:
        DimensionError: If the number of weights, stages or components disagree.
    """
    weights = np.asarray(coeffs, dtype=np.float64)
    F = _stack(stages)
    if weights.shape != (F.shape[0],):
        raise DimensionError(f"{weights.size} coefficients for {F.shape[0]} stages")
    if F.shape[1] != base.shape[0]:
        raise DimensionError(f"Stages have length {F.shape[1]}, base has {base.shape[0]}")
    return base + dt * (weights @ F)


def gram(stages: Stages) -> GramMatrix:
    """Gram matrix G_ij = <f_i, f_j> of the stage derivatives.

    Each unordered pair is computed once and mirrored, so G is exactly
    symmetric.

    Raises:
        DimensionError: If stages are ragged or empty.
    """
    F = _stack(stages)
    s = F.shape[0]
    if s == 0:
        raise DimensionError("At least one stage is required")

    G = np.empty((s, s), dtype=np.float64)
    for i in range(s):
        for j in range(i + 1):
            G[i, j] = G[j, i] = float(np.dot(F[i], F[j]))
    return G
