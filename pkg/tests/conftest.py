"""Pytest configuration and fixtures."""

import pytest
from pathlib import Path
import tempfile
import shutil

import numpy as np

from relaxfree.problems import Problem
from relaxfree.tableau import builtin_tableau


@pytest.fixture
def temp_dir():
    """Create a temporary directory for test outputs."""
    tmp = tempfile.mkdtemp()
    yield Path(tmp)
    shutil.rmtree(tmp, ignore_errors=True)


@pytest.fixture
def rk44():
    """The classical fourth-order tableau."""
    return builtin_tableau("RK44")


@pytest.fixture
def rotation_problem():
    """u' = Ju with J a rotation generator; energy is exactly conserved."""
    J = np.array([[0.0, -1.0], [1.0, 0.0]])
    return Problem(
        name="rotation",
        dimension=2,
        rhs=lambda t, u: J @ u,
        initial=np.array([1.0, 0.0]),
        conservation_class="conservative",
        exact=lambda t: np.array([np.cos(t), np.sin(t)]),
    )


@pytest.fixture
def rng():
    """Seeded random generator for property tests."""
    return np.random.default_rng(12345)
