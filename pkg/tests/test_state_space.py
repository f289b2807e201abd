"""Tests for state_space module."""

import numpy as np
import pytest

from relaxfree.state_space import DimensionError, as_state, energy, gram, inner, linear_combination


class TestAsState:
    """Tests for state construction."""

    def test_copies_to_float64(self):
        """Test that lists become float64 arrays."""
        values = [1, 2, 3]
        state = as_state(values)
        assert state.dtype == np.float64
        assert state.tolist() == [1.0, 2.0, 3.0]

    def test_copy_is_independent(self):
        """Test that the state does not alias its input."""
        source = np.array([1.0, 2.0])
        state = as_state(source)
        source[0] = 5.0
        assert state[0] == 1.0

    def test_rejects_matrix(self):
        """Test that 2-D input is rejected."""
        with pytest.raises(ValueError, match="one-dimensional"):
            as_state(np.eye(2))

    def test_rejects_non_finite(self):
        """Test that NaN components are rejected."""
        with pytest.raises(ValueError, match="non-finite"):
            as_state([1.0, float("nan")])


class TestInnerProduct:
    """Tests for inner and energy."""

    def test_inner(self):
        """Test the unweighted dot product."""
        assert inner(np.array([1.0, 2.0]), np.array([3.0, -1.0])) == 1.0

    def test_energy(self):
        """Test that energy is the squared norm."""
        assert energy(np.array([3.0, 4.0])) == 25.0

    def test_length_mismatch(self):
        """Test that different lengths raise DimensionError."""
        with pytest.raises(DimensionError):
            inner(np.zeros(2), np.zeros(3))


class TestLinearCombination:
    """Tests for base + dt·Σ c_j f_j."""

    def test_combination(self):
        """Test a two-stage combination."""
        base = np.array([1.0, 1.0])
        stages = [np.array([1.0, 0.0]), np.array([0.0, 2.0])]
        result = linear_combination(base, 0.5, [2.0, 1.0], stages)
        assert result.tolist() == [2.0, 2.0]

    def test_accepts_array_stages(self):
        """Test that an s×m array works like a list of stages."""
        base = np.zeros(3)
        F = np.arange(6.0).reshape(2, 3)
        assert np.array_equal(linear_combination(base, 1.0, [1.0, 1.0], F), [3.0, 5.0, 7.0])

    def test_does_not_modify_base(self):
        """Test that the base state is left untouched."""
        base = np.array([1.0, 2.0])
        linear_combination(base, 1.0, [1.0], [np.array([1.0, 1.0])])
        assert base.tolist() == [1.0, 2.0]

    def test_coefficient_count_mismatch(self):
        """Test that one weight per stage is required."""
        with pytest.raises(DimensionError, match="coefficients"):
            linear_combination(np.zeros(2), 1.0, [1.0, 2.0], [np.zeros(2)])

    def test_stage_length_mismatch(self):
        """Test that stages must match the base length."""
        with pytest.raises(DimensionError, match="length"):
            linear_combination(np.zeros(2), 1.0, [1.0], [np.zeros(3)])

    def test_ragged_stages(self):
        """Test that ragged stages raise DimensionError."""
        with pytest.raises(DimensionError):
            linear_combination(np.zeros(2), 1.0, [1.0, 1.0], [np.zeros(2), np.zeros(3)])


class TestGram:
    """Tests for the stage Gram matrix."""

    def test_entries(self):
        """Test G_ij = <f_i, f_j>."""
        F = np.array([[1.0, 0.0], [1.0, 1.0], [0.0, 2.0]])
        G = gram(F)
        assert G.shape == (3, 3)
        assert np.array_equal(G, F @ F.T)

    def test_exactly_symmetric(self, rng):
        """Test that mirrored entries are bitwise equal."""
        G = gram(rng.standard_normal((5, 40)))
        assert np.array_equal(G, G.T)

    def test_positive_semidefinite(self, rng):
        """Test that eigenvalues are non-negative up to round-off."""
        G = gram(rng.standard_normal((4, 3)))
        assert np.min(np.linalg.eigvalsh(G)) > -1e-12

    def test_single_stage(self):
        """Test that a single 1-D stage gives a 1×1 matrix."""
        assert gram(np.array([3.0, 4.0])).tolist() == [[25.0]]

    def test_empty(self):
        """Test that no stages raise DimensionError."""
        with pytest.raises(DimensionError):
            gram(np.array([]))
