"""Tests for integrators module."""

import math

import numpy as np
import pytest

from relaxfree.integrators import (
    ConvergenceError,
    IntegrationError,
    NoRealRootError,
    NonFiniteError,
    QuadraticCoeffs,
    classical_step,
    compute_stages,
    convergence_study,
    energy_drift,
    epsilon_coefficients,
    fit_slope,
    gamma_relaxation,
    idt_step,
    integrate,
    physical_energy_change,
    rf_weights,
    rfrk_step,
    rrk_step,
    solve_epsilon,
    step,
    step_count,
)
from relaxfree.problems import (
    Problem,
    advection_problem,
    burgers_problem,
    dissipative_system,
    fourier_grid,
    oscillator_problem,
)
from relaxfree.stability import stability_polynomial
from relaxfree.state_space import energy
from relaxfree.tableau import available_schemes, builtin_tableau, default_k


def linear_problem(L, u0):
    L = np.asarray(L, dtype=np.float64)
    return Problem(name="linear", dimension=L.shape[0], rhs=lambda t, u: L @ u, initial=np.asarray(u0, dtype=np.float64))


class TestSolveEpsilon:
    """Tests for the per-step quadratic."""

    def test_property_suite(self, rng):
        """Test 10^4 random quadratics against their discriminant and residual."""
        for _ in range(10_000):
            A, B, C = rng.standard_normal(3) * 10.0 ** rng.uniform(-3, 3, size=3)
            q = QuadraticCoeffs.from_terms(A, B, C)
            root = solve_epsilon(q)
            if q.discriminant < 0:
                assert root is None
                continue
            assert root is not None
            scale = abs(A) * root * root + abs(B) * abs(root) + abs(C)
            assert abs(A * root * root + B * root + C) <= 1e-9 * scale
            # the other root is C/(A·root)
            assert root * root <= abs(C / A) * (1 + 1e-9)

    def test_cancellation_free(self):
        """Test the small root when B² ≫ 4AC."""
        root = solve_epsilon(QuadraticCoeffs.from_terms(1.0, -1e8, 1.0))
        assert root == pytest.approx(1e-8, rel=1e-14)

    def test_linear_fallback(self):
        """Test that A* ≈ 0 falls back to −C*/B*."""
        assert solve_epsilon(QuadraticCoeffs.from_terms(0.0, 2.0, -1.0)) == pytest.approx(0.5)
        assert solve_epsilon(QuadraticCoeffs.from_terms(1e-20, 2.0, -1.0)) == pytest.approx(0.5)

    def test_all_zero(self):
        """Test that 0 = 0 gives ε = 0."""
        assert solve_epsilon(QuadraticCoeffs.from_terms(0.0, 0.0, 0.0)) == 0.0

    def test_inconsistent_constant(self):
        """Test that C* ≠ 0 with vanishing A*, B* has no root."""
        assert solve_epsilon(QuadraticCoeffs.from_terms(0.0, 0.0, 1.0)) is None

    def test_no_real_root(self):
        """Test a negative discriminant."""
        q = QuadraticCoeffs.from_terms(1.0, 0.0, 1.0)
        assert q.discriminant == -4.0
        assert solve_epsilon(q) is None

    def test_double_root(self):
        """Test a zero discriminant."""
        assert solve_epsilon(QuadraticCoeffs.from_terms(1.0, -2.0, 1.0)) == pytest.approx(1.0)

    def test_scale_threshold(self):
        """Test that the zero threshold is relative to the scale."""
        q = QuadraticCoeffs.from_terms(1e-6, 2.0, -1.0)
        assert solve_epsilon(q, tol_A=1e-14, scale=1e9) == pytest.approx(0.5)


class TestEnergyAlgebra:
    """Tests for the energy identity behind every mode."""

    @pytest.mark.parametrize("name", ["SSPRK22", "SSPRK33", "RK44", "BSRK85"])
    def test_classical_energy_identity(self, name, rng):
        """Test ‖u_new‖² − ‖u‖² = physical change + spurious drift."""
        t = builtin_tableau(name)
        L = rng.standard_normal((4, 4))
        u = rng.standard_normal(4)
        dt = 0.1
        sd = compute_stages(t, lambda tt, v: L @ v, 0.0, u, dt)
        rec = classical_step(t, sd, u, 0.0, dt)
        change = energy(rec.state) - energy(u)
        predicted = physical_energy_change(t, sd, dt) + energy_drift(t, sd, dt)
        assert change == pytest.approx(predicted, rel=1e-10, abs=1e-13)

    def test_drift_matches_quadratic_constant(self, rk44, rng):
        """Test that C*·dt² equals the spurious drift."""
        L = rng.standard_normal((3, 3))
        sd = compute_stages(rk44, lambda tt, v: L @ v, 0.0, rng.standard_normal(3), 0.2)
        q = epsilon_coefficients(rk44, default_k("RK44"), sd)
        assert q.C_star * 0.04 == pytest.approx(energy_drift(rk44, sd, 0.2), rel=1e-12)
        assert q.A_star >= 0.0

    def test_gamma_cancels_drift(self, rk44, rng):
        """Test that the relaxed weights γb remove the spurious term."""
        L = rng.standard_normal((3, 3))
        u = rng.standard_normal(3)
        dt = 0.1
        sd = compute_stages(rk44, lambda tt, v: L @ v, 0.0, u, dt)
        gamma = gamma_relaxation(rk44, sd)
        rec = idt_step(rk44, sd, u, 0.0, dt)
        change = energy(rec.state) - energy(u)
        assert change == pytest.approx(gamma * physical_energy_change(rk44, sd, dt), rel=1e-10, abs=1e-13)

    def test_gamma_degenerate(self, rk44):
        """Test that γ = 1 when all stage derivatives vanish."""
        sd = compute_stages(rk44, lambda tt, v: np.zeros_like(v), 0.0, np.ones(3), 0.1)
        assert gamma_relaxation(rk44, sd) == 1.0

    def test_rf_weights(self, rk44):
        """Test b̂ = b + εk."""
        k = default_k("RK44")
        assert np.allclose(rf_weights(rk44, k, 0.01), rk44.b + 0.01 * np.array([1, 2, -2, -1]))

    def test_identity_over_random_steps(self, rng):
        """Test the classical, IDT and RF energy balance on 100 random steps across all problems."""
        problems = [
            (oscillator_problem(), 0.1),
            (dissipative_system(), 0.1),
            (burgers_problem(), 0.005),
            (advection_problem(fourier_grid(16)), 0.1),
        ]
        schemes = available_schemes()
        rf_steps = 0

        for i in range(100):
            problem, dt_scale = problems[i % len(problems)]
            name = schemes[int(rng.integers(len(schemes)))]
            t = builtin_tableau(name)
            k = default_k(name)
            u = rng.standard_normal(problem.dimension)
            if problem.name == "oscillator":
                u *= rng.uniform(0.5, 2.0) / np.linalg.norm(u)
            dt = dt_scale * rng.uniform(0.2, 1.0)

            sd = compute_stages(t, problem.rhs, 0.0, u, dt)
            physical = physical_energy_change(t, sd, dt)
            scale = energy(u) + abs(physical) + dt * dt * sd.g_scale * (t.s * k.max_abs) ** 2
            tol = 1e-11 * scale

            classical = classical_step(t, sd, u, 0.0, dt)
            assert classical.energy - energy(u) == pytest.approx(physical + energy_drift(t, sd, dt), abs=tol)

            relaxed = idt_step(t, sd, u, 0.0, dt)
            assert relaxed.energy - energy(u) == pytest.approx(relaxed.control * physical, abs=tol)

            try:
                rf = rfrk_step(t, k, sd, u, 0.0, dt)
            except NoRealRootError:
                continue
            rf_steps += 1
            expected = 2.0 * dt * float(rf_weights(t, k, rf.control) @ sd.uf_terms)
            assert rf.energy - energy(u) == pytest.approx(expected, abs=tol)

        assert rf_steps >= 25


class TestSteppers:
    """Tests for the four update modes."""

    def test_classical_matches_stability_polynomial(self, rk44, rotation_problem):
        """Test that one step on u' = Ju multiplies by R(i·dt)."""
        dt = 0.3
        rec = step("classical", rk44, rotation_problem.rhs, 0.0, rotation_problem.initial, dt)
        expected = stability_polynomial(rk44)(1j * dt)
        assert complex(rec.state[0], rec.state[1]) == pytest.approx(expected, rel=1e-14)
        assert rec.control is None
        assert rec.effective_dt == dt

    @pytest.mark.parametrize("method", ["idt", "r", "rf"])
    @pytest.mark.parametrize("name", ["SSPRK22", "SSPRK33", "RK44", "BSRK85"])
    def test_conservative_modes(self, method, name, rotation_problem):
        """Test that energy is conserved to round-off on a rotation."""
        t = builtin_tableau(name)
        k = default_k(name) if method == "rf" else None
        u = rotation_problem.initial
        rec = step(method, t, rotation_problem.rhs, 0.0, u, 0.2, k)
        assert rec.energy == pytest.approx(1.0, abs=1e-14)
        assert rec.method == method

    def test_classical_loses_energy_on_rotation(self, rk44, rotation_problem):
        """Test that classical RK44 damps |R(iy)| < 1 for small y."""
        rec = step("classical", rk44, rotation_problem.rhs, 0.0, rotation_problem.initial, 0.5)
        assert rec.energy < 1.0

    def test_r_mode_advances_gamma_dt(self, rk44, rotation_problem):
        """Test that R mode moves time by γ·dt and IDT by dt."""
        sd = compute_stages(rk44, rotation_problem.rhs, 0.0, rotation_problem.initial, 0.5)
        r = rrk_step(rk44, sd, rotation_problem.initial, 0.0, 0.5)
        idt = idt_step(rk44, sd, rotation_problem.initial, 0.0, 0.5)
        assert r.t == pytest.approx(r.control * 0.5)
        assert idt.t == 0.5
        assert np.array_equal(r.state, idt.state)

    def test_rf_keeps_dt(self, rk44):
        """Test that RF mode advances by exactly dt with a small ε."""
        problem = oscillator_problem()
        rec = step("rf", rk44, problem.rhs, 0.0, problem.initial, 0.1, default_k("RK44"))
        assert rec.t == 0.1
        assert rec.effective_dt == 0.1
        assert abs(rec.control) < 1e-2

    def test_rf_energy_identity(self, rk44):
        """Test ‖u_new‖² − ‖u‖² = 2dt Σ b̂_j <y_j, f_j> on the dissipative system."""
        problem = dissipative_system()
        k = default_k("RK44")
        u = problem.initial
        sd = compute_stages(rk44, problem.rhs, 0.0, u, 0.5)
        rec = rfrk_step(rk44, k, sd, u, 0.0, 0.5)
        expected = 2.0 * 0.5 * float(rf_weights(rk44, k, rec.control) @ sd.uf_terms)
        assert rec.energy - energy(u) == pytest.approx(expected, abs=1e-14)
        assert rec.energy < energy(u)

    def test_rf_stationary_state(self, rk44):
        """Test that a zero right-hand side leaves the state unchanged with ε = 0."""
        problem = linear_problem(np.zeros((2, 2)), [1.0, 2.0])
        rec = step("rf", rk44, problem.rhs, 0.0, problem.initial, 0.1, default_k("RK44"))
        assert rec.control == 0.0
        assert rec.state.tolist() == [1.0, 2.0]

    @pytest.mark.parametrize("factory", [dissipative_system, oscillator_problem])
    def test_gamma_tends_to_one(self, rk44, factory):
        """Test that |γ − 1| shrinks at every halving of dt."""
        problem = factory()
        deviations = []
        for j in range(6):
            rec = step("r", rk44, problem.rhs, 0.0, problem.initial, 0.2 * 0.5**j)
            deviations.append(abs(rec.control - 1.0))

        assert all(fine < coarse for coarse, fine in zip(deviations, deviations[1:]))
        assert deviations[-1] < 1e-5

    @pytest.mark.parametrize("name", ["SSPRK22", "SSPRK33", "RK44", "BSRK85"])
    def test_synthetic_epsilon_schedule(self, name):
        """Test that weights b + k·dt^(p−1) move one oscillator step by O(dt^(p+1))."""
        t = builtin_tableau(name)
        k = default_k(name)
        problem = oscillator_problem()
        u = problem.initial

        gaps = []
        for dt in (0.1, 0.05, 0.025):
            sd = compute_stages(t, problem.rhs, 0.0, u, dt)
            perturbed = u + dt * (rf_weights(t, k, dt ** (t.p - 1)) @ sd.f)
            gaps.append(float(np.linalg.norm(perturbed - classical_step(t, sd, u, 0.0, dt).state)))

        for coarse, fine in zip(gaps, gaps[1:]):
            assert fine <= 1.25 * 2.0 ** -(t.p + 1) * coarse

    def test_rf_requires_k(self, rk44, rotation_problem):
        """Test that step() needs a k-vector for RF mode."""
        with pytest.raises(ValueError, match="k-vector"):
            step("rf", rk44, rotation_problem.rhs, 0.0, rotation_problem.initial, 0.1)

    def test_unknown_method(self, rk44, rotation_problem):
        """Test that an unknown mode is rejected."""
        with pytest.raises(ValueError, match="Unknown method"):
            step("implicit", rk44, rotation_problem.rhs, 0.0, rotation_problem.initial, 0.1)

    def test_zero_state_oscillator(self, rk44):
        """Test that the oscillator singularity becomes a NonFiniteError."""
        problem = oscillator_problem()
        with pytest.raises(NonFiniteError, match="stage 1"):
            compute_stages(rk44, problem.rhs, 0.0, np.zeros(2), 0.1)

    def test_non_positive_dt(self, rk44, rotation_problem):
        """Test that dt must be positive."""
        with pytest.raises(ValueError, match="positive"):
            compute_stages(rk44, rotation_problem.rhs, 0.0, rotation_problem.initial, 0.0)


class TestDissipativeSystem:
    """Tests for the 3×3 dissipative experiment."""

    @pytest.mark.parametrize("dt", [0.5, 0.7])
    def test_classical_increases_energy(self, rk44, dt):
        """Test that one classical step increases the energy."""
        problem = dissipative_system()
        rec = integrate(problem, "classical", rk44, dt, dt)[-1]
        assert rec.energy > energy(problem.initial)

    @pytest.mark.parametrize("dt, actual", [(0.5, 0.44), (0.7, 0.42)])
    def test_r_mode_shrinks_step(self, rk44, dt, actual):
        """Test the effective step γ·dt of relaxation."""
        problem = dissipative_system()
        rec = step("r", rk44, problem.rhs, 0.0, problem.initial, dt)
        assert rec.effective_dt == pytest.approx(actual, abs=0.01)
        assert rec.energy < energy(problem.initial)

    @pytest.mark.parametrize("dt", [0.5, 0.7])
    def test_rf_keeps_step(self, rk44, dt):
        """Test that RF takes the assigned step and dissipates energy."""
        problem = dissipative_system()
        records = integrate(problem, "rf", rk44, dt, dt)
        assert len(records) == 1
        assert records[0].effective_dt == dt
        assert records[0].energy < energy(problem.initial)


class TestIntegrate:
    """Tests for the fixed-step driver."""

    def test_step_count(self):
        """Test integral and non-integral step counts."""
        assert step_count(0.0, 0.1, 1.0) == 10
        assert step_count(0.0, 2.0 / 167, 2.0) == 167
        with pytest.raises(ValueError, match="not a positive integer"):
            step_count(0.0, 0.3, 1.0)

    def test_records_and_times(self, rk44, rotation_problem):
        """Test that fixed-step times are t0 + n·dt."""
        records = integrate(rotation_problem, "rf", rk44, 0.1, 1.0)
        assert len(records) == 10
        assert [r.step for r in records] == list(range(1, 11))
        assert records[2].t == 0.1 * 3
        assert records[-1].t == 1.0

    def test_record_every_keeps_last(self, rk44, rotation_problem):
        """Test the stride and that the final step is always kept."""
        records = integrate(rotation_problem, "classical", rk44, 0.1, 1.0, record_every=3)
        assert [r.step for r in records] == [3, 6, 9, 10]

    def test_r_mode_reaches_t_end(self, rk44):
        """Test that R mode stops once the accumulated time reaches t_end."""
        problem = oscillator_problem()
        records = integrate(problem, "r", rk44, 0.1, 1.0)
        assert records[-1].t >= 1.0 - 1e-9
        assert records[-2].t < 1.0
        assert all(r.control is not None for r in records)

    def test_rf_default_k(self, rk44, rotation_problem):
        """Test that RF mode uses the registered k when none is given."""
        records = integrate(rotation_problem, "rf", rk44, 0.25, 1.0)
        assert all(abs(r.energy - 1.0) < 1e-14 for r in records)

    def test_failure_carries_partial_records(self, rk44):
        """Test that a failing step reports its index, time and the steps before it."""
        problem = Problem(
            name="blowup",
            dimension=1,
            rhs=lambda t, u: u * (np.nan if t > 0.25 else 1.0),
            initial=np.array([1.0]),
        )
        with pytest.raises(IntegrationError) as excinfo:
            integrate(problem, "classical", rk44, 0.1, 1.0)
        err = excinfo.value
        assert isinstance(err, NonFiniteError)
        assert err.step == 3
        assert err.time == pytest.approx(0.2)
        assert len(err.records) == 2
        assert "step 3" in str(err)

    @pytest.mark.parametrize(
        "kwargs, match",
        [
            ({"method": "bogus"}, "Unknown method"),
            ({"dt": -0.1}, "positive"),
            ({"t_end": 0.0}, "exceed"),
            ({"record_every": 0}, "record_every"),
            ({"dt": 0.3}, "not a positive integer"),
        ],
    )
    def test_invalid_arguments(self, rk44, rotation_problem, kwargs, match):
        """Test argument validation."""
        args = {"method": "classical", "dt": 0.1, "t_end": 1.0}
        args.update(kwargs)
        method = args.pop("method")
        with pytest.raises(ValueError, match=match):
            integrate(rotation_problem, method, rk44, **args)

    def test_oscillator_energy_conserved(self, rk44):
        """Test RF energy conservation over 100 oscillator steps."""
        problem = oscillator_problem()
        records = integrate(problem, "rf", rk44, 0.1, 10.0)
        assert max(abs(r.energy - 1.0) for r in records) < 1e-12


class TestConvergence:
    """Tests for slope fitting and convergence studies."""

    def test_fit_slope_exact(self):
        """Test a perfect power law."""
        dts = [0.1, 0.05, 0.025]
        slope, used = fit_slope(dts, [dt**4 for dt in dts])
        assert slope == pytest.approx(4.0)
        assert used.all()

    def test_fit_slope_excludes_floor_and_nan(self):
        """Test that round-off and failed points are left out."""
        slope, used = fit_slope([0.4, 0.2, 0.1, 0.05], [1e-2, 2.5e-3, float("nan"), 1e-15])
        assert slope == pytest.approx(2.0)
        assert used.tolist() == [True, True, False, False]

    def test_fit_slope_too_few(self):
        """Test that fewer than two usable points raise ConvergenceError."""
        with pytest.raises(ConvergenceError):
            fit_slope([0.1, 0.05], [1e-3, 1e-14])

    @pytest.mark.parametrize("method", ["classical", "rf"])
    def test_rk44_order_on_rotation(self, rk44, rotation_problem, method):
        """Test that RK44 converges with order about 4."""
        result = convergence_study(rotation_problem, method, rk44, [0.2, 0.1, 0.05, 0.025], 1.0)
        assert result.slope == pytest.approx(4.0, abs=0.3)
        assert not result.failures

    def test_requires_exact_solution(self, rk44):
        """Test that a problem without exact solution is rejected."""
        problem = linear_problem(np.eye(2), [1.0, 0.0])
        with pytest.raises(ValueError, match="no exact solution"):
            convergence_study(problem, "classical", rk44, [0.1, 0.05], 1.0)

    @pytest.mark.slow
    @pytest.mark.parametrize("name", available_schemes())
    def test_oscillator_orders(self, name):
        """Test classical order p on the nonlinear oscillator."""
        t = builtin_tableau(name)
        dts = [0.2 * 0.5**j for j in range(4)]
        result = convergence_study(oscillator_problem(), "classical", t, dts, 10.0)
        assert result.slope == pytest.approx(t.p, abs=0.3)
        assert math.isfinite(result.slope)
