import numpy as np
import pytest
from scipy.optimize import brentq

from vegtox import (
    Grid,
    ParameterError,
    State2,
    reaction_limit,
    step_limit,
)
from vegtox.equilibria import (
    EquilibriumKind,
    classify_equilibria,
    coexistence_equilibrium,
    jacobian_homogeneous,
    trivial_equilibrium,
)
from vegtox.model import theta

from conftest import make_params, scenario_params


def residual_norm(eq, params):
    dR, dT = reaction_limit(eq.state, params)
    return max(abs(dR), abs(dT))


class TestCoexistenceEquilibrium:
    def test_degenerate_linear_case(self):
        # gamma = s = 0 collapses the quadratic; R* is the carrying capacity
        p = make_params()
        eq = coexistence_equilibrium(p)
        assert eq.R_star == pytest.approx(5.4, abs=1e-12)
        assert eq.T_star == pytest.approx(2.7, abs=1e-12)
        assert residual_norm(eq, p) < 1e-12

    def test_against_bisection_oracle(self):
        # independent root-finder on the steady R-equation with the toxicity
        # balance substituted, never touching the quadratic formula
        p = scenario_params("ii")

        def steady_r_equation(R):
            T = p.c * p.d * R * p.T_hat / (p.k * p.T_hat - p.c * p.s * R)
            th = theta(T, p.T_hat)
            return (p.g - p.gamma * th) * (1.0 - R / p.R_hat) - (p.d + p.s * th)

        R_oracle = brentq(steady_r_equation, 1e-6, p.R_hat - 1e-9, xtol=1e-14)
        eq = coexistence_equilibrium(p)
        assert eq.R_star == pytest.approx(R_oracle, rel=1e-10)
        assert eq.R_star < 5.4
        assert residual_norm(eq, p) < 1e-12

    def test_plus_branch_rejected(self):
        # the larger quadratic root carries a toxicity beyond the critical
        # threshold, so it is not an admissible theta <= 1 equilibrium
        p = scenario_params("ii")
        a = p.g * p.s + p.gamma * p.d
        b = 2 * p.g * p.s + p.gamma * p.d + p.g * p.d
        c0 = (p.g - p.d) * (p.d + p.s)
        R_plus = (b + np.sqrt(b * b - 4 * a * c0)) / (2 * a) * p.R_hat
        T_plus = p.c * p.d * R_plus * p.T_hat / (p.k * p.T_hat - p.c * p.s * R_plus)
        assert T_plus > p.T_hat
        assert coexistence_equilibrium(p).R_star < R_plus

    def test_saturated_branch_yields_no_equilibrium(self):
        # solving with theta = 1 gives a toxicity below the threshold, i.e.
        # outside that branch's own validity region, for all feasible sweeps
        for s in np.linspace(0.0, 0.9, 8):
            for gamma in np.linspace(0.0, 5.0, 8):
                p = make_params(gamma=gamma, s=s)
                R = p.R_hat * (1.0 - (p.d + p.s) / (p.g - p.gamma))
                T = p.c * (p.d + p.s) * R / p.k
                assert not (0 < R < p.R_hat and T > p.T_hat)

    def test_requires_positive_mortality(self):
        with pytest.raises(ParameterError):
            coexistence_equilibrium(make_params(d=0.0, s=0.5))

    def test_inside_invariant_region(self):
        rng = np.random.default_rng(3)
        for _ in range(100):
            p = make_params(gamma=rng.uniform(0, 10), s=rng.uniform(0, 0.99))
            eq = coexistence_equilibrium(p)
            assert 0 < eq.R_star < p.R_hat
            assert 0 < eq.T_star < p.T_hat


class TestJacobian:
    def test_trivial_eigenvalues(self):
        p = scenario_params("ii")
        eq = trivial_equilibrium(p)
        assert eq.eigenvalues[0] == pytest.approx(9.0)
        assert eq.eigenvalues[1] == pytest.approx(-1.0)
        assert not eq.stable

    def test_coexistence_trace_determinant(self):
        p = scenario_params("ii")
        eq = coexistence_equilibrium(p)
        J = jacobian_homogeneous(eq.state, p)
        assert J.trace < 0
        assert J.determinant > 0

    def test_sign_structure_at_coexistence(self):
        for s in (0.1, 0.5, 0.9):
            p = make_params(gamma=0.3, s=s)
            eq = coexistence_equilibrium(p)
            J = jacobian_homogeneous(eq.state, p)
            assert J.j11 < 0 and J.j12 < 0 and J.j22 < 0
            assert J.j21 > 0

    def test_matches_finite_differences(self):
        p = scenario_params("ii")
        h = 1e-6
        for state in [(2.0, 1.0), (5.0, 3.0), (1.0, 0.2)]:
            J = jacobian_homogeneous(state, p)
            R, T = state
            fR_p, fT_p = reaction_limit((R + h, T), p)
            fR_m, fT_m = reaction_limit((R - h, T), p)
            assert J.j11 == pytest.approx((fR_p - fR_m) / (2 * h), rel=1e-5)
            assert J.j21 == pytest.approx((fT_p - fT_m) / (2 * h), rel=1e-5)
            fR_p, fT_p = reaction_limit((R, T + h), p)
            fR_m, fT_m = reaction_limit((R, T - h), p)
            assert J.j12 == pytest.approx((fR_p - fR_m) / (2 * h), rel=1e-5)
            assert J.j22 == pytest.approx((fT_p - fT_m) / (2 * h), rel=1e-5)


class TestClassification:
    def test_scenario_ii(self):
        eqs = classify_equilibria(scenario_params("ii"))
        trivial, coexistence = eqs
        assert trivial.kind is EquilibriumKind.TRIVIAL and not trivial.stable
        assert coexistence.kind is EquilibriumKind.COEXISTENCE and coexistence.stable

    def test_trivial_always_has_positive_eigenvalue(self):
        rng = np.random.default_rng(11)
        for _ in range(20):
            p = make_params(gamma=rng.uniform(0, 10), s=rng.uniform(0, 0.9))
            assert trivial_equilibrium(p).eigenvalues[0].real == pytest.approx(9.0)

    def test_coexistence_stable_on_grid(self):
        # 20x20 sweep of feasible (gamma, s) points
        for gamma in np.linspace(0.0, 10.0, 20):
            for s in np.linspace(0.0, 0.95, 20):
                eq = coexistence_equilibrium(make_params(gamma=gamma, s=s))
                assert all(ev.real < 0 for ev in eq.eigenvalues)
                assert eq.stable


class TestAnalyticProperties:
    def test_biomass_monotone_in_stress_parameters(self):
        s_grid = np.linspace(0.0, 0.95, 25)
        r_along_s = [coexistence_equilibrium(make_params(gamma=0.5, s=s)).R_star
                     for s in s_grid]
        assert np.all(np.diff(r_along_s) <= 1e-12)
        g_grid = np.linspace(0.0, 10.0, 25)
        r_along_g = [coexistence_equilibrium(make_params(gamma=g, s=0.3)).R_star
                     for g in g_grid]
        assert np.all(np.diff(r_along_g) <= 1e-12)

    def test_discriminant_nonnegative(self):
        for gamma in np.linspace(0.0, 10.0, 30):
            for s in np.linspace(0.0, 0.99, 30):
                p = make_params(gamma=gamma, s=s)
                a = p.g * p.s + p.gamma * p.d
                b = 2 * p.g * p.s + p.gamma * p.d + p.g * p.d
                c0 = (p.g - p.d) * (p.d + p.s)
                assert b * b - 4 * a * c0 >= 0

    def test_toxicity_below_biomass(self):
        for gamma in np.linspace(0.0, 10.0, 15):
            for s in np.linspace(0.0, 0.95, 15):
                eq = coexistence_equilibrium(make_params(gamma=gamma, s=s))
                assert eq.T_star < eq.R_star

    def test_random_trajectories_stay_and_converge(self):
        # reaction-only integration of 100 random starts in the invariant
        # region: each grid cell evolves independently with diffusion off
        p = scenario_params("ii")
        eq = coexistence_equilibrium(p)
        rng = np.random.default_rng(42)
        n = 100
        grid = Grid(1, 8.0, n)
        state = State2(rng.uniform(1e-3, p.R_hat, n), rng.uniform(0.0, p.T_hat, n))
        dt = 1e-3
        for _ in range(30_000):
            state = step_limit(state, p, grid, dt, diffusion=False)
            assert state.R.min() >= -1e-12 and state.T.min() >= -1e-12
            assert state.R.max() <= p.R_hat + 1e-9
            assert state.T.max() <= p.T_hat + 1e-9
        assert np.max(np.abs(state.R - eq.R_star)) < 1e-6
        assert np.max(np.abs(state.T - eq.T_star)) < 1e-6
