import numpy as np
import pytest
from hypothesis import given, strategies as st

from vegtox import (
    DomainError,
    ModelParams,
    ParameterError,
    carrying_capacity,
    derive_T_hat,
    propagation_coefficient,
    quasi_steady_split,
    reaction_fast,
    reaction_limit,
    theta,
    theta_prime,
)
from vegtox.equilibria import coexistence_equilibrium

from conftest import make_params, scenario_params


class TestTheta:
    def test_values(self):
        assert theta(0.0, 3.0) == 0.0
        assert theta(1.5, 3.0) == 0.5
        assert theta(10.0, 3.0) == 1.0

    def test_array_input(self):
        out = theta(np.array([0.0, 1.5, 3.0, 10.0]), 3.0)
        np.testing.assert_allclose(out, [0.0, 0.5, 1.0, 1.0])

    @pytest.mark.parametrize("bad", [-0.1, np.nan, np.inf])
    def test_domain_errors(self, bad):
        with pytest.raises(DomainError):
            theta(bad, 3.0)

    def test_bad_threshold(self):
        with pytest.raises(DomainError):
            theta(1.0, 0.0)

    @given(st.floats(0.0, 100.0), st.floats(0.0, 100.0))
    def test_clamped_and_monotone(self, t1, t2):
        lo, hi = sorted((t1, t2))
        v_lo, v_hi = theta(lo, 3.0), theta(hi, 3.0)
        assert 0.0 <= v_lo <= v_hi <= 1.0

    @given(st.floats(0.0, 10.0))
    def test_continuity_at_kink(self, t):
        # piecewise pieces agree at the kink; nearby values stay close
        eps = 1e-9
        assert abs(theta(t + eps, 3.0) - theta(t, 3.0)) < 1e-9


class TestThetaPrime:
    def test_values(self):
        assert theta_prime(1.5, 3.0) == pytest.approx(1.0 / 3.0)
        assert theta_prime(10.0, 3.0) == 0.0
        # left value at the kink
        assert theta_prime(3.0, 3.0) == pytest.approx(1.0 / 3.0)

    def test_kink_never_hit_at_equilibrium(self):
        # the left-value convention is safe: T* < T_hat strictly
        for s in np.linspace(0.0, 0.9, 10):
            p = make_params(gamma=0.2, s=s)
            eq = coexistence_equilibrium(p)
            assert eq.T_star < p.T_hat

    def test_domain_error(self):
        with pytest.raises(DomainError):
            theta_prime(-1.0, 3.0)


class TestDeriveTHat:
    def test_paper_value_with_extra_mortality(self):
        assert derive_T_hat(c=0.5, d=1.0, s=0.5, k=1.0, R_hat=6.0) == pytest.approx(4.5)

    def test_paper_value_without(self):
        assert derive_T_hat(c=0.5, d=1.0, s=0.0, k=1.0, R_hat=6.0) == pytest.approx(3.0)

    def test_infeasible(self):
        with pytest.raises(ParameterError):
            derive_T_hat(c=0.5, d=1.0, s=1.1, k=1.0, R_hat=6.0)


class TestModelParams:
    def test_derives_t_hat(self):
        p = make_params(s=0.5)
        assert p.T_hat == pytest.approx(4.5)
        assert p.t_hat_derived

    def test_supplied_t_hat_below_floor_rejected(self):
        with pytest.raises(ParameterError):
            make_params(s=0.5, T_hat=3.0)

    def test_supplied_t_hat_above_floor_warns(self):
        with pytest.warns(UserWarning):
            p = make_params(T_hat=3.5)
        assert p.T_hat == 3.5
        assert not p.t_hat_derived

    @pytest.mark.parametrize("kw", [
        dict(g=1.0, d=1.0),        # g > d violated
        dict(gamma=11.0),          # gamma > g
        dict(sigma=3.33),          # sigma >= d_R
        dict(sigma=5.0),
        dict(s=1.1),               # feasibility c(d+s)/k >= 1
        dict(d=-0.5),
        dict(k=0.0),
    ])
    def test_invalid(self, kw):
        with pytest.raises(ParameterError):
            make_params(**kw)

    def test_with_updates_rederives_t_hat(self):
        p = make_params(s=0.2)
        q = p.with_updates(s=0.8)
        assert q.T_hat == pytest.approx(derive_T_hat(0.5, 1.0, 0.8, 1.0, 6.0))

    def test_epsilon_validation(self):
        with pytest.raises(ParameterError):
            make_params(epsilon=0.0)
        p = make_params()
        with pytest.raises(ParameterError):
            p.require_epsilon()


class TestCarryingCapacity:
    def test_values(self):
        assert carrying_capacity(make_params()) == pytest.approx(5.4)
        assert carrying_capacity(make_params(g=2.0)) == pytest.approx(3.0)

    def test_requires_growth_exceeding_mortality(self):
        with pytest.raises(ParameterError):
            make_params(g=10.0, d=10.0)


class TestReactionLimit:
    def test_extinction_fixed_point(self):
        p = scenario_params("ii")
        assert reaction_limit((0.0, 0.0), p) == (0.0, 0.0)

    def test_equilibrium_residual(self):
        p = scenario_params("ii")
        eq = coexistence_equilibrium(p)
        dR, dT = reaction_limit(eq.state, p)
        assert abs(dR) < 1e-12 * eq.R_star * p.g
        assert abs(dT) < 1e-12 * eq.T_star * p.k

    def test_at_reference_biomass(self):
        # logistic term vanishes at R = R_hat; with T = 0 only base mortality acts
        p = make_params(gamma=0.1, s=0.5)
        dR, dT = reaction_limit((6.0, 0.0), p)
        assert dR == pytest.approx(-6.0)
        assert dT == pytest.approx(3.0)

    def test_toxicity_axis_decays(self):
        p = scenario_params("iii")
        for T in (0.5, 2.0, 4.0):
            dR, dT = reaction_limit((0.0, T), p)
            assert dR == 0.0
            assert dT == pytest.approx(-p.k * T)

    def test_domain_error_on_negative_state(self):
        with pytest.raises(DomainError):
            reaction_limit((-1.0, 0.0), make_params())


class TestReactionFast:
    def test_origin(self):
        p = scenario_params("ii", epsilon=1e-3)
        assert reaction_fast((0.0, 0.0, 0.0), p) == (0.0, 0.0, 0.0)

    def test_no_exchange_at_zero_toxicity(self):
        # p(0) = 0 and R_e = 0 leave nothing to exchange
        p = make_params(gamma=0.1, s=0.5, epsilon=1e-6)
        dRh, dRe, dT = reaction_fast((1.0, 0.0, 0.0), p)
        assert dT == pytest.approx(p.c * p.d)
        assert dRh == pytest.approx(p.g * (1 - 1 / p.R_hat) - p.d)
        assert dRe == 0.0

    def test_equilibrium_split_kills_exchange(self):
        p = scenario_params("ii", epsilon=1e-9)
        eq = coexistence_equilibrium(p)
        R_h, R_e = quasi_steady_split(eq.R_star, eq.T_star, p)
        dRh, dRe, dT = reaction_fast((R_h, R_e, eq.T_star), p)
        # with epsilon = 1e-9 any residual exchange would dominate
        assert abs(dRh) < 1e-3
        assert abs(dRe) < 1e-3

    def test_requires_epsilon(self):
        with pytest.raises(ParameterError):
            reaction_fast((1.0, 1.0, 1.0), scenario_params("ii"))

    def test_sum_matches_limit_reaction(self):
        # quasi-steady split makes the summed fast reactions equal the
        # limit reactions, exchange cancelling algebraically
        p = scenario_params("ii", epsilon=0.37)
        rng = np.random.default_rng(7)
        for _ in range(50):
            R = rng.uniform(0.0, 6.0)
            T = rng.uniform(0.0, 4.4)
            R_h, R_e = quasi_steady_split(R, T, p)
            dRh, dRe, dT_fast = reaction_fast((R_h, R_e, T), p)
            dR_lim, dT_lim = reaction_limit((R, T), p)
            assert dRh + dRe == pytest.approx(dR_lim, rel=1e-12, abs=1e-12)
            assert dT_fast == pytest.approx(dT_lim, rel=1e-12, abs=1e-12)


def test_propagation_coefficient_positive():
    p = scenario_params("ii")
    T = np.linspace(0.0, 50.0, 200)
    assert np.all(propagation_coefficient(T, p) > 0.0)
    assert propagation_coefficient(1e9, p) == pytest.approx(p.d_R - p.sigma)
