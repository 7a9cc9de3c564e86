import math

import numpy as np
import pytest

from vegtox.equilibria import coexistence_equilibrium, jacobian_homogeneous
from vegtox.turing import (
    characteristic_matrix,
    diffusion_jacobian,
    dispersion_relation,
    is_turing_unstable,
    mode_onset_sigma,
    neumann_laplacian_eigenvalues,
    region_area_by_s,
    restabilization_s,
    sigma_L,
    sigma_L0,
    turing_onset_sigma,
    turing_region_scan,
)

from conftest import make_params, scenario_params


def random_feasible_params(rng, sigma=None):
    gamma = rng.uniform(0.0, 10.0)
    s = rng.uniform(0.0, 0.95)
    p = make_params(gamma=gamma, s=s)
    if sigma is not None:
        p = p.with_updates(sigma=sigma)
    return p


class TestCharacteristicMatrix:
    def test_zero_mode_is_reaction_jacobian(self):
        p = scenario_params("ii")
        eq = coexistence_equilibrium(p)
        M0 = characteristic_matrix(0.0, eq, p)
        J = jacobian_homogeneous(eq.state, p)
        assert M0 == J

    def test_diffusion_jacobian_signs(self):
        for s in (0.1, 0.5, 0.9):
            p = make_params(gamma=1.0, s=s, sigma=2.0)
            D = diffusion_jacobian(coexistence_equilibrium(p), p)
            assert D.j11 > 0 and D.j22 > 0
            assert D.j12 <= 0 and D.j21 == 0.0

    def test_trace_negative_for_all_modes(self):
        # random sweep of >= 1000 feasible parameter sets
        rng = np.random.default_rng(5)
        lams = np.linspace(0.0, 200.0, 13)
        for _ in range(1000):
            p = random_feasible_params(rng, sigma=rng.uniform(0.0, 3.32))
            eq = coexistence_equilibrium(p)
            for lam in lams:
                assert characteristic_matrix(lam, eq, p).trace < 0.0

    def test_determinant_quadratic_in_lambda(self):
        # det M must be A*l^2 - B*l + C with A = d_T * (d_R - sigma*theta) > 0
        p = scenario_params("ii")
        eq = coexistence_equilibrium(p)
        J = jacobian_homogeneous(eq.state, p)
        D = diffusion_jacobian(eq, p)
        A = p.d_T * D.j11
        B = p.d_T * J.j11 + D.j11 * J.j22 - D.j12 * J.j21
        C = J.determinant
        assert A > 0
        for lam in (0.0, 0.7, 3.3, 12.9, 40.0):
            det = characteristic_matrix(lam, eq, p).determinant
            assert det == pytest.approx(A * lam**2 - B * lam + C, rel=1e-12, abs=1e-12)


class TestSpectrum:
    def test_1d_values(self):
        spec = neumann_laplacian_eigenvalues(8.0, 3, dim=1)
        np.testing.assert_allclose(
            spec.lambdas, [0.0, (math.pi / 8) ** 2, (2 * math.pi / 8) ** 2])

    def test_unit_interval(self):
        spec = neumann_laplacian_eigenvalues(math.pi, 2, dim=1)
        np.testing.assert_allclose(spec.lambdas, [0.0, 1.0])

    def test_2d_multiplicity(self):
        spec = neumann_laplacian_eigenvalues(8.0, 4, dim=2)
        assert spec.lambdas[0] == 0.0 and spec.multiplicities[0] == 1
        assert spec.lambdas[1] == pytest.approx((math.pi / 8) ** 2)
        assert spec.multiplicities[1] == 2  # (1,0) and (0,1)
        assert np.all(np.diff(spec.lambdas) > 0)


class TestDispersion:
    def test_no_cross_diffusion_no_pattern(self):
        disp = dispersion_relation(scenario_params("i"), L=8.0, n_modes=64)
        assert disp.max_growth <= 0.0

    def test_cross_diffusion_gives_growth(self):
        disp = dispersion_relation(scenario_params("ii"), L=8.0, n_modes=64)
        assert disp.max_growth > 0.0
        assert disp.max_mode >= 1

    def test_zero_mode_matches_homogeneous_eigenvalues(self):
        p = scenario_params("ii")
        disp = dispersion_relation(p, L=8.0, n_modes=8)
        eq_eigs = coexistence_equilibrium(p).eigenvalues
        got = disp.modes[0].growth
        assert got[0] == pytest.approx(eq_eigs[0], rel=1e-12, abs=1e-14)
        assert got[1] == pytest.approx(eq_eigs[1], rel=1e-12, abs=1e-14)
        J = jacobian_homogeneous(coexistence_equilibrium(p).state, p)
        assert characteristic_matrix(0.0, coexistence_equilibrium(p), p).determinant \
            == pytest.approx(J.determinant)

    def test_unstable_window_is_bounded(self):
        # det M is eventually increasing in lambda, so large modes are stable
        p = scenario_params("ii")
        disp = dispersion_relation(p, L=8.0, n_modes=256)
        assert disp.modes[-1].growth[0].real < 0.0


class TestSigmaThresholds:
    def test_reduces_to_closed_form_without_effects(self):
        p = make_params()
        assert sigma_L0(p) == pytest.approx(2.1, abs=1e-10)
        assert sigma_L(p) == pytest.approx(sigma_L0(p), rel=1e-10)

    def test_closed_form_symmetry_case(self):
        # g = 2d with d_T = 0 collapses sigma_L0 to d_R
        p = make_params(g=2.0, d_T=0.0)
        assert sigma_L0(p) == pytest.approx(p.d_R)

    def test_agreement_sweep_without_effects(self):
        rng = np.random.default_rng(17)
        for _ in range(10):
            p = make_params(g=rng.uniform(2.0, 20.0), d=rng.uniform(0.1, 1.5),
                            k=rng.uniform(0.5, 2.0), d_T=rng.uniform(0.0, 0.3))
            assert sigma_L(p) == pytest.approx(sigma_L0(p), rel=1e-10)

    def test_scenario_value_in_admissible_interval(self):
        p = scenario_params("ii")
        val = sigma_L(p)
        assert 0.0 < val < p.d_R
        assert val < 3.0  # sigma = 3 clears the necessary threshold

    def test_necessary_threshold_quadratic_characterization(self):
        # below sigma_L the minimum of det M over lambda >= 0 sits at
        # lambda = 0 (no mode dips below the homogeneous determinant);
        # above, the parabola vertex dips below det J
        p = scenario_params("ii")
        eq = coexistence_equilibrium(p)
        sig = sigma_L(p)
        lams = np.linspace(0.0, 400.0, 20001)

        def min_det(sigma):
            q = p.with_updates(sigma=sigma)
            eqq = coexistence_equilibrium(q)
            dets = [characteristic_matrix(l, eqq, q).determinant for l in lams]
            return min(dets)

        det_J = jacobian_homogeneous(eq.state, p).determinant
        assert min_det(sig - 1e-3) == pytest.approx(det_J, rel=1e-9)
        assert min_det(sig + 1e-3) < det_J * (1 - 1e-9)

    def test_onset_above_necessary_threshold(self):
        # actual growth requires the quadratic's discriminant to open, strictly
        # beyond the necessary condition
        p = scenario_params("ii")
        onset = turing_onset_sigma(p)
        assert sigma_L(p) < onset < p.d_R
        below = dispersion_relation(p.with_updates(sigma=onset - 1e-4),
                                    L=1e3, n_modes=4096)
        above = dispersion_relation(p.with_updates(sigma=onset + 1e-4),
                                    L=1e3, n_modes=4096)
        assert below.max_growth <= 0.0
        assert above.max_growth > 0.0

    def test_mode_onset_is_exact_root(self):
        p = scenario_params("ii")
        eq = coexistence_equilibrium(p)
        for lam in (7.5, 9.87, 12.5):
            sig = mode_onset_sigma(p, lam)
            q = p.with_updates(sigma=sig)
            det = characteristic_matrix(lam, coexistence_equilibrium(q), q).determinant
            assert abs(det) < 1e-9


class TestIsTuringUnstable:
    def test_scenarios(self):
        assert not is_turing_unstable(scenario_params("i"), 8.0, 64).unstable
        check = is_turing_unstable(scenario_params("ii"), 8.0, 64)
        assert check.unstable and check.kappa >= 1

    def test_necessity_sweep(self):
        rng = np.random.default_rng(23)
        for _ in range(100):
            p = random_feasible_params(rng)
            sig = rng.uniform(0.0, sigma_L(p))
            if sig >= p.d_R:
                continue
            assert not is_turing_unstable(p.with_updates(sigma=sig), 8.0, 64).unstable


class TestRegionScan:
    @pytest.fixture(scope="class")
    def scan(self):
        return turing_region_scan(make_params(), resolution=101)

    def test_corner_value(self, scan):
        assert scan.sigma_L[0, 0] == pytest.approx(2.1, abs=1e-10)

    def test_ceiling_bounds_feasible_cells(self, scan):
        vals = scan.sigma_L[scan.feasible]
        assert np.all(vals < scan.ceiling)
        assert scan.ceiling == pytest.approx(3.33)

    def test_infeasible_edge_flagged(self, scan):
        # s = 1 violates c(d+s)/k < 1 with the baseline constants
        assert not scan.feasible[:, -1].any()
        assert np.isnan(scan.sigma_L[0, -1])

    def test_continuity(self, scan):
        vals = scan.sigma_L[:, scan.feasible.all(axis=0)]
        assert np.nanmax(np.abs(np.diff(vals, axis=0))) < 0.05
        assert np.nanmax(np.abs(np.diff(vals, axis=1))) < 0.05

    def test_region_area_turnover(self, scan):
        # the gamma-integrated admissible area reverses trend exactly once,
        # near s = 0.16
        ss, area = region_area_by_s(scan)
        inner = area[:-1]  # drop the infeasible s = 1 edge (area 0 there)
        d = np.diff(inner)
        signs = np.sign(d[np.abs(d) > 1e-12])
        flips = np.nonzero(np.diff(signs))[0]
        assert len(flips) == 1
        s_star = ss[flips[0] + 1]
        assert s_star == pytest.approx(0.16, abs=0.05)

    def test_slice_has_single_interior_minimum(self, scan):
        # along s at fixed gamma the threshold dips once and recovers
        vals = scan.sigma_L[0, scan.feasible[0]]
        d = np.diff(vals)
        signs = np.sign(d[np.abs(d) > 1e-14])
        flips = np.nonzero(np.diff(signs))[0]
        assert len(flips) == 1


class TestRestabilization:
    def test_continuous_vs_discrete_modes(self):
        p = scenario_params("iii")
        s_cont = restabilization_s(p, 3.0)
        lams = neumann_laplacian_eigenvalues(8.0, 64).lambdas[1:]
        s_disc = restabilization_s(p, 3.0, lambdas=lams)
        assert 0.5 < s_disc <= s_cont < 1.0
        assert s_cont - s_disc < 0.02 * s_cont

    def test_endpoints_check(self):
        # necessary threshold never catches up with sigma = 3 on the feasible
        # s range: it is the window-opening threshold that crosses
        p = scenario_params("iii")
        for s in np.linspace(0.0, 0.95, 10):
            assert sigma_L(p.with_updates(s=s)) < 3.0
        assert is_turing_unstable(p.with_updates(s=0.0), 8.0, 64).unstable
        assert not is_turing_unstable(p.with_updates(s=0.9), 8.0, 64).unstable
