import math

import numpy as np
import pytest

from pinned_elastica.analysis import bending_energy_by_quadrature
from pinned_elastica.elastica import (SignChoice, bending_energy, curvature_at,
                                      enumerate_spectrum, make_critical_point,
                                      position_at, sample_curve, tangent_at)
from pinned_elastica.modulus import Family, PinnedProblem, r_star

RNG = np.random.default_rng(17)


def cp_of(r=0.5, L=1.0, family=Family.HAT, n=0, sign=SignChoice.PLUS):
    return make_critical_point(PinnedProblem(r * L, L), family, n, sign)


class TestConstruction:
    def test_lemniscatic_ratio_gives_zero_multiplier(self):
        cp = cp_of(r=0.456946581)
        assert cp.p.p == pytest.approx(1.0 / math.sqrt(2.0), abs=1e-8)
        assert cp.lam == pytest.approx(0.0, abs=1e-6)

    def test_sign_flip_only_negates_b(self):
        plus = cp_of(sign=SignChoice.PLUS)
        minus = cp_of(sign=SignChoice.MINUS)
        assert plus.p.p == minus.p.p
        assert plus.lam == minus.lam
        assert plus.energy == minus.energy
        assert plus.b == -minus.b

    def test_initial_curvature_slope_signs(self):
        assert cp_of(family=Family.HAT, sign=SignChoice.PLUS).b < 0.0
        assert cp_of(family=Family.CHECK, sign=SignChoice.PLUS).b > 0.0

    def test_check_energy_scales_with_index(self):
        base = cp_of(family=Family.CHECK, n=0)
        third = cp_of(family=Family.CHECK, n=2)
        assert third.energy == pytest.approx(9.0 * base.energy, rel=1e-14)

    @pytest.mark.parametrize("n", [-1, 2.5, 10**6 + 1])
    def test_bad_index_rejected(self, n):
        with pytest.raises(ValueError):
            cp_of(n=n)

    @pytest.mark.parametrize("family", [Family.HAT, Family.CHECK])
    @pytest.mark.parametrize("n", [0, 3, 10])
    def test_multiplier_identity(self, family, n):
        # lambda^2 + 4 b^2 = (2 alpha^2)^2 with alpha = 2(n+1)K/L
        cp = cp_of(r=0.37, L=2.2, family=family, n=n)
        lhs = cp.lam ** 2 + 4.0 * cp.b ** 2
        rhs = (2.0 * cp.alpha ** 2) ** 2
        assert lhs == pytest.approx(rhs, rel=1e-12)


class TestCurvature:
    @pytest.mark.parametrize("family", [Family.HAT, Family.CHECK])
    @pytest.mark.parametrize("n", [0, 2])
    def test_vanishes_at_endpoints(self, family, n):
        cp = cp_of(family=family, n=n)
        assert curvature_at(cp, 0.0) == pytest.approx(0.0, abs=1e-12)
        assert curvature_at(cp, cp.problem.L) == pytest.approx(0.0, abs=1e-12)

    def test_midpoint_value(self):
        cp = cp_of()
        want = -4.0 * cp.p.p * cp.k / cp.problem.L
        assert curvature_at(cp, 0.5) == pytest.approx(want, rel=1e-13)

    def test_reflection_negates_curvature(self):
        plus, minus = cp_of(), cp_of(sign=SignChoice.MINUS)
        s = RNG.uniform(0.0, 1.0, 20)
        np.testing.assert_allclose(curvature_at(minus, s),
                                   -curvature_at(plus, s), rtol=0, atol=1e-15)

    def test_outside_domain_rejected(self):
        cp = cp_of()
        with pytest.raises(ValueError):
            curvature_at(cp, -0.1)
        with pytest.raises(ValueError):
            curvature_at(cp, 1.1)


class TestPosition:
    @pytest.mark.parametrize("family", [Family.HAT, Family.CHECK])
    def test_endpoints(self, family):
        cp = cp_of(r=0.62, L=3.1, family=family, n=1)
        assert position_at(cp, 0.0) == (0.0, 0.0)
        x, y = position_at(cp, 3.1)
        assert x == pytest.approx(cp.problem.l, abs=1e-9 * 3.1)
        assert y == pytest.approx(0.0, abs=1e-9 * 3.1)

    def test_midpoint_halves_the_chord(self):
        cp = cp_of(r=0.44)
        x, _ = position_at(cp, 0.5)
        assert x == pytest.approx(cp.problem.l / 2.0, rel=1e-12)

    def test_upper_half_plane_for_plus(self):
        for family in (Family.HAT, Family.CHECK):
            cp = cp_of(r=0.5, family=family)
            _, y = position_at(cp, 0.31)
            assert y > 0.0

    def test_closure_sweep(self):
        for r in (0.05, 0.5, 0.95):
            for n in (0, 4, 10):
                for family in (Family.HAT, Family.CHECK):
                    cp = cp_of(r=r, family=family, n=n)
                    x, y = position_at(cp, 1.0)
                    assert math.hypot(x - cp.problem.l, y) <= 1e-9


class TestTangent:
    def test_vertical_at_origin_for_lemniscatic_ratio(self):
        cp = cp_of(r=0.456946581)
        tx, _ = tangent_at(cp, 0.0)
        assert tx == pytest.approx(0.0, abs=1e-8)

    def test_forward_leaning_above_threshold(self):
        tx, _ = tangent_at(cp_of(r=0.8), 0.0)
        assert tx > 0.0

    def test_backward_leaning_below_threshold(self):
        tx, _ = tangent_at(cp_of(r=0.3), 0.0)
        assert tx < 0.0

    @pytest.mark.parametrize("family", [Family.HAT, Family.CHECK])
    def test_unit_norm(self, family):
        cp = cp_of(r=0.7, family=family, n=2)
        tx, ty = tangent_at(cp, 0.37)
        assert tx * tx + ty * ty == pytest.approx(1.0, abs=1e-12)

    def test_derivative_of_position(self):
        cp = cp_of(r=0.52, family=Family.CHECK, n=1)
        s, h = 0.4321, 1e-6
        xp, yp = position_at(cp, s + h)
        xm, ym = position_at(cp, s - h)
        tx, ty = tangent_at(cp, s)
        assert (xp - xm) / (2 * h) == pytest.approx(tx, abs=1e-9)
        assert (yp - ym) / (2 * h) == pytest.approx(ty, abs=1e-9)


class TestEnergy:
    @pytest.mark.parametrize("family", [Family.HAT, Family.CHECK])
    def test_quadratic_index_law(self, family):
        base = cp_of(family=family)
        for n in range(1, 11):
            cp = cp_of(family=family, n=n)
            assert cp.energy / ((n + 1) ** 2 * base.energy) == pytest.approx(
                1.0, rel=1e-14)

    @pytest.mark.parametrize("r", [0.1, 0.5, 0.9])
    @pytest.mark.parametrize("n", [0, 1, 2])
    def test_hat_below_check(self, r, n):
        assert cp_of(r=r, family=Family.HAT, n=n).energy < \
            cp_of(r=r, family=Family.CHECK, n=n).energy

    @pytest.mark.parametrize("family", [Family.HAT, Family.CHECK])
    def test_against_quadrature_of_squared_curvature(self, family):
        cp = cp_of(r=0.5, family=family, n=1)
        assert bending_energy_by_quadrature(cp) == pytest.approx(
            bending_energy(cp), rel=1e-8)

    def test_check_energy_diverges_with_ratio(self):
        wl = [cp_of(r=r, family=Family.CHECK).energy for r in (0.9, 0.99, 0.999)]
        assert wl[0] < wl[1] < wl[2]
        assert wl[2] > 10.0 * cp_of(r=0.5, family=Family.CHECK).energy


class TestSampling:
    def test_two_samples_are_the_endpoints(self):
        cp = cp_of(r=0.6)
        curve = sample_curve(cp, 2)
        assert (curve.x[0], curve.y[0]) == (0.0, 0.0)
        assert curve.x[1] == pytest.approx(0.6, abs=1e-12)
        assert curve.y[1] == pytest.approx(0.0, abs=1e-12)

    def test_tangent_norm_everywhere(self):
        curve = sample_curve(cp_of(r=0.6), 1001)
        err = np.abs(curve.tangent_x ** 2 + curve.tangent_y ** 2 - 1.0)
        assert np.max(err) <= 1e-9

    def test_check_n1_has_one_interior_sign_change(self):
        curve = sample_curve(cp_of(family=Family.CHECK, n=1), 1001)
        interior = curve.kappa[1:-1]
        live = interior[np.abs(interior) > 1e-10 * np.max(np.abs(curve.kappa))]
        flips = np.count_nonzero(np.diff(np.sign(live)))
        assert flips == 1

    def test_boundary_curvature(self):
        curve = sample_curve(cp_of(family=Family.CHECK, n=3), 257)
        assert abs(curve.kappa[0]) <= 1e-9
        assert abs(curve.kappa[-1]) <= 1e-9

    @pytest.mark.parametrize("num", [0, 1])
    def test_too_few_samples_rejected(self, num):
        with pytest.raises(ValueError):
            sample_curve(cp_of(), num)


class TestEulerLagrange:
    @pytest.mark.parametrize("family", [Family.HAT, Family.CHECK])
    @pytest.mark.parametrize("n", [0, 1, 5, 10])
    def test_residual(self, family, n):
        from pinned_elastica.analysis import (el_residual_scale,
                                              euler_lagrange_residual)
        cp = cp_of(r=0.35, family=family, n=n)
        res = euler_lagrange_residual(cp, RNG.uniform(0.0, 1.0, 50))
        assert res <= 1e-7 * el_residual_scale(cp)

    def test_frenet_consistency(self):
        from pinned_elastica.analysis import frenet_consistency_error
        for family in (Family.HAT, Family.CHECK):
            assert frenet_consistency_error(cp_of(r=0.55, family=family,
                                                  n=1)) <= 1e-6


class TestStructureIdentities:
    @pytest.mark.parametrize("family", [Family.HAT, Family.CHECK])
    def test_midpoint_symmetry(self, family):
        cp = cp_of(r=0.37, L=1.3, family=family)
        L, l = 1.3, cp.problem.l
        s = RNG.uniform(L / 2, L, 20)
        x0, y0 = position_at(cp, s)
        x1, y1 = position_at(cp, L - s)
        np.testing.assert_allclose(x0, l - x1, rtol=0, atol=1e-10 * L)
        np.testing.assert_allclose(y0, y1, rtol=0, atol=1e-10 * L)

    @pytest.mark.parametrize("family", [Family.HAT, Family.CHECK])
    @pytest.mark.parametrize("n", [1, 2, 4])
    def test_tiling_identity(self, family, n):
        L = 1.3
        cp0 = cp_of(r=0.37, L=L, family=family, n=0)
        cpn = cp_of(r=0.37, L=L, family=family, n=n)
        l = cp0.problem.l
        for shift in range(n + 1):
            s = RNG.uniform(0.0, L / (n + 1), 20)
            xn, yn = position_at(cpn, s + shift * L / (n + 1))
            xb, yb = position_at(cp0, (n + 1) * s)
            np.testing.assert_allclose(
                xn, xb / (n + 1) + shift * l / (n + 1), rtol=0, atol=1e-10 * L)
            np.testing.assert_allclose(
                yn, (-1.0) ** shift * yb / (n + 1), rtol=0, atol=1e-10 * L)

    @pytest.mark.parametrize("family", [Family.HAT, Family.CHECK])
    def test_minus_curve_is_the_mirror_image(self, family):
        plus = cp_of(r=0.61, family=family, n=2)
        minus = cp_of(r=0.61, family=family, n=2, sign=SignChoice.MINUS)
        s = np.linspace(0.0, 1.0, 101)
        xp, yp = position_at(plus, s)
        xm, ym = position_at(minus, s)
        np.testing.assert_array_equal(xp, xm)
        np.testing.assert_array_equal(yp, -ym)


class TestSpectrum:
    def test_leaders_are_the_sign_pair_of_the_fundamental(self):
        points = enumerate_spectrum(PinnedProblem(0.4, 1.0), 3)
        assert len(points) == 16
        assert [(c.family, c.n) for c in points[:2]] == [(Family.HAT, 0)] * 2
        assert points[0].sign is SignChoice.PLUS
        assert points[1].sign is SignChoice.MINUS
        assert points[0].energy == points[1].energy

    def test_sorted_by_energy(self):
        points = enumerate_spectrum(PinnedProblem(0.4, 1.0), 5)
        energies = [c.energy for c in points]
        assert energies == sorted(energies)

    def test_second_smallest_depends_on_ratio(self):
        wide = enumerate_spectrum(PinnedProblem(0.95, 1.0), 1)
        assert (wide[2].family, wide[2].n) == (Family.HAT, 1)
        tight = enumerate_spectrum(PinnedProblem(0.05, 1.0), 1)
        assert (tight[2].family, tight[2].n) == (Family.CHECK, 0)

    def test_ratio_near_crossover_still_deterministic(self):
        # second-lowest pair swaps at ~0.41829; nearby ratios must stay stable
        for r in (0.418, 0.419):
            a = enumerate_spectrum(PinnedProblem(r, 1.0), 1)
            b = enumerate_spectrum(PinnedProblem(r, 1.0), 1)
            assert [(c.family, c.n, c.sign) for c in a] == \
                [(c.family, c.n, c.sign) for c in b]
