import math

import numpy as np
import pytest

from ifpt.errors import HazardBoundError, InvalidParameterError
from ifpt.spectral import make_grid
from ifpt.survival import (GaussianDensity, GridDensity, check_hazard_bound, make_exponential,
                           make_piecewise_hazard, make_tabulated, survival_from_descriptor)


class TestExponential:
    def test_closed_form(self):
        G, g, dg = make_exponential(0.25).eval(4.0)
        assert G == pytest.approx(math.exp(-1.0), rel=1e-15)
        assert -g / G == pytest.approx(0.25, rel=1e-15)
        assert dg == pytest.approx(0.0625 * math.exp(-1.0), rel=1e-15)

    def test_origin(self):
        G, g, _ = make_exponential(0.5).eval(0.0)
        assert G == 1.0 and g == -0.5

    def test_horizon_value(self):
        assert make_exponential(0.0625).G(8.0) == pytest.approx(0.6065306597126334, rel=1e-14)

    @pytest.mark.parametrize("nu", [0.0, -1.0, float("nan"), float("inf")])
    def test_rejects_bad_rate(self, nu):
        with pytest.raises(InvalidParameterError):
            make_exponential(nu)

    def test_shift_is_memoryless(self):
        m = make_exponential(0.3)
        t = np.linspace(0, 5, 11)
        np.testing.assert_allclose(m.shifted(2.0).G(t), m.G(t + 2.0) / m.G(2.0), rtol=1e-14)


class TestPiecewise:
    def test_additivity(self):
        m = make_piecewise_hazard([(0, 0.1), (1, 0.3)])
        assert m.G(2.0) == pytest.approx(math.exp(-0.4), rel=1e-15)

    def test_single_knot_matches_exponential(self):
        t = np.linspace(0, 10, 101)
        a = make_piecewise_hazard([(0, 0.2)]).eval(t)
        b = make_exponential(0.2).eval(t)
        for x, y in zip(a, b):
            np.testing.assert_allclose(x, y, rtol=1e-15, atol=0)

    def test_calibration_reference_value(self):
        assert make_piecewise_hazard([(0, 0.02)]).G(1.0) == pytest.approx(0.9801986733067553,
                                                                     rel=1e-15)

    def test_right_limits_at_knot(self):
        m = make_piecewise_hazard([(0, 0.1), (1, 0.3)])
        assert m.hazard(1.0) == pytest.approx(0.3)
        assert m.hazard(1.0 - 1e-12) == pytest.approx(0.1)
        # G itself is continuous
        assert m.G(1.0 + 1e-12) == pytest.approx(m.G(1.0 - 1e-12), rel=1e-11)

    def test_shifted_is_conditional_law(self):
        m = make_piecewise_hazard([(0, 0.1), (1, 0.3), (2.5, 0.2)])
        t = np.linspace(0, 4, 41)
        for t0 in (0.0, 0.5, 1.0, 2.7):
            np.testing.assert_allclose(m.shifted(t0).G(t), m.G(t0 + t) / m.G(t0), rtol=1e-13)

    @pytest.mark.parametrize("knots", [[], [(0.5, 0.1)], [(0, 0.1), (0, 0.2)],
                                       [(0, 0.1), (2, 0.2), (1, 0.3)], [(0, -0.1)]])
    def test_rejects_bad_knots(self, knots):
        with pytest.raises(InvalidParameterError):
            make_piecewise_hazard(knots)

    def test_descriptor_round_trip(self):
        m = make_piecewise_hazard([(0, 0.1), (1, 0.3)], horizon=3.0)
        d = m.descriptor()
        assert d == {"kind": "piecewise", "knots": [[0.0, 0.1], [1.0, 0.3]], "horizon": 3.0}
        assert survival_from_descriptor(d) == m


class TestFiniteDifferences:
    """Centred differences of G and g converge at second order to g and g'."""

    @pytest.mark.parametrize("model", [
        make_exponential(0.3),
        make_piecewise_hazard([(0, 0.1), (1, 0.3)]),
        make_tabulated([0, 1, 2, 3, 4, 6], np.exp(-0.2 * np.array([0, 1, 2, 3, 4, 6]) -
                                                  0.01 * np.array([0, 1, 2, 3, 4, 6]) ** 2), 1.0),
    ], ids=["exponential", "piecewise", "tabulated"])
    def test_richardson(self, model):
        t = np.array([0.37, 1.6, 2.45])
        errs = []
        for h in (1e-2, 5e-3):
            G_p, g_p, _ = model.eval(t + h)
            G_m, g_m, _ = model.eval(t - h)
            _, g, dg = model.eval(t)
            errs.append((np.abs((G_p - G_m) / (2 * h) - g).max(),
                         np.abs((g_p - g_m) / (2 * h) - dg).max()))
        for k in range(2):
            e1, e2 = errs[0][k], errs[1][k]
            assert e2 < 1e-5
            if e2 > 1e-12:
                assert e1 / e2 == pytest.approx(4.0, rel=0.05)


class TestHazardBound:
    def test_exponential_margin(self):
        rep = check_hazard_bound(make_exponential(0.25), 1.0, 8.0)
        assert rep.ok
        # the margin min(nu G, (lam - nu) G) = 0.25 G is smallest at the horizon
        assert rep.worst_margin == pytest.approx(0.25 * math.exp(-2.0), rel=1e-12)
        assert rep.argmin_t == 8.0

    def test_strict_bound(self):
        rep = check_hazard_bound(make_exponential(0.5), 0.5, 8.0)
        assert not rep.ok
        assert rep.worst_margin == pytest.approx(0.0, abs=1e-15)

    def test_piecewise_violation_located(self):
        rep = check_hazard_bound(make_piecewise_hazard([(0, 0.1), (1, 0.9)]), 0.5, 4.0)
        assert not rep.ok
        assert rep.argmin_t == 1.0
        assert rep.worst_margin < 0

    def test_bad_inputs(self):
        with pytest.raises(InvalidParameterError):
            check_hazard_bound(make_exponential(0.1), 0.0, 1.0)


class TestTabulated:
    def test_reproduces_smooth_curve(self):
        t = np.linspace(0, 5, 51)
        m = make_tabulated(t, np.exp(-0.3 * t), 1.0)
        s = np.linspace(0, 5, 333)
        # log G is linear, which the natural spline reproduces exactly
        np.testing.assert_allclose(m.G(s), np.exp(-0.3 * s), rtol=1e-13)
        np.testing.assert_allclose(m.hazard(s), 0.3, rtol=1e-10)

    def test_refuses_hazard_violation(self):
        t = np.linspace(0, 4, 9)
        with pytest.raises(HazardBoundError) as info:
            make_tabulated(t, np.exp(-0.8 * t), 0.5)
        assert info.value.worst_margin < 0

    def test_beyond_last_breakpoint(self):
        m = make_tabulated([0, 1, 2], [1.0, 0.9, 0.8], 1.0)
        with pytest.raises(InvalidParameterError):
            m.G(2.5)

    def test_shifted(self):
        t = np.linspace(0, 6, 31)
        G = np.exp(-0.1 * t - 0.02 * t ** 2)
        m = make_tabulated(t, G, 1.0)
        s = np.linspace(0, 3, 7)
        np.testing.assert_allclose(m.shifted(2.0).G(s), m.G(2.0 + s) / m.G(2.0), rtol=1e-13)

    def test_needs_unit_start(self):
        with pytest.raises(InvalidParameterError):
            make_tabulated([0, 1, 2], [0.9, 0.8, 0.7], 1.0)


class TestDensities:
    def test_gaussian_derivatives(self):
        d = GaussianDensity(0.3, 0.7)
        x = np.linspace(-2, 2, 9)
        h = 1e-5
        f, df, ddf = d.eval(x)
        np.testing.assert_allclose(df, (d.eval(x + h)[0] - d.eval(x - h)[0]) / (2 * h),
                                   rtol=1e-8, atol=1e-12)
        np.testing.assert_allclose(ddf, (d.eval(x + h)[1] - d.eval(x - h)[1]) / (2 * h),
                                   rtol=1e-7, atol=1e-10)

    def test_gaussian_sampling(self, rng):
        x = GaussianDensity(1.0, 2.0).sample(rng, 200_000)
        assert x.mean() == pytest.approx(1.0, abs=0.02)
        assert x.std() == pytest.approx(2.0, rel=0.01)

    def test_grid_density(self, rng):
        grid = make_grid(512, 16.0)
        v = GaussianDensity(0.5, 0.8).eval(grid.x)[0]
        d = GridDensity(grid, v)
        f, df, _ = d.eval(grid.x)
        np.testing.assert_allclose(df, GaussianDensity(0.5, 0.8).eval(grid.x)[1], atol=1e-10)
        x = d.sample(rng, 200_000)
        assert x.mean() == pytest.approx(0.5, abs=0.01)
        assert x.std() == pytest.approx(0.8, rel=0.01)
        with pytest.raises(InvalidParameterError):
            d.eval(np.array([0.1]))
