import numpy as np
import pytest

from schouten.blowup import analyze, locate_blowup, minimal_radial, profile_fit, rescale
from schouten.manifold import GridChart


def test_rescale():
    np.testing.assert_array_equal(rescale(np.full((4, 4), 5.0)), np.zeros((4, 4)))
    assert rescale(np.array([1.0, -2.0, 3.0])).max() == 0.0


class TestDescent:
    def test_constant_returns_start(self):
        chart = GridChart.torus(3, 8)
        d = locate_blowup(np.full(chart.shape, -2.0), chart, start=(1, 2, 3))
        assert d.point == (1, 2, 3) and len(d.chain) == 1

    def test_flat_minimum_stays(self):
        chart = GridChart.torus(3, 12)
        x = chart.coordinates()
        u = -0.5 * np.cos(2 * np.pi * x[0])
        d = locate_blowup(u, chart)
        assert len(d.chain) == 1 and d.certificate_holds(u, chart)

    def test_two_wells(self):
        chart = GridChart.torus(3, 16)
        shallow, deep = (3, 3, 8), (10, 3, 8)
        u = np.zeros(chart.shape)
        u -= 1.0 * np.exp(-(chart.distances(shallow) / 0.08) ** 2)
        u -= 3.0 * np.exp(-(chart.distances(deep) / 0.08) ** 2)
        assert u[deep] == pytest.approx(u[shallow] - 2.0)
        d = locate_blowup(u, chart, start=shallow)
        assert d.chain[0] == shallow and d.point == deep and len(d.chain) == 2
        assert d.certificate_holds(u, chart)

    def test_out_of_range_well_not_reached(self):
        chart = GridChart.torus(3, 16)
        shallow, deep = (3, 3, 8), (10, 3, 8)
        u = -8.0 - 1.0 * np.exp(-(chart.distances(shallow) / 0.08) ** 2)
        u -= 3.0 * np.exp(-(chart.distances(deep) / 0.08) ** 2)
        # radius e^{u/2} ~ 0.01 is far below the well separation
        assert locate_blowup(u, chart, start=shallow).point == shallow


class TestRadialProfile:
    def test_log_profile_exact(self):
        chart = GridChart.warped(4, 257, 0.0, 1.0)
        r = chart.radii
        w = 2 * np.log(np.where(r > 0, r, 1.0))
        rr, wh = minimal_radial(w, chart, (0,), 1.0)
        np.testing.assert_allclose(wh, 2 * np.log(rr), atol=1e-14)

    def test_constant(self):
        chart = GridChart.torus(3, 16)
        rr, wh = minimal_radial(np.full(chart.shape, -0.7), chart, (0, 0, 0), 0.4)
        np.testing.assert_array_equal(wh, -0.7)

    def test_radial_field_on_torus(self):
        chart = GridChart.torus(3, 16)
        d = chart.distances((8, 8, 8))
        rr, wh = minimal_radial(-d**2, chart, (8, 8, 8), 0.4)
        # supremum of a decreasing radial function sits at the nearest node in each bin
        assert np.all(np.diff(wh) < 0)
        np.testing.assert_allclose(wh, -rr**2, atol=1e-15)

    def test_radius_limit(self):
        chart = GridChart.torus(3, 8)
        with pytest.raises(ValueError):
            minimal_radial(np.zeros(chart.shape), chart, (0, 0, 0), 0.9)


class TestProfileFit:
    r = np.geomspace(1e-3, 0.5, 200)

    def test_exact(self):
        fit = profile_fit(self.r, 2 * np.log(self.r) - 1.0, window=(1e-3, 0.5))
        assert fit.slope == pytest.approx(2.0, abs=1e-12)
        assert fit.intercept == pytest.approx(-1.0, abs=1e-11)
        assert fit.residual < 1e-12

    def test_oscillating(self):
        fit = profile_fit(self.r, 2 * np.log(self.r) + 0.1 * np.sin(np.log(self.r)), window=(1e-3, 0.5))
        assert abs(fit.slope - 2.0) <= 0.15

    def test_constant(self):
        assert profile_fit(self.r, np.full_like(self.r, 3.0)).slope == pytest.approx(0.0, abs=1e-12)

    def test_degenerate_window(self):
        with pytest.raises(ValueError):
            profile_fit(self.r, self.r, window=(0.2, 0.2001))


def test_analyze_synthetic_bubble():
    chart = GridChart.warped(4, 513, 0.0, np.pi / 2)
    eps = 1e-4
    u = np.log(eps**2 + chart.radii**2)
    rep = analyze(u, chart, 4, blowup_level=-8.0)
    assert rep.point == (0,) and rep.blowup
    assert rep.fitted_slope == pytest.approx(2.0, abs=0.05)
    assert rep.v_max == pytest.approx(np.exp(-u[0]), rel=1e-12)
    d = rep.to_dict()
    assert d["point"] == [0] and len(d["profile"]) > 10


def test_analyze_flags_mild_fields():
    chart = GridChart.warped(4, 65, 0.0, np.pi / 2)
    rep = analyze(-0.1 * np.cos(chart.radii), chart, 4, blowup_level=-8.0)
    assert not rep.blowup and "no blow-up" in rep.note
