import numpy as np
import pytest

from nvneumann import geometry, quadrature
from nvneumann.fieldexpr import constant, from_expr
from nvneumann.quadrature import (Discretization, circulant, integrate_boundary, kress_weights, spectral_antiderivative,
                                  spectral_derivative, trig_basis, volume_grid, volume_integrate)

KITE_BENT = geometry.TrigCurve(xc=(-1.0, 1.0, 1.0), xs=(), yc=(0.0,), ys=(1.5,))


def log_fourier(k, s):
    # ∫₀^{2π} ln(4 sin²((s-t)/2)) e^{ikt} dt = -2π e^{iks}/|k|, and 0 for k = 0
    return 0 * s if k == 0 else -2 * np.pi * np.exp(1j * k * s) / abs(k)


@pytest.fixture(scope="module")
def bn(unit_disk):
    return geometry.nodes(unit_disk, 64)


@pytest.fixture(scope="module")
def grid(unit_disk):
    return volume_grid(unit_disk, 32, 64)


class TestBoundaryIntegration:
    @pytest.mark.parametrize("text, expected, tol", [("1", 2 * np.pi, 1e-12), ("x^2", np.pi, 1e-10), ("x", 0.0, 1e-12)])
    def test_unit_circle(self, bn, text, expected, tol):
        assert abs(integrate_boundary(from_expr(text), bn) - expected) <= tol

    def test_node_values_and_component(self, two_disks):
        bn = geometry.nodes(two_disks, 32)
        vals = np.r_[np.ones(32), 2 * np.ones(32)]
        assert integrate_boundary(vals, bn, component=1) == pytest.approx(4 * np.pi, abs=1e-12)
        assert integrate_boundary(vals, bn) == pytest.approx(6 * np.pi, abs=1e-12)


class TestLogQuadrature:
    @pytest.mark.parametrize("N", [16, 64])
    def test_exact_on_trig_polynomials(self, N):
        t = 2 * np.pi * np.arange(N) / N
        R = circulant(kress_weights(N))
        for k in range(-N // 2 + 1, N // 2):
            np.testing.assert_allclose(R @ np.exp(1j * k * t), log_fourier(k, t), atol=1e-11)

    @pytest.mark.parametrize("N", [3, 7])
    def test_odd_rejected(self, N):
        with pytest.raises(geometry.NodeCountError):
            kress_weights(N)

    def test_rule_per_component(self, two_disks):
        rule = quadrature.log_quad_rule(geometry.nodes(two_disks, 16))
        assert rule.log_part[0] is rule.log_part[1]
        assert rule.smooth_weight == (2 * np.pi / 16,) * 2


class TestSpectralCalculus:
    def test_derivative_and_antiderivative(self):
        t = 2 * np.pi * np.arange(32) / 32
        f = np.sin(3 * t) + 0.5 * np.cos(t) + 2.0
        np.testing.assert_allclose(spectral_derivative(f), 3 * np.cos(3 * t) - 0.5 * np.sin(t), atol=1e-12)
        np.testing.assert_allclose(spectral_antiderivative(f), -np.cos(3 * t) / 3 + 0.5 * np.sin(t), atol=1e-12)

    def test_axis(self):
        t = 2 * np.pi * np.arange(16) / 16
        F = np.stack([np.sin(t), np.cos(2 * t)], axis=1)
        np.testing.assert_allclose(spectral_derivative(F, axis=0)[:, 1], -2 * np.sin(2 * t), atol=1e-12)

    def test_trig_basis(self):
        t = 2 * np.pi * np.arange(16) / 16
        B = trig_basis(t, 3, constant=True)
        assert B.shape == (16, 7)
        np.testing.assert_allclose(B.T @ B * (2 * np.pi / 16), np.diag([2 * np.pi] + [np.pi] * 6), atol=1e-12)


class TestVolumeIntegration:
    @pytest.mark.parametrize("text, expected, tol", [("1", np.pi, 1e-10), ("x^2 + y^2", np.pi / 2, 1e-8),
                                                     ("x", 0.0, 1e-10), ("exp(x)", np.pi * 1.1303182079849703, 1e-10)])
    def test_unit_disk(self, grid, text, expected, tol):
        assert abs(volume_integrate(from_expr(text), grid) - expected) <= tol

    def test_ellipse_second_moment(self, ellipse):
        # ∫ x² over the ellipse a=2, b=1 is π a³ b / 4
        assert volume_integrate(from_expr("x^2"), volume_grid(ellipse, 32, 64)) == pytest.approx(2 * np.pi, abs=1e-10)

    def test_star_shaped_requirement(self):
        d = geometry.build_domain([KITE_BENT])
        with pytest.raises(geometry.GeometryError, match="star-shaped"):
            volume_grid(d, 8, 16)

    def test_components(self, two_disks):
        g = volume_grid(two_disks, 16, 32)
        assert volume_integrate(constant(1.0), g, component=1) == pytest.approx(np.pi, abs=1e-12)
        assert g.slice(1) == slice(512, 1024)


class TestDiscretization:
    def test_defaults(self):
        d = Discretization()
        assert (d.N, d.M_r, d.M_t, d.K) == (256, 48, 96, 16)

    @pytest.mark.parametrize("kw", [{"N": 7}, {"N": 64, "K": 17}, {"K": 0}])
    def test_validate(self, kw):
        with pytest.raises(ValueError):
            Discretization(**kw).validate()

    def test_singular_volume_potential(self, disk_ws):
        # constant density 1 on the unit disk: (r² - 1)/4 inside
        v = quadrature.singular_volume_potential(constant(1.0), disk_ws.grid, disk_ws.layers, [[0.0, 0.0], [0.5, 0.0]])
        np.testing.assert_allclose(v, [-0.25, -0.1875], atol=1e-10)
