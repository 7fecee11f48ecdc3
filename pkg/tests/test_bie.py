import numpy as np
import pytest

from nvneumann import bie, geometry
from nvneumann.bie import assemble, dirichlet_solve, projected_condition, steklov
from nvneumann.oracles import DiskOracle


def circle_ops(R=1.0, N=128, center=(0.0, 0.0)):
    d = geometry.build_domain([geometry.Circle(center, R)])
    bn = geometry.nodes(d, N)
    return assemble(d, bn), bn.components[0].t


@pytest.fixture(scope="module")
def disk():
    return circle_ops()


@pytest.fixture(scope="module")
def ellipse_ops(ellipse):
    return assemble(ellipse, geometry.nodes(ellipse, 128))


class TestSteklov:
    @pytest.mark.parametrize("k", range(1, 9))
    def test_spectrum(self, disk, k):
        ops, t = disk
        oracle = DiskOracle.of({k: 1.0})
        np.testing.assert_allclose(steklov(oracle.boundary(t), ops), oracle.steklov().boundary(t), atol=1e-8)

    def test_constant(self, disk):
        ops, t = disk
        np.testing.assert_allclose(steklov(np.ones_like(t), ops), 0.0, atol=1e-8)

    @pytest.mark.parametrize("R", [0.5, 2.0])
    def test_radius(self, R):
        ops, t = circle_ops(R)
        np.testing.assert_allclose(steklov(np.cos(t), ops), np.cos(t) / R, atol=1e-8)

    def test_flux_zero_and_symmetry(self, ellipse_ops):
        bn = ellipse_ops.bnodes
        t = bn.components[0].t
        v = np.exp(np.cos(t)) * np.sin(2 * t)
        assert abs(bn.weights @ steklov(v, ellipse_ops)) <= 1e-8
        WS = bn.weights[:, None] * ellipse_ops.S_plus
        np.testing.assert_allclose(WS, WS.T, atol=1e-10)

    def test_positive_semidefinite(self, ellipse_ops):
        bn = ellipse_ops.bnodes
        WS = bn.weights[:, None] * ellipse_ops.S_plus
        ev = np.linalg.eigvalsh(0.5 * (WS + WS.T))
        assert ev.min() >= -1e-10

    def test_matrix_input(self, disk):
        ops, t = disk
        V = np.stack([np.cos(t), np.sin(3 * t)], axis=1)
        np.testing.assert_allclose(steklov(V, ops), V * [1, 3], atol=1e-8)

    def test_locality(self, two_disk_ws):
        ops, bn = two_disk_ws.ops, two_disk_ws.bnodes
        v = np.cos(3 * bn.points[:, 1])
        w = v + np.where(bn.indicator(1) > 0, np.sin(bn.points[:, 0]), 0.0)
        np.testing.assert_array_equal(steklov(v, ops)[bn.slice(0)], steklov(w, ops)[bn.slice(0)])

    def test_wrong_length(self, disk):
        with pytest.raises(ValueError):
            steklov(np.ones(7), disk[0])


class TestDirichlet:
    def test_constant(self, disk):
        ops, t = disk
        res = dirichlet_solve(np.ones_like(t), ops, [[0.1, 0.2], [-0.5, 0.0]])
        np.testing.assert_allclose(res.values, 1.0, atol=1e-9)
        np.testing.assert_allclose(res.phi, 0.0, atol=1e-9)
        assert res.c[0] == pytest.approx(1.0, abs=1e-9)

    def test_cos2(self, disk):
        ops, t = disk
        assert dirichlet_solve(np.cos(2 * t), ops, [[0.5, 0.0]]).values[0] == pytest.approx(0.25, abs=1e-8)

    def test_linear_on_radius_two(self):
        ops, t = circle_ops(2.0)
        assert dirichlet_solve(2 * np.cos(t), ops, [[1.0, 0.5]]).values[0] == pytest.approx(1.0, abs=1e-8)

    @pytest.mark.parametrize("k", range(0, 7))
    def test_harmonic_polynomials(self, disk, probes, k):
        ops, t = disk
        oracle = DiskOracle.of({k: 1.0})
        res = dirichlet_solve(oracle.boundary(t), ops, probes)
        np.testing.assert_allclose(res.values, oracle.extension(probes), atol=1e-8)

    def test_gradient_near_boundary(self, disk):
        ops, t = disk
        x = np.array([[0.999999, 0.0], [0.0, -0.9999]])
        g = dirichlet_solve(np.cos(2 * t), ops, x).gradients  # grad of x² - y²
        np.testing.assert_allclose(g, 2 * x * [1, -1], atol=1e-8)

    def test_on_node_target(self, disk):
        ops, t = disk
        res = dirichlet_solve(np.cos(t), ops, ops.bnodes.points[3:4])
        assert res.values[0] == pytest.approx(np.cos(t[3]), abs=1e-14)
        np.testing.assert_allclose(res.gradients[0], [1.0, 0.0], atol=1e-10)
        assert res.near[0]

    def test_targets_outside(self, disk):
        with pytest.raises(bie.TargetError):
            dirichlet_solve(np.ones(128), disk[0], [[2.0, 0.0]])

    def test_component_mismatch(self, two_disk_ws):
        with pytest.raises(bie.TargetError):
            dirichlet_solve(np.ones(128), two_disk_ws.ops, [[-2.0, 0.0]], component=1)

    def test_per_component(self, two_disk_ws):
        bn = two_disk_ws.bnodes
        v = np.r_[np.ones(64), 3 * np.ones(64)]
        res = dirichlet_solve(v, two_disk_ws.ops, [[-2.0, 0.3], [2.2, 0.0]])
        np.testing.assert_allclose(res.values, [1.0, 3.0], atol=1e-9)
        assert res.component.tolist() == [0, 1]
        assert bn.total == 128


class TestConditioning:
    def test_projected_condition_refinement_stable(self):
        a = projected_condition(circle_ops(N=128)[0])[0]
        b = projected_condition(circle_ops(N=256)[0])[0]
        assert abs(a - b) / a <= 1e-6

    def test_raw_condition_grows(self):
        a = bie.dirichlet_condition(circle_ops(N=64)[0])[0]
        b = bie.dirichlet_condition(circle_ops(N=128)[0])[0]
        assert b > 1.5 * a

    def test_fault_injection_breaks_jump(self, unit_disk):
        bn = geometry.nodes(unit_disk, 32)
        bie.FAULTS.add("kprime_sign")
        try:
            Kp = assemble(unit_disk, bn).components[0].Kp
        finally:
            bie.FAULTS.discard("kprime_sign")
        np.testing.assert_allclose(Kp.sum(1), -0.5, atol=1e-12)
