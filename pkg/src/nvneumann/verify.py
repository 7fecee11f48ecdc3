"""Oracle identity suite run by `nvneumann verify`.

Every check compares a solver quantity against an independent oracle value.
Checks are grouped by a dotted prefix (geometry, kernels, steklov, ...)
that `--filter` matches as a substring.
"""
from __future__ import annotations

import time
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numpy as np

from . import bie, fieldexpr, geometry, kernels, oracles, quadrature
from .neumann import IncompatibleDataError, NeumannProblem, solve, uniqueness_certificate
from .normal_derivative import pair_normal_derivative, v1alpha_representation
from .potentials import dist_volume_potential, infinity_behavior, newtonian
from .schauder import (BoundaryDist, DensityRep, HolderSolution, TestField, integrate_I, pair_E_sharp,
                       pair_boundary_dist)
from .workspace import Workspace


@dataclass
class CheckResult:
    name: str
    expected: float
    got: float
    tol: float
    passed: bool
    seconds: float = 0.0
    error: str = ""


CHECKS: list = []


def check(name: str, tol: float):
    def deco(fn: Callable):
        CHECKS.append((name, tol, fn))
        return fn

    return deco


# --- shared contexts (built on first use) ---------------------------------------

@lru_cache(maxsize=None)
def disk_ws(N: int = 128, M_r: int = 32, M_t: int = 64, K: int = 8):
    d = geometry.build_domain([geometry.Circle((0.0, 0.0), 1.0)])
    return Workspace(d, quadrature.Discretization(N, M_r, M_t, K))


@lru_cache(maxsize=None)
def disk_probes(n: int = 25, seed: int = 7, rmax: float = 0.95):
    rng = np.random.default_rng(seed)
    r = np.sqrt(rng.uniform(0, rmax**2, n))
    th = rng.uniform(0, 2 * np.pi, n)
    return np.c_[r * np.cos(th), r * np.sin(th)]


def _t(ws):
    return ws.bnodes.components[0].t


def _unit_nodes(N):
    d = geometry.build_domain([geometry.Circle((0.0, 0.0), 1.0)])
    return d, geometry.nodes(d, N)


# --- geometry ----------------------------------------------------------------------

@check("geometry.circle_perimeter", 1e-12)
def _():
    d = geometry.build_domain([geometry.Circle((0.0, 0.0), 2.0)])
    return 4 * np.pi, geometry.nodes(d, 64).weights.sum()


@check("geometry.ellipse_perimeter", 1e-8)
def _():
    d = geometry.build_domain([geometry.Ellipse((0.0, 0.0), 2.0, 1.0)])
    return oracles.ellipse_perimeter(2.0, 1.0), geometry.nodes(d, 256).weights.sum()


@check("geometry.normal_unit", 1e-14)
def _():
    d = geometry.build_domain([geometry.Ellipse((0.0, 0.0), 2.0, 1.0)])
    nu = geometry.nodes(d, 128).normal
    return 1.0, 1.0 + np.abs(np.hypot(nu[:, 0], nu[:, 1]) - 1).max()


@check("geometry.normal_flux_zero", 1e-10)
def _():
    d = geometry.build_domain([geometry.Ellipse((0.3, 0.0), 2.0, 1.0)])
    bn = geometry.nodes(d, 64)
    return 0.0, float(np.abs(bn.weights @ bn.normal).max())


@check("geometry.divergence_area", 1e-10)
def _():
    d, bn = _unit_nodes(64)
    return 2 * np.pi, float(bn.weights @ (bn.points * bn.normal).sum(-1))


@check("geometry.overlap_detected", 0.0)
def _():
    try:
        geometry.build_domain([geometry.Circle((0, 0), 1), geometry.Circle((0.5, 0), 1)])
    except geometry.OverlapError:
        return 1.0, 1.0
    return 1.0, 0.0


# --- kernels ------------------------------------------------------------------------

@check("kernels.S2_at_e", 1e-15)
def _():
    return 1 / (2 * np.pi), float(kernels.eval_S(2, np.array([np.e, 0.0])))


@check("kernels.S3_unit", 1e-15)
def _():
    return -1 / (4 * np.pi), float(kernels.eval_S(3, np.array([0.0, 0.0, 1.0])))


@check("kernels.grad_vs_fd", 1e-6)
def _():
    rng = np.random.default_rng(0)
    xi = rng.uniform(0.5, 2, (20, 2)) * rng.choice([-1, 1], (20, 2))
    h = 1e-5
    fd = np.stack([(kernels.eval_S(2, xi + h * e) - kernels.eval_S(2, xi - h * e)) / (2 * h) for e in np.eye(2)], -1)
    g = kernels.grad_S(2, xi)
    return 0.0, float(np.abs(fd - g).max() / np.abs(g).max())


@check("kernels.N2_laplacian", 1e-6)
def _():
    r, h = 0.7, 1e-4
    N = lambda s: kernels.eval_N(2, s)
    lap = (N(r + h) - 2 * N(r) + N(r - h)) / h**2 + (N(r + h) - N(r - h)) / (2 * h * r)
    return float(kernels.eval_S(2, np.array([r, 0.0]))), float(lap)


@check("kernels.N3_laplacian", 1e-6)
def _():
    r, h = 0.7, 1e-4
    N = lambda s: kernels.eval_N(3, s)
    lap = (N(r + h) - 2 * N(r) + N(r - h)) / h**2 + 2 * (N(r + h) - N(r - h)) / (2 * h * r)
    return float(kernels.eval_S(3, np.array([r, 0.0, 0.0]))), float(lap)


@check("kernels.harmonic_fd", 1e-4)
def _():
    return 0.0, float(np.abs(oracles.fd_laplacian(lambda p: kernels.eval_S(2, p), np.array([[0.6, 0.8]]))).max())


@check("kernels.growth_bound", 1e-12)
def _():
    return 1 / (2 * np.pi), kernels.growth_bound_report(2, (1, 0))


# --- fieldexpr -------------------------------------------------------------------------

@check("fieldexpr.polynomial", 1e-15)
def _():
    return 1.0, float(fieldexpr.from_expr("x^2 - y^2")(np.array([[1.0, 0.0]]))[0])


@check("fieldexpr.polar", 1e-15)
def _():
    return 0.25, float(fieldexpr.from_expr("cos(2*theta)*r^2")(np.array([[0.5, 0.0]]))[0])


@check("fieldexpr.roundtrip", 0.0)
def _():
    texts = ["x^2 - y^2", "-x^2^3/(1+r)", "cos(2*theta)*r^2 - ln(2 + x)", "hadamard(0.4, 8)*exp(-y)"]
    ok = all(fieldexpr.parse(fieldexpr.to_string(fieldexpr.parse(s))) == fieldexpr.parse(s) for s in texts)
    return 1.0, float(ok)


@check("fieldexpr.syntax_position", 0.0)
def _():
    try:
        fieldexpr.parse("x +")
    except fieldexpr.ExprSyntaxError as e:
        return 3.0, float(e.position)
    return 3.0, -1.0


@check("fieldexpr.hadamard_single", 1e-12)
def _():
    return 2 ** -0.4, float(fieldexpr.hadamard_trace(0.4, 1)(np.array([[1.0, 0.0]]))[0])


# --- quadrature -------------------------------------------------------------------------

@check("quadrature.log_fourier", 1e-10)
def _():
    N = 64
    t = 2 * np.pi * np.arange(N) / N
    R = quadrature.circulant(quadrature.kress_weights(N))
    err = max(np.abs(R @ np.exp(1j * k * t) - oracles.fourier_log_integral(k, t)).max() for k in range(0, N // 2))
    return 0.0, float(err)


@check("quadrature.boundary_cos2", 1e-10)
def _():
    d, bn = _unit_nodes(64)
    return np.pi, quadrature.integrate_boundary(lambda p: p[:, 0] ** 2, bn)


@check("quadrature.disk_area", 1e-10)
def _():
    d = geometry.build_domain([geometry.Circle((0.0, 0.0), 1.0)])
    return np.pi, quadrature.volume_integrate(lambda p: np.ones(len(p)), quadrature.volume_grid(d, 32, 64))


@check("quadrature.disk_r2", 1e-8)
def _():
    d = geometry.build_domain([geometry.Circle((0.0, 0.0), 1.0)])
    return np.pi / 2, quadrature.volume_integrate(lambda p: (p**2).sum(-1), quadrature.volume_grid(d, 32, 64))


@check("quadrature.newtonian_center", 1e-8)
def _():
    ws = disk_ws()
    return float(oracles.radial_newtonian(2, 0.0)), float(newtonian(fieldexpr.constant(1.0), [[0, 0]], ws.layers, ws.grid)[0])


@check("quadrature.newtonian_exterior", 1e-8)
def _():
    ws = disk_ws()
    return np.log(2) / 2, float(newtonian(fieldexpr.constant(1.0), [[2, 0]], ws.layers, ws.grid)[0])


@check("quadrature.newtonian_boundary", 1e-8)
def _():
    ws = disk_ws()
    return 0.0, float(newtonian(fieldexpr.constant(1.0), [[1, 0]], ws.layers, ws.grid)[0])


# --- bie / Steklov ---------------------------------------------------------------------

@check("steklov.spectrum", 1e-8)
def _():
    ws = disk_ws()
    t = _t(ws)
    err = max(np.abs(bie.steklov(np.cos(k * t), ws.ops) - k * np.cos(k * t)).max() for k in range(1, 9))
    return 0.0, float(err)


@check("steklov.constant", 1e-8)
def _():
    ws = disk_ws()
    return 0.0, float(np.abs(bie.steklov(np.ones(ws.bnodes.total), ws.ops)).max())


@check("steklov.flux", 1e-8)
def _():
    ws = disk_ws()
    t = _t(ws)
    v = np.exp(np.sin(t)) + np.cos(3 * t)
    return 0.0, float(ws.bnodes.weights @ bie.steklov(v, ws.ops))


@check("steklov.symmetry", 1e-6)
def _():
    d = geometry.build_domain([geometry.Ellipse((0.0, 0.0), 1.5, 1.0)])
    bn = geometry.nodes(d, 128)
    ops = bie.assemble(d, bn)
    WS = bn.weights[:, None] * ops.components[0].S_plus
    return 0.0, float(np.abs(WS - WS.T).max())


@check("steklov.radius2", 1e-8)
def _():
    d = geometry.build_domain([geometry.Circle((0.0, 0.0), 2.0)])
    bn = geometry.nodes(d, 128)
    ops = bie.assemble(d, bn)
    t = bn.components[0].t
    return 0.0, float(np.abs(bie.steklov(np.cos(t), ops) - np.cos(t) / 2).max())


@check("jump.kprime_row_sum", 1e-8)
def _():
    ws = disk_ws()
    return 0.5, float(0.5 + np.abs(ws.ops.components[0].Kp.sum(1) - 0.5).max())


@check("jump.gauss_identity", 1e-8)
def _():
    d = geometry.build_domain([geometry.Ellipse((0.0, 0.0), 2.0, 1.0)])
    bn = geometry.nodes(d, 256)
    ops = bie.assemble(d, bn)
    c = bn.components[0]
    col = (c.weights @ ops.components[0].Kp) / c.weights
    return 0.5, float(0.5 + np.abs(col - 0.5).max())


@check("jump.single_layer_constant", 1e-10)
def _():
    ws = disk_ws()
    return 0.0, float(np.abs(ws.ops.components[0].V.sum(1)).max())


@check("jump.interior_limit", 1e-8)
def _():
    # v[φ] with φ ≡ 1 on the unit circle: interior value 0, exterior ln|x|
    ws = disk_ws()
    x = np.array([[0.999, 0.0], [1.001, 0.0]])
    v = ws.layers.single_layer(np.ones(ws.bnodes.total), x)
    return 0.0, float(max(abs(v[0]), abs(v[1] - np.log(1.001))))


@check("dirichlet.cos2", 1e-8)
def _():
    ws = disk_ws()
    return 0.25, float(bie.dirichlet_solve(np.cos(2 * _t(ws)), ws.ops, [[0.5, 0.0]]).values[0])


@check("dirichlet.harmonic_polys", 1e-8)
def _():
    ws = disk_ws()
    x = disk_probes()
    r, th = np.hypot(x[:, 0], x[:, 1]), np.arctan2(x[:, 1], x[:, 0])
    t = _t(ws)
    err = max(np.abs(bie.dirichlet_solve(np.cos(k * t), ws.ops, x).values - r**k * np.cos(k * th)).max()
              for k in range(0, 7))
    return 0.0, float(err)


@check("dirichlet.locality", 1e-12)
def _():
    d = geometry.build_domain([geometry.Circle((-2, 0), 1), geometry.Circle((2, 0), 1)])
    bn = geometry.nodes(d, 64)
    ops = bie.assemble(d, bn)
    p = bn.points
    v1 = np.cos(3 * p[:, 1]) + p[:, 0]
    v2 = v1.copy()
    v2[bn.slice(1)] += np.sin(p[bn.slice(1), 0])
    s1, s2 = bie.steklov(v1, ops), bie.steklov(v2, ops)
    return 0.0, float(np.abs(s1[bn.slice(0)] - s2[bn.slice(0)]).max())


# --- potentials --------------------------------------------------------------------------

def _radial_probes(rs):
    th = np.linspace(0.3, 5.9, len(rs))
    return np.c_[rs * np.cos(th), rs * np.sin(th)]


@check("potentials.disk_interior", 1e-3)
def _():
    ws = disk_ws()
    rs = np.linspace(0.05, 0.98, 10)
    v = dist_volume_potential(DensityRep.of(1, 0, 0), _radial_probes(rs), ws.layers, ws.grid)
    return 0.0, float(np.abs(v - (rs**2 - 1) / 4).max())


@check("potentials.disk_exterior", 1e-3)
def _():
    ws = disk_ws()
    rs = np.linspace(1.05, 5, 10)
    v = dist_volume_potential(DensityRep.of(1, 0, 0), _radial_probes(rs), ws.layers, ws.grid)
    return 0.0, float(np.abs(v - np.log(rs) / 2).max())


@check("potentials.zero_rep", 1e-3)
def _():
    ws = disk_ws()
    v = dist_volume_potential(DensityRep.of(0, 1, 0), disk_probes(10), ws.layers, ws.grid)
    return 0.0, float(np.abs(v).max())


@check("potentials.rep_equivalence", 1e-3)
def _():
    ws = disk_ws()
    x = disk_probes(10)
    a = dist_volume_potential(DensityRep.of(2, 0, 0), x, ws.layers, ws.grid)
    b = dist_volume_potential(DensityRep.of(0, "x", "y"), x, ws.layers, ws.grid)
    return 0.0, float(np.abs(a - b).max())


@check("potentials.log_coefficient", 1e-3)
def _():
    ws = disk_ws()
    rep = infinity_behavior(DensityRep.of(1, 0, 0), [10.0, 100.0, 1000.0], ws.layers, ws.grid)
    return 0.5, rep["log_coefficient"]


@check("potentials.laplacian", 1e-3)
def _():
    ws = disk_ws()
    x = disk_probes(5, rmax=0.8)
    lap = oracles.fd_laplacian(lambda p: dist_volume_potential(DensityRep.of(1, 0, 0), p, ws.layers, ws.grid), x)
    return 1.0, float(1 + np.abs(lap - 1).max())


@check("oracles.n3_radial", 1e-10)
def _():
    return float(oracles.radial_newtonian(3, 0.5)), oracles.radial_newtonian_quad(3, 0.5)


# --- schauder ---------------------------------------------------------------------------

@check("schauder.I_divergence", 1e-10)
def _():
    ws = disk_ws()
    return np.pi, integrate_I(DensityRep.of(0, "x", 0), ws.grid, ws.bnodes)


@check("schauder.E_sharp_zero", 1e-8)
def _():
    ws = disk_ws()
    v = TestField.from_field(fieldexpr.from_expr("exp(x)*sin(y) + x^2"), ws.grid, ws.bnodes)
    return 0.0, pair_E_sharp(DensityRep.of(0, 1, 0), v, ws.grid, ws.bnodes)


@check("schauder.pairing_consistency", 1e-12)
def _():
    ws = disk_ws()
    f = fieldexpr.from_expr("cos(x)*y + 1")
    v = fieldexpr.from_expr("x^2 + y")
    tf = TestField.from_field(v, ws.grid, ws.bnodes)
    vol = quadrature.volume_integrate(lambda p: f(p) * v(p), ws.grid)
    return vol, pair_E_sharp(DensityRep(f, (fieldexpr.constant(0.0), fieldexpr.constant(0.0))), tf, ws.grid, ws.bnodes)


@check("schauder.boundary_dist", 1e-8)
def _():
    ws = disk_ws()
    g = BoundaryDist.of(0, "cos(theta)")
    return np.pi, pair_boundary_dist(g, np.cos(_t(ws)), ws.ops, ws.bnodes)


@check("schauder.zero_mean_subspace", 1e-8)
def _():
    ws = disk_ws()
    g = BoundaryDist.of(0, "exp(x)*y + x^3")
    return 0.0, pair_boundary_dist(g, np.ones(ws.bnodes.total), ws.ops, ws.bnodes)


# --- normal derivative --------------------------------------------------------------------

def _holder(ws, trace_expr, lap):
    tr = fieldexpr.from_expr(trace_expr)(ws.bnodes.points)
    return HolderSolution(tr, lambda x: None, lap, ws.bnodes)


@check("normal.harmonic_classical", 1e-8)
def _():
    ws = disk_ws()
    u = _holder(ws, "x^2 - y^2", DensityRep.zero())
    return 2 * np.pi, pair_normal_derivative(u, np.cos(2 * _t(ws)), ws)


@check("normal.quadratic_flux", 1e-8)
def _():
    ws = disk_ws()
    u = _holder(ws, "(x^2 + y^2)/4", DensityRep.of(1, 0, 0))
    return np.pi, pair_normal_derivative(u, np.ones(ws.bnodes.total), ws)


@check("normal.v1alpha_mu0", 1e-3)
def _():
    ws = disk_ws()
    u = _holder(ws, "(x^2 + y^2)/4", DensityRep.of(1, 0, 0))
    mu0, mu1 = v1alpha_representation(u, ws, K=8).dist.values(ws.bnodes)
    return 0.0, float(max(np.abs(mu0 - 0.5).max(), np.abs(mu1 - 0.25).max()))


# --- neumann ---------------------------------------------------------------------------------

def _neumann(name):
    ws = disk_ws()
    f, g, exact = oracles.NEUMANN_CASES[name]
    sol = solve(NeumannProblem(ws.domain, DensityRep.of(*f), BoundaryDist.of(*g), ws.disc), ws)
    x = disk_probes()
    return 0.0, float(np.abs(sol(x) - exact(x)).max())


@check("neumann.quadratic", 1e-3)
def _():
    return _neumann("quadratic")


@check("neumann.dipole", 1e-4)
def _():
    return _neumann("dipole")


@check("neumann.dipole_transpose", 1e-4)
def _():
    return _neumann("dipole-transpose")


@check("neumann.refusal_defect", 1e-6)
def _():
    ws = disk_ws()
    try:
        solve(NeumannProblem(ws.domain, DensityRep.of(1, 0, 0), BoundaryDist.of(1, 0), ws.disc), ws)
    except IncompatibleDataError as e:
        return np.pi, float(e.defects[0])
    return np.pi, 0.0


@check("neumann.uniqueness", 1e-9)
def _():
    ws = disk_ws()
    p = [ws.domain, DensityRep.zero(), BoundaryDist.of("cos(theta) + sin(2*theta)", 0), ws.disc]
    s1 = solve(NeumannProblem(*p), ws)
    s2 = solve(NeumannProblem(*p, normalization="anchor"), ws)
    return 0.0, uniqueness_certificate(s1, s2)[1]


# --- runner ------------------------------------------------------------------------------------

def run(filter_text: str = "", faults=(), tol_scale: float = 1.0) -> list:
    """Run all checks whose name contains `filter_text`, optionally with
    injected faults (see `bie.FAULTS`). Tolerances are multiplied by `tol_scale`."""
    saved = set(bie.FAULTS)
    bie.FAULTS.clear()
    bie.FAULTS.update(faults)
    disk_ws.cache_clear()
    results = []
    try:
        for name, tol, fn in CHECKS:
            if filter_text and filter_text not in name:
                continue
            t0 = time.perf_counter()
            try:
                exp, got = fn()
                exp, got = float(exp), float(got)
                ok = bool(np.isfinite(got) and abs(got - exp) <= tol * tol_scale)
                results.append(CheckResult(name, exp, got, tol * tol_scale, ok, time.perf_counter() - t0))
            except Exception as e:  # a crashing check is a failed check
                results.append(CheckResult(name, np.nan, np.nan, tol * tol_scale, False, time.perf_counter() - t0,
                                           f"{type(e).__name__}: {e}"))
    finally:
        bie.FAULTS.clear()
        bie.FAULTS.update(saved)
        disk_ws.cache_clear()
    return results


def format_table(results) -> str:
    w = max([len(r.name) for r in results] + [5])
    lines = [f"{'check':<{w}}  {'expected':>16}  {'got':>16}  {'tol':>8}  status"]
    for r in results:
        status = "PASS" if r.passed else "FAIL"
        line = f"{r.name:<{w}}  {r.expected:>16.9g}  {r.got:>16.9g}  {r.tol:>8.1e}  {status}"
        if r.error:
            line += f"  ({r.error})"
        lines.append(line)
    n_ok = sum(r.passed for r in results)
    lines.append(f"{n_ok}/{len(results)} checks passed")
    return "\n".join(lines)
