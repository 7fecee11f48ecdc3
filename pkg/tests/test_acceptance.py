"""Acceptance criteria at the stated tolerances and default resolution
(N = 256, M_r = 48, M_t = 96, K = 16). Each test prints one PASS/FAIL line;
the lines are repeated in the terminal summary."""
import json
import time

import numpy as np
import pytest
from conftest import ACCEPTANCE_LINES

from nvneumann import cli, geometry
from nvneumann.bie import assemble, dirichlet_solve, projected_condition, steklov
from nvneumann.fieldexpr import from_expr, hadamard_trace
from nvneumann.neumann import IncompatibleDataError, NeumannProblem, dirichlet_energy, solve, uniqueness_certificate
from nvneumann.normal_derivative import pair_many, v1alpha_representation
from nvneumann.oracles import NEUMANN_CASES, DiskOracle, fd_laplacian, hadamard_energy
from nvneumann.potentials import dist_volume_potential, infinity_behavior
from nvneumann.quadrature import Discretization
from nvneumann.schauder import (BoundaryDist, DensityRep, HolderSolution, TestField, compact_bump_phi,
                                holder_seminorm_estimate, pair_E_sharp, test_battery, zero_rep_from_phi)
from nvneumann.workspace import Workspace


def record(num, title, ok, detail):
    line = f"criterion {num}: {'PASS' if ok else 'FAIL'}  {title}  [{detail}]"
    print(line)
    ACCEPTANCE_LINES.append(line)
    assert ok, line


def polar(r, th):
    return np.c_[r * np.cos(th), r * np.sin(th)]


@pytest.fixture(scope="module")
def ws(default_ws):
    return default_ws


@pytest.fixture(scope="module")
def t(ws):
    return ws.bnodes.components[0].t


@pytest.fixture(scope="module")
def probes25(sample_disk):
    return sample_disk(25, seed=11)


def test_c01_steklov_spectrum(unit_disk):
    t0 = time.perf_counter()
    bn = geometry.nodes(unit_disk, 256)
    ops = assemble(unit_disk, bn)
    th = bn.components[0].t
    err = max(np.abs(steklov(np.cos(k * th), ops) - k * np.cos(k * th)).max() for k in range(1, 9))
    dt = time.perf_counter() - t0
    record(1, "Steklov spectrum k=1..8", err <= 1e-8 and dt < 5, f"max error {err:.2e}, {dt:.2f} s")


def test_c02_green_operator(ws, t, probes25, unit_disk):
    errs = []
    for k in range(0, 9):
        o = DiskOracle.of({k: 1.0})
        errs.append(np.abs(dirichlet_solve(o.boundary(t), ws.ops, probes25).values - o.extension(probes25)).max())
    # invertibility surrogate: condition on resolved modes is finite and refinement stable
    c256 = projected_condition(ws.ops)[0]
    c512 = projected_condition(assemble(unit_disk, geometry.nodes(unit_disk, 512)))[0]
    ok = max(errs) <= 1e-8 and np.isfinite(c256) and abs(c512 - c256) / c256 <= 1e-2
    record(2, "Dirichlet solve reproduces r^k cos k theta", ok,
           f"max error {max(errs):.2e}, projected cond {c256:.1f} / {c512:.1f}")


def test_c03_jump_and_flux(ws, t):
    Kp = ws.ops.components[0].Kp
    e1 = np.abs(Kp.sum(1) - 0.5).max()
    e2 = np.abs(steklov(np.ones_like(t), ws.ops)).max()
    v = np.exp(np.sin(t)) + np.cos(5 * t) * np.sin(2 * t)
    e3 = abs(ws.bnodes.weights @ steklov(v, ws.ops))
    record(3, "K'1 = 1/2, S+[1] = 0, flux of S+[v] = 0", max(e1, e2, e3) <= 1e-8,
           f"{e1:.1e}, {e2:.1e}, {e3:.1e}")


def test_c04_volume_potential(ws, sample_disk):
    rep = DensityRep.of(1, 0, 0)
    xin, xout = sample_disk(50, 21), sample_disk(50, 22, rmin=1.05, rmax=10.0)
    rin, rout = np.hypot(*xin.T), np.hypot(*xout.T)
    e_in = np.abs(dist_volume_potential(rep, xin, ws.layers, ws.grid) - (rin**2 - 1) / 4).max()
    e_out = np.abs(dist_volume_potential(rep, xout, ws.layers, ws.grid) - np.log(rout) / 2).max()
    th = np.linspace(0.05, 6.2, 20)
    P = lambda x: dist_volume_potential(rep, x, ws.layers, ws.grid)
    e_match = np.abs(P(polar(1 - 1e-9, th)) - P(polar(1 + 1e-9, th))).max()
    lap = fd_laplacian(P, sample_disk(10, 23, rmax=0.9))
    e_lap = np.abs(lap - 1).max()
    record(4, "distributional volume potential of rep (1,0,0)", max(e_in, e_out, e_match, e_lap) <= 1e-3,
           f"inside {e_in:.1e}, outside {e_out:.1e}, matching {e_match:.1e}, laplacian {e_lap:.1e}")


def test_c05_representation_equivalence(ws, sample_disk):
    x = sample_disk(10, 31)
    a, b = DensityRep.of(2, 0, 0), DensityRep.of(0, "x", "y")
    zero = zero_rep_from_phi(*compact_bump_phi((0.0, 0.0), 1.0))
    pot = lambda r: dist_volume_potential(r, x, ws.layers, ws.grid)
    e_pot = max(np.abs(pot(a) - pot(b)).max(), np.abs(pot(zero)).max())
    e_pair = 0.0
    for v in test_battery(seed=5):
        tf = TestField.from_field(v, ws.grid, ws.bnodes)
        pa, pb = (pair_E_sharp(r, tf, ws.grid, ws.bnodes) for r in (a, b))
        e_pair = max(e_pair, abs(pa - pb), abs(pair_E_sharp(zero, tf, ws.grid, ws.bnodes)))
    record(5, "representation equivalence", e_pot <= 1e-3 and e_pair <= 1e-6,
           f"potential {e_pot:.1e}, pairing {e_pair:.1e}")


CLASSICAL = [("x^2 - y^2", (0, 0, 0), "2*cos(2*theta)"), ("(x^2 + y^2)/4", (1, 0, 0), "0.5"),
             ("(x^2 + y^2)^2/16", ("x^2 + y^2", 0, 0), "0.25")]


def test_c06_classical_consistency(ws):
    V, labels = ws.test_vectors(16)
    bn = ws.bnodes
    worst = 0.0
    for trace, lap, dn in CLASSICAL:
        u = HolderSolution(from_expr(trace)(bn.points), lambda x: None, DensityRep.of(*lap), bn)
        got = pair_many(u, V, ws)
        classical = (bn.weights * from_expr(dn)(bn.points)) @ V
        worst = max(worst, float((np.abs(got - classical) / (1 + np.abs(V).max(0))).max()))
    record(6, f"distributional vs classical normal derivative, {len(labels)} tests", worst <= 1e-6,
           f"max scaled error {worst:.1e}")


def test_c07_v1alpha_extraction(ws, t):
    bn = ws.bnodes
    u = HolderSolution(from_expr("(x^2 + y^2)/4")(bn.points), lambda x: None, DensityRep.of(1, 0, 0), bn)
    mu0, mu1 = v1alpha_representation(u, ws).dist.values(bn)
    e1 = max(np.abs(mu0 - 0.5).max(), np.abs(mu1 - 0.25).max())
    h = HolderSolution(np.cos(t) + np.sin(3 * t), lambda x: None, DensityRep.zero(), bn)
    rep = v1alpha_representation(h, ws)
    h0, h1 = rep.dist.values(bn)
    e2 = max(np.abs(h0).max(), np.abs(h1 - h.trace).max())
    record(7, "V^{-1,alpha} extraction", max(e1, e2) <= 1e-3, f"r^2/4 {e1:.1e}, harmonic {e2:.1e}")


def test_c08_neumann_solves(ws, probes25):
    errs = {}
    for name, (f, g, exact) in NEUMANN_CASES.items():
        sol = solve(NeumannProblem(ws.domain, DensityRep.of(*f), BoundaryDist.of(*g), ws.disc), ws)
        errs[name] = float(np.abs(sol(probes25) - exact(probes25)).max())
    try:
        solve(NeumannProblem(ws.domain, DensityRep.of(1, 0, 0), BoundaryDist.of(1, 0), ws.disc), ws)
        defect = np.nan
    except IncompatibleDataError as e:
        defect = float(e.defects[0])
    ok = max(errs.values()) <= 1e-3 and abs(defect - np.pi) <= 1e-6
    record(8, "Neumann oracle problems and refusal", ok,
           ", ".join(f"{k} {v:.1e}" for k, v in errs.items()) + f", defect {defect:.9f}")


def test_c09_uniqueness(ws):
    p = dict(domain=ws.domain, f=DensityRep.of(1, 0, 0), g=BoundaryDist.of("0.5 + cos(theta)", "sin(2*theta)"),
             disc=ws.disc)
    a = solve(NeumannProblem(**p), ws)
    b = solve(NeumannProblem(**p, normalization="anchor"), ws)
    consts, dev = uniqueness_certificate(a, b)
    record(9, "uniqueness modulo locally constant functions", dev <= 1e-9,
           f"constant {consts[0]:.6f}, deviation {dev:.1e}")


# --- infinite Dirichlet energy regime -------------------------------------------

HADAMARD_DISC = Discretization(N=1024, M_r=8, M_t=16, K=256)
EPS = 1e-3


@pytest.fixture(scope="module")
def hadamard_runs(unit_disk):
    ws = Workspace(unit_disk, HADAMARD_DISC)
    t = 2 * np.pi * np.arange(2048) / 2048
    circle = np.c_[np.cos(t), np.sin(t)]
    runs = {}
    for K in (4, 6, 8):
        g = BoundaryDist.of(0, hadamard_trace(0.4, K))
        sol = solve(NeumannProblem(ws.domain, DensityRep.zero(), g, ws.disc), ws)
        runs[K] = dict(energy=dirichlet_energy(sol, EPS), truncated=hadamard_energy(0.4, K),
                       inner=hadamard_energy(0.4, K, EPS),
                       holder=holder_seminorm_estimate(hadamard_trace(0.4, K), 0.4, circle))
    return runs


def test_c10_infinite_energy_regime(hadamard_runs):
    """Literal form: energy over r <= 1 - 1e-3 against π Σ 2^{k(1-0.8)}.

    Expected to fail. The sum is the energy over the full disk; over r <= 1-ε
    mode 2^k carries the factor (1-ε)^{2·2^k}, which is 0.60 at k = 8. The
    seminorm of the truncated series also grows by about 39% from K = 4 to 8.
    """
    Ks = sorted(hadamard_runs)
    rel = [abs(hadamard_runs[K]["energy"] - hadamard_runs[K]["truncated"]) / hadamard_runs[K]["truncated"] for K in Ks]
    en = [hadamard_runs[K]["energy"] for K in Ks]
    hs = [hadamard_runs[K]["holder"] for K in Ks]
    spread = (max(hs) - min(hs)) / min(hs)
    ok = max(rel) <= 0.01 and all(np.diff(en) > 0) and spread <= 0.2
    record(10, "Hadamard datum: energy vs truncated sum, seminorm spread", ok,
           "energy rel. errors " + ", ".join(f"{r:.1%}" for r in rel) + f"; seminorm spread {spread:.0%}")


def test_c10_companion_finite_radius(hadamard_runs):
    """What the solver can certify: the energy over r <= 1-ε matches the
    finite-radius sum, grows monotonically, and the seminorm estimate changes
    by at most 20% per added octave from K = 4 on."""
    Ks = sorted(hadamard_runs)
    rel = [abs(hadamard_runs[K]["energy"] - hadamard_runs[K]["inner"]) / hadamard_runs[K]["inner"] for K in Ks]
    en = [hadamard_runs[K]["energy"] for K in Ks]
    ok = max(rel) <= 0.01 and all(np.diff(en) > 0)
    record(10, "(companion) energy vs finite-radius sum, monotone growth", ok,
           "rel. errors " + ", ".join(f"{r:.1e}" for r in rel))


def test_c10_companion_seminorm_steps():
    t = 2 * np.pi * np.arange(2048) / 2048
    circle = np.c_[np.cos(t), np.sin(t)]
    hs = [holder_seminorm_estimate(hadamard_trace(0.4, K), 0.4, circle) for K in range(4, 9)]
    steps = np.array(hs[1:]) / np.array(hs[:-1])
    record(10, "(companion) seminorm estimate per-octave change", bool(np.all(steps <= 1.2) and np.all(steps >= 1)),
           "ratios " + ", ".join(f"{s:.3f}" for s in steps))


def test_c11_infinity_dichotomy(ws):
    zero_mean = infinity_behavior(DensityRep.of("x", 0, 0), [10.0, 100.0, 1000.0], ws.layers, ws.grid)
    one = infinity_behavior(DensityRep.of(1, 0, 0), [10.0, 100.0, 1000.0], ws.layers, ws.grid)
    th = abs(zero_mean["theta"][-1])
    c = one["log_coefficient"]
    record(11, "behavior at infinity", th <= 1e-2 and abs(c - 0.5) <= 1e-3,
           f"|theta(1e3)| {th:.1e}, log coefficient {c:.6f}")


def test_c12_determinism(tmp_path):
    cfg = {"domain": [{"kind": "circle", "center": [0, 0], "radius": 1}], "f": {"f0": 1}, "g": {"mu0": 0.5},
           "outputs": {"probes": [[0, 0], [0.5, 0.2], [-0.3, 0.7]]}}
    outs = []
    for i in range(2):
        csv_path = tmp_path / f"u{i}.csv"
        cfg["outputs"]["csv"] = str(csv_path)
        p = tmp_path / f"cfg{i}.json"
        p.write_text(json.dumps(cfg))
        with open(tmp_path / f"report{i}.txt", "w") as report:
            assert cli.cmd_solve(str(p), out=report) == cli.EXIT_OK
        outs.append(csv_path.read_bytes())
    record(12, "repeated solve gives bit-identical CSV", outs[0] == outs[1], f"{len(outs[0])} bytes")
