"""Nonvariational Neumann problem Δu = f, ∂_ν u = g.

The boundary trace t of a solution satisfies, for every boundary test v,

    ∮ t S₊[v] dσ = ⟨g, v⟩ - ⟨E♯f, G_{d,+}[v]⟩.

We solve this transpose-Galerkin system in the trigonometric basis of order K
on each component (constant mode excluded, it spans the kernel of S₊) and set
u = P⁺[E♯f] + G_{d,+}[t - P⁺|∂Ω], then fix the locally constant ambiguity.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .bie import dirichlet_solve, steklov
from .geometry import Domain
from .normal_derivative import potential_trace
from .potentials import dist_volume_potential
from .quadrature import Discretization
from .schauder import BoundaryDist, DensityRep, HolderSolution, TestField, integrate_I, pair_E_sharp
from .workspace import Workspace

log = logging.getLogger(__name__)

NORMALIZATIONS = ("zero-mean", "anchor")


class IncompatibleDataError(ValueError):
    def __init__(self, defects, tolerances):
        self.defects = np.asarray(defects)
        self.tolerances = np.asarray(tolerances)
        msg = ", ".join(f"d[{j}] = {d:.9g}" for j, d in enumerate(self.defects))
        super().__init__(f"incompatible data: {msg}")


class DomainMismatchError(ValueError):
    pass


@dataclass
class NeumannProblem:
    domain: Domain
    f: DensityRep
    g: BoundaryDist
    disc: Discretization = field(default_factory=Discretization)
    normalization: str = "zero-mean"
    compat_tol: float = 1e-6
    residual_tol: float = 1e-8

    def __post_init__(self):
        if self.normalization not in NORMALIZATIONS:
            raise ValueError(f"normalization must be one of {NORMALIZATIONS}")


@dataclass
class NeumannSolution:
    u: HolderSolution
    defects: np.ndarray
    residuals: np.ndarray
    constants: np.ndarray
    normalization: str
    converged: bool
    conditions: list
    p_trace: np.ndarray
    harmonic_trace: np.ndarray
    ws: Workspace = field(repr=False)

    @property
    def residual_max(self) -> float:
        return float(np.max(np.abs(self.residuals))) if self.residuals.size else 0.0

    def __call__(self, x):
        return self.u(x)

    def shifted(self, consts) -> "NeumannSolution":
        consts = np.asarray(consts, float)
        return NeumannSolution(self.u.shifted(consts), self.defects, self.residuals, self.constants + consts,
                               self.normalization, self.converged, self.conditions, self.p_trace,
                               self.harmonic_trace, self.ws)


def _scale(problem: NeumannProblem, ws: Workspace) -> float:
    s = max(1.0, problem.g.sup_norm(ws.bnodes))
    f0g, fg, fb = problem.f.sample(ws.grid, ws.bnodes)
    return max(s, float(np.abs(f0g).max(initial=0)), float(np.abs(fb).max(initial=0)))


def check_compatibility(problem: NeumannProblem, ws: Optional[Workspace] = None):
    """Per-component defects d_j = ∮_{∂Ω_j} μ₀ dσ - I_{Ω_j}[f] and their tolerances.

    The S₊ᵗ[μ₁] part pairs to zero with χ_j since S₊ kills constants.
    """
    ws = ws or Workspace(problem.domain, problem.disc)
    mu0, _ = problem.g.values(ws.bnodes)
    scale = _scale(problem, ws)
    defects, tols = [], []
    for j, c in enumerate(ws.bnodes.components):
        flux = float(np.dot(c.weights, mu0[ws.bnodes.slice(j)]))
        defects.append(flux - integrate_I(problem.f, ws.grid, ws.bnodes, j))
        tols.append(problem.compat_tol * c.weights.sum() * scale)
    return np.array(defects), np.array(tols)


def _pair_g(problem, mu0, mu1, V, ws):
    w = ws.bnodes.weights
    return (w * mu0) @ V + (w * mu1) @ steklov(V, ws.ops)


def solve(problem: NeumannProblem, ws: Optional[Workspace] = None) -> NeumannSolution:
    ws = ws or Workspace(problem.domain, problem.disc)
    defects, tols = check_compatibility(problem, ws)
    if np.any(np.abs(defects) > tols):
        raise IncompatibleDataError(defects, tols)
    K = problem.disc.K
    bn = ws.bnodes
    mu0, mu1 = problem.g.values(bn)
    f = problem.f
    w = bn.weights
    trace = np.zeros(bn.total)
    residuals, conds = [], []
    for j in range(ws.domain.kappa):
        B = ws.basis(j, K)
        SB = steklov(B, ws.ops)
        A = SB.T @ (w[:, None] * B)
        rhs = _pair_g(problem, mu0, mu1, B, ws)
        if not f.is_zero():
            rhs = rhs - np.array([pair_E_sharp(f, TestField.from_boundary(B[:, i], ws.ops, ws.grid, ws.green),
                                               ws.grid, bn) for i in range(B.shape[1])])
        conds.append(float(np.linalg.cond(A)))
        a = np.linalg.solve(A, rhs)
        trace += B @ a
        r = A @ a - rhs
        residuals.extend(np.abs(r) / max(1.0, np.abs(rhs).max()))
    residuals = np.array(residuals)
    p_trace = potential_trace(f, ws)
    h = trace - p_trace
    locate = lambda x: ws.domain.locate(x, tol=1e-12)

    def base_eval(x):
        x = np.atleast_2d(np.asarray(x, float))
        out = dirichlet_solve(h, ws.ops, x).values
        if not f.is_zero():
            out = out + dist_volume_potential(f, x, ws.layers, ws.grid)
        return out

    consts = np.zeros(ws.domain.kappa)
    for j in range(ws.domain.kappa):
        if problem.normalization == "zero-mean":
            gj = ws.grid.components[j]
            vals = ws.green[j][0] @ h[bn.slice(j)]
            if not f.is_zero():
                vals = vals + dist_volume_potential(f, gj.points, ws.layers, ws.grid)
            consts[j] = -np.dot(gj.weights, vals) / gj.weights.sum()
        else:
            consts[j] = -base_eval(ws.grid.components[j].anchor[None])[0]

    def ev(x):
        x = np.atleast_2d(np.asarray(x, float))
        return base_eval(x) + consts[locate(x)]

    full_trace = trace.copy()
    for j, c in enumerate(consts):
        full_trace[bn.slice(j)] += c
    u = HolderSolution(full_trace, ev, f, bn, locate)
    converged = bool(residuals.max(initial=0) <= problem.residual_tol) and max(conds, default=0) < 1e12
    if not converged:
        log.warning("Neumann solve did not reach the residual tolerance: %.3e", residuals.max(initial=0))
    return NeumannSolution(u, defects, residuals, consts, problem.normalization, converged, conds,
                           p_trace, h, ws)


def uniqueness_certificate(sol1: NeumannSolution, sol2: NeumannSolution, probes=None):
    """Per-component constants c_j = mean(u1 - u2) and max |u1 - u2 - c_j|.

    Default probes: 25 interior points per component taken from the volume grid.
    """
    d1, d2 = sol1.ws.domain, sol2.ws.domain
    if d1.components != d2.components:
        raise DomainMismatchError("solutions live on different domains")
    consts, devs = [], []
    for j in range(d1.kappa):
        if probes is None:
            g = sol1.ws.grid.components[j]
            pick = np.linspace(0, g.size - 1, 25).astype(int)
            pts = g.points[pick]
        else:
            pts = np.atleast_2d(probes)
            pts = pts[d1.locate(pts) == j]
        diff = sol1(pts) - sol2(pts)
        c = float(diff.mean())
        consts.append(c)
        devs.append(float(np.abs(diff - c).max()))
    return np.array(consts), float(max(devs))


def dirichlet_energy(sol: NeumannSolution, eps: float = 1e-3, component: int = 0, M: Optional[int] = None):
    """∫ |∇u|² over the inner region c + (1-ε)(Ω_j - c) of a harmonic solution,
    through the Green identity ∮ u ∂_n u dσ on the shrunken curve."""
    if not sol.u.lap_rep.is_zero():
        raise ValueError("energy via the Green identity needs a harmonic solution")
    ws = sol.ws
    spec = ws.domain.components[component]
    anchor = ws.grid.components[component].anchor
    N = ws.bnodes.components[component].n
    M = M or 4 * N
    t = 2 * np.pi * np.arange(M) / M
    p, d1, _ = spec.derivs(t)
    s = 1 - eps
    pts = anchor + s * (p - anchor)
    d1 = s * d1
    speed = np.hypot(d1[:, 0], d1[:, 1])
    nu = np.stack([d1[:, 1], -d1[:, 0]], axis=-1) / speed[:, None]
    res = dirichlet_solve(sol.harmonic_trace, ws.ops, pts)
    u = res.values + sol.constants[component]
    dn = (res.gradients * nu).sum(-1)
    return float(np.sum(u * dn * speed) * 2 * np.pi / M)
