"""Distributional normal derivatives.

For u with Δu = f ∈ C^{-1,α} the canonical normal derivative is the functional

    v ↦ ∮ u S₊[v] dσ + ⟨E♯f, G_{d,+}[v]⟩,

which reduces to ∮ (∂_ν u) v dσ for classical u (second Green identity).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .bie import dirichlet_solve, steklov
from .potentials import dist_volume_potential
from .schauder import BoundaryDist, DensityRep, HolderSolution, TestField, pair_E_sharp


class RepresentationError(RuntimeError):
    pass


def green_test(v, ws, name: str = "") -> TestField:
    """G_{d,+}[v] as a test record: grid values and gradients, boundary
    values, and a pointwise evaluator in `.at`."""
    v = np.asarray(v, dtype=float)
    rec = TestField.from_boundary(v, ws.ops, ws.grid, ws.green, name)
    rec.at = lambda x: dirichlet_solve(v, ws.ops, x).values
    return rec


def e_sharp_functional(rep: DensityRep, ws) -> Callable:
    """f̃ = E♯[rep] as a functional on test records."""
    return lambda rec: pair_E_sharp(rep, rec, ws.grid, ws.bnodes)


def _boundary(v, ws):
    if callable(v):
        return np.asarray(v(ws.bnodes.points), float)
    return np.asarray(v, float)


def pair_normal_derivative_general(u_trace, f_tilde: Callable, v, ws) -> float:
    """∮ u S₊[v] dσ + ⟨f̃, G_{d,+}[v]⟩ for a user supplied functional f̃."""
    v = _boundary(v, ws)
    val = float(np.dot(ws.bnodes.weights, np.asarray(u_trace) * steklov(v, ws.ops)))
    return val + float(f_tilde(green_test(v, ws)))


def pair_normal_derivative(u: HolderSolution, v, ws) -> float:
    """Canonical ∂_ν u paired with a boundary test v."""
    v = _boundary(v, ws)
    val = float(np.dot(ws.bnodes.weights, u.trace * steklov(v, ws.ops)))
    if u.lap_rep.is_zero():
        return val
    rec = TestField.from_boundary(v, ws.ops, ws.grid, ws.green)
    return val + pair_E_sharp(u.lap_rep, rec, ws.grid, ws.bnodes)


def pair_many(u: HolderSolution, V, ws) -> np.ndarray:
    """pair_normal_derivative against each column of V."""
    V = np.asarray(V, float)
    base = (ws.bnodes.weights * u.trace) @ steklov(V, ws.ops)
    if u.lap_rep.is_zero():
        return base
    return base + np.array([pair_E_sharp(u.lap_rep, TestField.from_boundary(V[:, i], ws.ops, ws.grid, ws.green),
                                         ws.grid, ws.bnodes) for i in range(V.shape[1])])


@dataclass
class DualPairing:
    """A functional on boundary tests plus cached values on a battery."""

    evaluate: Callable
    cache: dict = field(default_factory=dict)

    def __call__(self, v):
        return self.evaluate(v)

    def on_battery(self, V, labels):
        for i, lab in enumerate(labels):
            if lab not in self.cache:
                self.cache[lab] = float(self.evaluate(V[:, i]))
        return np.array([self.cache[lab] for lab in labels])


def normal_derivative(u: HolderSolution, ws) -> DualPairing:
    return DualPairing(lambda v: pair_normal_derivative(u, v, ws))


@dataclass
class V1AlphaRep:
    dist: BoundaryDist
    mu0_coefficients: list
    condition: list


def potential_trace(rep: DensityRep, ws) -> np.ndarray:
    """P⁺[E♯f] at the boundary nodes (zero for the zero representative)."""
    if rep.is_zero():
        return np.zeros(ws.bnodes.total)
    return dist_volume_potential(rep, ws.bnodes.points, ws.layers, ws.grid)


def v1alpha_representation(u: HolderSolution, ws, K: int = 16, p_trace=None,
                           max_condition: float = 1e8) -> V1AlphaRep:
    """(μ₀, μ₁) with ∂_ν u = μ₀ + S₊ᵗ[μ₁].

    μ₁ = (u - P⁺[E♯Δu])|∂Ω; μ₀ is fitted in the trigonometric basis of order
    K (constant included) per component from the pairings against that basis.
    """
    N = min(c.n for c in ws.bnodes.components)
    if K > N // 4:
        raise ValueError(f"K must not exceed N/4 = {N // 4}")
    if p_trace is None:
        p_trace = potential_trace(u.lap_rep, ws)
    mu1 = u.trace - p_trace
    mu0 = np.zeros(ws.bnodes.total)
    coeffs, conds = [], []
    w = ws.bnodes.weights
    for j in range(ws.domain.kappa):
        B = ws.basis(j, K, constant=True)
        G = B.T @ (w[:, None] * B)
        cond = float(np.linalg.cond(G))
        conds.append(cond)
        if cond > max_condition:
            raise RepresentationError(f"coefficient recovery ill conditioned on component {j}: {cond:.3e}")
        rhs = pair_many(u, B, ws) - (w * mu1) @ steklov(B, ws.ops)
        c = np.linalg.solve(G, rhs)
        coeffs.append(c)
        mu0 += B @ c
    return V1AlphaRep(BoundaryDist(mu0, mu1), coeffs, conds)
