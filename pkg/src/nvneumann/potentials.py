"""Newtonian and distributional volume potentials, single layers, exterior
representation and behaviour at infinity (planar case).

Newtonian potential of a Hölder density f at x: with an anchor x* (x itself
when x ∈ Ω̄_j, the nearest boundary point otherwise) write

    f(y) = a + g·(y - x) + rem(y),   a = f(x*) + g·(x - x*),  g = ∇f(x*).

The polynomial part is reduced exactly to boundary integrals with densities
depending on r = y - x, ρ = |r|:

    ∫ S(x-y) dy        = ½ v[r·ν](x) - (1/8π) ∮ r·ν
    ∫ S(x-y) r_k dy    = v[ν_k ρ²/8 + r_k (r·ν)/4](x) - ∮ [3ν_k ρ²/(64π) + r_k (r·ν)/(32π)]
    ∫ ∂_j S(x-y) dy    = -v[ν_j](x)
    ∫ ∂_j S(x-y) r_k dy = -(1/2π) [δ_jk/8 ∮ r·ν - (π/2) ∂_j v[r_k (r·ν)](x)
                                   + (π/2) v[ν_j r_k + ν_k r_j - δ_jk r·ν](x)]

(∂_j acts on x with the density frozen). They follow from the divergence
theorem applied to radial antiderivatives of S, r_k S and r_j r_k/ρ². The
remainder rem(y) = O(|y - x|^(1+α)) is integrated on the tensor grid.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import BoundaryNodes
from .kernels import eval_S, grad_S
from .layers import ComponentLayer, LayerSet
from .quadrature import ComponentGrid, VolumeGrid
from .schauder import DensityRep, integrate_I

_CHUNK = 256
_FAR_SPACINGS = 8.0


class TargetError(ValueError):
    pass


def single_layer(phi, x, layers: LayerSet, grad: bool = False):
    """v_Ω[φ](x) = ∮ S(x - y) φ(y) dσ_y, φ given at all boundary nodes.

    On-node targets use the log-corrected rule; near targets use close
    evaluation; far targets use the plain trapezoid rule.
    """
    return layers.single_layer(phi, x, grad)


def _fixed_densities(L: ComponentLayer):
    """Columns ν1, ν2, Y·ν, ν_k Y_l (k, l), ν_k|Y|², Y_k (Y·ν) with Y = y - c."""
    c = L.nodes
    Y = c.points - L.anchor
    nu = c.normal
    yn = (Y * nu).sum(-1)
    cols = [nu[:, 0], nu[:, 1], yn]
    for k in range(2):
        for l in range(2):
            cols.append(nu[:, k] * Y[:, l])
    Y2 = (Y**2).sum(-1)
    cols += [nu[:, 0] * Y2, nu[:, 1] * Y2, Y[:, 0] * yn, Y[:, 1] * yn]
    return np.stack(cols, axis=-1)


def _nuY(k, l):
    return 3 + 2 * k + l


class _Reduction:
    """Boundary reductions A0, A1, C0, C1 at targets x for one component."""

    def __init__(self, L: ComponentLayer, x, grad: bool):
        psi = _fixed_densities(L)
        self.I = L.nodes.weights @ psi
        if grad:
            self.S, self.G = L.evaluate(psi, x, grad=True)
        else:
            self.S, self.G = L.evaluate(psi, x), None
        self.X = x - L.anchor

    def parts(self, A):
        """Return (rn, nurho2[k], rrn[k], sym[j][k]) combos of the fixed-density array A.

        A has shape (m, 11) or (m, 11, 2) (gradients, density frozen).
        """
        X = self.X
        ex = (slice(None),) + (None,) * (A.ndim - 2)
        x1, x2 = X[:, 0][ex], X[:, 1][ex]
        Xs = (x1, x2)
        X2 = (X**2).sum(-1)[ex]
        nu = (A[:, 0], A[:, 1])
        yn = A[:, 2]
        rn = yn - x1 * nu[0] - x2 * nu[1]
        nurho2 = []
        rrn = []
        for k in range(2):
            nurho2.append(A[:, 7 + k] - 2 * (Xs[0] * A[:, _nuY(k, 0)] + Xs[1] * A[:, _nuY(k, 1)]) + X2 * nu[k])
            rrn.append(A[:, 9 + k] - (Xs[0] * A[:, _nuY(0, k)] + Xs[1] * A[:, _nuY(1, k)])
                       - Xs[k] * yn + Xs[k] * (Xs[0] * nu[0] + Xs[1] * nu[1]))
        sym = [[None, None], [None, None]]
        for j in range(2):
            for k in range(2):
                s = A[:, _nuY(j, k)] - Xs[k] * nu[j] + A[:, _nuY(k, j)] - Xs[j] * nu[k]
                if j == k:
                    s = s - rn
                sym[j][k] = s
        return rn, nurho2, rrn, sym

    def values(self):
        m = len(self.X)
        Ib = np.broadcast_to(self.I, (m, len(self.I)))
        rn, nr2, rrn, _ = self.parts(self.S)
        irn, inr2, irrn, _ = self.parts(Ib)
        A0 = 0.5 * rn - irn / (8 * np.pi)
        A1 = np.stack([nr2[k] / 8 + rrn[k] / 4 - 3 * inr2[k] / (64 * np.pi) - irrn[k] / (32 * np.pi)
                       for k in range(2)], axis=-1)
        return A0, A1

    def gradients(self):
        m = len(self.X)
        Ib = np.broadcast_to(self.I, (m, len(self.I)))
        irn = self.parts(Ib)[0]
        _, _, _, sym = self.parts(self.S)
        _, _, grrn, _ = self.parts(self.G)
        C0 = -self.S[:, 0:2]
        C1 = np.zeros((m, 2, 2))
        for j in range(2):
            for k in range(2):
                C1[:, j, k] = -(1 / (2 * np.pi)) * (
                    (irn / 8 if j == k else 0.0) - (np.pi / 2) * grrn[k][:, j] + (np.pi / 2) * sym[j][k])
        return C0, C1


def _newtonian_component(f, fy, x, L: ComponentLayer, g: ComponentGrid, grad: bool):
    m = len(x)
    val = np.zeros(m)
    gv = np.zeros((m, 2))
    y, w = g.points, g.weights
    _, xs, sd = L.domain.nearest(x, L.j)
    h = 2 * np.pi * L.nodes.speed.max() / g.t.size
    near = sd < _FAR_SPACINGS * h
    far = ~near
    for s in range(0, m, _CHUNK):
        idx = np.arange(s, min(m, s + _CHUNK))
        fi = idx[far[idx]]
        if fi.size:
            dx = x[fi][:, None, :] - y[None, :, :]
            val[fi] = eval_S(2, dx) @ (w * fy)
            if grad:
                gv[fi] = np.einsum("mnk,n->mk", grad_S(2, dx), w * fy)
        ni = idx[near[idx]]
        if ni.size == 0:
            continue
        xn = x[ni]
        anchor = np.where((sd[ni] <= 1e-12)[:, None], xn, xs[ni])
        a0 = f(anchor)
        gf = f.gradient(anchor)
        a = a0 + (gf * (xn - anchor)).sum(-1)
        red = _Reduction(L, xn, grad)
        A0, A1 = red.values()
        dx = xn[:, None, :] - y[None, :, :]
        r2 = (dx**2).sum(-1)
        rem = fy[None, :] - a[:, None] + (gf[:, None, :] * dx).sum(-1)
        hit = r2 == 0
        r2s = np.where(hit, 1.0, r2)
        Sk = np.where(hit, 0.0, np.log(r2s) / (4 * np.pi))
        val[ni] = a * A0 + (gf * A1).sum(-1) + (Sk * rem) @ w
        if grad:
            C0, C1 = red.gradients()
            Gk = np.where(hit[..., None], 0.0, dx / (2 * np.pi * r2s[..., None]))
            gv[ni] = a[:, None] * C0 + np.einsum("mjk,mk->mj", C1, gf) + np.einsum("mnk,mn->mk", Gk, rem * w)
    return val, gv


def newtonian(f, x, layers: LayerSet, grid: VolumeGrid, grad: bool = False):
    """∫_Ω S(x - y) f(y) dy (and its x-gradient) at targets x."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    val = np.zeros(len(x))
    gv = np.zeros((len(x), 2))
    for L, g in zip(layers.components, grid.components):
        fy = f(g.points)
        v, gg = _newtonian_component(f, fy, x, L, g, grad)
        val += v
        gv += gg
    return (val, gv) if grad else val


def singular_volume_potential(field, grid: VolumeGrid, layers: LayerSet, x):
    """Alias of `newtonian` for scalar fields (values only)."""
    return newtonian(field, x, layers, grid)


def dist_volume_potential(rep: DensityRep, x, layers: LayerSet, grid: VolumeGrid):
    """P[E♯f](x) = N[f0](x) + Σ_j v[ν_j f_j](x) + Σ_j ∂_j N[f_j](x)."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    out = np.zeros(len(x))
    if not rep.f0.is_zero():
        out += newtonian(rep.f0, x, layers, grid)
    bn = layers.bnodes
    for j, fj in enumerate(rep.fvec):
        if fj.is_zero():
            continue
        phi = bn.normal[:, j] * fj(bn.points)
        out += layers.single_layer(phi, x)
        out += newtonian(fj, x, layers, grid, grad=True)[1][:, j]
    return out


def exterior_theta(rep: DensityRep, x, layers: LayerSet, grid: VolumeGrid):
    """θ(x), the harmonic function representing the potential outside Ω̄.

    Targets must lie outside Ω̄ by at least one boundary node spacing.
    """
    x = np.atleast_2d(np.asarray(x, dtype=float))
    for L in layers.components:
        _, _, sd = L.domain.nearest(x, L.j)
        if np.any(sd < L.h):
            raise TargetError("exterior targets must lie outside Ω̄ by at least one node spacing")
    return dist_volume_potential(rep, x, layers, grid)


@dataclass
class PotentialField:
    """Interior/exterior evaluators and boundary trace of P[E♯f]."""

    rep: DensityRep
    layers: LayerSet
    grid: VolumeGrid

    def __call__(self, x):
        return dist_volume_potential(self.rep, x, self.layers, self.grid)

    @property
    def trace(self):
        return self(self.layers.bnodes.points)

    def interior(self, x):
        x = np.atleast_2d(x)
        if np.any(self.layers.domain.locate(x) < 0):
            raise TargetError("interior targets must lie in Ω̄")
        return self(x)

    def exterior(self, x):
        return exterior_theta(self.rep, x, self.layers, self.grid)


def infinity_behavior(rep: DensityRep, radii, layers: LayerSet, grid: VolumeGrid, x0=None,
                      direction=(1.0, 0.0)) -> dict:
    """Fit θ(R e) ≈ c ln R + b and compare c with I_Ω[f]/(2π).

    Also reports |θ - I_Ω[f] S(x - x0)| along the rays (x0 defaults to the
    centroid of the first component).
    """
    radii = np.asarray(radii, dtype=float)
    dom = layers.domain
    diam = max(dom.diameter(j) for j in range(dom.kappa))
    if radii.min() < 2 * diam or np.any(np.diff(radii) <= 0):
        raise ValueError("radii must increase and start at twice the domain diameter")
    x0 = dom.centroid(0) if x0 is None else np.asarray(x0, float)
    e = np.asarray(direction, float)
    e = e / np.linalg.norm(e)
    pts = radii[:, None] * e[None, :]
    theta = exterior_theta(rep, pts, layers, grid)
    I = integrate_I(rep, grid, layers.bnodes)
    M = np.stack([np.log(radii), np.ones_like(radii)], axis=-1)
    c, b = np.linalg.lstsq(M, theta, rcond=None)[0]
    resid = theta - I * eval_S(2, pts - x0)
    return {
        "radii": radii,
        "theta": theta,
        "log_coefficient": float(c),
        "expected_coefficient": I / (2 * np.pi),
        "integral": I,
        "residual": np.abs(resid),
        "residual_sup": float(np.abs(resid).max()),
    }
