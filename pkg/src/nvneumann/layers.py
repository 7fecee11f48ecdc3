"""Single-layer operators on each boundary component and their evaluation off ∂Ω.

Nyström matrices:

* V[i, j]  = s_j/(4π) [R_{i-j} + (2π/N) ln(|x_i - y_j|² / (4 sin²((t_i - t_j)/2)))]
* K'[i, j] = (2π/N) s_j (x_i - y_j)·ν_i / (2π |x_i - y_j|²), diagonal (2π/N) s_i κ_i/(4π)

so that the interior and exterior normal derivatives of v[ψ] are (∓1/2 + K')ψ.

Near ∂Ω the layer potential is evaluated through the analytic function
F = u + iũ whose boundary values are known spectrally (ũ is the integral of
∂_ν u along the curve) and a compensated Cauchy formula. This keeps values
and gradients accurate at targets arbitrarily close to the curve.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .geometry import BoundaryNodes, ComponentNodes, Domain
from .kernels import eval_S, grad_S
from .quadrature import circulant, kress_weights, spectral_antiderivative, spectral_derivative

FAR_FACTOR = 5.0      # targets farther than this many spacings use plain trapezoid
ON_NODE_TOL = 1e-12


class NearSingularWarning(RuntimeWarning):
    """A target sits within ON_NODE_TOL of a node without coinciding with it."""


def single_layer_matrix(c: ComponentNodes) -> np.ndarray:
    N = c.n
    R = circulant(kress_weights(N))
    dt = c.t[:, None] - c.t[None, :]
    d = c.points[:, None, :] - c.points[None, :, :]
    r2 = (d**2).sum(-1)
    s2 = 4 * np.sin(dt / 2) ** 2
    np.fill_diagonal(s2, 1.0)
    L = np.log(np.where(r2 > 0, r2, 1.0) / s2)
    np.fill_diagonal(L, np.log(c.speed**2))
    return c.speed[None, :] / (4 * np.pi) * (R + (2 * np.pi / N) * L)


def adjoint_double_layer_matrix(c: ComponentNodes) -> np.ndarray:
    d = c.points[:, None, :] - c.points[None, :, :]
    r2 = (d**2).sum(-1)
    np.fill_diagonal(r2, 1.0)
    K = (d * c.normal[:, None, :]).sum(-1) / (2 * np.pi * r2) * c.weights[None, :]
    np.fill_diagonal(K, c.weights * c.curvature / (4 * np.pi))
    return K


@dataclass
class ComponentLayer:
    """Single-layer machinery for one component ∂Ω_j."""

    domain: Domain
    j: int
    nodes: ComponentNodes
    V: np.ndarray
    Kp: np.ndarray

    def __post_init__(self):
        c = self.nodes
        self.anchor = np.asarray(self.domain.centroid(self.j), float)
        self.zn = c.points[:, 0] + 1j * c.points[:, 1]
        self.dz = (c.d1[:, 0] + 1j * c.d1[:, 1]) * (2 * np.pi / c.n)
        self.h = c.spacing
        rel = c.points - self.anchor
        self.S_anchor = eval_S(2, rel)
        self.dnS_anchor = (grad_S(2, rel) * c.normal).sum(-1)
        za = self.anchor[0] + 1j * self.anchor[1]
        self.e_inf = self.dz / (2j * np.pi * (self.zn - za))

    # -- target classification
    def classify(self, x):
        """(node index or -1, side) with side -1 inside, +1 outside, 0 far."""
        x = np.atleast_2d(x)
        d = np.sqrt(((x[:, None, :] - self.nodes.points[None, :, :]) ** 2).sum(-1))
        imin = d.argmin(axis=1)
        dmin = d[np.arange(len(x)), imin]
        scale = 1.0 + np.abs(self.nodes.points).max()
        node = np.where(dmin < ON_NODE_TOL * scale, imin, -1)
        if np.any((node >= 0) & (dmin > 0)):
            warnings.warn("target within 1e-12 of a boundary node; evaluated as the on-node value",
                          NearSingularWarning, stacklevel=3)
        side = np.zeros(len(x), dtype=int)
        near = (dmin <= FAR_FACTOR * self.h) & (node < 0)
        if near.any():
            _, _, sd = self.domain.nearest(x[near], self.j)
            side[near] = np.where(sd > 0, 1, -1)
        return node, side

    def contains(self, x):
        """True for points inside the component (closure for on-node points)."""
        x = np.atleast_2d(x)
        node, side = self.classify(x)
        inside = side < 0
        far = (side == 0) & (node < 0)
        if far.any():
            _, _, sd = self.domain.nearest(x[far], self.j)
            inside[far] = sd < 0
        return inside | (node >= 0)

    # -- Cauchy matrices
    def cauchy_interior(self, x):
        z = x[:, 0] + 1j * x[:, 1]
        inv = 1.0 / (self.zn[None, :] - z[:, None])
        c = self.dz[None, :] * inv
        d = c * inv
        sc = c.sum(1)[:, None]
        C = c / sc
        D = (d - d.sum(1)[:, None] * C) / sc
        return C, D

    def cauchy_exterior(self, x):
        z = x[:, 0] + 1j * x[:, 1]
        inv = 1.0 / (self.zn[None, :] - z[:, None])
        c = self.dz[None, :] * inv
        d = c * inv
        sc = c.sum(1)[:, None]
        C = (c - 2j * np.pi * self.e_inf[None, :]) / (sc - 2j * np.pi)
        D = -(d - d.sum(1)[:, None] * C) / (2j * np.pi - sc)
        return C, D

    def boundary_F(self, trace, dn):
        """Boundary values of u + iũ from the trace of u and its normal derivative."""
        sp = self.nodes.speed
        return trace + 1j * spectral_antiderivative(dn * (sp[:, None] if dn.ndim == 2 else sp), axis=0)

    def tangential_gradient(self, trace, dn, i):
        """Gradient at node i from the trace and a one-sided normal derivative."""
        c = self.nodes
        dt = spectral_derivative(trace, axis=0)[i] / c.speed[i]
        tau = c.d1[i] / c.speed[i]
        return tau[:, None] * dt + c.normal[i][:, None] * dn[i]

    # -- evaluation
    def evaluate(self, psi, x, grad: bool = False):
        """v[ψ](x) = ∮_{∂Ω_j} S(x - y) ψ(y) dσ_y for ψ of shape (N,) or (N, p).

        Returns values (m, p) and, if requested, gradients (m, p, 2); on-node
        gradients are interior limits.
        """
        psi = np.asarray(psi, dtype=float)
        single = psi.ndim == 1
        if single:
            psi = psi[:, None]
        x = np.atleast_2d(np.asarray(x, dtype=float))
        m, p = len(x), psi.shape[1]
        val = np.zeros((m, p))
        g = np.zeros((m, p, 2))
        node, side = self.classify(x)
        c = self.nodes
        Vpsi = self.V @ psi
        Kpsi = self.Kp @ psi

        far = (side == 0) & (node < 0)
        if far.any():
            dx = x[far][:, None, :] - c.points[None, :, :]
            wpsi = psi * c.weights[:, None]
            val[far] = eval_S(2, dx) @ wpsi
            if grad:
                G = grad_S(2, dx)
                g[far] = np.einsum("mnk,np->mpk", G, wpsi)

        on = node >= 0
        if on.any():
            val[on] = Vpsi[node[on]]
            if grad:
                dn = -0.5 * psi + Kpsi
                for r, i in zip(np.nonzero(on)[0], node[on]):
                    g[r] = self.tangential_gradient(Vpsi, dn, i).T

        ins = side < 0
        if ins.any():
            F = self.boundary_F(Vpsi, -0.5 * psi + Kpsi)
            C, D = self.cauchy_interior(x[ins])
            val[ins] = (C @ F).real
            if grad:
                dF = D @ F
                g[ins] = np.stack([dF.real, -dF.imag], axis=-1)

        out = side > 0
        if out.any():
            Q = c.weights @ psi
            trace = Vpsi - np.outer(self.S_anchor, Q)
            dn = 0.5 * psi + Kpsi - np.outer(self.dnS_anchor, Q)
            F = self.boundary_F(trace, dn)
            xo = x[out]
            C, D = self.cauchy_exterior(xo)
            rel = xo - self.anchor
            val[out] = (C @ F).real + np.outer(eval_S(2, rel), Q)
            if grad:
                dF = D @ F
                g[out] = np.stack([dF.real, -dF.imag], axis=-1) + grad_S(2, rel)[:, None, :] * Q[None, :, None]

        if single:
            val, g = val[:, 0], g[:, 0]
        return (val, g) if grad else val


@dataclass
class LayerSet:
    domain: Domain
    bnodes: BoundaryNodes
    components: tuple

    @classmethod
    def build(cls, domain: Domain, bnodes: BoundaryNodes, kprime_sign: float = 1.0):
        comps = []
        for j, c in enumerate(bnodes.components):
            comps.append(ComponentLayer(domain, j, c, single_layer_matrix(c),
                                        kprime_sign * adjoint_double_layer_matrix(c)))
        return cls(domain, bnodes, tuple(comps))

    def single_layer(self, phi, x, grad: bool = False):
        """Sum over components of v_Ω[φ](x) for φ given at all boundary nodes."""
        phi = np.asarray(phi, dtype=float)
        x = np.atleast_2d(np.asarray(x, dtype=float))
        tail = phi.shape[1:]
        val = np.zeros((len(x),) + tail)
        g = np.zeros((len(x),) + tail + (2,))
        for j, L in enumerate(self.components):
            r = L.evaluate(phi[self.bnodes.slice(j)], x, grad)
            if grad:
                val += r[0]
                g += r[1]
            else:
                val += r
        return (val, g) if grad else val
