"""Integration rules on ∂Ω and Ω.

* periodic trapezoid on each boundary component,
* Kress weights for φ(t) ln(4 sin²((s-t)/2)),
* polar tensor grids (Gauss-Legendre in the radial parameter, trapezoid in t),
* spectral derivative and antiderivative of periodic node data.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import BoundaryNodes, Domain, GeometryError, NodeCountError, nodes as make_nodes

DEFAULT_N = 256
DEFAULT_MR = 48
DEFAULT_MT = 96


def _values(field, pts):
    if callable(field):
        return np.asarray(field(pts), dtype=float) * np.ones(len(pts))
    v = np.asarray(field, dtype=float)
    if v.shape[0] != len(pts):
        raise ValueError("node values do not match the number of points")
    return v


def integrate_boundary(field, bnodes: BoundaryNodes, component=None) -> float:
    """Trapezoid sum Σ w_i f(x_i) over ∂Ω, or over ∂Ω_j if `component` is given.

    `field` is a callable on points or an array of node values.
    """
    if component is None:
        return float(np.dot(bnodes.weights, _values(field, bnodes.points)))
    c = bnodes.components[component]
    vals = _values(field, c.points) if callable(field) else np.asarray(field)[bnodes.slice(component)]
    return float(np.dot(c.weights, vals))


# --- logarithmic quadrature ---------------------------------------------------

def kress_weights(N: int) -> np.ndarray:
    """R_k, k = 0..N-1, such that ∫ ln(4 sin²((t_i-t)/2)) φ(t) dt ≈ Σ_j R_{i-j} φ(t_j)."""
    if N % 2 or N < 4:
        raise NodeCountError("log quadrature needs an even N >= 4")
    n = N // 2
    t = 2 * np.pi * np.arange(N) / N
    m = np.arange(1, n)
    R = -(2 * np.pi / n) * (np.cos(np.outer(t, m)) / m).sum(axis=1) - (np.pi / n**2) * np.cos(n * t)
    return R


def circulant(r: np.ndarray) -> np.ndarray:
    N = len(r)
    idx = (np.arange(N)[:, None] - np.arange(N)[None, :]) % N
    return r[idx]


@dataclass(frozen=True)
class LogQuadRule:
    """Per-component N×N log-part matrices R[i, j] = R_{(i-j) mod N} and the
    smooth-part trapezoid weight 2π/N."""

    log_part: tuple
    smooth_weight: tuple

    def apply(self, j: int, phi):
        """∫ ln(4 sin²((t_i - t)/2)) φ(t) dt at every node t_i."""
        return self.log_part[j] @ phi


def log_quad_rule(bnodes: BoundaryNodes) -> LogQuadRule:
    mats, ws = [], []
    cache = {}
    for c in bnodes.components:
        if c.n not in cache:
            cache[c.n] = circulant(kress_weights(c.n))
        mats.append(cache[c.n])
        ws.append(2 * np.pi / c.n)
    return LogQuadRule(tuple(mats), tuple(ws))


# --- spectral calculus on periodic node data -----------------------------------

def spectral_derivative(f, axis: int = 0):
    """d/dt of periodic samples on t_i = 2πi/N (Nyquist mode dropped)."""
    f = np.asarray(f)
    N = f.shape[axis]
    k = np.fft.fftfreq(N, 1.0 / N)
    if N % 2 == 0:
        k[N // 2] = 0
    shape = [1] * f.ndim
    shape[axis] = N
    F = np.fft.fft(f, axis=axis) * (1j * k).reshape(shape)
    out = np.fft.ifft(F, axis=axis)
    return out.real if np.isrealobj(f) else out


def spectral_antiderivative(f, axis: int = 0):
    """Zero-mean periodic antiderivative in t; the mean of `f` is discarded."""
    f = np.asarray(f)
    N = f.shape[axis]
    k = np.fft.fftfreq(N, 1.0 / N)
    inv = np.zeros(N, dtype=complex)
    nz = k != 0
    inv[nz] = 1.0 / (1j * k[nz])
    if N % 2 == 0:
        inv[N // 2] = 0
    shape = [1] * f.ndim
    shape[axis] = N
    out = np.fft.ifft(np.fft.fft(f, axis=axis) * inv.reshape(shape), axis=axis)
    return out.real if np.isrealobj(f) else out


def trig_basis(t, K: int, constant: bool = False) -> np.ndarray:
    """Columns cos(t), sin(t), ..., cos(Kt), sin(Kt) (optionally led by 1)."""
    t = np.asarray(t, dtype=float)
    cols = [np.ones_like(t)] if constant else []
    for k in range(1, K + 1):
        cols += [np.cos(k * t), np.sin(k * t)]
    return np.stack(cols, axis=-1) if cols else np.zeros((len(t), 0))


# --- volume grids --------------------------------------------------------------

@dataclass(frozen=True)
class ComponentGrid:
    anchor: np.ndarray
    points: np.ndarray
    weights: np.ndarray
    rho: np.ndarray
    t: np.ndarray

    @property
    def size(self) -> int:
        return len(self.weights)


@dataclass(frozen=True)
class VolumeGrid:
    """Polar tensor grid per component: y = c + ρ(γ(t) - c).

    Needs every component to be star-shaped with respect to its centroid.
    """

    components: tuple

    @property
    def points(self):
        return np.concatenate([g.points for g in self.components])

    @property
    def weights(self):
        return np.concatenate([g.weights for g in self.components])

    @property
    def offsets(self):
        return np.cumsum([0] + [g.size for g in self.components])

    def slice(self, j: int) -> slice:
        o = self.offsets
        return slice(o[j], o[j + 1])


def component_grid(spec, anchor, M_r: int, M_t: int) -> ComponentGrid:
    x, w = np.polynomial.legendre.leggauss(M_r)
    rho = 0.5 * (x + 1)
    w_rho = 0.5 * w
    t = 2 * np.pi * np.arange(M_t) / M_t
    # star-shapedness on a fine sample, then on the grid angles themselves
    tf = 2 * np.pi * np.arange(1024) / 1024
    for tt in (tf, t):
        g, g1, _ = spec.derivs(tt)
        cross = (g[:, 0] - anchor[0]) * g1[:, 1] - (g[:, 1] - anchor[1]) * g1[:, 0]
        if cross.min() <= 0:
            raise GeometryError("component is not star-shaped about its centroid; polar grid unavailable")
    rel = g - anchor
    pts = anchor + rho[:, None, None] * rel[None, :, :]
    wts = (w_rho * rho)[:, None] * cross[None, :] * (2 * np.pi / M_t)
    return ComponentGrid(np.asarray(anchor, float), pts.reshape(-1, 2), wts.ravel(), rho, t)


def volume_grid(domain: Domain, M_r: int = DEFAULT_MR, M_t: int = DEFAULT_MT) -> VolumeGrid:
    if M_r < 2 or M_t < 4:
        raise ValueError("volume grid needs M_r >= 2 and M_t >= 4")
    return VolumeGrid(tuple(component_grid(s, domain.centroid(j), M_r, M_t)
                            for j, s in enumerate(domain.components)))


def volume_integrate(field, grid: VolumeGrid, component=None) -> float:
    """Σ w f(y) over the grid (one component if given)."""
    comps = grid.components if component is None else (grid.components[component],)
    return float(sum(np.dot(g.weights, _values(field, g.points)) for g in comps))


def singular_volume_potential(field, grid: VolumeGrid, layers, x):
    """∫_Ω S₂(x-y) f(y) dy by singularity subtraction (see `potentials.newtonian`).

    `layers` is the LayerSet of the domain at the boundary resolution.
    """
    from .potentials import newtonian  # potentials depends on this module

    return newtonian(field, np.atleast_2d(x), layers, grid)


# --- resolution bundle ------------------------------------------------------------

@dataclass(frozen=True)
class Discretization:
    N: int = DEFAULT_N
    M_r: int = DEFAULT_MR
    M_t: int = DEFAULT_MT
    K: int = 16

    def validate(self):
        if self.N % 2 or self.N < 8:
            raise NodeCountError(f"N must be even and >= 8, got {self.N}")
        if self.K < 1 or self.K > self.N // 4:
            raise ValueError(f"K must lie in [1, N/4], got {self.K}")
        return self

    def build(self, domain: Domain):
        """(BoundaryNodes, VolumeGrid) at this resolution."""
        self.validate()
        return make_nodes(domain, self.N), volume_grid(domain, self.M_r, self.M_t)
