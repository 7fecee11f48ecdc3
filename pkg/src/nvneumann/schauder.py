"""Representatives of C^{-1,α} data, the integration functional, the E♯ pairing,
boundary distributions μ₀ + S₊ᵗ[μ₁] and a Hölder seminorm estimator.

A DensityRep (f0, f1, f2) stands for the distribution f0 + ∂₁f1 + ∂₂f2. Its
canonical extension to test functions v that need not vanish on ∂Ω is

    ⟨E♯f, v⟩ = ∫_Ω f0 v dx + ∮ (ν·f) v dσ - ∫_Ω f·∇v dx.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .bie import green_at_grid, steklov
from .fieldexpr import ScalarField, as_field
from .geometry import BoundaryNodes
from .quadrature import VolumeGrid


class PairingError(ValueError):
    pass


@dataclass
class DensityRep:
    f0: ScalarField
    fvec: tuple
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        self.f0 = as_field(self.f0)
        self.fvec = tuple(as_field(f) for f in self.fvec)
        if len(self.fvec) != 2:
            raise ValueError("a planar representative needs exactly two fields f1, f2")

    @classmethod
    def of(cls, f0=0.0, f1=0.0, f2=0.0, origin=(0.0, 0.0)):
        return cls(as_field(f0, origin=origin), (as_field(f1, origin=origin), as_field(f2, origin=origin)))

    @classmethod
    def zero(cls):
        return cls.of(0.0, 0.0, 0.0)

    @property
    def fields(self):
        return (self.f0,) + self.fvec

    def is_zero(self) -> bool:
        return all(f.is_zero() for f in self.fields)

    def has_divergence_part(self) -> bool:
        return not all(f.is_zero() for f in self.fvec)

    def __add__(self, other: "DensityRep") -> "DensityRep":
        return DensityRep(self.f0 + other.f0, tuple(a + b for a, b in zip(self.fvec, other.fvec)))

    def sample(self, grid: VolumeGrid, bnodes: BoundaryNodes):
        """Cached (f0 on grid, (f1, f2) on grid, (f1, f2) on boundary nodes)."""
        key = (id(grid), id(bnodes))
        if key not in self._cache:
            gp, bp = grid.points, bnodes.points
            f0g = self.f0(gp)
            fg = np.stack([f(gp) for f in self.fvec], axis=-1)
            fb = np.stack([f(bp) for f in self.fvec], axis=-1)
            self._cache[key] = (f0g, fg, fb)
        return self._cache[key]


@dataclass
class BoundaryDist:
    """μ₀ + S₊ᵗ[μ₁]; fields are ScalarFields or arrays of node values."""

    mu0: object
    mu1: object

    @classmethod
    def of(cls, mu0=0.0, mu1=0.0, origin=(0.0, 0.0)):
        def conv(m):
            return m if isinstance(m, np.ndarray) else as_field(m, "boundary", origin)

        return cls(conv(mu0), conv(mu1))

    def values(self, bnodes: BoundaryNodes):
        out = []
        for m in (self.mu0, self.mu1):
            if isinstance(m, np.ndarray):
                if m.shape[0] != bnodes.total:
                    raise PairingError("boundary distribution does not match the node count")
                out.append(m)
            else:
                out.append(m(bnodes.points))
        return out

    def sup_norm(self, bnodes: BoundaryNodes) -> float:
        return float(max(np.abs(v).max() for v in self.values(bnodes)))


@dataclass
class TestField:
    """A test function v sampled on the volume grid (values and gradients)
    and on the boundary nodes."""

    __test__ = False  # not a pytest class

    grid_values: np.ndarray
    grid_gradients: np.ndarray
    boundary_values: np.ndarray
    fd_gradient: bool = False
    name: str = ""

    @classmethod
    def from_field(cls, v, grid: VolumeGrid, bnodes: BoundaryNodes, name: str = ""):
        v = as_field(v)
        gp = grid.points
        return cls(v(gp), v.gradient(gp), v(bnodes.points), v.fd_gradient, name or repr(v))

    @classmethod
    def from_boundary(cls, vb, ops, grid: VolumeGrid, mats=None, name: str = ""):
        """Harmonic extension G_{d,+}[vb] through the close-evaluation matrices."""
        vb = np.asarray(vb, dtype=float)
        mats = mats or green_at_grid(ops, grid)
        vals = np.zeros(grid.offsets[-1])
        grads = np.zeros((grid.offsets[-1], 2))
        for j, (Mv, Mx, My) in enumerate(mats):
            vj = vb[ops.slice(j)]
            sl = grid.slice(j)
            vals[sl] = Mv @ vj
            grads[sl, 0] = Mx @ vj
            grads[sl, 1] = My @ vj
        return cls(vals, grads, vb, False, name)


def _restrict(grid, bnodes, component):
    if component is None:
        return slice(None), slice(None)
    if not 0 <= component < len(grid.components):
        raise IndexError(f"component {component} out of range")
    return grid.slice(component), bnodes.slice(component)


def integrate_I(rep: DensityRep, grid: VolumeGrid, bnodes: BoundaryNodes, component=None) -> float:
    """I_Ω[f] = ∫ f0 dx + ∮ ν·f dσ (or restricted to Ω_j, ∂Ω_j)."""
    gs, bs = _restrict(grid, bnodes, component)
    f0g, _, fb = rep.sample(grid, bnodes)
    vol = np.dot(grid.weights[gs], f0g[gs])
    bdry = np.dot(bnodes.weights[bs], (bnodes.normal[bs] * fb[bs]).sum(-1))
    return float(vol + bdry)


def pair_E_sharp(rep: DensityRep, v: TestField, grid: VolumeGrid, bnodes: BoundaryNodes,
                 component=None) -> float:
    """⟨E♯f, v⟩ with the same sums as integrate_I (so v ≡ 1 gives I_Ω exactly)."""
    if v.grid_gradients is None:
        raise PairingError("test field carries no gradient")
    gs, bs = _restrict(grid, bnodes, component)
    f0g, fg, fb = rep.sample(grid, bnodes)
    w = grid.weights[gs]
    vol = np.dot(w, f0g[gs] * v.grid_values[gs])
    div = np.dot(w, (fg[gs] * v.grid_gradients[gs]).sum(-1))
    bdry = np.dot(bnodes.weights[bs], (bnodes.normal[bs] * fb[bs]).sum(-1) * v.boundary_values[bs])
    return float(vol + bdry - div)


def pair_boundary_dist(g: BoundaryDist, v, ops, bnodes: BoundaryNodes) -> float:
    """⟨μ₀ + S₊ᵗ[μ₁], v⟩ = ∮ μ₀ v dσ + ∮ μ₁ S₊[v] dσ."""
    if ops.bnodes is not bnodes and ops.bnodes.total != bnodes.total:
        raise PairingError("operators and nodes disagree")
    v = np.asarray(v(bnodes.points) if callable(v) else v, dtype=float)
    if v.shape[0] != bnodes.total:
        raise PairingError("test field does not match the node count")
    mu0, mu1 = g.values(bnodes)
    return float(np.dot(bnodes.weights, mu0 * v) + np.dot(bnodes.weights, mu1 * steklov(v, ops)))


def holder_seminorm_estimate(f, alpha: float, sample_points, chunk: int = 512) -> float:
    """max over sampled pairs of |f(x) - f(y)| / |x - y|^α."""
    pts = np.atleast_2d(np.asarray(sample_points, dtype=float))
    if len(pts) < 2:
        raise ValueError("need at least two sample points")
    if not 0 < alpha <= 1:
        raise ValueError("alpha must lie in (0, 1]")
    vals = np.asarray(f(pts) if callable(f) else f, dtype=float)
    best = 0.0
    for s in range(0, len(pts), chunk):
        d = np.sqrt(((pts[s:s + chunk, None, :] - pts[None, :, :]) ** 2).sum(-1))
        dv = np.abs(vals[s:s + chunk, None] - vals[None, :])
        ok = d > 0
        q = np.where(ok, dv / np.where(ok, d, 1.0) ** alpha, 0.0)
        best = max(best, float(q.max()))
    return best


# --- test battery -------------------------------------------------------------

def _poly(c: Callable, g: Callable, name: str) -> ScalarField:
    return ScalarField(lambda p: c(p[:, 0], p[:, 1]), "interior",
                       lambda p: np.stack(g(p[:, 0], p[:, 1]), axis=-1), text=name)


HARMONIC_POLYS = (
    ("1", lambda x, y: np.ones_like(x), lambda x, y: (0 * x, 0 * x)),
    ("x", lambda x, y: x, lambda x, y: (np.ones_like(x), 0 * x)),
    ("y", lambda x, y: y, lambda x, y: (0 * x, np.ones_like(x))),
    ("x^2 - y^2", lambda x, y: x**2 - y**2, lambda x, y: (2 * x, -2 * y)),
    ("x*y", lambda x, y: x * y, lambda x, y: (y, x)),
    ("x^3 - 3*x*y^2", lambda x, y: x**3 - 3 * x * y**2, lambda x, y: (3 * x**2 - 3 * y**2, -6 * x * y)),
    ("3*x^2*y - y^3", lambda x, y: 3 * x**2 * y - y**3, lambda x, y: (6 * x * y, 3 * x**2 - 3 * y**2)),
    ("x^4 - 6*x^2*y^2 + y^4", lambda x, y: x**4 - 6 * x**2 * y**2 + y**4,
     lambda x, y: (4 * x**3 - 12 * x * y**2, -12 * x**2 * y + 4 * y**3)),
    ("x^3*y - x*y^3", lambda x, y: x**3 * y - x * y**3, lambda x, y: (3 * x**2 * y - y**3, x**3 - 3 * x * y**2)),
)


def bump_field(centers, widths, amps, name: str = "bump") -> ScalarField:
    """Σ a_i exp(-|x - p_i|² / s_i²) with its exact gradient."""
    centers = np.asarray(centers, float)
    widths = np.asarray(widths, float)
    amps = np.asarray(amps, float)

    def fn(p):
        d = p[:, None, :] - centers[None]
        return (amps * np.exp(-(d**2).sum(-1) / widths**2)).sum(-1)

    def grad(p):
        d = p[:, None, :] - centers[None]
        e = amps * np.exp(-(d**2).sum(-1) / widths**2)
        return (-2 * d / (widths**2)[None, :, None] * e[..., None]).sum(1)

    return ScalarField(fn, "interior", grad, text=name)


def test_battery(seed: int = 0, center=(0.0, 0.0), scale: float = 1.0, bumps: int = 8):
    """Harmonic polynomials to degree 4 plus `bumps` random Gaussian combinations."""
    cx, cy = center
    out = []
    for name, f, g in HARMONIC_POLYS:
        out.append(_poly(lambda x, y, f=f: f((x - cx) / scale, (y - cy) / scale),
                         lambda x, y, g=g: tuple(c / scale for c in g((x - cx) / scale, (y - cy) / scale)),
                         name))
    rng = np.random.default_rng(seed)
    for i in range(bumps):
        k = 3
        centers = np.asarray(center) + scale * rng.uniform(-1, 1, (k, 2))
        widths = scale * rng.uniform(0.3, 0.8, k)
        amps = rng.uniform(-1, 1, k)
        out.append(bump_field(centers, widths, amps, f"bump{i}"))
    return out


test_battery.__test__ = False  # not a pytest test


def random_test_fields(n: int = 20, seed: int = 1, center=(0.0, 0.0), scale: float = 1.0):
    """n random combinations of battery members (fixed seed)."""
    base = test_battery(seed, center, scale)
    rng = np.random.default_rng(seed + 1000)
    out = []
    for i in range(n):
        c = rng.standard_normal(len(base))

        def fn(p, c=c):
            return sum(ci * b(p) for ci, b in zip(c, base))

        def grad(p, c=c):
            return sum(ci * b.gradient(p) for ci, b in zip(c, base))

        out.append(ScalarField(fn, "interior", grad, text=f"random{i}"))
    return out


@dataclass
class HolderSolution:
    """Boundary trace, interior evaluator and a representative of Δu."""

    trace: np.ndarray
    interior_eval: Callable
    lap_rep: DensityRep
    bnodes: Optional[BoundaryNodes] = None
    locate: Optional[Callable] = None

    def __call__(self, x):
        return self.interior_eval(np.atleast_2d(x))

    def shifted(self, consts) -> "HolderSolution":
        """Add a constant per component (a locally constant function)."""
        consts = np.asarray(consts, float)
        tr = self.trace.copy()
        for j, c in enumerate(consts):
            tr[self.bnodes.slice(j)] += c
        base, locate = self.interior_eval, self.locate

        def ev(x):
            x = np.atleast_2d(x)
            loc = locate(x) if locate else np.zeros(len(x), int)
            return base(x) + consts[loc]

        return HolderSolution(tr, ev, self.lap_rep, self.bnodes, locate)


def zero_rep_from_phi(phi, grad_phi, lap_phi) -> DensityRep:
    """(-Δφ, ∂₁φ, ∂₂φ), a representative of the zero distribution."""
    f0 = ScalarField(lambda p: -lap_phi(p), "interior")
    f1 = ScalarField(lambda p: grad_phi(p)[:, 0], "interior")
    f2 = ScalarField(lambda p: grad_phi(p)[:, 1], "interior")
    return DensityRep(f0, (f1, f2))


def compact_bump_phi(center=(0.0, 0.0), radius: float = 1.0):
    """φ = (1 - |x-c|²/R²)³ inside the ball, 0 outside (C², compact support).

    Returns (φ, ∇φ, Δφ).
    """
    c = np.asarray(center, float)
    R2 = radius**2

    def phi(p):
        s = 1 - ((p - c) ** 2).sum(-1) / R2
        return np.where(s > 0, s**3, 0.0)

    def grad(p):
        d = p - c
        s = 1 - (d**2).sum(-1) / R2
        return np.where((s > 0)[:, None], (-6 * s**2 / R2)[:, None] * d, 0.0)

    def lap(p):
        d2 = ((p - c) ** 2).sum(-1)
        s = 1 - d2 / R2
        # Δ s³ = 3s²Δs + 6s|∇s|², Δs = -4/R², |∇s|² = 4 d²/R⁴
        return np.where(s > 0, -12 * s**2 / R2 + 24 * s * d2 / R2**2, 0.0)

    return phi, grad, lap
