"""Smooth parametrized Jordan curves, multi-component domains and boundary nodes."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class GeometryError(ValueError):
    pass


class OverlapError(GeometryError):
    pass


class DegenerateCurveError(GeometryError):
    pass


class NodeCountError(GeometryError):
    pass


_SAMPLES = 1024
_DISJOINT_TOL = 1e-8
_SPEED_TOL = 1e-10


class CurveSpec:
    """A 2π-periodic counterclockwise parametrization t -> γ(t).

    Subclasses implement `derivs(t)` returning (γ, γ', γ'') as (m, 2) arrays.
    """

    kind = "abstract"

    def derivs(self, t):
        raise NotImplementedError

    def __call__(self, t):
        return self.derivs(np.asarray(t, dtype=float))[0]

    def to_dict(self) -> dict:
        raise NotImplementedError

    @staticmethod
    def from_dict(d: dict) -> "CurveSpec":
        kind = d.get("kind")
        if kind == "circle":
            return Circle(tuple(d["center"]), float(d["radius"]))
        if kind == "ellipse":
            return Ellipse(tuple(d["center"]), float(d["a"]), float(d["b"]))
        if kind == "trig":
            return TrigCurve(
                tuple(d["x"].get("cos", [0.0])), tuple(d["x"].get("sin", [])),
                tuple(d["y"].get("cos", [0.0])), tuple(d["y"].get("sin", [])),
            )
        raise GeometryError(f"unknown curve kind {kind!r}")


@dataclass(frozen=True)
class Circle(CurveSpec):
    center: tuple = (0.0, 0.0)
    radius: float = 1.0
    kind = "circle"

    def __post_init__(self):
        if not self.radius > 0:
            raise DegenerateCurveError("circle radius must be positive")

    def derivs(self, t):
        c, s = np.cos(t), np.sin(t)
        R = self.radius
        p = np.stack([self.center[0] + R * c, self.center[1] + R * s], axis=-1)
        d1 = np.stack([-R * s, R * c], axis=-1)
        d2 = np.stack([-R * c, -R * s], axis=-1)
        return p, d1, d2

    def to_dict(self):
        return {"kind": "circle", "center": list(map(float, self.center)), "radius": self.radius}


@dataclass(frozen=True)
class Ellipse(CurveSpec):
    center: tuple = (0.0, 0.0)
    a: float = 1.0
    b: float = 1.0
    kind = "ellipse"

    def __post_init__(self):
        if not (self.a > 0 and self.b > 0):
            raise DegenerateCurveError("ellipse semi-axes must be positive")

    def derivs(self, t):
        c, s = np.cos(t), np.sin(t)
        p = np.stack([self.center[0] + self.a * c, self.center[1] + self.b * s], axis=-1)
        d1 = np.stack([-self.a * s, self.b * c], axis=-1)
        d2 = np.stack([-self.a * c, -self.b * s], axis=-1)
        return p, d1, d2

    def to_dict(self):
        return {"kind": "ellipse", "center": list(map(float, self.center)), "a": self.a, "b": self.b}


@dataclass(frozen=True)
class TrigCurve(CurveSpec):
    """x(t) = Σ xc[k] cos(kt) + Σ xs[k-1] sin(kt), likewise y."""

    xc: tuple = (0.0, 1.0)
    xs: tuple = ()
    yc: tuple = (0.0,)
    ys: tuple = (1.0,)
    kind = "trig"

    @staticmethod
    def _series(t, cos_c, sin_c):
        t = np.asarray(t, dtype=float)
        v = np.zeros_like(t)
        d1 = np.zeros_like(t)
        d2 = np.zeros_like(t)
        for k, a in enumerate(cos_c):
            v += a * np.cos(k * t)
            d1 += -k * a * np.sin(k * t)
            d2 += -k * k * a * np.cos(k * t)
        for k, b in enumerate(sin_c, start=1):
            v += b * np.sin(k * t)
            d1 += k * b * np.cos(k * t)
            d2 += -k * k * b * np.sin(k * t)
        return v, d1, d2

    def derivs(self, t):
        x = self._series(t, self.xc, self.xs)
        y = self._series(t, self.yc, self.ys)
        return tuple(np.stack([x[i], y[i]], axis=-1) for i in range(3))

    def to_dict(self):
        return {
            "kind": "trig",
            "x": {"cos": list(self.xc), "sin": list(self.xs)},
            "y": {"cos": list(self.yc), "sin": list(self.ys)},
        }


def _signed_area(p):
    x, y = p[:, 0], p[:, 1]
    return 0.5 * np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y)


def winding_number(poly, pts):
    """Winding number of closed polygon `poly` (m, 2) around each of `pts` (k, 2)."""
    pts = np.atleast_2d(pts)
    d = poly[None, :, :] - pts[:, None, :]
    a = np.arctan2(d[..., 1], d[..., 0])
    da = np.diff(np.concatenate([a, a[:, :1]], axis=1), axis=1)
    da = (da + np.pi) % (2 * np.pi) - np.pi
    return np.rint(da.sum(axis=1) / (2 * np.pi)).astype(int)


def _segments_cross(p):
    """True if the closed polyline p has two non-adjacent crossing segments."""
    a = p
    b = np.roll(p, -1, axis=0)
    m = len(p)
    lo = np.minimum(a, b)
    hi = np.maximum(a, b)
    for i in range(m):
        cand = np.nonzero(
            (lo[:, 0] <= hi[i, 0]) & (hi[:, 0] >= lo[i, 0])
            & (lo[:, 1] <= hi[i, 1]) & (hi[:, 1] >= lo[i, 1])
        )[0]
        cand = cand[(cand > i + 1) & ~((i == 0) & (cand == m - 1))]
        if cand.size == 0:
            continue
        p1, p2 = a[i], b[i]
        q1, q2 = a[cand], b[cand]

        def orient(u, v, w):
            return (v[..., 0] - u[..., 0]) * (w[..., 1] - u[..., 1]) - (v[..., 1] - u[..., 1]) * (w[..., 0] - u[..., 0])

        o1 = orient(p1, p2, q1)
        o2 = orient(p1, p2, q2)
        o3 = orient(q1, q2, p1)
        o4 = orient(q1, q2, p2)
        if np.any((o1 * o2 < 0) & (o3 * o4 < 0)):
            return True
    return False


def check_curve(spec: CurveSpec, samples: int = _SAMPLES):
    """Numerical validity checks: nonvanishing speed, injectivity, counterclockwise."""
    t = 2 * np.pi * np.arange(samples) / samples
    p, d1, _ = spec.derivs(t)
    speed = np.hypot(d1[:, 0], d1[:, 1])
    if speed.min() < _SPEED_TOL:
        raise DegenerateCurveError(f"|γ'| = {speed.min():.3e} below {_SPEED_TOL:g}")
    if _signed_area(p) <= 0:
        raise GeometryError("curve must be oriented counterclockwise")
    if _segments_cross(p):
        raise GeometryError("curve is not injective (self-intersection)")
    return p


@dataclass(frozen=True)
class Domain:
    components: tuple
    min_distance: float
    samples: tuple = field(repr=False, compare=False, default=())

    @property
    def kappa(self) -> int:
        return len(self.components)

    def _moments(self, j):
        m = len(self.samples[j])
        t = 2 * np.pi * np.arange(m) / m
        p, d1, _ = self.components[j].derivs(t)
        w = 2 * np.pi / m
        A = 0.5 * w * np.sum(p[:, 0] * d1[:, 1] - p[:, 1] * d1[:, 0])
        cx = 0.5 * w * np.sum(p[:, 0] ** 2 * d1[:, 1]) / A
        cy = -0.5 * w * np.sum(p[:, 1] ** 2 * d1[:, 0]) / A
        return A, np.array([cx, cy])

    def area(self, j: int) -> float:
        return float(self._moments(j)[0])

    def centroid(self, j: int) -> np.ndarray:
        return self._moments(j)[1]

    def diameter(self, j: int) -> float:
        p = self.samples[j]
        d = p[:, None, :] - p[None, ::4, :]
        return float(np.sqrt((d**2).sum(-1)).max())

    def nearest(self, pts, j: int, iters: int = 30):
        """Nearest boundary point on component j.

        Returns (t*, x*, signed distance) with positive distance outside.
        """
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        spec = self.components[j]
        p = self.samples[j]
        m = len(p)
        d2 = ((pts[:, None, :] - p[None, :, :]) ** 2).sum(-1)
        t = 2 * np.pi * np.argmin(d2, axis=1) / m
        for _ in range(iters):
            g, g1, g2 = spec.derivs(t)
            r = g - pts
            f1 = (r * g1).sum(-1)
            f2 = (g1 * g1).sum(-1) + (r * g2).sum(-1)
            f2 = np.where(f2 > 1e-14, f2, (g1 * g1).sum(-1))
            step = f1 / f2
            step = np.clip(step, -np.pi / m * 4, np.pi / m * 4)
            t = t - step
            if np.max(np.abs(step)) < 1e-15:
                break
        t = np.mod(t, 2 * np.pi)
        g, g1, _ = spec.derivs(t)
        nu = np.stack([g1[:, 1], -g1[:, 0]], axis=-1) / np.hypot(g1[:, 0], g1[:, 1])[:, None]
        dist = np.hypot(*(pts - g).T)
        sign = np.sign(((pts - g) * nu).sum(-1))
        return t, g, sign * dist

    def locate(self, pts, tol: float = 0.0):
        """Component index containing each point (closure when tol>=0), -1 outside."""
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        out = np.full(len(pts), -1, dtype=int)
        for j in range(self.kappa):
            _, _, sd = self.nearest(pts, j)
            out[(sd <= tol) & (out < 0)] = j
        return out


def build_domain(specs) -> Domain:
    specs = [s if isinstance(s, CurveSpec) else CurveSpec.from_dict(s) for s in specs]
    if not specs:
        raise GeometryError("domain needs at least one component")
    samples = [check_curve(s) for s in specs]
    dmin = np.inf
    for i in range(len(specs)):
        for j in range(i + 1, len(specs)):
            a, b = samples[i], samples[j]
            gap = max(a[:, 0].min() - b[:, 0].max(), b[:, 0].min() - a[:, 0].max(),
                      a[:, 1].min() - b[:, 1].max(), b[:, 1].min() - a[:, 1].max())
            d = np.sqrt(((a[:, None, :] - b[None, :, :]) ** 2).sum(-1)).min()
            # disjoint bounding boxes rule out nesting
            nested = gap <= 0 and (winding_number(a, b[:1])[0] != 0 or winding_number(b, a[:1])[0] != 0)
            if d <= _DISJOINT_TOL or nested:
                raise OverlapError(f"components {i} and {j} overlap")
            dmin = min(dmin, d)
    return Domain(tuple(specs), float(dmin), tuple(samples))


@dataclass(frozen=True)
class ComponentNodes:
    t: np.ndarray
    points: np.ndarray
    d1: np.ndarray
    d2: np.ndarray
    speed: np.ndarray
    normal: np.ndarray
    weights: np.ndarray
    curvature: np.ndarray

    @property
    def n(self) -> int:
        return len(self.t)

    @property
    def spacing(self) -> float:
        return float(self.weights.max())


@dataclass(frozen=True)
class BoundaryNodes:
    components: tuple

    @property
    def offsets(self):
        return np.cumsum([0] + [c.n for c in self.components])

    def slice(self, j: int) -> slice:
        o = self.offsets
        return slice(o[j], o[j + 1])

    def _cat(self, name):
        return np.concatenate([getattr(c, name) for c in self.components])

    @property
    def points(self):
        return self._cat("points")

    @property
    def normal(self):
        return self._cat("normal")

    @property
    def weights(self):
        return self._cat("weights")

    @property
    def total(self) -> int:
        return int(self.offsets[-1])

    def indicator(self, j: int) -> np.ndarray:
        chi = np.zeros(self.total)
        chi[self.slice(j)] = 1.0
        return chi


def component_nodes(spec: CurveSpec, N: int) -> ComponentNodes:
    t = 2 * np.pi * np.arange(N) / N
    p, d1, d2 = spec.derivs(t)
    speed = np.hypot(d1[:, 0], d1[:, 1])
    normal = np.stack([d1[:, 1], -d1[:, 0]], axis=-1) / speed[:, None]
    curv = (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0]) / speed**3
    return ComponentNodes(t, p, d1, d2, speed, normal, 2 * np.pi / N * speed, curv)


def nodes(domain: Domain, N: int, check: bool = True) -> BoundaryNodes:
    """N equispaced parameter nodes per component (N even, N >= 8)."""
    if check and (N % 2 or N < 8):
        raise NodeCountError(f"N must be even and >= 8, got {N}")
    return BoundaryNodes(tuple(component_nodes(s, N) for s in domain.components))
