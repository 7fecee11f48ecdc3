"""Independent reference values.

Each oracle uses a route structurally different from the solver path:
Fourier calculus on the disk instead of boundary integral equations, radial
closed forms instead of tensor quadrature, adaptive scipy quadrature instead
of fixed rules, and a separate high-resolution pairing implementation.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .kernels import eval_S, surface_measure


# --- disk Fourier calculus ----------------------------------------------------

@dataclass(frozen=True)
class DiskOracle:
    """Harmonic functions on the disk |x - c| < R from Fourier coefficients.

    `coeffs` maps an integer k to the complex coefficient of e^{ikθ}; the
    boundary datum is Re Σ c_k e^{ikθ}.
    """

    R: float = 1.0
    coeffs: tuple = ()
    center: tuple = (0.0, 0.0)

    @classmethod
    def of(cls, coeffs: dict, R: float = 1.0, center=(0.0, 0.0)):
        return cls(R, tuple(sorted(coeffs.items())), tuple(center))

    def boundary(self, theta):
        theta = np.asarray(theta, float)
        return sum((c * np.exp(1j * k * theta)).real for k, c in self.coeffs) + 0 * theta

    def extension(self, x):
        x = np.atleast_2d(x) - self.center
        r = np.hypot(x[:, 0], x[:, 1]) / self.R
        th = np.arctan2(x[:, 1], x[:, 0])
        return sum((c * r ** abs(k) * np.exp(1j * k * th)).real for k, c in self.coeffs) + 0 * r

    def steklov(self) -> "DiskOracle":
        return DiskOracle(self.R, tuple((k, c * abs(k) / self.R) for k, c in self.coeffs), self.center)

    def energy(self, radius=None) -> float:
        """Dirichlet integral over |x - c| < radius (default R) for a real datum."""
        rho = (radius or self.R) / self.R
        # real datum Re Σ c_k e^{ikθ}: for k ≠ 0 the amplitude is |c_k|
        return float(sum(np.pi * abs(k) * abs(c) ** 2 * rho ** (2 * abs(k)) for k, c in self.coeffs if k))


def disk_steklov(coeffs: dict, R: float = 1.0) -> dict:
    """Eigenvalue map a_k -> (|k|/R) a_k of the disk Dirichlet-to-Neumann operator."""
    return {k: c * abs(k) / R for k, c in coeffs.items()}


def fourier_log_integral(k: int, s) -> complex:
    """∫₀^{2π} ln(4 sin²((s - t)/2)) e^{ikt} dt."""
    if k == 0:
        return 0.0 * np.asarray(s)
    return -2 * np.pi * np.exp(1j * k * np.asarray(s)) / abs(k)


# --- radial potentials ------------------------------------------------------------

def radial_newtonian(n: int, r, R: float = 1.0, profile: str = "constant"):
    """∫_{|y|<R} S_n(x - y) dy at |x| = r for the constant density 1."""
    if profile != "constant":
        raise ValueError(f"unsupported density profile {profile!r}")
    r = np.asarray(r, float)
    if np.any(r < 0):
        raise ValueError("r must be nonnegative")
    if n == 2:
        with np.errstate(divide="ignore"):
            out = np.where(r <= R, (r**2 - R**2) / 4 + R**2 / 2 * np.log(R), R**2 / 2 * np.log(np.maximum(r, R)))
        return out
    if n == 3:
        return np.where(r <= R, r**2 / 6 - R**2 / 2, -(R**3) / (3 * np.maximum(r, R)))
    raise ValueError("radial oracle implemented for n = 2 and 3")


def radial_newtonian_quad(n: int, r: float, R: float = 1.0) -> float:
    """Same quantity by adaptive quadrature of the spherical means of S_n."""
    sn = surface_measure(n)

    def mean_S(rho):
        # spherical mean of S_n(x - y) over |y| = ρ equals S_n at max(r, ρ)
        m = max(r, rho)
        return float(eval_S(n, np.r_[m, np.zeros(n - 1)]))

    pts = [r] if 0 < r < R else None
    val, _ = integrate.quad(lambda rho: mean_S(rho) * sn * rho ** (n - 1), 0, R, points=pts, limit=200)
    return val


def ellipse_perimeter(a: float, b: float) -> float:
    val, _ = integrate.quad(lambda t: np.hypot(a * np.sin(t), b * np.cos(t)), 0, 2 * np.pi,
                            epsabs=1e-12, epsrel=1e-12, limit=400)
    return val


def hadamard_sum(alpha: float, K: int, theta: float) -> float:
    return float(sum(2.0 ** (-k * alpha) * np.cos(2.0**k * theta) for k in range(1, K + 1)))


def hadamard_energy(alpha: float, K: int, eps: float = 0.0) -> float:
    """π Σ_{k≤K} 2^k 2^(-2kα) (1-ε)^(2·2^k): energy of the harmonic extension
    of the lacunary datum over the disk of radius 1-ε (ε = 0: truncated sum)."""
    k = np.arange(1, K + 1)
    return float(np.pi * np.sum(2.0**k * 2.0 ** (-2 * k * alpha) * (1 - eps) ** (2 * 2.0**k)))


# --- closed-form Neumann problems on the unit disk -------------------------------

NEUMANN_CASES = {
    # name: (f, g=(mu0, mu1), exact solution with zero mean)
    "quadratic": ((1.0, 0.0, 0.0), (0.5, 0.0), lambda x: (x**2).sum(-1) / 4 - 1 / 8),
    "dipole": ((0.0, 0.0, 0.0), ("cos(theta)", 0.0), lambda x: x[:, 0]),
    "dipole-transpose": ((0.0, 0.0, 0.0), (0.0, "cos(theta)"), lambda x: x[:, 0]),
}


# --- high-resolution pairing -------------------------------------------------------

def brute_pairing(rep, v, spec, M_r: int = 192, M_t: int = 384, N: int = 1024, anchor=None) -> float:
    """⟨E♯f, v⟩ on one star-shaped component by an independent dense rule.

    `v` needs analytic values and gradients (a ScalarField with `gradient`).
    """
    t = 2 * np.pi * np.arange(M_t) / M_t
    g, g1, _ = spec.derivs(t)
    c = np.mean(spec.derivs(2 * np.pi * np.arange(4096) / 4096)[0], axis=0) if anchor is None else np.asarray(anchor)
    x, w = np.polynomial.legendre.leggauss(M_r)
    rho, wr = (x + 1) / 2, w / 2
    rel = g - c
    cross = rel[:, 0] * g1[:, 1] - rel[:, 1] * g1[:, 0]
    pts = (c + rho[:, None, None] * rel[None]).reshape(-1, 2)
    wts = ((wr * rho)[:, None] * cross[None] * 2 * np.pi / M_t).ravel()
    f0 = rep.f0(pts)
    fv = np.stack([f(pts) for f in rep.fvec], -1)
    vol = np.sum(wts * (f0 * v(pts) - (fv * v.gradient(pts)).sum(-1)))
    tb = 2 * np.pi * np.arange(N) / N
    b, b1, _ = spec.derivs(tb)
    sp = np.hypot(b1[:, 0], b1[:, 1])
    nu = np.stack([b1[:, 1], -b1[:, 0]], -1) / sp[:, None]
    fb = np.stack([f(b) for f in rep.fvec], -1)
    bdry = np.sum(sp * 2 * np.pi / N * (nu * fb).sum(-1) * v(b))
    return float(vol + bdry)


def fd_laplacian(fn, pts, h: float = 1e-3):
    """Five-point Laplacian of a vectorized function at pts."""
    pts = np.atleast_2d(pts)
    ex, ey = np.array([h, 0.0]), np.array([0.0, h])
    stack = np.concatenate([pts, pts + ex, pts - ex, pts + ey, pts - ey])
    v = fn(stack).reshape(5, len(pts))
    return (v[1:].sum(0) - 4 * v[0]) / h**2
