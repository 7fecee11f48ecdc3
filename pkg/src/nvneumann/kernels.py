"""Fundamental solution of the Laplacian, its derivatives and a radial antiderivative.

Formulas hold for general n >= 2; only n = 2 and n = 3 are exercised.
Dimensions n >= 4 are experimental.
"""
from __future__ import annotations

import itertools
from math import gamma

import numpy as np


class SingularEvaluationError(ValueError):
    pass


def surface_measure(n: int) -> float:
    """(n-1)-dimensional measure s_n of the unit sphere in R^n."""
    if n < 2:
        raise ValueError("dimension must be >= 2")
    return 2 * np.pi ** (n / 2) / gamma(n / 2)


def _as_points(xi):
    xi = np.asarray(xi, dtype=float)
    return xi, np.sqrt((xi * xi).sum(-1))


def eval_S(n: int, xi):
    """S_n(ξ): ln|ξ|/s_2 for n = 2, |ξ|^(2-n)/((2-n) s_n) for n >= 3.

    `xi` has shape (..., n); the result has shape (...).
    """
    xi, r = _as_points(xi)
    if xi.shape[-1] != n:
        raise ValueError(f"points must have {n} coordinates")
    if np.any(r == 0):
        raise SingularEvaluationError("S_n is singular at the origin")
    sn = surface_measure(n)
    if n == 2:
        return np.log(r) / sn
    return r ** (2 - n) / ((2 - n) * sn)


def grad_S(n: int, xi):
    """∇S_n(ξ) = ξ / (s_n |ξ|^n)."""
    xi, r = _as_points(xi)
    if xi.shape[-1] != n:
        raise ValueError(f"points must have {n} coordinates")
    if np.any(r == 0):
        raise SingularEvaluationError("∇S_n is singular at the origin")
    return xi / (surface_measure(n) * r[..., None] ** n)


def hessian_S(n: int, xi):
    """D²S_n(ξ) = (|ξ|² I - n ξ⊗ξ) / (s_n |ξ|^(n+2)), shape (..., n, n)."""
    xi, r = _as_points(xi)
    if np.any(r == 0):
        raise SingularEvaluationError("D²S_n is singular at the origin")
    eye = np.eye(n)
    num = (r**2)[..., None, None] * eye - n * xi[..., :, None] * xi[..., None, :]
    return num / (surface_measure(n) * r[..., None, None] ** (n + 2))


def eval_N(n: int, r):
    """Radial antiderivative N_n with Δ N_n(|ξ|) = S_n(ξ).

    n = 2: r²(ln r - 1)/(8π); n = 3: -r/(8π); n = 4: -ln r/(4 s_4);
    otherwise r^(4-n)/(2(4-n)(2-n) s_n).
    """
    r = np.asarray(r, dtype=float)
    if np.any(r <= 0):
        raise ValueError("eval_N needs r > 0")
    sn = surface_measure(n)
    if n == 2:
        return r**2 * (np.log(r) - 1) / (8 * np.pi)
    if n == 4:
        return -np.log(r) / (4 * sn)
    return r ** (4 - n) / (2 * (4 - n) * (2 - n) * sn)


def eval_N_prime(n: int, r):
    """dN_n/dr."""
    r = np.asarray(r, dtype=float)
    sn = surface_measure(n)
    if n == 2:
        return r * (2 * np.log(r) - 1) / (8 * np.pi)
    if n == 4:
        return -1 / (4 * sn * r)
    return r ** (3 - n) / (2 * (2 - n) * sn)


def growth_bound_report(n: int, eta, radii=(0.5, 1.0, 2.0), directions: int = 64, seed: int = 0) -> float:
    """Sampled supremum of |ξ|^(|η|+n-2) |D^η S_n(ξ)| for |η| in {1, 2}.

    Samples are taken on spheres of the given radii along the coordinate axes
    and along `directions` pseudo-random unit vectors (fixed seed).
    """
    eta = tuple(int(e) for e in eta)
    if len(eta) != n or any(e < 0 for e in eta):
        raise ValueError("multi-index must have n nonnegative entries")
    order = sum(eta)
    if order not in (1, 2):
        raise ValueError("only |η| = 1 or 2 is supported")
    rng = np.random.default_rng(seed)
    dirs = np.vstack([np.eye(n), -np.eye(n), rng.standard_normal((directions, n))])
    dirs /= np.linalg.norm(dirs, axis=1)[:, None]
    idx = list(itertools.chain.from_iterable([i] * e for i, e in enumerate(eta)))
    sup = 0.0
    for rad in radii:
        xi = rad * dirs
        if order == 1:
            d = grad_S(n, xi)[:, idx[0]]
        else:
            d = hessian_S(n, xi)[:, idx[0], idx[1]]
        sup = max(sup, float(np.max(rad ** (order + n - 2) * np.abs(d))))
    return sup
