"""Shared quadrature building blocks.

Composite Gauss panels on linear+logarithmic meshes, Chebyshev rules for
inverse-square-root endpoint weights, and Gauss-Jacobi rules for (1-t^2)^j
weights. Rules are cached by size.
"""
from __future__ import annotations

import functools

import numpy as np
from scipy.special import roots_jacobi


@functools.lru_cache(maxsize=64)
def gauss_rule(n: int):
    x, w = np.polynomial.legendre.leggauss(n)
    return x, w


def panel_nodes(edges: np.ndarray, npts: int = 10):
    """Gauss nodes/weights for a composite rule over consecutive panel edges."""
    gx, gw = gauss_rule(npts)
    mid = 0.5 * (edges[:-1] + edges[1:])[:, None]
    half = 0.5 * (edges[1:] - edges[:-1])[:, None]
    return (mid + half * gx[None, :]).ravel(), (half * gw[None, :]).ravel()


def lin_log_edges(lo: float, hi: float, lin_to: float, n_lin: int = 48,
                  pts_per_decade: int = 30) -> np.ndarray:
    """Panel edges: linear from lo to lin_to, logarithmic from there to hi."""
    if hi <= lo:
        return np.array([lo, hi])
    lin_hi = min(lin_to, hi)
    e1 = np.linspace(lo, lin_hi, max(n_lin, 2))
    if hi > lin_hi * (1 + 1e-12):
        ndec = int(np.ceil(pts_per_decade * np.log10(hi / lin_hi))) + 2
        e2 = np.geomspace(lin_hi, hi, ndec)
        return np.unique(np.concatenate([e1, e2[1:]]))
    return e1


def integrate_lin_log(f, lo, hi, lin_to, n_lin=48, pts_per_decade=30, npts=10):
    """Integrate a vectorized callable on [lo, hi] with a lin+log composite rule."""
    if hi <= lo:
        return 0.0
    nodes, wts = panel_nodes(lin_log_edges(lo, hi, lin_to, n_lin, pts_per_decade), npts)
    return np.sum(wts * f(nodes))


@functools.lru_cache(maxsize=16)
def chebyshev_nodes(n: int):
    """Nodes of the n-point Gauss-Chebyshev rule on (-1, 1) (weight (1-x^2)^{-1/2});
    all weights equal pi/n."""
    k = np.arange(1, n + 1)
    return np.cos((2 * k - 1) * np.pi / (2 * n))


def integrate_inverse_sqrt_endpoints(f, lo, hi, n: int = 32):
    """Evaluate int_lo^hi f(x) [(hi-x)(x-lo)]^{-1/2} dx by the Chebyshev rule.

    Exact for f polynomial of degree < 2n after the cosine substitution.
    """
    if hi <= lo:
        return 0.0
    x = 0.5 * (hi + lo) + 0.5 * (hi - lo) * chebyshev_nodes(n)
    return (np.pi / n) * np.sum(f(x))


@functools.lru_cache(maxsize=128)
def jacobi_rule(n: int, alpha: float):
    """Gauss-Jacobi rule on (-1,1) for the symmetric weight (1-t^2)^alpha."""
    x, w = roots_jacobi(n, alpha, alpha)
    return x, w


def local_cubic_weights(xs: np.ndarray, xq: np.ndarray):
    """4-point Lagrange interpolation stencils on a sorted grid.

    Returns index array (nq, 4) into xs and the matching weight array.
    """
    n = len(xs)
    j = np.clip(np.searchsorted(xs, xq) - 1, 1, n - 3)
    idx = np.stack([j - 1, j, j + 1, j + 2], axis=-1)
    xn = xs[idx]
    w = np.ones(idx.shape)
    xqc = np.asarray(xq)[..., None]
    for a in range(4):
        for c in range(4):
            if a != c:
                w[..., a] *= ((xqc[..., 0] - xn[..., c])
                              / (xn[..., a] - xn[..., c]))
    return idx, w
