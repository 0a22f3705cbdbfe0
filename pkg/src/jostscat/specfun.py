"""Classical special functions underlying the momentum-space scheme.

Everything here is a pure function.  The three families that matter are

* ``chi``          -- exponentially decaying free radial solutions,
                      chi_l(x) = sqrt(2x/pi) K_{l+1/2}(x),
* ``riccati_bessel`` -- the oscillatory counterparts sqrt(pi x/2) J_{j+1/2}(x),
* Legendre functions of both kinds on the interval (1, inf), which act as
  angular kernels and projection weights.  ``kernel_weight_p`` bundles the
  first-kind function with the triangle-function denominator in exactly the
  combination the Volterra kernels integrate over, and ``legendre_s`` is the
  second-kind analogue used by partial-amplitude quadratures.

Order/degree conventions are pinned by the quadrature identities exercised in
the test suite (series expansion of 1/(Z - t.v), the layer-product identity
and the kernel-collapse identity); first-kind functions of nonpositive order
follow the standard associated-Legendre normalization.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import gamma as gamma_fn
from scipy.special import gammaln, kv

from .errors import DomainError
from .quadrature import gauss_rule, jacobi_rule


@dataclass(frozen=True)
class EvalConfig:
    """Accuracy knobs for series/quadrature evaluations."""
    rel_tol: float = 1e-12
    max_terms: int = 400
    quad_panels: int = 1

    def __post_init__(self):
        if self.rel_tol <= 0:
            raise DomainError("rel_tol must be positive")
        if self.max_terms < 8:
            raise DomainError("max_terms must be at least 8")
        if self.quad_panels < 1:
            raise DomainError("quad_panels must be at least 1")


DEFAULT_CONFIG = EvalConfig()


# ----------------------------------------------------------------------
# decaying and oscillatory free radial solutions
# ----------------------------------------------------------------------

def chi(l, x):
    """Decaying free radial solution chi_l(x) = sqrt(2x/pi) K_{l+1/2}(x).

    Integer ``l >= -1`` uses the closed half-integer recursion and accepts
    complex ``x`` (with Re x handled by the exponential); other real orders
    fall back to the modified Bessel function of the second kind and require
    real positive ``x``.
    """
    xa = np.asarray(x)
    if np.iscomplexobj(xa):
        if np.any(xa == 0):
            raise DomainError("chi requires x != 0")
    elif np.any(xa <= 0):
        raise DomainError("chi requires x > 0")
    if float(np.real(l)).is_integer() and np.real(l) >= -1:
        return _chi_int(int(np.real(l)), xa)
    if np.iscomplexobj(xa):
        raise DomainError("non-integer degree chi supports real x only")
    val = np.sqrt(2.0 * xa / np.pi) * kv(l + 0.5, xa)
    if not np.all(np.isfinite(val)):
        raise DomainError("chi overflow: x too small for the requested degree")
    return val


def _chi_int(l: int, x):
    x = np.asarray(x, dtype=complex)
    prev = np.exp(-x)          # chi_{-1}
    cur = np.exp(-x)           # chi_0
    if l == -1:
        out = prev
    else:
        with np.errstate(over="ignore", invalid="ignore"):
            for n in range(l):
                prev, cur = cur, prev + (2 * n + 1) / x * cur
        out = cur
    if not np.all(np.isfinite(out)):
        raise DomainError("chi overflow: x too small for the requested degree")
    return out


def chi_deriv(l: int, x):
    """d/dx of chi_l at integer degree: -chi_{l-1}(x) - (l/x) chi_l(x)."""
    x = np.asarray(x, dtype=complex)
    if l == 0:
        return -np.exp(-x)
    return -_chi_int(l - 1, x) - (l / x) * _chi_int(l, x)


def riccati_bessel(j, x):
    """Oscillatory free solution sqrt(pi x / 2) J_{j+1/2}(x).

    Integer degree uses the upward sin/cos recursion (complex-capable);
    other degrees use scipy's Bessel J at real x.
    """
    xa = np.asarray(x)
    if np.any(np.real(xa) <= 0):
        raise DomainError("riccati_bessel requires Re x > 0")
    if float(j).is_integer() and j >= 0:
        xc = np.asarray(xa, dtype=complex)
        prev = np.cos(xc)        # degree -1
        cur = np.sin(xc)         # degree 0
        for n in range(int(j)):
            prev, cur = cur, (2 * n + 1) / xc * cur - prev
        return cur
    from scipy.special import jv
    return np.sqrt(np.pi * xa / 2.0) * jv(j + 0.5, xa)


def triangle(A, B, C):
    """Kinematic triangle function (A + B - C)^2 - 4AB."""
    return (A + B - C) ** 2 - 4.0 * A * B


# ----------------------------------------------------------------------
# Legendre functions on (1, inf)
# ----------------------------------------------------------------------

def _legendre_p_int(j: int, T):
    T = np.asarray(T, dtype=complex) if np.iscomplexobj(T) else np.asarray(T, dtype=float)
    if j == 0:
        return np.ones_like(T)
    prev, cur = np.ones_like(T), T
    for n in range(1, j):
        prev, cur = cur, ((2 * n + 1) * T * cur - n * prev) / (n + 1)
    return cur


def _legendre_p_laplace(j, T, npts: int = 64):
    """First-kind Legendre function of general (complex) degree at T > 1 via
    the Laplace integral (1/pi) int_0^pi (T + sqrt(T^2-1) cos phi)^j dphi."""
    T = np.asarray(T, dtype=float)
    gx, gw = gauss_rule(npts)
    phi = 0.5 * np.pi * (gx + 1.0)
    wts = 0.5 * np.pi * gw
    base = T[..., None] + np.sqrt(T[..., None] ** 2 - 1.0) * np.cos(phi)
    return np.tensordot(np.power(base.astype(complex), j), wts, axes=([-1], [0])) / np.pi


def kernel_weight_p(j, a, T, cfg: EvalConfig = DEFAULT_CONFIG):
    """Combined angular kernel weight P^a_j(T) / (T^2 - 1)^{a/2}.

    This is the dimensionless part of the quantity the Volterra kernels
    integrate over momentum transfer; the caller supplies the remaining
    (2 u rho)^{-a} factor of the triangle-function denominator.

    Supported parameter lattice: order a in {1/2, 0, -1/2, -1, -3/2}
    (spatial dimensions 2..6) at T > 1, plus plain Legendre polynomials
    (a = 0, integer or complex degree) where T in (-1, 1] is also allowed.
    """
    T = np.asarray(T)
    if a == 0:
        if isinstance(j, complex) or not float(np.real(j)).is_integer():
            if np.any(np.real(T) <= 1.0) and np.iscomplexobj(T):
                raise DomainError("complex degree requires T > 1")
            return _legendre_p_laplace(j, T)
        return _legendre_p_int(int(np.real(j)), T)
    if np.any(np.real(T) < 1.0):
        raise DomainError("nonzero order requires T >= 1")
    if a > 0:
        if a != 0.5:
            raise DomainError("positive orders other than 1/2 unsupported")
        if np.any(np.isclose(np.real(T), 1.0)):
            raise DomainError("endpoint singularity at T = 1 for positive order; "
                              "use a weighted quadrature")
        # closed form: P^{1/2}_j(T) = sqrt(2/pi) (T^2-1)^{-1/4} cosh((j+1/2) arccosh T)
        xi = np.arccosh(np.real(T))
        return (np.sqrt(2.0 / np.pi) * (T ** 2 - 1.0) ** (-0.5)
                * np.cosh((j + 0.5) * xi))
    # a < 0: Laplace-type integral for the associated function, folded with
    # the (T^2-1)^{-a/2} factor; valid for order mu = -a with mu > -1/2
    mu = -a
    npts = max(48, cfg.max_terms // 4)
    gx, gw = gauss_rule(npts)
    phi = 0.5 * np.pi * (gx + 1.0)
    wts = 0.5 * np.pi * gw
    Tf = np.asarray(T, dtype=float)
    one = np.maximum(Tf[..., None] ** 2 - 1.0, 0.0)
    base = Tf[..., None] + np.sqrt(one) * np.cos(phi)
    integ = np.tensordot(np.power(base.astype(complex), j + a) * np.sin(phi) ** (2 * mu),
                         wts, axes=([-1], [0]))
    pref = (Tf ** 2 - 1.0) ** mu / (2.0 ** mu * np.sqrt(np.pi) * gamma_fn(mu + 0.5))
    out = pref * integ
    return out.real if not np.iscomplexobj(np.asarray(j)) else out


def legendre_s(j, a, Z, cfg: EvalConfig = DEFAULT_CONFIG):
    """Second-kind Legendre weight S^a_j(Z) = e^{-i pi a} Q^a_j(Z) / (Z^2-1)^{a/2}.

    Evaluated through the derivative-free rewriting of the classical
    single-integral representation,

        S^a_j(Z) = l! / (2^{j+1} Gamma(j+1)) * int_{-1}^{1} (1-t^2)^j (Z-t)^{-l-1} dt,

    where l = j + a must be a nonnegative integer (the lattice generated by
    integer orbital momenta in dimensions 2..6).  The integrand is positive,
    so the evaluation is stable at any degree, unlike the forward recurrence.
    For a = 0 and non-integer (possibly complex) degree the hypergeometric
    series of Q_j is used instead.
    """
    if np.any(np.real(Z) <= 1.0):
        raise DomainError("legendre_s requires Z > 1 (cut at Z <= 1)")
    l_float = np.real(j) + a
    if isinstance(j, complex) or not float(l_float).is_integer() or l_float < 0:
        if a != 0:
            raise DomainError("general degree supported at order 0 only")
        return legendre_q_degree(j, Z, cfg)
    l = int(round(l_float))
    # node count grows as Z approaches the endpoint of the cut
    Za = float(np.min(np.real(Z)))
    rho = Za + np.sqrt(Za * Za - 1.0)
    need = int(np.ceil(-np.log(1e-17) / np.log(rho))) + 8 if rho > 1.001 else cfg.max_terms
    npts = min(max(32, need), max(cfg.max_terms, 200))
    x, w = jacobi_rule(npts, float(j))
    Zv = np.asarray(Z, dtype=float)
    integ = np.tensordot(np.power(Zv[..., None] - x, -(l + 1)), w, axes=([-1], [0]))
    lognorm = gammaln(l + 1) - (j + 1) * np.log(2.0) - gammaln(j + 1)
    return np.exp(lognorm) * integ


def legendre_q_degree(nu, Z, cfg: EvalConfig = DEFAULT_CONFIG):
    """Q_nu(Z) for general (complex) degree nu at Z > 1, hypergeometric series."""
    Z = np.asarray(Z, dtype=float)
    x = 1.0 / Z ** 2
    # Q_nu(Z) = sqrt(pi) Gamma(nu+1) / (Gamma(nu+3/2) (2Z)^{nu+1})
    #           * 2F1(nu/2 + 1, nu/2 + 1/2; nu + 3/2; 1/Z^2)
    aa = nu / 2.0 + 1.0
    bb = nu / 2.0 + 0.5
    cc = nu + 1.5
    term = np.ones_like(Z, dtype=complex)
    total = term.copy()
    for n in range(cfg.max_terms):
        term = term * ((aa + n) * (bb + n) / ((cc + n) * (n + 1.0))) * x
        total += term
        if np.max(np.abs(term)) < cfg.rel_tol * np.max(np.abs(total)):
            break
    else:
        raise DomainError("legendre_q_degree series did not converge; Z too close to 1")
    pref = (np.sqrt(np.pi) * np.exp(_loggamma_c(nu + 1.0) - _loggamma_c(nu + 1.5))
            / (2.0 * Z) ** (nu + 1.0))
    out = pref * total
    if not (isinstance(nu, complex) and nu.imag != 0):
        out = np.real(out)
    return out


def _loggamma_c(z):
    from scipy.special import loggamma
    return loggamma(z)


# ----------------------------------------------------------------------
# Gegenbauer polynomials
# ----------------------------------------------------------------------

def gegenbauer(lam: float, l: int, z):
    """Gegenbauer polynomial C^lam_l(z) by upward recurrence.

    Index -1 maps to the zero polynomial, which keeps the lowest partial-wave
    projector well-defined.
    """
    if lam <= 0:
        raise DomainError("gegenbauer requires lam > 0")
    z = np.asarray(z, dtype=float)
    if l < 0:
        return np.zeros_like(z)
    if l == 0:
        return np.ones_like(z)
    prev = np.ones_like(z)
    cur = 2.0 * lam * z
    for n in range(2, l + 1):
        prev, cur = cur, (2.0 * (n + lam - 1.0) * z * cur
                          - (n + 2.0 * lam - 2.0) * prev) / n
    return cur
