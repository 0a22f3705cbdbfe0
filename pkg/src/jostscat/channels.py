"""Partial-wave bookkeeping for SO(N) symmetric Hamiltonians.

A channel is the pair (total angular momentum J, sign xi) in N spatial
dimensions.  Derived quantities follow the conventions

    a_N = (3 - N)/2,          lambda_N = N/2 - 1,
    kappa = xi (J + 1/2),     L = J + xi/2,      l = L + a_N,

with l the (integer) orbital momentum and L the effective one-dimensional
angular momentum entering radial equations.  Degeneracies are the exact
dimensions of the corresponding rotation-group representations.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import DomainError
from .specfun import gegenbauer

_PAULI = [
    np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex),
    np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex),
    np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex),
]


@dataclass(frozen=True)
class Channel:
    N: int
    J: float
    xi: int
    a_N: float
    lambda_N: float
    kappa: float
    L: float
    l: int
    degeneracy: int

    @property
    def L_minus(self) -> float:
        """Effective angular momentum of the partner component, J - xi/2."""
        return self.J - self.xi / 2.0

    @property
    def l_minus(self) -> int:
        """Orbital momentum of the opposite-sign channel at the same J."""
        return int(round(self.L_minus + self.a_N))


def solid_angle(N: int) -> float:
    """Surface of the unit sphere in N dimensions."""
    return 2.0 * np.pi ** (N / 2.0) / math.gamma(N / 2.0)


def make_channel(N: int, J, xi: int) -> Channel:
    """Build a channel and populate all derived quantum numbers.

    Raises DomainError when (N, J, xi) does not label a physical partial wave
    (J below the minimal value, non-integer level, or negative orbital momentum).
    """
    if N < 2:
        raise DomainError("need N >= 2")
    if xi not in (+1, -1):
        raise DomainError("xi must be +1 or -1")
    lam = Fraction(N, 2) - 1
    a = Fraction(3 - N, 2)
    Jf = Fraction(J).limit_denominator(64)
    steps = Jf - lam
    if steps.denominator != 1 or steps < 0:
        raise DomainError(f"J={J} is not lambda_N + nonnegative integer for N={N}")
    L = Jf + Fraction(xi, 2)
    l = L + a
    if l.denominator != 1 or l < 0:
        raise DomainError(f"channel (N={N}, J={J}, xi={xi:+d}) has orbital momentum {l}")
    return Channel(
        N=N,
        J=float(Jf),
        xi=xi,
        a_N=float(a),
        lambda_N=float(lam),
        kappa=float(xi * (Jf + Fraction(1, 2))),
        L=float(L),
        l=int(l),
        degeneracy=degeneracy(N, J),
    )


def degeneracy(N: int, J) -> int:
    """Exact dimension 2^[(N-1)/2] (J+lam)! / ((J-lam)! (N-2)!) of the channel."""
    lam = Fraction(N, 2) - 1
    Jf = Fraction(J).limit_denominator(64)
    up = Jf + lam
    dn = Jf - lam
    if up.denominator != 1 or dn.denominator != 1 or dn < 0:
        raise DomainError(f"J={J} invalid for N={N}")
    val = Fraction(2 ** ((N - 1) // 2)) * Fraction(
        math.factorial(int(up)), math.factorial(int(dn)) * math.factorial(N - 2))
    if val.denominator != 1 or val <= 0:
        raise DomainError("degeneracy did not come out a positive integer")
    return int(val)


def projector_coefficients(ch: Channel, t):
    """Gegenbauer coefficients (c_scalar, c_spin) of the channel projector.

    The projector onto states of fixed (l, J) decomposes as
    c_spin * (sigma.tau)(sigma.v)^+  +  c_scalar * identity, with both
    coefficients functions of t = tau.v.  Index -1 maps to the zero
    polynomial, so the lowest channel is covered.
    """
    lam1 = ch.lambda_N + 1.0
    pref = ch.xi / solid_angle(ch.N)
    c_spin = pref * gegenbauer(lam1, ch.l - 1, t)
    c_scalar = -pref * gegenbauer(lam1, ch.l_minus - 1, t)
    return c_scalar, c_spin


def projector_trace(ch: Channel, t):
    """Spin-space trace of the projector at relative angle t = tau.v."""
    c_scalar, c_spin = projector_coefficients(ch, t)
    dim = 2 ** ((ch.N - 1) // 2)
    return dim * (c_spin * np.asarray(t) + c_scalar)


def projector_matrix(ch: Channel, tau, v):
    """Explicit 2x2 projector for N=3 in the Pauli realization."""
    if ch.N != 3:
        raise DomainError("matrix projectors are constructed for N=3 only")
    tau = np.asarray(tau, dtype=float)
    v = np.asarray(v, dtype=float)
    t = float(tau @ v)
    c_scalar, c_spin = projector_coefficients(ch, t)
    st = sum(tau[k] * _PAULI[k] for k in range(3))
    sv = sum(v[k] * _PAULI[k] for k in range(3))
    return c_spin * (st @ sv) + c_scalar * np.eye(2, dtype=complex)


def projector_matrix_alt(ch: Channel, tau, v):
    """Equivalent N=3 projector built from the second (derivative) form.

    Used as a cross-check of ``projector_matrix``, never as a second
    production path.  The channel sign enters only the cross term here; the
    orthogonality and trace tests pin this normalization.
    """
    if ch.N != 3:
        raise DomainError("matrix projectors are constructed for N=3 only")
    tau = np.asarray(tau, dtype=float)
    v = np.asarray(v, dtype=float)
    t = float(tau @ v)
    lam = ch.lambda_N
    pref = 1.0 / solid_angle(3)
    cross = np.cross(tau, v)
    scross = sum(cross[k] * _PAULI[k] for k in range(3))
    term1 = (ch.l + lam * (1 - ch.xi)) * gegenbauer(lam, ch.l, t) * np.eye(2, dtype=complex)
    term2 = 2.0j * lam * ch.xi * gegenbauer(lam + 1.0, ch.l - 1, t) * scross
    return pref * (term1 + term2)


def sphere_quadrature(n_theta: int = 40, n_phi: int = 80):
    """Product Gauss x trapezoid rule on the 2-sphere; exact for low-degree
    spherical polynomials.  Returns (points (M,3), weights (M,))."""
    x, w = np.polynomial.legendre.leggauss(n_theta)
    phi = 2.0 * np.pi * np.arange(n_phi) / n_phi
    wphi = 2.0 * np.pi / n_phi
    ct = x[:, None]
    st = np.sqrt(1.0 - ct ** 2)
    pts = np.stack([
        (st * np.cos(phi)[None, :]).ravel(),
        (st * np.sin(phi)[None, :]).ravel(),
        np.broadcast_to(ct, (n_theta, n_phi)).ravel(),
    ], axis=1)
    wts = (w[:, None] * wphi * np.ones_like(phi)[None, :]).ravel()
    return pts, wts
