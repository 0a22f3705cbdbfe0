"""Generalized Yukawa interactions and their momentum-transfer weights.

A potential is represented by its weight over momentum transfer: a set of
discrete lines (g_i, mu_i) plus an optional piecewise-linear continuum on a
compact support.  In three dimensions a single line is the textbook Yukawa
g exp(-mu r)/r; superpositions and continua cover the generalized family.

All nu-integrals against the weight are done segment-exactly (lines collapse,
continuum segments get fixed-order Gauss panels), which keeps one layer of
quadrature error out of the kernel tables built on top.

Units: hbar = 1; the Schrodinger convention absorbs 2m into the potential
(no mass factor in the radial equation); the Dirac mass is explicit.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.interpolate import CubicSpline

from .channels import Channel, solid_angle
from .errors import DivergenceError, DomainError, ValidationError
from .quadrature import gauss_rule, jacobi_rule
from .specfun import chi


@dataclass(frozen=True)
class SpectralWeight:
    """Momentum-transfer weight: delta lines plus sampled continuum.

    ``lines`` is a tuple of (strength, position); the continuum is sampled on
    an increasing grid and interpreted as piecewise linear with compact
    support.  ``mu0`` is the infimum of the total support; Volterra solvers
    require mu0 > 0 (finite-step Neumann property).
    """
    lines: tuple = ()
    cont_nu: Optional[np.ndarray] = None
    cont_sigma: Optional[np.ndarray] = None
    mu0: float = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        lines = tuple((float(g), float(mu)) for g, mu in self.lines)
        object.__setattr__(self, "lines", lines)
        if (self.cont_nu is None) != (self.cont_sigma is None):
            raise ValidationError("continuum needs both grid and samples")
        if self.cont_nu is not None:
            nu = np.asarray(self.cont_nu, dtype=float)
            sg = np.asarray(self.cont_sigma, dtype=float)
            if nu.ndim != 1 or nu.shape != sg.shape or len(nu) < 2:
                raise ValidationError("continuum grid/sample shape mismatch")
            if np.any(np.diff(nu) <= 0):
                raise ValidationError("continuum grid must be strictly increasing")
            object.__setattr__(self, "cont_nu", nu)
            object.__setattr__(self, "cont_sigma", sg)
        for _, mu in lines:
            if mu <= 0:
                raise ValidationError("line positions must be positive")
        support = [mu for _, mu in lines]
        if self.cont_nu is not None:
            support.append(float(self.cont_nu[0]))
        inferred = min(support) if support else 0.0
        if self.mu0 is None:
            object.__setattr__(self, "mu0", inferred)
        elif support and self.mu0 - inferred > 1e-12:
            raise ValidationError("declared mu0 above the actual support threshold")

    @property
    def is_empty(self) -> bool:
        return not self.lines and self.cont_nu is None

    def scaled(self, factor: float) -> "SpectralWeight":
        return SpectralWeight(
            lines=tuple((g * factor, mu) for g, mu in self.lines),
            cont_nu=None if self.cont_nu is None else self.cont_nu.copy(),
            cont_sigma=None if self.cont_sigma is None else self.cont_sigma * factor,
            mu0=self.mu0 if not self.is_empty else None,
        )

    def integrate(self, f: Callable, cap: float = np.inf, pts: int = 12):
        """sum_i g_i f(mu_i) + int sigma(nu) f(nu) dnu over support below cap.

        ``f`` must be vectorized; segments are integrated with fixed Gauss
        panels, clipped to the cap.  A line exactly at the cap is included.
        """
        total = 0.0
        for g, mu in self.lines:
            if mu <= cap + 1e-14:
                total = total + g * f(np.asarray([mu]))[0]
        if self.cont_nu is not None:
            gx, gw = gauss_rule(pts)
            lo_all = self.cont_nu[:-1]
            hi_all = np.minimum(self.cont_nu[1:], cap)
            sel = hi_all > lo_all
            if np.any(sel):
                lo, hi = lo_all[sel], hi_all[sel]
                mid = 0.5 * (lo + hi)[:, None]
                half = 0.5 * (hi - lo)[:, None]
                nodes = (mid + half * gx[None, :]).ravel()
                wts = (half * gw[None, :]).ravel()
                sig = np.interp(nodes, self.cont_nu, self.cont_sigma)
                total = total + np.sum(wts * sig * f(nodes))
        return total

    def moment(self, n: int) -> float:
        """n-th moment of the weight; exact for lines and linear segments."""
        if n < 0:
            raise DomainError("moments defined for n >= 0")
        total = sum(g * mu ** n for g, mu in self.lines)
        if self.cont_nu is not None:
            nu, sg = self.cont_nu, self.cont_sigma
            # exact integral of a linear interpolant against nu^n per segment
            for i in range(len(nu) - 1):
                a, b = nu[i], nu[i + 1]
                sa, sb = sg[i], sg[i + 1]
                slope = (sb - sa) / (b - a)
                c0 = sa - slope * a
                total += (c0 * (b ** (n + 1) - a ** (n + 1)) / (n + 1)
                          + slope * (b ** (n + 2) - a ** (n + 2)) / (n + 2))
        if not np.isfinite(total):
            raise DivergenceError("weight moment diverged")
        return float(total)


def moments(w: SpectralWeight, n: int) -> float:
    return w.moment(n)


@dataclass(frozen=True)
class InteractionKind:
    """Which Hamiltonian the weight feeds.

    tag: 'schrodinger', 'dirac_vector', 'dirac_scalar', 'schrodinger_relcorr'
    or 'schrodinger_nonlocal'; mass is required for the Dirac and
    relativistic-correction cases; the nonlocal case carries the second
    weight (momentum-squared coupling).
    """
    tag: str
    m: Optional[float] = None
    second_weight: Optional[SpectralWeight] = None

    _TAGS = ("schrodinger", "dirac_vector", "dirac_scalar",
             "schrodinger_relcorr", "schrodinger_nonlocal")

    def __post_init__(self):
        if self.tag not in self._TAGS:
            raise ValidationError(f"unknown interaction kind {self.tag!r}")
        if self.tag in ("dirac_vector", "dirac_scalar", "schrodinger_relcorr"):
            if self.m is None or self.m <= 0:
                raise ValidationError(f"{self.tag} requires a positive mass")
        if self.tag == "schrodinger_nonlocal" and self.second_weight is None:
            raise ValidationError("nonlocal kind requires the second weight")

    @property
    def is_dirac(self) -> bool:
        return self.tag.startswith("dirac")

    @property
    def coupling_sign(self) -> int:
        """Sign of the lower-degree kernel term: -1 for the scalar coupling."""
        return -1 if self.tag == "dirac_scalar" else +1


def evaluate_potential(w: SpectralWeight, N: int, r) -> np.ndarray:
    """Coordinate-space potential of a weight in N dimensions.

    V(r) = (4 pi / (Omega_N pi^a r)) int dnu Sigma(nu) (r/2nu)^a chi_{-a}(nu r)
    with a = (3-N)/2; for N = 3 and a single line this is g exp(-mu r)/r.
    """
    r = np.asarray(r, dtype=float)
    if np.any(r <= 0):
        raise DomainError("potential defined for r > 0")
    if w.is_empty:
        return np.zeros_like(r)
    a = 0.5 * (3 - N)
    pref = 4.0 * np.pi / (solid_angle(N) * np.pi ** a)
    out = np.zeros_like(r, dtype=float)
    scalar = out.ndim == 0
    rr = np.atleast_1d(r)
    vals = np.empty_like(rr)
    for i, ri in enumerate(rr):
        def f(nu, ri=ri):
            if N == 3:
                return np.exp(-nu * ri)
            return (ri / (2.0 * nu)) ** a * np.real(chi(-a, nu * ri))
        vals[i] = pref / ri * w.integrate(f)
    return vals[0] if scalar else vals.reshape(r.shape)


def momentum_matrix_element(w: SpectralWeight, N: int, q_minus_p: float) -> float:
    """Plane-wave matrix element (2/(pi Omega_N)) int dnu Sigma / (nu^2 + Q^2)."""
    Q2 = q_minus_p ** 2
    return 2.0 / (np.pi * solid_angle(N)) * w.integrate(lambda nu: 1.0 / (nu * nu + Q2))


def weyl_transform(w: SpectralWeight, N: int, D: int, n: int,
                   out_grid: Optional[np.ndarray] = None) -> SpectralWeight:
    """Map a continuum weight between spatial dimensions N -> D.

    Fractional integral of order alpha = n - (D - N)/2 in the nu^2 variable
    followed by n derivatives; alpha = 0 collapses to the identity kernel.
    Only sampled continua are transformed (line inputs would produce
    distributional derivatives).
    """
    if n < max((D - N) // 2 + ((D - N) % 2), 0) and n < (D - N) / 2.0:
        raise ValidationError("n below the convergence bound (D-N)/2")
    alpha = n - (D - N) / 2.0
    if alpha < 0:
        raise ValidationError("n below the convergence bound (D-N)/2")
    if D == N and n == 0:
        return w
    if w.lines:
        raise ValidationError("weyl_transform acts on sampled continua only")
    if w.cont_nu is None:
        return SpectralWeight()
    nu_in, mu0 = w.cont_nu, w.mu0
    nu_max = float(nu_in[-1])
    grid = (np.linspace(mu0, nu_max, 801) if out_grid is None
            else np.asarray(out_grid, dtype=float))
    x = grid ** 2

    if alpha == 0:
        ivals = np.interp(grid, nu_in, w.cont_sigma) / (2.0 * grid)
    else:
        # I(x) = (1/Gamma(alpha)) int_{mu0^2}^{x} (x - s)^{alpha-1} Sigma(sqrt s)/(2 sqrt s) ds
        tj, wj = jacobi_rule(48, alpha - 1.0) if alpha < 1.0 else gauss_rule(48)
        ivals = np.zeros_like(x)
        from math import gamma as _g
        for i, xi in enumerate(x):
            lo = mu0 ** 2
            if xi <= lo:
                continue
            half = 0.5 * (xi - lo)
            midp = 0.5 * (xi + lo)
            if alpha < 1.0:
                # jacobi weight (1-t)^{alpha-1}(1+t)^{alpha-1}: fold symmetric rule;
                # only the (1-t) endpoint is singular, so divide the (1+t) part out
                s = midp + half * tj
                ww = wj * half ** alpha * (1.0 + tj) ** (1.0 - alpha)
            else:
                s = midp + half * tj
                ww = wj * half * (xi - s) ** (alpha - 1.0)
            sig = np.interp(np.sqrt(s), nu_in, w.cont_sigma, left=0.0, right=0.0)
            ivals[i] = np.sum(ww * sig / (2.0 * np.sqrt(s))) / _g(alpha)

    spline = CubicSpline(x, ivals)
    dn = spline.derivative(n)(x) if n > 0 else ivals
    from math import gamma as _g
    sigma_out = _g(N / 2.0) / _g(D / 2.0) * 2.0 * grid * dn
    return SpectralWeight(cont_nu=grid, cont_sigma=sigma_out)


def relcorr_weight(w: SpectralWeight, ch: Channel, m: float,
                   nu_max: Optional[float] = None) -> SpectralWeight:
    """Relativistic-correction weight for an N=3 channel.

    Sigma_kappa(nu) = Sigma(nu) + (2m)^{-2} [ nu^2 Sigma(nu)/2
                      + (1 + kappa) nu int_{mu0}^{nu} Sigma ].
    Lines map to rescaled lines plus step-supported linear continua (exact);
    an existing continuum is resampled numerically.  The continuum tail is
    materialized up to ``nu_max`` (growing linearly, so the piecewise-linear
    representation stays exact for line inputs).
    """
    if ch.N != 3:
        raise DomainError("relativistic corrections implemented for N=3")
    inv4m2 = 1.0 / (2.0 * m) ** 2
    kap = ch.kappa
    if nu_max is None:
        nu_max = 40.0 * max([mu for _, mu in w.lines] + [w.mu0, 1.0])
    new_lines = [(g * (1.0 + 0.5 * mu * mu * inv4m2), mu) for g, mu in w.lines]

    # cumulative integral of the weight, needed for the (1+kappa) nu term
    breakpoints = sorted({mu for _, mu in w.lines} | {nu_max})
    grid = [w.mu0] if w.mu0 < breakpoints[0] else []
    for bp in breakpoints:
        grid.append(bp)
    if w.cont_nu is not None:
        grid = sorted(set(grid) | set(self_nu for self_nu in w.cont_nu) | {nu_max})
    grid = np.unique(np.asarray(grid, dtype=float))
    grid = grid[grid <= nu_max]
    if grid[-1] < nu_max:
        grid = np.append(grid, nu_max)
    # refine so the piecewise-linear continuum resolves nu^2-type terms
    fine = [grid[0]]
    for a_, b_ in zip(grid[:-1], grid[1:]):
        k = max(2, int(np.ceil((b_ - a_) / (nu_max / 400.0))))
        fine.extend(np.linspace(a_, b_, k + 1)[1:])
    fine = np.asarray(fine)

    cum = np.array([w.integrate(lambda nu: np.ones_like(nu), cap=v) for v in fine])
    sigma = (1.0 + kap) * fine * cum * inv4m2
    if w.cont_nu is not None:
        base = np.interp(fine, w.cont_nu, w.cont_sigma, left=0.0, right=0.0)
        sigma = sigma + base * (1.0 + 0.5 * fine ** 2 * inv4m2)
    if np.allclose(sigma, 0.0) and not new_lines:
        return SpectralWeight()
    return SpectralWeight(lines=tuple(new_lines), cont_nu=fine, cont_sigma=sigma)


# ----------------------------------------------------------------------
# weight file format
# ----------------------------------------------------------------------

def parse_weight_text(text: str):
    """Parse the weight file format.

    One record per line: ``line g mu``, ``cont nu sigma``, ``mu0 value``,
    ``kind <tag> [m]``; blank lines and '#' comments ignored.
    Returns (SpectralWeight, InteractionKind or None).
    """
    lines = []
    cont = []
    mu0 = None
    kind = None
    for ln_no, raw in enumerate(text.splitlines(), 1):
        s = raw.split("#", 1)[0].strip()
        if not s:
            continue
        parts = s.split()
        try:
            if parts[0] == "line" and len(parts) == 3:
                lines.append((float(parts[1]), float(parts[2])))
            elif parts[0] == "cont" and len(parts) == 3:
                cont.append((float(parts[1]), float(parts[2])))
            elif parts[0] == "mu0" and len(parts) == 2:
                mu0 = float(parts[1])
            elif parts[0] == "kind" and len(parts) in (2, 3):
                m = float(parts[2]) if len(parts) == 3 else None
                kind = InteractionKind(tag=parts[1], m=m)
            else:
                raise ValueError("unrecognized record")
        except (ValueError, ValidationError) as exc:
            raise ValidationError(f"weight file line {ln_no}: {raw.strip()!r}: {exc}") from exc
    if cont:
        cont.sort()
        nu = np.array([c[0] for c in cont])
        sg = np.array([c[1] for c in cont])
        w = SpectralWeight(lines=tuple(lines), cont_nu=nu, cont_sigma=sg, mu0=mu0)
    else:
        w = SpectralWeight(lines=tuple(lines), mu0=mu0)
    return w, kind


def load_weight(path):
    with open(path, "r", encoding="utf-8") as fh:
        return parse_weight_text(fh.read())


def yukawa(g: float, mu: float) -> SpectralWeight:
    """Single-line weight; in N=3 the potential g exp(-mu r)/r."""
    return SpectralWeight(lines=((g, mu),))
