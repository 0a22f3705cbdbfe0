"""Momentum-transfer spectral densities and everything built on them.

The central object is the density D(nu; rho, b^2, u): the weight of the
scattering amplitude's dispersion representation in momentum transfer,
continued to imaginary momenta where its defining system is Volterra in nu.
One solved table is independent of the angular-momentum channel; resolvents
for every channel follow by a single Legendre-weighted quadrature, and
partial amplitudes (also at complex degree) by a second-kind-Legendre
quadrature at physical momenta.

Discretization notes.  The Born part Sigma(nu) x (sheet coefficients) stays
analytic; only the iterated continuum lives on a grid.  That continuum is
stored in skew coordinates (nu, t = u - rho - nu): its support edge u =
rho + nu becomes the clean boundary t = 0, so interpolation never straddles
the edge discontinuity.  In the nu direction the continuum jumps at the
pair-sum thresholds of the weight's lines (the inner window collapses to a
finite average there); all node-based integrals split at those breakpoints
with one-sided endpoint extrapolation.  The inner energy integral carries an
inverse-square-root endpoint weight in three dimensions and is done with the
Chebyshev rule.

Sign/prefactor conventions follow the corrected kernel normalization (see
``engine``): the three-dimensional system carries (N-2)/pi and the sheet
propagators enter as i alpha sum_z g^z(alpha) with no residual mass factor.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .channels import Channel
from .engine import (EnergyPoint, eta_im, lambda_window, omega_window,
                     t_cosine)
from .errors import DivergenceError, DomainError, ValidationError
from .potential import InteractionKind, SpectralWeight
from .quadrature import chebyshev_nodes, gauss_rule
from .specfun import kernel_weight_p, legendre_q_degree, legendre_s


@dataclass(frozen=True)
class BornCoefficients:
    """Sheet coefficient functions of the Born density at imaginary momenta.

    M1 attaches to the left momentum (1/eta at i u), M2 to the propagating
    sheet (eta at i alpha); the scalar coupling flips the sign of M2.  The
    spin-free reduction has A1 = 1, A2 = 0.
    """
    m: Optional[float]
    sign: int = +1

    def m1(self, al, zeta):
        return 1.0 / eta_im(al, zeta, self.m)

    def m2(self, al, zeta):
        return self.sign * eta_im(al, zeta, self.m)


def _jump_breaks(w: SpectralWeight, lo: float, hi: float):
    """nu positions where the iterated continuum jumps: pair sums of lines.

    Boundary-coincident breaks are kept: the integrator needs to know when
    its upper limit sits exactly on a jump.
    """
    pts = sorted({m1 + m2 for _, m1 in w.lines for _, m2 in w.lines})
    return [p for p in pts if lo + 1e-12 < p <= hi + 1e-9]


def _gregory_weights(x: np.ndarray) -> np.ndarray:
    """Third-order end-corrected trapezoid weights on a nearly uniform grid."""
    d = np.diff(x)
    wt = np.empty_like(x)
    wt[0] = d[0] / 2
    wt[-1] = d[-1] / 2
    if len(x) > 2:
        wt[1:-1] = (d[:-1] + d[1:]) / 2
    if len(x) >= 5:
        wt[0] -= d[0] / 12.0
        wt[1] += d[0] / 12.0
        wt[-1] -= d[-1] / 12.0
        wt[-2] += d[-1] / 12.0
    return wt


def integrate_nodes_jump_aware(x_nodes, f_nodes, lo, hi, breaks):
    """Integrate node samples over [lo, hi], splitting at jump positions.

    ``f_nodes`` may be an array of shape (n_nodes, ...).  Per smooth piece
    the rule is Gregory over the piece's nodes plus endpoint values linearly
    extrapolated from the nearest two, so one-sided limits are respected.
    Node-value conventions: a sample exactly on a break carries the
    upper-side limit (it belongs to the piece above); a sample exactly at
    ``hi`` carries the inside limit and is kept.
    """
    tol = 1e-12
    f_nodes = np.asarray(f_nodes)
    edges = [lo] + [b for b in breaks if lo < b < hi] + [hi]
    hi_is_break = any(abs(hi - br) <= 1e-9 for br in breaks)
    total = np.zeros(f_nodes.shape[1:], dtype=f_nodes.dtype)
    for a, b in zip(edges[:-1], edges[1:]):
        if b - a < 1e-14:
            continue
        sel = (x_nodes >= a - tol) & (x_nodes <= b + tol)
        if b < hi - tol or hi_is_break:
            sel &= x_nodes < b - tol      # node on a break: belongs above
        xs = x_nodes[sel]
        fs = f_nodes[sel]
        if len(xs) == 0:
            continue
        if len(xs) == 1:
            total = total + (b - a) * fs[0]
            continue

        def one_sided(xq, i0, i1):
            t = (xq - xs[i0]) / (xs[i1] - xs[i0])
            return fs[i0] * (1 - t) + fs[i1] * t

        xs_full, fs_full = xs, fs
        if xs[0] > a + tol:
            xs_full = np.concatenate([[a], xs_full])
            fs_full = np.concatenate([[one_sided(a, 0, 1)], fs_full])
        if xs[-1] < b - tol:
            xs_full = np.concatenate([xs_full, [b]])
            fs_full = np.concatenate([fs_full, [one_sided(b, -2, -1)]])
        wt = _gregory_weights(xs_full)
        total = total + np.tensordot(wt, fs_full, axes=([0], [0]))
    return total


@dataclass
class DensityTable:
    """Continuum part of the density in skew coordinates at fixed (rho, b, zbar).

    ``cont[(i, zp, z)]`` has shape (n_nu, n_t) sampling component i at
    (nu_k, u = rho + nu_k + t_j); the spin-free mode stores keys (i, 0, 0).
    The analytic Born part is reconstructed through ``born_coeff``.
    """
    nu: np.ndarray
    t: np.ndarray
    rho: float
    e: EnergyPoint
    kind: InteractionKind
    w: SpectralWeight
    cont: dict
    mode: str                     # 'dirac' | 'schrodinger'
    iterations: int = 0
    residual: float = 0.0

    @property
    def u_max(self) -> float:
        return self.rho + self.nu[-1] + self.t[-1]

    def sheet_pairs(self):
        if self.mode == "dirac":
            return [(zp, z) for zp in (1, -1) for z in (1, -1)]
        return [(0, 0)]

    def born_coeff(self, i: int, zp: int, z: int, u_val):
        """Born sheet coefficient multiplying Sigma(nu) in component i."""
        u_val = np.asarray(u_val, dtype=complex)
        if self.mode == "schrodinger":
            return np.ones_like(u_val) if i == 1 else np.zeros_like(u_val)
        bc = BornCoefficients(m=self.kind.m, sign=self.kind.coupling_sign)
        if i == 1:
            return bc.m1(u_val, zp)
        return complex(bc.m2(np.asarray([self.rho]), z)[0]) * np.ones_like(u_val)

    def cont_value(self, i: int, zp: int, z: int, mu_vals, al_vals):
        """Bicubic skew-coordinate interpolation, zero off support.

        Queries exactly on a nu node collapse the nu stencil onto that node,
        so nothing is ever interpolated across the pair-sum jumps (callers
        sample the nu direction on-grid).
        """
        key = (i, zp, z) if self.mode == "dirac" else (i, 0, 0)
        return self.cont_values_batch([key], mu_vals, al_vals)[key]

    def cont_values_batch(self, keys, mu_vals, al_vals):
        """Interpolate several components at shared query coordinates.

        Stencil indices/weights are computed once; each table then costs one
        gather-contract, which is what the inner density loop needs.
        """
        mu_vals = np.asarray(mu_vals, dtype=float)
        al_vals = np.asarray(al_vals, dtype=float)
        tq = al_vals - self.rho - mu_vals
        sup = tq >= -1e-12
        tqc = np.clip(tq, self.t[0], self.t[-1])
        from .quadrature import local_cubic_weights
        ix, wx = local_cubic_weights(self.nu, mu_vals)
        iy, wy = local_cubic_weights(self.t, tqc)
        out = {}
        for key in keys:
            tab = self.cont[key]
            acc = np.zeros(mu_vals.shape, dtype=tab.dtype)
            for a in range(4):
                row = tab[ix[..., a]]
                inner = np.zeros_like(acc)
                for c in range(4):
                    inner += np.take_along_axis(
                        row, iy[..., c][..., None], axis=-1)[..., 0] * wy[..., c]
                acc += wx[..., a] * inner
            out[key] = np.where(sup, acc, 0.0)
        return out

    def slice_at_u(self, i: int, zp: int, z: int, nu_vals, u: float):
        """Continuum values D_c(nu; u) along fixed u (diagonal slice)."""
        nu_vals = np.asarray(nu_vals, dtype=float)
        return self.cont_value(i, zp, z, nu_vals, np.full_like(nu_vals, u))


def _bicubic(xg, yg, tab, xq, yq):
    """Separable local-cubic interpolation on a rectangular grid."""
    from .quadrature import local_cubic_weights
    ix, wx = local_cubic_weights(xg, xq)
    iy, wy = local_cubic_weights(yg, yq)
    out = np.zeros(np.asarray(xq).shape, dtype=tab.dtype)
    for a in range(4):
        row = tab[ix[..., a]]
        acc = np.zeros_like(out)
        for c in range(4):
            acc += np.take_along_axis(row, iy[..., c][..., None],
                                      axis=-1)[..., 0] * wy[..., c]
        out += wx[..., a] * acc
    return out


def _gamma_nodes(w: SpectralWeight, lo: float, hi: float, pts: int = 10):
    """Line nodes/weights and continuum Gauss nodes/weights of the weight
    restricted to [lo, hi]."""
    ln, lw = [], []
    for g, mu in w.lines:
        if lo - 1e-13 <= mu <= hi + 1e-13:
            ln.append(mu)
            lw.append(g)
    cn = np.empty(0)
    cw = np.empty(0)
    if w.cont_nu is not None:
        a = max(lo, float(w.cont_nu[0]))
        b = min(hi, float(w.cont_nu[-1]))
        if b > a + 1e-14:
            gx, gw_ = gauss_rule(pts)
            edges = np.linspace(a, b, max(3, int(np.ceil((b - a) / max(w.mu0, 1e-3) * 3))))
            mid = 0.5 * (edges[:-1] + edges[1:])[:, None]
            half = 0.5 * (edges[1:] - edges[:-1])[:, None]
            cn = (mid + half * gx[None, :]).ravel()
            cw = (half * gw_[None, :]).ravel() * np.interp(cn, w.cont_nu, w.cont_sigma)
    return np.asarray(ln), np.asarray(lw), cn, cw


def solve_density(w: SpectralWeight, kind: InteractionKind, rho: float,
                  e: EnergyPoint, n_nu: int = 64, n_t: int = 64,
                  u_max: Optional[float] = None, n_cheb: int = 16,
                  max_iter: int = 40, tol: float = 1e-12, damping: float = 1.0,
                  exact_sweeps: Optional[int] = None) -> DensityTable:
    """Damped Picard solution of the continued density system (N = 3).

    The Volterra structure in nu makes plain iteration from the Born term
    terminate after about (nu_max - mu0)/mu0 sweeps; ``damping`` < 1 is
    accepted but never needed for convergence.  ``exact_sweeps`` runs a fixed
    number of operator applications instead (n sweeps carry the density
    through perturbative order n + 1).
    """
    mu0 = w.mu0
    if mu0 <= 0:
        raise DomainError("density system requires mu0 > 0")
    if not kind.is_dirac and kind.tag != "schrodinger":
        raise ValidationError("density system supports schrodinger and dirac kinds")
    if u_max is None:
        u_max = rho + 8.0 * max(mu0, 1.0)
    # nu covers the full support of every slice up to u_max; t covers the
    # distances to the support edge
    nu = np.linspace(mu0, u_max - rho, n_nu)
    # the first node sits epsilon above the support edge: the edge value is
    # a one-sided limit and the angular-coupling ratios are 0/0 exactly there
    t = np.linspace(0.0, u_max - rho - mu0, n_t)
    t[0] = 1e-4 * max(mu0, 1.0)
    mode = "dirac" if kind.is_dirac else "schrodinger"
    keys = ([(i, zp, z) for i in (1, 2) for zp in (1, -1) for z in (1, -1)]
            if mode == "dirac" else [(1, 0, 0), (2, 0, 0)])
    cont = {key: np.zeros((n_nu, n_t), dtype=complex) for key in keys}
    table = DensityTable(nu=nu, t=t, rho=rho, e=e, kind=kind, w=w,
                         cont=cont, mode=mode)
    n_sweeps = exact_sweeps if exact_sweeps is not None else max_iter
    converged = False
    for it in range(n_sweeps):
        new = _apply_density_operator(table, n_cheb)
        resid = max(np.max(np.abs(new[k] - cont[k])) for k in cont)
        scale = max(max(np.max(np.abs(new[k])) for k in cont), 1e-30)
        for k in cont:
            cont[k] = damping * new[k] + (1.0 - damping) * cont[k]
        table.iterations = it + 1
        table.residual = resid / scale
        if exact_sweeps is None and resid <= tol * scale:
            converged = True
            break
    if exact_sweeps is None and not converged:
        raise DivergenceError(
            f"density iteration did not converge: residual {table.residual:.2e}")
    return table


def _apply_density_operator(tab: DensityTable, n_cheb: int = 16) -> dict:
    """One application of the integral operator (Born input handled exactly)."""
    w, e, kind = tab.w, tab.e, tab.kind
    rho = tab.rho
    mu0 = w.mu0
    nu, tg = tab.nu, tab.t
    xch = chebyshev_nodes(n_cheb)
    mode = tab.mode
    m = kind.m
    sgn = kind.coupling_sign
    out = {k: np.zeros_like(v) for k, v in tab.cont.items()}
    bc = BornCoefficients(m=m, sign=sgn) if mode == "dirac" else None

    for i_nu, nv in enumerate(nu):
        if nv < 2 * mu0 - 1e-12:
            continue
        ug = rho + nv + tg                      # output momenta for this row
        Tnu = t_cosine(ug, rho, nv)[:, None]
        gl_n, gl_w, gc_n, gc_w = _gamma_nodes(w, mu0, nv - mu0)
        gam_nodes = np.concatenate([gl_n, gc_n])
        gam_wts = np.concatenate([gl_w, gc_w])
        if len(gam_nodes) == 0:
            continue
        acc = {k: np.zeros(len(ug), dtype=complex) for k in out}

        def window(mu_val, gam, part):
            """alpha-window contractions for one (gamma, mu), vector over u.

            A collapsing window (support boundary) is legitimate: the
            Chebyshev rule degenerates to pi * f(midpoint), which is the
            correct one-sided limit, so the width is clamped, never masked.
            """
            lm, lp = lambda_window(nv, mu_val, gam, ug, rho)
            lm = np.real(lm)
            lp = np.real(lp)
            mid = 0.5 * (lp + lm)[:, None]
            half = np.maximum(0.5 * (lp - lm), 0.0)[:, None]
            al2 = np.maximum(mid + half * xch[None, :], 1e-14)
            al = np.sqrt(al2)
            if mode == "schrodinger":
                gs = e.g_schrodinger(al)
                if part == "line":
                    D1 = np.ones_like(al, dtype=complex)
                else:
                    D1 = tab.cont_value(1, 0, 0, np.full_like(al, mu_val), al)
                return {("t1",): (np.pi / n_cheb) * np.sum(gs * D1, axis=1)}
            Xg = t_cosine(ug[:, None], al, gam)
            Ym = t_cosine(rho, al, mu_val)
            CYX = (Tnu * Ym - Xg) / (Tnu ** 2 - 1.0)
            CXY = (Tnu * Xg - Ym) / (Tnu ** 2 - 1.0)
            dtabs = None
            if part != "line":
                keys = [(i, zp, z) for i in (1, 2) for zp in (1, -1) for z in (1, -1)]
                dtabs = tab.cont_values_batch(keys, np.full_like(al, mu_val), al)
            res = {}
            for z in (1, -1):
                G0 = np.zeros((len(ug), n_cheb), dtype=complex)
                G0b = np.zeros_like(G0)
                G1 = np.zeros_like(G0)
                G1b = np.zeros_like(G0)
                for zp in (1, -1):
                    gp = e.g_prop(al, zp)
                    m2a = bc.m2(al, zp)
                    if part == "line":
                        D1 = bc.m1(al, zp)
                        D2 = complex(bc.m2(np.asarray([rho]), z)[0]) * np.ones_like(al)
                    else:
                        D1 = dtabs[(1, zp, z)]
                        D2 = dtabs[(2, zp, z)]
                    base = 1j * al * gp
                    G0 += base * D1
                    G0b += base * D2
                    G1 += base * m2a * D1
                    G1b += base * m2a * D2
                res[("d1m1", z)] = (np.pi / n_cheb) * np.sum(G0 + CXY * G0b, axis=1)
                res[("d1r", z)] = (np.pi / n_cheb) * np.sum(CYX * G1, axis=1)
                res[("d2m1", z)] = (np.pi / n_cheb) * np.sum(CYX * G0b, axis=1)
                res[("d2r", z)] = (np.pi / n_cheb) * np.sum(G1b + CXY * G1, axis=1)
            return res

        def accumulate(contrib, strength):
            if mode == "schrodinger":
                acc[(1, 0, 0)] += strength * contrib[("t1",)]
            else:
                for z in (1, -1):
                    for zpp in (1, -1):
                        m1u = bc.m1(ug, zpp)
                        acc[(1, zpp, z)] += strength * (
                            m1u * contrib[("d1m1", z)] + contrib[("d1r", z)])
                        acc[(2, zpp, z)] += strength * (
                            m1u * contrib[("d2m1", z)] + contrib[("d2r", z)])

        for gam, gw_ in zip(gam_nodes, gam_wts):
            hi_mu = nv - gam
            if hi_mu < mu0 - 1e-13:
                continue
            # Born part of the inner density: the weight's own lines/continuum
            mu_line_n, mu_line_w, mu_cont_n, mu_cont_w = _gamma_nodes(w, mu0, hi_mu)
            for ml_n, ml_w in zip(mu_line_n, mu_line_w):
                accumulate(window(ml_n, gam, "line"), gw_ * ml_w)
            for mc_n, mc_w in zip(mu_cont_n, mu_cont_w):
                accumulate(window(mc_n, gam, "line"), gw_ * mc_w)
            # iterated continuum: node samples on the nu grid, jump-aware
            sel = (nu >= mu0 - 1e-13) & (nu <= hi_mu + 1e-13)
            mu_nodes = nu[sel]
            if len(mu_nodes) >= 2:
                if mode == "schrodinger":
                    samples = np.stack([window(mn, gam, "table")[("t1",)]
                                        for mn in mu_nodes])
                    val = integrate_nodes_jump_aware(
                        mu_nodes, samples, mu0, hi_mu, _jump_breaks(w, mu0, hi_mu))
                    acc[(1, 0, 0)] += gw_ * val
                else:
                    keys = [("d1m1", 1), ("d1m1", -1), ("d1r", 1), ("d1r", -1),
                            ("d2m1", 1), ("d2m1", -1), ("d2r", 1), ("d2r", -1)]
                    samples = {kk: [] for kk in keys}
                    for mn in mu_nodes:
                        wres = window(mn, gam, "table")
                        for kk in keys:
                            samples[kk].append(wres[kk])
                    breaks = _jump_breaks(w, mu0, hi_mu)
                    ints = {kk: integrate_nodes_jump_aware(
                        mu_nodes, np.stack(samples[kk]), mu0, hi_mu, breaks)
                        for kk in keys}
                    for z in (1, -1):
                        for zpp in (1, -1):
                            m1u = bc.m1(ug, zpp)
                            acc[(1, zpp, z)] += gw_ * (m1u * ints[("d1m1", z)]
                                                       + ints[("d1r", z)])
                            acc[(2, zpp, z)] += gw_ * (m1u * ints[("d2m1", z)]
                                                       + ints[("d2r", z)])

        for k in out:
            out[k][i_nu, :] = acc[k] / np.pi
    return out


def resolvent_from_density(tab: DensityTable, ch) -> dict:
    """Channel resolvent column a(u, rho; b^2) on a u grid from one table.

    a = i u int dnu [ P_L(T) D1 + P_L'(T) D2 ] (Dirac mode),
    a = int dnu P_l(T) D (spin-free); Born lines collapse exactly, the
    continuum integrates jump-aware over its grid nodes.
    Returns (u_grid, dict (zp, z) -> values); spin-free key is (0, 0).
    """
    w, rho = tab.w, tab.rho
    mu0 = w.mu0
    nu = tab.nu
    ug = rho + mu0 + tab.t
    if tab.mode == "schrodinger":
        L1, L2 = (ch.l if isinstance(ch, Channel) else int(ch)), None
    else:
        L1, L2 = int(round(ch.L)), int(round(ch.L_minus))
    out = {}
    for (zp, z) in tab.sheet_pairs():
        vals = np.zeros(len(ug), dtype=complex)
        for j, u in enumerate(ug):
            cap = u - rho
            if cap < mu0 - 1e-13:
                continue
            tot = 0.0j
            for g, mu in w.lines:
                if mu <= cap + 1e-13:
                    T = t_cosine(u, rho, mu)
                    tot += g * (kernel_weight_p(L1, 0, T)
                                * complex(tab.born_coeff(1, zp, z, u)))
                    if L2 is not None:
                        tot += g * (kernel_weight_p(L2, 0, T)
                                    * complex(tab.born_coeff(2, zp, z, u)))
            if w.cont_nu is not None:
                gx, gw_ = gauss_rule(12)
                a_, b_ = float(w.cont_nu[0]), min(cap, float(w.cont_nu[-1]))
                if b_ > a_ + 1e-14:
                    nodes = 0.5 * (a_ + b_) + 0.5 * (b_ - a_) * gx
                    wts = 0.5 * (b_ - a_) * gw_ * np.interp(nodes, w.cont_nu, w.cont_sigma)
                    tot += np.sum(wts * kernel_weight_p(L1, 0, t_cosine(u, rho, nodes))) \
                        * complex(tab.born_coeff(1, zp, z, u))
                    if L2 is not None:
                        tot += np.sum(wts * kernel_weight_p(L2, 0, t_cosine(u, rho, nodes))) \
                            * complex(tab.born_coeff(2, zp, z, u))
            sel = nu <= cap + 1e-12
            if np.sum(sel) >= 2:
                nn = nu[sel]
                D1 = tab.slice_at_u(1, zp, z, nn, u)
                f1 = kernel_weight_p(L1, 0, t_cosine(u, rho, nn)) * D1
                fs = f1
                if L2 is not None:
                    D2 = tab.slice_at_u(2, zp, z, nn, u)
                    fs = fs + kernel_weight_p(L2, 0, t_cosine(u, rho, nn)) * D2
                tot += integrate_nodes_jump_aware(nn, fs, mu0, cap,
                                                  _jump_breaks(w, mu0, cap))
            vals[j] = tot
        if tab.mode == "dirac":
            vals = 1j * ug * vals
        out[(zp, z)] = vals
    return ug, out


# ----------------------------------------------------------------------
# physical-region densities, partial amplitudes, half-off-shell check
# ----------------------------------------------------------------------

def chebyshev_pole_integral(w_lo: float, w_hi: float, x0: complex,
                            retarded: bool = True) -> complex:
    """int_{w_lo}^{w_hi} [(w_hi-x)(x-w_lo)]^{-1/2} / (x - x0) dx.

    For x0 off [w_lo, w_hi] this is pi / (sqrt(x0-w_lo) sqrt(x0-w_hi)); on
    the interval the principal value vanishes and the boundary prescription
    x0 +- i0 leaves +- i pi [(w_hi-x0)(x0-w_lo)]^{-1/2} (``retarded`` picks
    the + sign).
    """
    x0 = complex(x0)
    if abs(x0.imag) < 1e-14 and w_lo < x0.real < w_hi:
        sgn = 1.0 if retarded else -1.0
        return sgn * 1j * np.pi / np.sqrt((w_hi - x0.real) * (x0.real - w_lo))
    # single square root of the product: the two factors share their sign for
    # real x0 outside the interval, giving the correct positive branch on
    # both sides
    return np.pi / np.sqrt((x0 - w_lo) * (x0 - w_hi))


def born_plus_one_physical(w: SpectralWeight, q, p, e: EnergyPoint, nu_vals,
                           n_cheb: int = 24, retarded: bool = True,
                           continued_branch: bool = False):
    """Spin-free physical-region density through second order.

    D(nu; q, p) = Sigma(nu) + (1/pi) int dgamma Sigma int dmu Sigma(mu-lines)
                  int_{omega-}^{omega+} dk'^2 W_cheb * (-1/(k'^2 + b^2)),
    with the Born term inserted on the right.  The on-shell rescattering pole
    is removed by subtraction and added back through the closed-form weighted
    pole integral.  ``continued_branch`` selects the imaginary-momentum
    branch of the window square root (used by the continuation identity
    check at q = iu, p = i rho).
    """
    nu_vals = np.atleast_1d(np.asarray(nu_vals, dtype=float))
    mu0 = w.mu0
    b2 = complex(e.b) ** 2
    xch = chebyshev_nodes(n_cheb)
    out = np.zeros(len(nu_vals), dtype=complex)
    for i, nv in enumerate(nu_vals):
        born = sum(g for g, mu in w.lines if abs(mu - nv) < 1e-12)
        tot = 0.0j
        gl_n, gl_w, gc_n, gc_w = _gamma_nodes(w, mu0, nv - mu0)
        for gam, gwt in zip(np.concatenate([gl_n, gc_n]),
                            np.concatenate([gl_w, gc_w])):
            ml_n, ml_w, mc_n, mc_w = _gamma_nodes(w, mu0, nv - gam)
            for mu_, mwt in zip(np.concatenate([ml_n, mc_n]),
                                np.concatenate([ml_w, mc_w])):
                wm, wp = omega_window(nv, mu_, gam, q, p)
                if continued_branch:
                    # imaginary-momentum branch: sqrt(D1 D2) -> e^{i pi} sqrt
                    w0 = 0.5 * (wm + wp)
                    half = 0.5 * (wp - wm)
                    wm, wp = w0 + half, w0 - half
                wm, wp = complex(wm), complex(wp)
                if abs(wp - wm) < 1e-14:
                    continue
                mid = 0.5 * (wp + wm)
                half = 0.5 * (wp - wm)
                x0 = -b2
                nodes = mid + half * xch
                f_nodes = -np.ones_like(nodes)
                fx0 = -1.0
                sub = (np.pi / n_cheb) * np.sum((f_nodes - fx0) / (nodes - x0))
                if abs(half) > 0 and not (wm.real < wp.real):
                    wm, wp = wp, wm
                    half = -half
                pole = fx0 * chebyshev_pole_integral(wm.real, wp.real, x0,
                                                     retarded=retarded) \
                    if abs(wm.imag) + abs(wp.imag) < 1e-12 else \
                    fx0 * np.pi / (np.sqrt(x0 - wm) * np.sqrt(x0 - wp))
                tot += gwt * mwt * (sub + pole)
        out[i] = born + tot / np.pi
    return out


def fg_partial_amplitude(w: SpectralWeight, l, q: float, p: float,
                         e: EnergyPoint, density_vals=None, nu_vals=None,
                         retarded: bool = True) -> complex:
    """Partial scattering amplitude from the second-kind-Legendre quadrature.

    T_l(q, p; b^2) = -(1/(2p)) int dnu Q_l(Z_nu) D(nu; q, p), with
    Z_nu = (q^2 + p^2 + nu^2)/(2 q p).  The degree may be complex.  When no
    density samples are passed, the Born + second-order physical density is
    used (valid at small coupling); lines always collapse exactly.
    """
    if q <= 0 or p <= 0:
        raise DomainError("physical momenta required")

    def q_leg(Z):
        if isinstance(l, complex) or not float(np.real(l)).is_integer():
            return legendre_q_degree(l, Z)
        return legendre_s(int(round(float(np.real(l)))), 0, Z)

    tot = 0.0j
    for g, mu in w.lines:
        Z = (q * q + p * p + mu * mu) / (2.0 * q * p)
        tot += g * q_leg(Z)
    if w.cont_nu is not None:
        gx, gw_ = gauss_rule(24)
        a_, b_ = float(w.cont_nu[0]), float(w.cont_nu[-1])
        nodes = 0.5 * (a_ + b_) + 0.5 * (b_ - a_) * gx
        wts = 0.5 * (b_ - a_) * gw_ * np.interp(nodes, w.cont_nu, w.cont_sigma)
        Z = (q * q + p * p + nodes ** 2) / (2.0 * q * p)
        tot += np.sum(wts * np.asarray([q_leg(zz) for zz in Z]))
    # beyond-Born part
    if nu_vals is None:
        nu_hi = 6.0 * max(w.mu0, 1.0) + 2 * w.mu0
        nu_vals = np.linspace(2 * w.mu0, nu_hi, 48)
    if density_vals is None:
        density_vals = born_plus_one_physical(w, q, p, e, nu_vals,
                                              retarded=retarded)
        # strip the Born lines (already added exactly)
        density_vals = density_vals - np.asarray(
            [sum(g for g, mu in w.lines if abs(mu - nv) < 1e-12)
             for nv in nu_vals])
    Z = (q * q + p * p + nu_vals ** 2) / (2.0 * q * p)
    qv = np.asarray([q_leg(zz) for zz in Z])
    breaks = _jump_breaks(w, nu_vals[0], nu_vals[-1])
    tot += integrate_nodes_jump_aware(nu_vals, qv * density_vals,
                                      float(nu_vals[0]), float(nu_vals[-1]), breaks)
    return -tot / (2.0 * p)


def halfoff_consistency(w: SpectralWeight, l: int, k: float, q: float,
                        s_max: float = 4.0e3) -> float:
    """Relative mismatch of the two half-off-shell amplitude routes.

    Route A assembles T(q, k) from off-shell Jost functions,
        T = (k/q)^l [F(iq, -ik) - F(-iq, -ik)] / (2i F(-ik)),
    route B evaluates the partial-amplitude quadrature against the physical
    density (Born + second order, so small couplings only).
    """
    from .engine import jost_schrodinger, osjf_schrodinger
    e = EnergyPoint(b=-1j * k)
    Fp = osjf_schrodinger(w, l, 1j * q, e, s_max=s_max)
    Fm = osjf_schrodinger(w, l, -1j * q, e, s_max=s_max)
    Fk = jost_schrodinger(w, l, e, s_max=s_max).value
    route_a = (k / q) ** l * (Fp - Fm) / (2j * Fk)
    route_b = fg_partial_amplitude(w, l, q, k, e, retarded=True)
    return abs(route_a - route_b) / max(abs(route_a), 1e-30)
