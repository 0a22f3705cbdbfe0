"""Invariant suite: quadrature identities, symmetries, cross-constructions.

Each check returns a CheckResult with the measured defect and its tolerance;
the CLI ``selftest`` subcommand serializes the full list, and the acceptance
tests assert on the same functions.  A fault-injection hook deliberately
perturbs one kernel entry to prove the symmetry checks have teeth.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .channels import make_channel, projector_matrix, solid_angle, sphere_quadrature
from .engine import (DiracColumn, EnergyPoint, GapGrid, SchrodingerColumn,
                     eta_im, jost_dirac, jost_schrodinger, kernel_dirac,
                     kernel_schrodinger, lambda_window, solve_resolvent,
                     t_cosine, w_im)
from .potential import InteractionKind, SpectralWeight, yukawa
from .quadrature import chebyshev_nodes, gauss_rule, panel_nodes, lin_log_edges
from .specfun import chi, gegenbauer, kernel_weight_p, legendre_s, riccati_bessel


@dataclass
class CheckResult:
    name: str
    error: float
    tol: float
    detail: str = ""

    @property
    def passed(self) -> bool:
        return self.error <= self.tol

    def line(self) -> str:
        flag = "pass" if self.passed else "FAIL"
        return f"[{flag}] {self.name}: error {self.error:.3e} (tol {self.tol:.1e}) {self.detail}"


# ----------------------------------------------------------------------
# quadrature identities
# ----------------------------------------------------------------------

def check_layer_collapse(j_values=(0, 1, 2), r_values=(0.5, 1.0, 2.0),
                         rho: float = 0.7, nu: float = 0.9,
                         tol: float = 1e-6) -> CheckResult:
    """Kernel-weight layer collapse:
    int_{rho+nu}^inf P_j(T(u rho|nu)) chi_j(u r) du = e^{-nu r} chi_j(rho r)/r."""
    worst = 0.0
    for j in j_values:
        for r in r_values:
            hi = rho + nu + 90.0 / r
            nodes, wts = panel_nodes(lin_log_edges(rho + nu, hi, rho + nu + 6.0,
                                                   n_lin=200, pts_per_decade=200), 12)
            T = t_cosine(nodes, rho, nu)
            lhs = np.sum(wts * kernel_weight_p(j, 0, T) * np.real(chi(j, nodes * r)))
            rhs = np.exp(-nu * r) * np.real(chi(j, rho * r)) / r
            worst = max(worst, abs(lhs - rhs) / abs(rhs))
    return CheckResult("layer-collapse identity", worst, tol)


def check_cross_channel_identity(tol: float = 1e-5) -> CheckResult:
    """Momentum-transfer crossing identity:
    int_{u+nu}^inf dal P_j(T(u al|nu)) (u/al)^j / (al^2+k^2)
      = int_0^inf ds^2 Q_j(Z(sk|nu)) (s/k)^j / (2 pi k (s^2+u^2))."""
    worst = 0.0
    u, nu, k = 0.8, 0.6, 1.1
    for j in (0, 1):
        hi = 4.0e4
        nodes, wts = panel_nodes(lin_log_edges(u + nu, u + nu + hi, u + nu + 6.0,
                                               n_lin=120, pts_per_decade=60), 12)
        T = t_cosine(nodes, u, nu)
        fl = kernel_weight_p(j, 0, T) * (u / nodes) ** j / (nodes ** 2 + k * k)
        lhs = np.sum(wts * fl)
        lhs += fl[-1] * nodes[-1] / 1.0  # 1/al^2 tail
        s_nodes, s_wts = panel_nodes(lin_log_edges(1e-4, hi, 6.0,
                                                   n_lin=120, pts_per_decade=60), 12)
        Z = (s_nodes ** 2 + k * k + nu * nu) / (2.0 * s_nodes * k)
        fr = (2.0 * s_nodes * legendre_s(j, 0, Z) * (s_nodes / k) ** j
              / (2.0 * np.pi * k * (s_nodes ** 2 + u * u)))
        rhs = np.sum(s_wts * fr)
        rhs += fr[-1] * s_nodes[-1]
        worst = max(worst, abs(lhs - rhs) / abs(rhs))
    return CheckResult("crossing identity", worst, tol)


def check_layer_product(tol: float = 1e-5) -> CheckResult:
    """Two-layer product identity (inner inverse-square-root window):
    int dal P_l(X) P_l(Y) H = int dnu P_l(T) (1/pi) int W_cheb H."""
    worst = 0.0
    u, rho, gam, mu_ = 3.0, 0.4, 0.5, 0.7
    n_cheb = 48
    xch = chebyshev_nodes(n_cheb)
    for l in (0, 1):
        nodes, wts = panel_nodes(np.linspace(rho + mu_, u - gam, 400), 12)
        X = t_cosine(u, nodes, gam)
        Y = t_cosine(nodes, rho, mu_)
        lhs = np.sum(wts * kernel_weight_p(l, 0, X) * kernel_weight_p(l, 0, Y)
                     * np.exp(-nodes))
        nnodes, nwts = panel_nodes(np.linspace(gam + mu_, u - rho, 400), 12)
        rhs = 0.0
        for nv, nw in zip(nnodes, nwts):
            lm, lp = lambda_window(nv, mu_, gam, np.asarray([u]), rho)
            lm, lp = float(np.real(lm[0])), float(np.real(lp[0]))
            if lp <= lm:
                continue
            al = np.sqrt(np.maximum(0.5 * (lp + lm) + 0.5 * (lp - lm) * xch, 0.0))
            inner = (np.pi / n_cheb) * np.sum(np.exp(-al))
            rhs += nw * kernel_weight_p(l, 0, float(t_cosine(u, rho, nv))) * inner / np.pi
        worst = max(worst, abs(lhs - rhs) / abs(rhs))
    return CheckResult("layer-product identity", worst, tol)


def check_projector_series(Z: float = 2.0, tol: float = 1e-6) -> CheckResult:
    """Generating series: 4 pi sum_{J,xi} S_{L}(Z) Pi(t, v) = 1/(Z - t.v)
    (both matrix structures), N = 3."""
    rng = np.random.default_rng(11)
    worst = 0.0
    for _ in range(3):
        tau = rng.normal(size=3); tau /= np.linalg.norm(tau)
        v = rng.normal(size=3); v /= np.linalg.norm(v)
        if abs(tau @ v) > 0.9:
            v = (v - 0.5 * tau)
            v /= np.linalg.norm(v)
        top = np.zeros((2, 2), dtype=complex)
        bot = np.zeros((2, 2), dtype=complex)
        J = 0.5
        while True:
            for xi in (+1, -1):
                ch = make_channel(3, J, xi)
                ch_flip = make_channel(3, J, -xi)
                SL = legendre_s(ch.L, 0, Z)
                top += 4 * np.pi * SL * projector_matrix(ch, tau, v)
                bot += 4 * np.pi * SL * projector_matrix(ch_flip, tau, v)
            J += 1.0
            if legendre_s(J + 0.5, 0, Z) < 1e-11 or J > 60:
                break
        target_top = np.eye(2) / (Z - tau @ v)
        sig = [np.array([[0., 1.], [1., 0.]], dtype=complex),
               np.array([[0., -1j], [1j, 0.]], dtype=complex),
               np.array([[1., 0.], [0., -1.]], dtype=complex)]
        st = sum(tau[i] * sig[i] for i in range(3))
        sv = sum(v[i] * sig[i] for i in range(3))
        target_bot = (st @ sv) / (Z - tau @ v)
        worst = max(worst, np.max(np.abs(top - target_top)))
        worst = max(worst, np.max(np.abs(bot - target_bot)))
    return CheckResult("projector generating series", worst, tol)


def check_gegenbauer_recurrence(tol: float = 1e-12) -> CheckResult:
    rng = np.random.default_rng(5)
    worst = 0.0
    for lam in (0.5, 1.0, 1.5, 2.5):
        for l in range(11):
            z = rng.uniform(-1, 1)
            for xi in (+1, -1):
                lhs = (z * gegenbauer(lam + 1, l - 1, z)
                       - gegenbauer(lam + 1, l - 1 - xi, z))
                rhs = (xi / (2 * lam)) * (l + lam * (1 - xi)) * gegenbauer(lam, l, z)
                worst = max(worst, abs(lhs - rhs))
    return CheckResult("index-shift recurrence", worst, tol)


def check_projector_orthogonality(tol: float = 1e-6) -> CheckResult:
    pts, wts = sphere_quadrature(28, 56)
    w_dir = np.array([0.1, 0.25, np.sqrt(1 - 0.1 ** 2 - 0.25 ** 2)])
    v_dir = np.array([-0.3, 0.45, np.sqrt(1 - 0.09 - 0.2025)])
    chans = [make_channel(3, J, xi) for J in (0.5, 1.5, 2.5) for xi in (+1, -1)]
    worst = 0.0
    for ca in chans:
        Pa = np.array([projector_matrix(ca, w_dir, n) for n in pts])
        for cb in chans:
            Pb = np.array([projector_matrix(cb, n, v_dir) for n in pts])
            prod = np.einsum("k,kij,kjl->il", wts, Pa, Pb)
            ref = (projector_matrix(ca, w_dir, v_dir)
                   if (ca.J == cb.J and ca.xi == cb.xi)
                   else np.zeros((2, 2), dtype=complex))
            worst = max(worst, float(np.max(np.abs(prod - ref))))
    return CheckResult("projector orthogonality", worst, tol)


# ----------------------------------------------------------------------
# symmetries of the dynamic scheme
# ----------------------------------------------------------------------

def check_resolvent_symmetry(g: float = 0.3, mu: float = 1.0, m: float = 1.0,
                             b: float = 0.4, rho: float = 1.1, n_x: int = 80,
                             tol: float = 1e-8, fault=None) -> CheckResult:
    """Exchange symmetry of the sheet-resolved resolvent:
    a^{z' z}(u, rho) = [eta^z(i rho) u / (eta^{z'}(i u) rho)] a^{z z'}(-rho, -u)."""
    w = yukawa(g, mu)
    kind = InteractionKind("dirac_vector", m=m)
    ch = make_channel(3, 0.5, +1)
    e = EnergyPoint(b=b, zbar=1, m=m)
    x = rho + np.concatenate([[0.0], np.linspace(mu, 4.5 * mu, n_x)])

    def kern(zp, z, u, al):
        val = kernel_dirac(w, ch, kind, zp, z, u, al)
        if fault is not None:
            val = val * (1.0 + fault * np.exp(-np.abs(np.real(u) - np.real(al)
                                                      - 2.0) ** 2))
        return val

    tab_p = solve_resolvent(kern, e, x, mu, sheets=True)
    # the mirrored table solves the transposed (right-kernel) form: that is
    # the exact discrete mirror of the left-form march
    x_neg = -x[::-1]
    tab_m = solve_resolvent(kern, e, x_neg, mu, sheets=True, form="right")
    M = len(x)
    worst = 0.0
    scale = max(np.max(np.abs(tab_p.entries[k])) for k in tab_p.entries)
    for zp in (1, -1):
        for z in (1, -1):
            A = tab_p.entries[(zp, z)]
            B = tab_m.entries[(z, zp)]
            for i in range(M):
                for j in range(i):
                    if np.real(x[i] - x[j]) < mu - 1e-12:
                        continue
                    ratio = (eta_im(np.asarray([x[j]]), z, m)[0] * x[i]
                             / (eta_im(np.asarray([x[i]]), zp, m)[0] * x[j]))
                    mirror = B[M - 1 - j, M - 1 - i]
                    worst = max(worst, abs(A[i, j] - ratio * mirror) / scale)
    return CheckResult("resolvent exchange symmetry", worst, tol)


def check_density_symmetry(g: float = 0.3, mu: float = 1.0, m: float = 1.0,
                           b: float = 0.4, tol: float = 1e-8) -> CheckResult:
    """Exchange symmetry of the second-order density (single line):
    D^{(i)}_{z'' z}(nu; rho, u) = [eta^z(i rho)/eta^{z''}(i u)] D^{(i)}_{z z''}(nu; -u, -rho)."""
    from .density import BornCoefficients
    kindsign = +1
    bc = BornCoefficients(m=m, sign=kindsign)
    e = EnergyPoint(b=b, zbar=1, m=m)
    n_cheb = 32
    xch = chebyshev_nodes(n_cheb)
    rho, u, nv = 0.9, 4.1, 2.6

    def second_order(nu_v, base, slot, z_right):
        """sheet-resolved second-order density components at one point"""
        lm, lp = lambda_window(nu_v, mu, mu, np.asarray([slot]), base)
        lm, lp = complex(lm[0]), complex(lp[0])
        mid, half = 0.5 * (lp + lm), 0.5 * (lp - lm)
        al2 = mid + half * xch
        al = np.sqrt(al2.astype(complex))
        Tn = t_cosine(slot, base, nu_v)
        Xg = t_cosine(slot, al, mu)
        Ym = t_cosine(base, al, mu)
        CYX = (Tn * Ym - Xg) / (Tn ** 2 - 1.0)
        CXY = (Tn * Xg - Ym) / (Tn ** 2 - 1.0)
        out = {}
        for zpp in (1, -1):
            d1 = 0.0j
            d2 = 0.0j
            for zp in (1, -1):
                gp = e.g_prop(al, zp)
                D1b = bc.m1(al, zp)
                D2b = complex(bc.m2(np.asarray([base]), z_right)[0])
                base_f = 1j * al * gp
                m1u = complex(bc.m1(np.asarray([slot]), zpp)[0])
                m2a = bc.m2(al, zp)
                d1 += np.sum(base_f * ((m1u + m2a * CYX) * D1b + m1u * CXY * D2b))
                d2 += np.sum(base_f * ((m2a + m1u * CYX) * D2b + m2a * CXY * D1b))
            out[(1, zpp)] = (np.pi / n_cheb) * g * g * d1 / np.pi
            out[(2, zpp)] = (np.pi / n_cheb) * g * g * d2 / np.pi
        return out

    worst = 0.0
    for z in (1, -1):
        fwd = second_order(nv, rho, u, z_right=z)
        for zpp in (1, -1):
            rev_z = second_order(nv, -u, -rho, z_right=zpp)
            # the sign comes from the i*u prefactor of the factorized
            # resolvent: i u <-> i (-rho) under the exchange
            ratio = -(eta_im(np.asarray([rho]), z, m)[0]
                      / eta_im(np.asarray([u]), zpp, m)[0])
            for i in (1, 2):
                lhs = fwd[(i, zpp)]
                rhs = ratio * rev_z[(i, z)]
                scale = max(abs(lhs), abs(rhs), 1e-12)
                worst = max(worst, abs(lhs - rhs) / scale)
    return CheckResult("density exchange symmetry", worst, tol)


def check_cpt(g: float = 0.3, mu: float = 1.0, m: float = 1.0, b: float = 0.5,
              tol: float = 1e-8) -> CheckResult:
    """Charge-parity-time pairs: F^{zbar}_kappa(b|g) = F^{-zbar}_{-kappa}(b|-g)
    for the vector coupling and with unchanged g for the scalar one."""
    from .engine import cpt_pair
    worst = 0.0
    w = yukawa(g, mu)
    e = EnergyPoint(b=b, zbar=1, m=m)
    small = dict(r_lo=0.02, nlad=7, pts_per_decade=130, fine=400, s_max=4.0e3)
    for tag in ("dirac_vector", "dirac_scalar"):
        kind = InteractionKind(tag, m=m)
        ch = make_channel(3, 0.5, +1)
        F1, F2 = cpt_pair(w, ch, kind, e, **small)
        worst = max(worst, abs(F1.value - F2.value) / abs(F1.value))
    return CheckResult("charge-parity-time pairs", worst, tol)


def check_factorization(g: float = 0.3, mu: float = 1.0, m: float = 1.0,
                        b: float = 0.4, rho: float = 0.8,
                        n_nu: int = 64, n_t: int = 64,
                        tol: float = 1e-5) -> CheckResult:
    """One density table reproduces the marched resolvent columns of all four
    lowest channels (channel-independence of the density)."""
    from .density import resolvent_from_density, solve_density
    w = yukawa(g, mu)
    kind = InteractionKind("dirac_vector", m=m)
    e = EnergyPoint(b=b, zbar=1, m=m)
    tab = solve_density(w, kind, rho, e, n_nu=n_nu, n_t=n_t)
    worst = 0.0
    for J, xi in ((0.5, 1), (0.5, -1), (1.5, 1), (1.5, -1)):
        ch = make_channel(3, J, xi)
        ug, cols = resolvent_from_density(tab, ch)
        base_grid = GapGrid.build(w.mu0, float(ug[-1] - rho) + 0.5,
                                  pts_per_decade=60, fine=140)
        s_union = np.unique(np.concatenate([base_grid.s, np.real(ug) - rho]))
        grid = GapGrid(mu0=w.mu0, s=s_union)
        for z in (1, -1):
            col = DiracColumn(w, ch, kind, e, grid, base=rho, z_right=z)
            for zpp in (1, -1):
                ref = col.interp(zpp, np.real(ug))
                scale = max(np.max(np.abs(ref)), 1e-30)
                worst = max(worst, float(np.max(np.abs(ref - cols[(zpp, z)])) / scale))
    return CheckResult("channel factorization", worst, tol)


def check_continuation(g: float = 0.25, mu: float = 1.0, b: float = 0.45,
                       tol: float = 1e-4) -> CheckResult:
    """The physical-region system evaluated at imaginary momenta matches the
    continued system (second order, spin-free)."""
    from .density import born_plus_one_physical
    w = yukawa(g, mu)
    e = EnergyPoint(b=b)
    rho, u = 0.8, 4.0
    nus = np.array([2.2, 2.8, 3.1])
    # continued side: direct window quadrature
    n_cheb = 48
    xch = chebyshev_nodes(n_cheb)
    worst = 0.0
    for nv in nus:
        lm, lp = lambda_window(nv, mu, mu, np.asarray([u]), rho)
        lm, lp = float(np.real(lm[0])), float(np.real(lp[0]))
        al2 = 0.5 * (lp + lm) + 0.5 * (lp - lm) * xch
        cont = g * g / np.pi * (np.pi / n_cheb) * np.sum(1.0 / (al2 - b * b))
        phys = born_plus_one_physical(w, 1j * u, 1j * rho, e, [nv],
                                      continued_branch=True)[0]
        worst = max(worst, abs(cont - complex(phys)) / max(abs(cont), 1e-12))
    return CheckResult("continuation identity", worst, tol)


def check_dispersion(g: float = 0.5, mu: float = 1.0, b_eval: float = 0.7,
                     n_eps: int = 400, tol: float = 1e-3,
                     attractive: bool = False) -> CheckResult:
    """Spectral representation: F(b) against the phase integral (plus the
    zero factor when a bound state exists)."""
    from .engine import dispersion_check
    from .oracle import variable_phase, shooting_eigenvalue
    if attractive:
        g = -2.0
        mu = 0.1
    w = yukawa(g, mu)
    bound = []
    if attractive:
        bound = [shooting_eigenvalue(0, w, 0.5, 1.2)]
    mismatch = dispersion_check(w, 0, lambda k: variable_phase(0, w, k),
                                bound, b_eval, n_eps=n_eps)
    return CheckResult("dispersion identity" + (" (attractive)" if attractive else ""),
                       mismatch, tol)


def run_all(fault: Optional[float] = None, seed: int = 0):
    """Full invariant suite; ``fault`` perturbs the symmetry check's kernel."""
    del seed  # reserved for randomized fault placement
    checks = [
        check_layer_collapse(),
        check_cross_channel_identity(),
        check_layer_product(),
        check_projector_series(),
        check_gegenbauer_recurrence(),
        check_projector_orthogonality(),
        check_resolvent_symmetry(fault=fault),
        check_density_symmetry(),
        check_cpt(),
        check_factorization(n_nu=40, n_t=40, tol=3e-5),
        check_continuation(),
        check_dispersion(),
    ]
    return checks
