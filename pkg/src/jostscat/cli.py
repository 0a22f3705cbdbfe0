"""Batch front door: configuration files, sweeps, plot-ready tables.

Subcommands: phase, jost-scan, bound-states, amplitude, kernel-dump,
selftest.  Every run reads one flat key=value config with section headers,
writes CSV plus a JSON sidecar of run metadata (config hash, package
version, tolerances, truncation diagnostics), and exits 0 on success, 1 on
validation errors, 2 on numerical failures.  Identical config and version
give byte-identical outputs: rows are computed by an order-independent
parallel map, sorted before writing, and formatted with a fixed float
representation.  The worker count comes from JOSTSCAT_THREADS; --seed only
affects fault injection in selftest.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from . import __version__
from .channels import make_channel
from .engine import EnergyPoint, jost, jost_schrodinger, kernel_dirac, \
    kernel_schrodinger, phase_shift
from .errors import JostscatError, NumericsError, ValidationError
from .potential import InteractionKind, SpectralWeight, load_weight
from .oracle import (bound_states, jost_oracle_dirac, jost_oracle_schrodinger,
                     shooting_eigenvalue, variable_phase)

_FLOAT = "{:.12e}"


@dataclass
class RunConfig:
    kind: InteractionKind
    weight: SpectralWeight
    weight_path: str
    N: int = 3
    channels: list = field(default_factory=list)     # (J, xi) pairs or bare l
    k_grid: np.ndarray = None
    b_re: np.ndarray = None
    b_im: np.ndarray = None
    zbar: int = +1
    rel_tol: float = 1e-5
    s_max: Optional[float] = None
    pts_per_decade: int = 26
    out_dir: str = "out"
    seed: int = 0
    fault: Optional[float] = None
    q_grid: np.ndarray = None
    u_grid: np.ndarray = None
    raw: dict = field(default_factory=dict)


def _parse_grid(text: str) -> np.ndarray:
    """'start:stop:num' for linspace, or comma-separated values."""
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise ValidationError(f"grid spec {text!r} wants start:stop:num")
        return np.linspace(float(parts[0]), float(parts[1]), int(parts[2]))
    return np.asarray([float(v) for v in text.split(",")])


def parse_config(path) -> RunConfig:
    """Flat key=value with [section] headers; strict validation."""
    sections: dict = {}
    cur = "run"
    sections[cur] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for ln_no, raw in enumerate(fh, 1):
            s = raw.split("#", 1)[0].strip()
            if not s:
                continue
            if s.startswith("[") and s.endswith("]"):
                cur = s[1:-1].strip()
                sections.setdefault(cur, {})
                continue
            if "=" not in s:
                raise ValidationError(f"{path}:{ln_no}: expected key = value, got {raw!r}")
            key, val = (t.strip() for t in s.split("=", 1))
            sections[cur][key] = val

    run = sections.get("run", {})
    if "weight" not in run:
        raise ValidationError("config needs run.weight = <path>")
    wpath = Path(path).parent / run["weight"]
    weight, kind_from_file = load_weight(wpath)
    tag = run.get("kind")
    if tag is not None:
        m = float(run["mass"]) if "mass" in run else None
        kind = InteractionKind(tag, m=m)
    elif kind_from_file is not None:
        kind = kind_from_file
    else:
        kind = InteractionKind("schrodinger")

    chan_sec = sections.get("channels", {})
    channels = []
    if "l" in chan_sec:
        for lv in chan_sec["l"].split(","):
            channels.append(int(lv))
    if "j" in chan_sec:
        xis = ([int(x) for x in chan_sec.get("xi", "+1,-1").split(",")])
        for jv in chan_sec["j"].split(","):
            for xi in xis:
                channels.append((float(jv), xi))
    if not channels:
        channels = [0] if not kind.is_dirac else [(0.5, +1), (0.5, -1)]
    N = int(run.get("n", 3))
    for chdef in channels:
        if isinstance(chdef, tuple):
            make_channel(N, chdef[0], chdef[1])    # validates

    en = sections.get("energy", {})
    num = sections.get("numerics", {})
    out = sections.get("output", {})
    out_dir = out.get("dir", "out")
    if not os.path.isabs(out_dir):
        out_dir = str(Path(path).parent / out_dir)
    cfg = RunConfig(
        kind=kind, weight=weight, weight_path=str(wpath), N=N,
        channels=channels,
        k_grid=_parse_grid(en["k"]) if "k" in en else None,
        b_re=_parse_grid(en["b_re"]) if "b_re" in en else None,
        b_im=_parse_grid(en["b_im"]) if "b_im" in en else None,
        zbar=int(en.get("zbar", "1")),
        rel_tol=float(num.get("rel_tol", "1e-5")),
        s_max=float(num["s_max"]) if "s_max" in num else None,
        pts_per_decade=int(num.get("pts_per_decade", "26")),
        out_dir=out_dir,
        q_grid=_parse_grid(en["q"]) if "q" in en else None,
        u_grid=_parse_grid(en["u"]) if "u" in en else None,
        raw={k: dict(v) for k, v in sections.items()},
    )
    if cfg.rel_tol <= 0:
        raise ValidationError("numerics.rel_tol must be positive")
    return cfg


def _n_workers() -> int:
    env = os.environ.get("JOSTSCAT_THREADS")
    if env:
        return max(1, int(env))
    return min(8, os.cpu_count() or 1)


def _pmap(fn, items):
    if _n_workers() == 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=_n_workers()) as ex:
        return list(ex.map(fn, items))


def _config_hash(cfg: RunConfig) -> str:
    blob = json.dumps(cfg.raw, sort_keys=True).encode()
    with open(cfg.weight_path, "rb") as fh:
        blob += fh.read()
    return hashlib.sha256(blob).hexdigest()[:16]


def _write_table(cfg: RunConfig, name: str, header, rows, extra_meta=None):
    outdir = Path(cfg.out_dir)
    outdir.mkdir(parents=True, exist_ok=True)
    rows = sorted(rows)
    csv_path = outdir / f"{name}.csv"
    with open(csv_path, "w", encoding="utf-8") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(v if isinstance(v, str) else _FLOAT.format(v)
                              for v in row) + "\n")
    meta = {
        "tool": "jostscat",
        "version": __version__,
        "config_hash": _config_hash(cfg),
        "rel_tol": cfg.rel_tol,
        "rows": len(rows),
    }
    meta.update(extra_meta or {})
    with open(outdir / f"{name}.json", "w", encoding="utf-8") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return csv_path


def _channel_id(chdef) -> str:
    if isinstance(chdef, tuple):
        J, xi = chdef
        return f"J{J}{'p' if xi > 0 else 'm'}"
    return f"l{chdef}"


def cmd_phase(cfg: RunConfig) -> int:
    if cfg.k_grid is None:
        raise ValidationError("phase needs an energy.k grid")
    diags = {}

    def work(item):
        chdef, k = item
        if cfg.kind.is_dirac:
            raise ValidationError("phase tables are produced for the "
                                  "Schrodinger kind (real-k continuum)")
        l = int(chdef)
        Fp = jost_schrodinger(cfg.weight, l, EnergyPoint(b=1j * k),
                              s_max=cfg.s_max, pts_per_decade=cfg.pts_per_decade)
        Fm = jost_schrodinger(cfg.weight, l, EnergyPoint(b=-1j * k),
                              s_max=cfg.s_max, pts_per_decade=cfg.pts_per_decade)
        delta_v = phase_shift(Fp.value, Fm.value)
        s_abs = abs(Fp.value / Fm.value)
        Fo_p = jost_oracle_schrodinger(l, cfg.weight, 1j * k)
        Fo_m = jost_oracle_schrodinger(l, cfg.weight, -1j * k)
        delta_o = phase_shift(Fo_p, Fo_m)
        return (_channel_id(chdef), k, delta_v, delta_o,
                abs(s_abs - 1.0), abs(delta_v - delta_o))

    items = [(ch, float(k)) for ch in cfg.channels for k in cfg.k_grid]
    rows = _pmap(work, items)
    _write_table(cfg, "phase", ["channel", "k", "delta_volterra",
                                "delta_oracle", "unitarity_defect", "abs_diff"],
                 rows, diags)
    return 0


def cmd_jost_scan(cfg: RunConfig) -> int:
    if cfg.b_re is None:
        raise ValidationError("jost-scan needs an energy.b_re grid")
    b_im = cfg.b_im if cfg.b_im is not None else np.array([0.0])

    def work(item):
        chdef, bre, bim = item
        b = bre + 1j * bim
        try:
            e = EnergyPoint(b=b, zbar=cfg.zbar,
                            m=cfg.kind.m if cfg.kind.is_dirac else None)
            res = jost(cfg.weight, cfg.kind,
                       make_channel(cfg.N, *chdef) if isinstance(chdef, tuple)
                       else chdef, e)
            flag = "on-cut" if e.on_cut else "ok"
            return (_channel_id(chdef), bre, bim, res.value.real,
                    res.value.imag, res.method, res.error_estimate, flag)
        except NumericsError as exc:
            return (_channel_id(chdef), bre, bim, float("nan"), float("nan"),
                    "failed", float("nan"), f"error:{type(exc).__name__}")

    items = [(ch, float(br), float(bi)) for ch in cfg.channels
             for br in cfg.b_re for bi in b_im]
    rows = _pmap(work, items)
    _write_table(cfg, "jost_scan",
                 ["channel", "re_b", "im_b", "re_F", "im_F", "method",
                  "error_estimate", "flag"], rows)
    return 0


def cmd_bound_states(cfg: RunConfig) -> int:
    b_lo = float(cfg.raw.get("energy", {}).get("b_lo", 0.05))
    b_hi = float(cfg.raw.get("energy", {}).get("b_hi", 2.0))
    rows = []
    for chdef in cfg.channels:
        l = int(chdef) if not isinstance(chdef, tuple) else None
        if l is None:
            raise ValidationError("bound-states supports the Schrodinger kind")
        roots_v = bound_states(
            lambda b: jost_schrodinger(cfg.weight, l, EnergyPoint(b=b),
                                       s_max=cfg.s_max).value, b_lo, b_hi)
        roots_o = bound_states(
            lambda b: jost_oracle_schrodinger(l, cfg.weight, b), b_lo, b_hi)
        for n, rv in enumerate(roots_v):
            ro = roots_o[n] if n < len(roots_o) else float("nan")
            rows.append((_channel_id(chdef), float(n), rv, ro, abs(rv - ro)))
    _write_table(cfg, "bound_states",
                 ["channel", "index", "b_volterra", "b_oracle", "abs_diff"], rows)
    return 0


def cmd_amplitude(cfg: RunConfig) -> int:
    from .density import fg_partial_amplitude
    if cfg.k_grid is None or cfg.q_grid is None:
        raise ValidationError("amplitude needs energy.k and energy.q grids")

    def work(item):
        chdef, k, q = item
        l = int(chdef)
        e = EnergyPoint(b=-1j * k)
        T = fg_partial_amplitude(cfg.weight, l, q, k, e)
        return (_channel_id(chdef), k, q, T.real, T.imag)

    items = [(ch, float(k), float(q)) for ch in cfg.channels
             for k in cfg.k_grid for q in cfg.q_grid]
    rows = _pmap(work, items)
    _write_table(cfg, "amplitude",
                 ["channel", "k", "q", "re_T", "im_T"], rows)
    return 0


def cmd_kernel_dump(cfg: RunConfig) -> int:
    if cfg.u_grid is None:
        raise ValidationError("kernel-dump needs an energy.u grid")
    rows = []
    ug = cfg.u_grid
    for chdef in cfg.channels:
        for i, u in enumerate(ug):
            for j, rho in enumerate(ug):
                if u - rho < cfg.weight.mu0 - 1e-12:
                    continue
                if cfg.kind.is_dirac and isinstance(chdef, tuple):
                    ch = make_channel(cfg.N, *chdef)
                    for zp in (1, -1):
                        for z in (1, -1):
                            val = complex(kernel_dirac(cfg.weight, ch, cfg.kind,
                                                       zp, z, u, rho))
                            rows.append((_channel_id(chdef), float(u), float(rho),
                                         f"{zp:+d}{z:+d}", val.real, val.imag))
                else:
                    val = complex(kernel_schrodinger(cfg.weight, int(chdef),
                                                     cfg.N, u, rho))
                    rows.append((_channel_id(chdef), float(u), float(rho),
                                 "--", val.real, val.imag))
    _write_table(cfg, "kernel",
                 ["channel", "u", "rho", "sheets", "re_K", "im_K"], rows)
    return 0


def cmd_selftest(cfg: RunConfig) -> int:
    from . import selftest
    fault = cfg.fault
    checks = selftest.run_all(fault=fault, seed=cfg.seed)
    rows = [(c.name, c.error, c.tol, "pass" if c.passed else "FAIL")
            for c in checks]
    _write_table(cfg, "selftest", ["check", "error", "tolerance", "status"],
                 rows, {"fault": fault})
    for c in checks:
        print(c.line())
    if fault is not None:
        # negative control: the perturbed kernel must break the symmetry
        sym = [c for c in checks if "exchange symmetry" in c.name][0]
        if sym.passed:
            print("fault injection failed to break the symmetry check",
                  file=sys.stderr)
            return 2
        return 0
    return 0 if all(c.passed for c in checks) else 2


_COMMANDS = {
    "phase": cmd_phase,
    "jost-scan": cmd_jost_scan,
    "bound-states": cmd_bound_states,
    "amplitude": cmd_amplitude,
    "kernel-dump": cmd_kernel_dump,
    "selftest": cmd_selftest,
}


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="jostscat",
        description="Jost functions, phases and bound states for generalized "
                    "Yukawa interactions")
    parser.add_argument("command", choices=sorted(_COMMANDS))
    parser.add_argument("config", help="run configuration file")
    parser.add_argument("--seed", type=int, default=0,
                        help="seed for fault-injection tests only")
    parser.add_argument("--fault", type=float, default=None,
                        help="selftest fault-injection amplitude")
    args = parser.parse_args(argv)
    try:
        cfg = parse_config(args.config)
        cfg.seed = args.seed
        cfg.fault = args.fault
        return _COMMANDS[args.command](cfg)
    except ValidationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 1
    except NumericsError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2
    except JostscatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
