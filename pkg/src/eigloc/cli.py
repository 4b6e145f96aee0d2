"""Command-line front end: sweeps over the asymptotic laws and eigenmodes, emitted as CSV or JSON.

Every CSV starts with one ``#`` line holding the JSON echo of the effective
configuration, followed by a header row and data rows.  Floats are written in
shortest round-trip form, so identical configurations give identical bytes.

Exit codes: 0 success, 1 invariant or selftest failure, 2 I/O or config error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from importlib import resources

import numpy as np
import scipy.special as sc

from . import __version__, asymptotics, modes, specfun, zeros
from .errors import EiglocError
from .geometry import DomainSpec, ModeIndex

EXIT_OK, EXIT_INVARIANT, EXIT_IO = 0, 1, 2
SCHEMA_ID = "eigloc.sweep/v1"


class ConfigError(Exception):
    """Unreadable or inconsistent configuration."""


class InvariantError(Exception):
    """Computed data violate a property the sweep promises."""


# ---------------------------------------------------------------------------
# Configuration
# ---------------------------------------------------------------------------


def _floats(text):
    out = []
    for tok in str(text).split(","):
        tok = tok.strip()
        if not tok:
            continue
        if tok == "s":
            out.append("s")
            continue
        try:
            out.append(float(tok))
        except ValueError:
            raise ConfigError(f"not a number: {tok!r}") from None
    if not out:
        raise ConfigError("empty grid")
    return out


def _ints(text):
    vals = _floats(text)
    if any(v == "s" or v != int(v) for v in vals):
        raise ConfigError(f"expected integers, got {text!r}")
    return [int(v) for v in vals]


def _pairs(text):
    out = []
    for tok in str(text).split(";"):
        tok = tok.strip()
        if tok:
            try:
                l, k = (int(x) for x in tok.split(":"))
            except ValueError:
                raise ConfigError(f"ladder rung must look like l:k, got {tok!r}") from None
            out.append((l, k))
    if not out:
        raise ConfigError("empty ladder")
    return out


def read_config(path):
    """Flat ``key = value`` file; ``#`` starts a comment."""
    cfg = {}
    try:
        with open(path, encoding="utf-8") as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    for n, line in enumerate(lines, 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{n}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        cfg[key.replace("-", "_")] = value
    return cfg


# (parser, default) per option; defaults are strings so config files and flags parse alike
OPTIONS = {
    "h-of-w": {"w": (_floats, "0.1,0.2,0.5,1,2,5,10,20,50,100,1000")},
    "g-of-w": {
        "R": (_floats, "1.5,2,3,5,10"),
        "w": (_floats, ",".join(str(x) for x in np.round(np.arange(0, 20.25, 0.25), 2))),
    },
    "critical": {"R": (_floats, "1.25,1.5,2,3,5,10")},
    "index-sweep": {
        "R": (float, "3"),
        "eps": (_floats, "0.05,0.1,0.2"),
        "w": (_floats, "0.5,1,1.5,s,3,5,10,20"),
        "ladder": (_ints, "100,200,500"),
        "d": (int, "2"),
        "c": (float, "1"),
    },
    "mode-export": {
        "domain": (str, "disk"),
        "l": (int, "100"),
        "k": (int, "20"),
        "c": (float, "1"),
        "R": (float, "3"),
        "beta": (float, "0.5"),
        "parity": (str, "cos"),
        "resolution": (int, "400"),
    },
    "zeros": {
        "kind": (str, "j"),
        "nu": (_floats, "0,0.5,1,5,20,50"),
        "k_max": (int, "20"),
        "R": (float, "2"),
    },
    "convergence": {
        "family": (str, "ball"),
        "w": (float, "5"),
        "R": (float, "3"),
        "ladder": (_pairs, "25:5;100:20;500:100;2500:500"),
        "eps": (float, "0.1"),
        "c": (float, "1"),
    },
    "selftest": {},
}

LADDERS = {
    "ball": "25:5;100:20;500:100;2500:500",
    "shell": "100:10;200:20;500:50;1000:100;2000:200",
    "shell-fixed-k": "10:1;50:1;200:1;1000:1;2500:1",
}
FULL_EXTRA = {"ball": [(10000, 2000)], "shell": [(10000, 1000)], "shell-fixed-k": [(10000, 1)]}
QUICK_NU_CAP = 2500


def _over_cap(nu):
    # nu_l = sqrt(l^2 + c^2) sits a hair above l, so l = 2500 still counts as within the cap
    return nu > QUICK_NU_CAP * (1.0 + 1e-6)


def effective_config(command, args):
    """Merge defaults < config file < explicit flags, then parse."""
    spec = OPTIONS[command]
    raw = {k: v[1] for k, v in spec.items()}
    if command == "convergence":
        fam = getattr(args, "family", None)
        if fam is None and args.config:
            fam = read_config(args.config).get("family")
        raw["ladder"] = LADDERS.get(fam or "ball", LADDERS["ball"])
        if (fam or "ball") != "ball":
            raw["w"] = "10"
    if args.config:
        for key, value in read_config(args.config).items():
            if key not in spec and key not in ("format", "workers"):
                raise ConfigError(f"unknown config key {key!r} for {command}")
            raw[key] = value
    for key in spec:
        val = getattr(args, key, None)
        if val is not None:
            raw[key] = val
    cfg = {}
    for key, (parse, _) in spec.items():
        try:
            cfg[key] = parse(raw[key])
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad value for {key}: {raw[key]!r} ({exc})") from None
    return cfg


# ---------------------------------------------------------------------------
# Emission
# ---------------------------------------------------------------------------


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if v is None:
        return ""
    return str(v)


def _jsonable(v):
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, np.bool_):
        return bool(v)
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return v
    return v


def load_schema():
    return json.loads(resources.files("eigloc").joinpath("schemas/sweep-v1.json").read_text())


def render(command, cfg, meta, columns, rows, fmt):
    if fmt == "json":
        import jsonschema

        doc = _jsonable(
            {"schema": SCHEMA_ID, "command": command, "config": cfg, "meta": meta, "columns": columns, "rows": rows}
        )
        jsonschema.validate(doc, load_schema())
        return json.dumps(doc, sort_keys=True, indent=1) + "\n"
    buf = io.StringIO()
    head = json.dumps(_jsonable({"command": command, "config": cfg, "meta": meta}), sort_keys=True)
    buf.write("# " + head + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def _map(fn, tasks, workers):
    if workers <= 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, tasks))


# ---------------------------------------------------------------------------
# Commands; each returns (columns, rows, meta)
# ---------------------------------------------------------------------------


def cmd_h_curve(cfg, opts):
    ws = sorted(float(w) for w in cfg["w"])
    if any(w <= 0 for w in ws):
        raise ConfigError("w-grid must be positive")
    rows = []
    for w in ws:
        h = asymptotics.h_of_w(w)
        rows.append([w, h, 1.0 / h])
    radii = [r[2] for r in rows]
    if any(b <= a for a, b in zip(radii, radii[1:])):
        raise InvariantError("localized radius 1/h(w) not strictly increasing")
    return ["w", "h", "localized_radius"], rows, {}


def _g_task(task):
    R, ws = task
    sol = asymptotics.g_R(R, max(max(ws), 1e-3))
    return [(R, w, sol(w)) for w in ws]


def cmd_gr_curves(cfg, opts):
    ws = sorted(float(w) for w in cfg["w"])
    if any(w < 0 for w in ws):
        raise ConfigError("w-grid must be >= 0")
    Rs = [float(R) for R in cfg["R"]]
    if any(R <= 1 for R in Rs):
        raise ConfigError("every R must exceed 1")
    rows = []
    for block in _map(_g_task, [(R, ws) for R in Rs], opts.workers):
        ratios = []
        for R, w, g in block:
            if not g > math.pi / (R - 1) and w > 0:
                raise InvariantError(f"g_R({w}) <= pi/(R-1) at R={R}")
            ratio = w / g
            ratios.append(ratio)
            rows.append([R, w, g, ratio, R - ratio])
        if any(b <= a for a, b in zip(ratios, ratios[1:])) or max(ratios) >= block[0][0]:
            raise InvariantError("w/g_R(w) must increase and stay below R")
    return ["R", "w", "g", "w_over_g", "R_minus_w_over_g"], rows, {}


def _critical_task(R):
    c = asymptotics.critical_s(R)
    return c.R, c.s, c.residual


def cmd_critical_curve(cfg, opts):
    Rs = sorted(float(R) for R in cfg["R"])
    if any(R <= 1 for R in Rs):
        raise ConfigError("every R must exceed 1")
    rows = []
    for R, s, res in _map(_critical_task, Rs, opts.workers):
        upper = 2 * math.pi * R / ((R - 1) * (2 * R - math.pi)) if R > math.pi / 2 else None
        if not s > math.pi / (R - 1) or (upper is not None and not s < upper):
            raise InvariantError(f"s({R}) outside its bounds")
        rows.append([R, s, res, math.pi / (R - 1), upper])
    ss = [r[1] for r in rows]
    if any(b >= a for a, b in zip(ss, ss[1:])):
        raise InvariantError("s(R) not strictly decreasing")
    return ["R", "s", "residual", "lower_bound", "upper_bound"], rows, {}


def ladder_rung(w, n):
    """k first, then l = round(w k), for a rung whose l is near n."""
    k = max(1, round(n / w))
    return int(round(w * k)), int(k)


def _index_task(task):
    R, w, l, k, d, c, epss = task
    domain = DomainSpec.shell(R, d)
    mode = ModeIndex(k, l, d, c)
    prof = modes.radial_profile(mode, domain)
    return [modes.localization_index(R, e, w, l, k, d, c, profile=prof) for e in epss]


def cmd_index_sweep(cfg, opts):
    R = cfg["R"]
    s = asymptotics.critical_s(R).s
    ws = sorted(s if w == "s" else float(w) for w in cfg["w"])
    rungs = sorted(cfg["ladder"])
    if opts.full:
        rungs = sorted(set(rungs) | {1000, 2000})
    epss = [float(e) for e in cfg["eps"]]
    tasks, keys = [], []
    for wi, w in enumerate(ws):
        for n in rungs:
            l, k = ladder_rung(w, n)
            if opts.quick and _over_cap(modes.nu_of_l(l, cfg["d"], cfg["c"])):
                continue
            tasks.append((R, w, l, k, cfg["d"], cfg["c"], epss))
            keys.append((wi, w, l, k))
    results = _map(_index_task, tasks, opts.workers)
    rows = []
    for ei, e in enumerate(epss):
        for (wi, w, l, k), gam in zip(keys, results):
            rows.append([R, e, w, l, k, l / k, gam[ei], w > s])
    return ["R", "eps", "w", "l", "k", "realized_w", "gamma", "supercritical"], rows, {"s_R": s}


def _export_domain(cfg):
    kind = cfg["domain"]
    if kind == "disk":
        return DomainSpec.ball(2)
    if kind == "annulus":
        return DomainSpec.shell(cfg["R"], 2)
    if kind == "sector":
        return DomainSpec.sector(cfg["beta"])
    if kind == "annulus_sector":
        return DomainSpec.annulus_sector(cfg["R"], cfg["beta"])
    raise ConfigError(f"unknown domain {kind!r}")


def cmd_mode_export(cfg, opts):
    domain = _export_domain(cfg)
    n = cfg["resolution"]
    if n < 2:
        raise ConfigError("resolution must be >= 2")
    mode = ModeIndex(cfg["k"], cfg["l"], 2, cfg["c"])
    prof = modes.radial_profile(mode, domain)
    r, th, u = modes.heatmap(prof, n, n, cfg["parity"])
    w = mode.l / mode.k
    pred = asymptotics.localized_radius(domain, w) if w > 0 else None
    meta = {
        "nu": prof.nu,
        "zero": prof.zero,
        "eigenvalue": prof.zero**2,
        "localized_radius_prediction": pred,
        "envelope_argmax": prof.argmax(),
        "normalization": "sup|u| = 1",
    }
    rows = [[r[i], th[j], u[i, j]] for i in range(r.size) for j in range(th.size)]
    return ["r", "theta", "value"], rows, meta


def cmd_zeros(cfg, opts):
    kind, kmax = cfg["kind"], cfg["k_max"]
    if kmax < 1:
        raise ConfigError("k_max must be >= 1")
    rows = []
    if kind == "airy":
        vals = [zeros.airy_zero(k) for k in range(1, kmax + 1)]
        return ["k", "zero"], [[k, z] for k, z in zip(range(1, kmax + 1), vals)], {}
    if kind not in ("j", "cross"):
        raise ConfigError("kind must be j, cross or airy")
    for nu in cfg["nu"]:
        if nu == "s" or nu < 0:
            raise ConfigError("orders must be numbers >= 0")
        if kind == "j":
            zs = zeros.bessel_zeros_j(nu, kmax)
        else:
            zs = zeros.cross_zeros(nu, cfg["R"], kmax)
        rows.extend([nu, k, z] for k, z in zip(range(1, kmax + 1), zs))
    meta = {"R": cfg["R"]} if kind == "cross" else {}
    return ["nu", "k", "zero"], rows, meta


def _conv_task(task):
    family, l, k, c, R, eps, w = task
    if family == "ball":
        mode = ModeIndex(k, l, 2, c)
        prof = modes.radial_profile(mode, DomainSpec.ball(2))
        ratio = modes.localization_ratio(mode, DomainSpec.ball(2), math.inf, eps, w, profile=prof).ratio_total
        return prof.nu, prof.zero, ratio
    nu = modes.nu_of_l(l, 2, c)
    return nu, zeros.cross_zero(nu, k, R), None


def cmd_convergence(cfg, opts):
    family, w, R, c = cfg["family"], cfg["w"], cfg["R"], cfg["c"]
    if family not in LADDERS:
        raise ConfigError(f"family must be one of {sorted(LADDERS)}")
    ladder = list(cfg["ladder"])
    if opts.full:
        ladder += [r for r in FULL_EXTRA[family] if r not in ladder]
    if opts.quick:
        ladder = [(l, k) for l, k in ladder if not _over_cap(modes.nu_of_l(l, 2, c))]
    if family == "ball":
        limit = asymptotics.h_of_w(w)
    elif family == "shell":
        limit = asymptotics.cached_g(R, max(128.0, 2.0 ** math.ceil(math.log2(w))))(w) / w
    else:
        limit = 1.0 / R
    tasks = [(family, l, k, c, R, cfg["eps"], w) for l, k in ladder]
    rows = []
    for (l, k), (nu, z, ratio) in zip(ladder, _map(_conv_task, tasks, opts.workers)):
        rows.append([l, k, l / k, nu, z, z / nu, limit, abs(z / nu - limit), ratio])
    errs = [r[7] for r in rows]
    if any(b >= a for a, b in zip(errs, errs[1:])):
        raise InvariantError("abs_err not strictly decreasing along the ladder")
    cols = ["l", "k", "realized_w", "nu", "zero", "zero_ratio", "limit", "abs_err", "sup_ratio"]
    return cols, rows, {"family": family}


COMMANDS = {
    "h-of-w": cmd_h_curve,
    "g-of-w": cmd_gr_curves,
    "critical": cmd_critical_curve,
    "index-sweep": cmd_index_sweep,
    "mode-export": cmd_mode_export,
    "zeros": cmd_zeros,
    "convergence": cmd_convergence,
}


# ---------------------------------------------------------------------------
# Selftest
# ---------------------------------------------------------------------------


def _check_kernel(quick):
    # Debye tails against AMOS where both are valid, plus the Wronskian
    nus = [300.0, 1000.0] if quick else [300.0, 1000.0, 3000.0]
    worst, wron = 0.0, 0.0
    for nu in nus:
        x = nu * np.linspace(0.2, 0.6, 9)
        jv, yv = sc.jv(nu, x), sc.yv(nu, x)
        x = x[(jv > 1e-300) & (yv > -1e300)]
        lj, ly = specfun.debye_log_jy(nu, x)
        worst = max(worst, float(np.max(np.abs(lj - np.log(sc.jv(nu, x))), initial=0.0)))
        worst = max(worst, float(np.max(np.abs(ly - np.log(-sc.yv(nu, x))), initial=0.0)))
        for xx in (0.8 * nu, nu, 2.0 * nu):
            w = specfun.bessel_j(nu, xx) * specfun.bessel_yp(nu, xx) - specfun.bessel_jp(nu, xx) * specfun.bessel_y(nu, xx)
            err = abs(w * math.pi * xx / 2.0 - 1.0)
            wron = max(wron, err if math.isfinite(err) else math.inf)
    ok = worst < 1e-10 and wron < 1e-9
    return ok, f"Debye/AMOS log mismatch {worst:.1e}; Wronskian rel err {wron:.1e}"


def _check_ratio_bounds(quick):
    bad = 0
    for nu in (5.0, 20.0, 100.0, 1000.0):
        z = np.linspace(0.02, 1.0, 50)
        lr = modes.j_ratio_bound_log(nu, z)
        tol = 1e-12 * (1.0 + nu)
        bad += int(np.sum((lr < -tol) | (lr > nu * (1 - z) + tol)))
    for l in (200,) if quick else (200, 1000):
        nu = modes.nu_of_l(l, 2, 1.0)
        a = zeros.cross_zero(nu, l // 10, 3.0)
        z = np.linspace(a / nu, 1.0, 40)[1:]
        sign, lr = modes.cylinder_ratio_bound_log(nu, a, z)
        tol = 1e-10 * (1.0 + nu)
        bad += int(np.sum((sign < 0) | (lr > nu * (1 - z) + tol)))
    return bad == 0, f"{bad} violations"


def _check_bounds(quick):
    Rs = (2.0, 3.0) if quick else (1.1, 1.5, 2.0, 3.0, 5.0, 10.0)
    for R in Rs:
        g = asymptotics.g_R(R, 100.0)
        asymptotics.check_g_solution(g)
        asymptotics.check_f_dominates(g, asymptotics.f_R(R, 100.0))
    ss = [asymptotics.critical_s(R).s for R in (1.5, 2.0, 3.0, 5.0)]
    ok = all(b < a for a, b in zip(ss, ss[1:]))
    return ok, f"g_R/f_R invariants on R={list(Rs)}; s(R) decreasing={ok}"


def _check_zeros(quick):
    nmax, kmax = (20, 10) if quick else (100, 50)
    nus = [0, 1, 5, 20] if quick else [0, 1, 5, 20, 50, 100]
    bad = 0
    for nu in nus:
        if nu + 1 > nmax:
            continue
        a = zeros.bessel_zeros_j(nu, kmax)
        b = zeros.bessel_zeros_j(nu + 1, kmax)
        bad += int(np.sum(a >= b)) + int(np.sum(b[:-1] >= a[1:]))
        th, lm = specfun.phase_modulus(nu, a)
        bad += int(np.sum(np.abs(np.cos(th)) > 1e-9))
    az = [zeros.airy_zero(k) for k in range(1, 21 if quick else 101)]
    bad += int(np.sum(np.diff(az) >= 0))
    return bad == 0, f"{bad} interlacing/residual/ordering failures"


def _check_asymptotics(quick):
    ws = np.logspace(-3, 6, 40)
    res = max(asymptotics.h_residual(w) for w in ws)
    ladder = [(25, 5), (100, 20), (500, 100)] if quick else [(25, 5), (100, 20), (500, 100), (2500, 500)]
    h5 = asymptotics.h_of_w(5.0)
    errs = []
    for l, k in ladder:
        nu = modes.nu_of_l(l, 2, 1.0)
        errs.append(abs(zeros.bessel_zero_j(nu, k) / nu - h5))
    mono = all(b < a for a, b in zip(errs, errs[1:]))
    return res <= 1e-12 and mono, f"h residual {res:.1e}; ladder errors decreasing={mono}"


SELFTEST_GROUPS = {
    "kernel": _check_kernel,
    "ratio-bounds": _check_ratio_bounds,
    "bounds": _check_bounds,
    "zeros": _check_zeros,
    "asymptotics": _check_asymptotics,
}


def run_selftest(quick=False, out=sys.stdout):
    ok_all = True
    for name, fn in SELFTEST_GROUPS.items():
        t0 = time.perf_counter()
        try:
            ok, detail = fn(quick)
        except (EiglocError, ArithmeticError, ValueError) as exc:
            ok, detail = False, f"{type(exc).__name__}: {exc}"
        ok_all &= ok
        out.write(f"{name:12s} {'PASS' if ok else 'FAIL'}  {detail}  ({time.perf_counter() - t0:.2f}s)\n")
    return ok_all


# ---------------------------------------------------------------------------
# Entry point
# ---------------------------------------------------------------------------


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="flat key = value file; flags override it")
    common.add_argument("--out", default="-", help="output path (default stdout)")
    common.add_argument("--format", choices=("csv", "json"), default="csv")
    common.add_argument("--workers", type=int, default=1)
    common.add_argument("--quick", action="store_true", help=f"cap orders at nu <= {QUICK_NU_CAP}")
    common.add_argument("--full", action="store_true", help="extend ladders to nu = 1e4")

    parser = argparse.ArgumentParser(prog="eigloc", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"eigloc {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, spec in OPTIONS.items():
        p = sub.add_parser(name, parents=[common])
        for key in spec:
            flag = "--" + key.replace("_", "-")
            p.add_argument(flag, dest=key, default=None, help=f"default: {spec[key][1]}")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    if args.workers < 1:
        print("eigloc: --workers must be >= 1", file=sys.stderr)
        return EXIT_IO
    if args.command == "selftest":
        return EXIT_OK if run_selftest(args.quick) else EXIT_INVARIANT
    try:
        cfg = effective_config(args.command, args)
        columns, rows, meta = COMMANDS[args.command](cfg, args)
        meta = dict(meta, version=__version__, profile="full" if args.full else "quick" if args.quick else "default")
        text = render(args.command, cfg, meta, columns, rows, args.format)
    except ConfigError as exc:
        print(f"eigloc: config error: {exc}", file=sys.stderr)
        return EXIT_IO
    except InvariantError as exc:
        print(f"eigloc: invariant violated: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    except EiglocError as exc:
        print(f"eigloc: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    try:
        if args.out == "-":
            sys.stdout.write(text)
        else:
            with open(args.out, "w", encoding="utf-8", newline="") as fh:
                fh.write(text)
    except OSError as exc:
        print(f"eigloc: cannot write {args.out}: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
