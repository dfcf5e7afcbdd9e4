"""Command-line front end: deterministic runs, CSV/JSON/SVG report emission.

Every output file embeds the seed and a schema tag; repeated runs with the
same flags are byte-identical (timestamps honor SOURCE_DATE_EPOCH and default
to the epoch).  Exit codes: 0 pass, 1 check failure, 2 usage error,
3 numerical failure (including unwritable outputs).
"""

import argparse
import json
import math
import os
import sys
from datetime import datetime, timezone

import numpy as np

from . import __version__, flow, hypgeo, kernels, transform, verify
from .errors import (
    ContractError,
    ConvergenceError,
    DomainError,
    IntegrationError,
    ResolutionError,
    TruncationError,
)

SCHEMA = 1


def parse_grid(spec):
    """Canonical grid syntax lo:hi:{lin,log}:count."""
    parts = spec.split(":")
    if len(parts) != 4 or parts[2] not in ("lin", "log"):
        raise DomainError(f"grid must be lo:hi:{{lin,log}}:count, got {spec!r}")
    lo, hi, kind, count = float(parts[0]), float(parts[1]), parts[2], int(parts[3])
    if count < 1:
        raise DomainError("grid count must be >= 1")
    if count == 1:
        return np.array([lo])
    if kind == "lin":
        return np.linspace(lo, hi, count)
    if lo <= 0:
        raise DomainError("log grid needs lo > 0")
    return np.geomspace(lo, hi, count)


def parse_floats(text):
    return [float(tok) for tok in text.split(",") if tok.strip()]


def _timestamp():
    epoch = int(os.environ.get("SOURCE_DATE_EPOCH", "0"))
    return datetime.fromtimestamp(epoch, tz=timezone.utc).strftime(
        "%Y-%m-%dT%H:%M:%SZ"
    )


def _worker_cap(requested=None):
    cap = int(os.environ.get("HYPSPEC_THREADS", "1"))
    return max(1, min(requested or cap, cap))


def envelope(command, config, results, seed):
    return {
        "schema": SCHEMA,
        "tool": f"hypspec {__version__}",
        "command": command,
        "config": config,
        "timestamp": _timestamp(),
        "seed": seed,
        "results": results,
    }


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        if math.isnan(v):
            return "nan"
        return v
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    return obj


def write_json(path, payload):
    text = json.dumps(_jsonable(payload), indent=2, sort_keys=True) + "\n"
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)


def write_csv(path, header, rows, seed):
    """Fixed header; floats via repr (shortest round-trip); seed in a comment."""
    lines = [f"# hypspec {__version__} schema={SCHEMA} seed={seed}"]
    lines.append(",".join(header))
    for row in rows:
        lines.append(",".join(repr(float(v)) for v in row))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def write_svg(path, series, width=640, height=480):
    """Polyline plot of (name, xs, ys) series; deterministic bytes."""
    xs_all = np.concatenate([np.asarray(s[1], dtype=float) for s in series])
    ys_all = np.concatenate([np.asarray(s[2], dtype=float) for s in series])
    x0, x1 = float(xs_all.min()), float(xs_all.max())
    y0, y1 = float(ys_all.min()), float(ys_all.max())
    spanx = (x1 - x0) or 1.0
    spany = (y1 - y0) or 1.0
    margin = 40
    colors = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#8c564b", "#e377c2"]

    def to_px(x, y):
        px = margin + (x - x0) / spanx * (width - 2 * margin)
        py = height - margin - (y - y0) / spany * (height - 2 * margin)
        return px, py

    lines = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
    ]
    for i, (name, xs, ys) in enumerate(series):
        pts = " ".join(
            f"{repr(round(px, 3))},{repr(round(py, 3))}"
            for px, py in (to_px(float(x), float(y)) for x, y in zip(xs, ys))
        )
        color = colors[i % len(colors)]
        lines.append(
            f'<polyline fill="none" stroke="{color}" stroke-width="1.5" '
            f'points="{pts}"><title>{name}</title></polyline>'
        )
    lines.append("</svg>")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def load_metric(args, cfg):
    if getattr(args, "metric", None):
        cfg = dict(cfg)
        cfg.update(hypgeo.load_keyvalues(args.metric))
    return hypgeo.metric_from_config(cfg)


_MULTIPLIERS = {
    "gaussian": lambda arg: transform.multiplier_gaussian(),
    "c2": lambda arg: transform.multiplier_c2_bump(),
    "bump": lambda arg: transform.multiplier_smooth_bump(),
    "rough": lambda arg: transform.multiplier_rough(s=float(arg or 1.6)),
    "kink": lambda arg: transform.multiplier_power_kink(s=float(arg or 1.55)),
    "spike": lambda arg: transform.multiplier_spike(),
}


def parse_multiplier(text):
    """Names like gaussian, c2, rough:s=1.6, kink:s=1.55."""
    name, _, rest = text.partition(":")
    arg = rest.partition("=")[2] if rest else None
    if name not in _MULTIPLIERS:
        raise DomainError(f"unknown multiplier {name!r}; choose from {sorted(_MULTIPLIERS)}")
    return _MULTIPLIERS[name](arg)


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def cmd_geodesic(args, cfg):
    metric = load_metric(args, cfg)
    vals = parse_floats(args.start)
    n = metric.n
    if len(vals) != 2 * n + 2:
        raise DomainError(f"start needs {2*n+2} numbers (x,y_1..y_{n},lam,mu_1..mu_{n})")
    start = flow.ZeroPhasePoint(vals[0], vals[1 : 1 + n], vals[1 + n], vals[2 + n :])
    t_eval = np.linspace(0.0, args.t, args.samples)
    traj = flow.integrate(metric, start, (0.0, args.t), tol=args.tol, t_eval=t_eval)
    header = (
        ["t", "x"]
        + [f"y{i+1}" for i in range(n)]
        + ["lam"]
        + [f"mu{i+1}" for i in range(n)]
        + ["constraint_drift"]
    )
    rows = []
    for ti, row in zip(traj.t, traj.states):
        st = flow.ZeroPhasePoint.from_flat(row, n)
        drift = abs(flow.constraint_value(metric, st))
        rows.append([ti, *row, drift])
    write_csv(args.out, header, rows, args.seed)
    return 0


def cmd_distance(args, cfg):
    metric = load_metric(args, cfg)
    p = parse_floats(args.p)
    q = parse_floats(args.q)
    pair = hypgeo.PointPair.of(p[0], p[1:], q[0], q[1:])
    rho_l, rho_r, rho_f = hypgeo.bdf_eval(pair)
    results = {
        "closed_form": hypgeo.hyperbolic_distance(pair),
        "shoot": flow.shoot_distance(metric, pair, tol=args.tol),
        "defect_b": hypgeo.distance_defect(pair),
        "rho_L": rho_l,
        "rho_R": rho_r,
        "rho_F": rho_f,
    }
    write_json(args.out, envelope("distance", {"p": p, "q": q}, results, args.seed))
    return 0


def cmd_nontrap(args, cfg):
    metric = load_metric(args, cfg)
    cert = flow.certify_nontrapping(
        metric,
        sample_count=args.samples,
        escape_x=args.escape_x,
        t_max=args.tmax,
        seed=args.seed,
        workers=_worker_cap(),
    )
    results = {
        "passed": cert.passed,
        "trapped_count": cert.trapped_count,
        "inconclusive_count": cert.inconclusive_count,
        "worst_escape_time": cert.worst_escape_time,
        "seed": cert.seed,
    }
    config = {"metric": metric.name, "samples": args.samples, "tmax": args.tmax,
              "escape_x": args.escape_x}
    write_json(args.out, envelope("nontrap", config, results, args.seed))
    return 0 if cert.passed else 1


def cmd_kernel(args, cfg):
    r = parse_grid(args.r_grid)
    what = args.what
    if what == "spectral":
        vals = np.atleast_1d(kernels.spectral_measure(args.n, args.sigma, r))
        vals = vals.astype(complex)
    elif what == "resolvent":
        vals = np.atleast_1d(kernels.resolvent_kernel(args.n, args.sigma, r, side=args.side))
    elif what.startswith("deriv:"):
        j = int(what.split(":", 1)[1])
        vals = np.atleast_1d(kernels.spectral_measure_deriv(args.n, j, args.sigma, r))
        vals = vals.astype(complex)
    else:
        raise DomainError("--what must be spectral, resolvent or deriv:j")
    rows = [[ri, v.real, v.imag] for ri, v in zip(np.atleast_1d(r), vals)]
    write_csv(args.out, ["r", "value_re", "value_im"], rows, args.seed)
    return 0


def cmd_chi(args, cfg):
    a = complex(args.a.replace("i", "j")) if ("i" in args.a or "j" in args.a) else complex(float(args.a))
    if args.test == "gaussian":
        f = kernels.GaussianBump(center=args.center, width=args.width)
    else:
        raise DomainError("only --test gaussian is built in")
    if a.real > -1 and not args.pair:
        val = kernels.chi_plus_eval(a, args.x)
    else:
        val = kernels.chi_plus_pair(a, f, args.x)
    val = complex(val)
    results = {"a": [a.real, a.imag], "x": args.x, "value_re": val.real,
               "value_im": val.imag}
    if args.out:
        write_json(args.out, envelope("chi", {"test": args.test}, results, args.seed))
    else:
        print(json.dumps(_jsonable(results), sort_keys=True))
    return 0


def cmd_bounds(args, cfg):
    regimes = ["low", "high"] if args.regime == "both" else [args.regime]
    js = [int(tok) for tok in args.j.split(",")] if args.j else [0]
    checks = []
    for regime in regimes:
        for j in js if regime == "high" else [0]:
            for zone in ("near", "far"):
                rep = verify.check_pointwise_bounds(args.n, regime, j, zone,
                                                    refinements=args.refinements)
                checks.append(
                    {
                        "regime": regime, "j": j, "zone": zone,
                        "sup_ratio": rep.sup_ratio,
                        "refinement_deltas": rep.refinement_deltas,
                        "passed": rep.passed,
                    }
                )
    all_pass = all(c["passed"] for c in checks)
    results = {"checks": checks, "all_passed": all_pass}
    write_json(args.out, envelope("bounds", {"n": args.n, "regime": args.regime},
                                  results, args.seed))
    return 0 if all_pass else 1


def cmd_restriction(args, cfg):
    sigmas = parse_grid(args.sigma)
    norms, fit = verify.restriction_scan(args.n, sigmas)
    target = float(args.n)
    ok = abs(fit.slope - target) <= args.slope_tol
    results = {
        "sigma_grid": sigmas,
        "norms": norms,
        "slope": fit.slope,
        "slope_halfwidth": fit.confidence_halfwidth,
        "target_exponent": target,
        "pass": ok,
    }
    write_json(args.out, envelope("restriction", {"n": args.n}, results, args.seed))
    if args.svg:
        xs = np.log10(sigmas)
        ys = np.log10(norms)
        fitline = (fit.slope * np.log(sigmas) + fit.intercept) / math.log(10.0)
        write_svg(args.svg, [("log10 norm", xs, ys), ("fit", xs, fitline)])
    return 0 if ok else 1


def cmd_multiplier(args, cfg):
    spec = parse_multiplier(args.F).with_alpha(args.alpha)
    r = parse_grid(args.r_grid)
    prof = transform.multiplier_kernel(args.n, spec, r)
    rows = [[ri, v, 0.0] for ri, v in zip(prof.grid, prof.values)]
    write_csv(args.out, ["r", "value_re", "value_im"], rows, args.seed)
    return 0


def cmd_fgtail(args, cfg):
    Rs = parse_floats(args.R)
    F = transform.fg_wide_gaussian()
    tails = [transform.fg_tail(F, args.m, R) for R in Rs]
    results = {"m": args.m, "R_list": Rs, "tails": tails}
    if len(Rs) >= 8:
        fit = verify.fit_slope(np.log(Rs), np.log(tails))
        results["fitted_slope"] = fit.slope
        results["slope_ci"] = fit.confidence_halfwidth
    write_json(args.out, envelope("fgtail", {"m": args.m}, results, args.seed))
    return 0


def cmd_report(args, cfg):
    """Cheap cross-module battery; the full acceptance suite lives in pytest."""
    checks = {}
    sg = np.geomspace(0.1, 10, 20)
    rg = np.geomspace(1e-3, 30, 50)
    S, R = np.meshgrid(sg, rg, indexing="ij")
    gap = np.max(
        np.abs(kernels.stone_combination(2, S, R) - kernels.spectral_measure(2, S, R))
        / np.abs(kernels.spectral_measure(2, S, R))
    )
    checks["stone_equivalence"] = {"max_rel": float(gap), "passed": bool(gap < 1e-12)}

    from scipy.integrate import quad

    anchor_gap = 0.0
    for n in (2, 4):
        for t in (0.1, 1.0):
            for rr in (0.5, 1.0, 5.0):
                lhs = quad(lambda s: math.exp(-t * s * s) * kernels.spectral_measure(n, s, rr),
                           0.0, 40.0 / math.sqrt(t), limit=200)[0]
                rhs = _heat_closed_form(n, t, rr)
                anchor_gap = max(anchor_gap, abs(lhs - rhs) / abs(rhs))
    checks["heat_anchor"] = {"max_rel": anchor_gap, "passed": bool(anchor_gap < 1e-8)}

    svals = np.linspace(-20, 20, 41)
    worst = max(
        kernels.gamma_multiplier_bound(s)[0] / kernels.gamma_multiplier_bound(s)[1]
        for s in svals
    )
    checks["gamma_line"] = {"worst_ratio": float(worst), "passed": bool(worst <= 1.0)}

    grid = transform.log_grid(1e-3, 40.0, 1024)
    kw = transform.RadialProfile(grid, (1 + grid) * np.exp(-grid), n=2)
    ks_vals = {q: verify.kunze_stein_bound(kw, q) for q in (2.5, 3.0, 4.0)}
    checks["kunze_stein_witness"] = {
        "values": {str(q): v for q, v in ks_vals.items()},
        "passed": bool(all(math.isfinite(v) for v in ks_vals.values())),
    }

    _, fit = verify.restriction_scan(2, np.geomspace(10, 1000, 24))
    checks["restriction_slope_n2"] = {"slope": fit.slope,
                                      "passed": bool(abs(fit.slope - 2) <= 0.05)}

    all_pass = all(c["passed"] for c in checks.values())
    write_json(args.out, envelope("report", {}, {"checks": checks, "all_passed": all_pass},
                                  args.seed))
    return 0 if all_pass else 1


def _heat_closed_form(n, t, r):
    """Exact heat kernel of the shifted operator on H^{n+1}, n in {2, 4}."""
    if n == 2:
        return (4 * math.pi * t) ** -1.5 * (r / math.sinh(r)) * math.exp(-r * r / (4 * t))
    if n == 4:
        u = 1.0 / math.tanh(r)
        v = 1.0 / math.sinh(r)
        return (
            v**2 * (r * u - 1.0 + r * r / (2 * t)) * math.exp(-r * r / (4 * t))
            / (16 * math.pi**2.5 * t**1.5)
        )
    raise DomainError("closed-form anchor implemented for n in {2, 4}")


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def build_parser():
    p = argparse.ArgumentParser(prog="hypspec",
                                description="hyperbolic spectral kernels and flow checks")
    p.add_argument("--config", help="key=value config file (defaults for flags)")
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, fn, **kwargs):
        sp = sub.add_parser(name, **kwargs)
        sp.set_defaults(fn=fn)
        sp.add_argument("--seed", type=int, default=0)
        return sp

    sp = add("geodesic", cmd_geodesic, help="integrate the 0-geodesic flow")
    sp.add_argument("--metric")
    sp.add_argument("--start", required=True, help="x,y...,lam,mu...")
    sp.add_argument("--t", type=float, default=40.0)
    sp.add_argument("--tol", type=float, default=1e-10)
    sp.add_argument("--samples", type=int, default=401)
    sp.add_argument("--out", required=True)

    sp = add("distance", cmd_distance, help="closed-form vs shooting distance")
    sp.add_argument("--metric")
    sp.add_argument("--p", required=True)
    sp.add_argument("--q", required=True)
    sp.add_argument("--tol", type=float, default=1e-7)
    sp.add_argument("--out", required=True)

    sp = add("nontrap", cmd_nontrap, help="nontrapping escape certificate")
    sp.add_argument("--metric")
    sp.add_argument("--samples", type=int, default=1000)
    sp.add_argument("--tmax", type=float, default=100.0)
    sp.add_argument("--escape-x", type=float, default=1e-3)
    sp.add_argument("--out", required=True)

    sp = add("kernel", cmd_kernel, help="evaluate exact radial kernels")
    sp.add_argument("--n", type=int, default=2)
    sp.add_argument("--what", default="spectral")
    sp.add_argument("--sigma", type=float, required=True)
    sp.add_argument("--side", type=int, default=1, choices=(-1, 1))
    sp.add_argument("--r-grid", required=True)
    sp.add_argument("--out", required=True)

    sp = add("chi", cmd_chi, help="chi_+^a evaluations and pairings")
    sp.add_argument("--a", required=True)
    sp.add_argument("--test", default="gaussian")
    sp.add_argument("--x", type=float, default=0.0)
    sp.add_argument("--center", type=float, default=0.0)
    sp.add_argument("--width", type=float, default=1.0)
    sp.add_argument("--pair", action="store_true",
                    help="force the pairing route even for Re a > -1")
    sp.add_argument("--out")

    sp = add("bounds", cmd_bounds, help="pointwise spectral-measure bound reports")
    sp.add_argument("--n", type=int, default=2)
    sp.add_argument("--regime", default="both", choices=("low", "high", "both"))
    sp.add_argument("--j", default="0,1,2")
    sp.add_argument("--refinements", type=int, default=2)
    sp.add_argument("--out", required=True)

    sp = add("restriction", cmd_restriction, help="L1->Linf restriction exponent scan")
    sp.add_argument("--n", type=int, default=2)
    sp.add_argument("--sigma", default="10:1000:log:24")
    sp.add_argument("--slope-tol", type=float, default=0.05)
    sp.add_argument("--svg")
    sp.add_argument("--out", required=True)

    sp = add("multiplier", cmd_multiplier, help="multiplier kernel F(alpha P)")
    sp.add_argument("--n", type=int, default=2)
    sp.add_argument("--F", required=True)
    sp.add_argument("--alpha", type=float, default=1.0)
    sp.add_argument("--r-grid", default="1e-2:20:log:200")
    sp.add_argument("--out", required=True)

    sp = add("fgtail", cmd_fgtail, help="Fourier tail decay of F*G")
    sp.add_argument("--m", type=float, required=True)
    sp.add_argument("--R", default="4,8,16,32,64")
    sp.add_argument("--out", required=True)

    add("report", cmd_report, help="cheap cross-module battery").add_argument(
        "--out", required=True
    )
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    cfg = {}
    if args.config:
        cfg = hypgeo.load_keyvalues(args.config)
        for key, val in cfg.items():
            attr = key.replace("-", "_")
            if hasattr(args, attr) and key not in ("metric",):
                default = parser.get_default(attr)
                if getattr(args, attr) == default:
                    cur = getattr(args, attr)
                    caster = type(default) if default is not None else str
                    setattr(args, attr, caster(val) if cur != val else val)
    try:
        return args.fn(args, cfg)
    except (DomainError, ContractError) as exc:
        print(f"hypspec: {exc}", file=sys.stderr)
        return 2
    except (IntegrationError, ConvergenceError, TruncationError, ResolutionError,
            OSError) as exc:
        print(f"hypspec: numerical failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
