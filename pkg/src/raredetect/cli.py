"""Command-line front end: ``raredetect <subcommand> [options]``.

Exit codes: 0 success, 1 domain error (bad parameter values), 2 usage error.
Options may also come from a flat ``key = value`` file given by ``--config``;
command-line flags win.
"""
from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from . import acceptance
from . import detectability as det
from . import distributions as dist
from . import efficiency as eff
from . import io as rio
from . import limits as lim
from . import montecarlo as mc
from .shapes import ShapeFunction

DEFAULTS = {"seed": 20240101, "reps": 1000, "n": 10000.0, "alpha": 0.05, "out": ".", "threads": 1}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def _model_args(p):
    p.add_argument("--family", choices=("chimeric", "normal"), default=None, help="signal family (default chimeric)")
    p.add_argument("--beta", type=float, default=None, help="sparsity exponent")
    p.add_argument("--r", type=float, default=None, help="signal strength exponent")
    p.add_argument("--shape", default=None, help="chimeric shape: const | linear2x | powerlaw:<a> (default const)")
    p.add_argument("--sigma0", type=float, default=None, help="normal signal standard deviation (default 1)")
    p.add_argument("--log-exponent", type=float, default=None, dest="log_exponent",
                   help="E in eps_n = n^-beta (log n)^E (default 0)")
    p.add_argument("--dense", action="store_true", default=None, help="dense normal branch (theta = n^-r)")


def build_parser():
    # SUPPRESS keeps subcommand parsers from overwriting flags given before the subcommand
    common = _Parser(add_help=False, argument_default=argparse.SUPPRESS)
    g = common.add_argument_group("global options")
    g.add_argument("--seed", type=int, help=f"master seed (default {DEFAULTS['seed']})")
    g.add_argument("--reps", type=int, help=f"Monte Carlo replications (default {DEFAULTS['reps']})")
    g.add_argument("--n", type=float, help=f"sample size (default {DEFAULTS['n']:g})")
    g.add_argument("--alpha", type=float, help=f"nominal level (default {DEFAULTS['alpha']})")
    g.add_argument("--out", help="output directory (default .)")
    g.add_argument("--threads", type=int, help="worker threads (default 1)")
    g.add_argument("--config", help="flat key = value file")

    p = _Parser(prog="raredetect", description="Sparse signal detection: boundaries, tests, limits, efficiency.",
                parents=[common])
    sub = p.add_subparsers(dest="command", metavar="subcommand", parser_class=_Parser)

    s = sub.add_parser("boundary", parents=[common], help="detection boundary r*(beta)")
    s.add_argument("--family", choices=("chimeric", "powerlaw", "normal", "normal-dense"), default=None)
    s.add_argument("--beta", type=float, default=None)
    s.add_argument("--sigma0", type=float, default=None)
    s.add_argument("--a", type=float, default=None, help="power-law exponent")

    s = sub.add_parser("classify", parents=[common], help="I-sum region classifier")
    _model_args(s)
    s.add_argument("--tau", type=float, default=None, help="I-sum threshold (default 1)")

    s = sub.add_parser("critical", parents=[common], help="Monte Carlo critical value under the null")
    _model_args(s)
    s.add_argument("--test", choices=("hc", "llr"), default=None)

    s = sub.add_parser("power", parents=[common], help="Monte Carlo power estimate")
    _model_args(s)
    s.add_argument("--test", choices=("hc", "llr", "both"), default=None)

    s = sub.add_parser("sweep", parents=[common], help="phase sweep to CSV and SVG")
    _model_args(s)
    s.add_argument("--betas", default=None, help="comma separated beta grid")
    s.add_argument("--rs", default=None, help="comma separated r grid")
    s.add_argument("--mc", action="store_true", default=None, help="add Monte Carlo power for both tests")

    s = sub.add_parser("limits", parents=[common], help="sample a limit law, write ECDF and CF report")
    _model_args(s)
    s.add_argument("--draws", type=int, default=None, help="draws per side (default 100000)")

    s = sub.add_parser("are", parents=[common], help="gamma matrix, ARE and mismatched power")
    _model_args(s)
    s.add_argument("--h1", default=None)
    s.add_argument("--h2", default=None)
    s.add_argument("--beta2", type=float, default=None)
    s.add_argument("--r2", type=float, default=None)

    s = sub.add_parser("selftest", parents=[common], help="run the acceptance suite")
    s.add_argument("--only", default=None, help="comma separated criterion numbers")
    s.add_argument("--scale", type=float, default=None, help="replication scale factor (default 1)")
    return p


def resolve(args):
    """Merge defaults, config file and flags (flags win)."""
    cfg = dict(DEFAULTS)
    if getattr(args, "config", None):
        try:
            cfg.update(rio.load_config(args.config))
        except OSError as exc:
            raise ValueError(f"cannot read config: {exc}") from None
    for k, v in vars(args).items():
        if v is not None:
            cfg[k] = v
    for k, conv in (("seed", int), ("reps", int), ("threads", int), ("n", float), ("alpha", float)):
        cfg[k] = conv(cfg[k])
    if not 0 < cfg["alpha"] < 1:
        raise ValueError("alpha must lie in (0, 1)")
    if cfg["threads"] < 1:
        raise ValueError("threads must be >= 1")
    return cfg


def _f(cfg, key, default=None, conv=float):
    v = cfg.get(key)
    if v is None:
        if default is None:
            raise ValueError(f"missing required option --{key.replace('_', '-')}")
        return default
    return conv(v)


def _flag(cfg, key):
    v = cfg.get(key)
    return v is True or str(v).lower() in ("1", "true", "yes", "on")


def model_from(cfg, beta_key="beta", r_key="r", shape_key="shape"):
    family = cfg.get("family") or "chimeric"
    beta = _f(cfg, beta_key)
    r = _f(cfg, r_key)
    E = _f(cfg, "log_exponent", 0.0)
    if family == "chimeric":
        shape = ShapeFunction.from_tag(str(cfg.get(shape_key) or "const"))
        return dist.DetectionModel(n=cfg["n"], beta=beta, r=r, signal=dist.Chimeric(shape), log_exponent=E)
    if family == "normal":
        return dist.DetectionModel(n=cfg["n"], beta=beta, r=r, signal=dist.NormalShift(_f(cfg, "sigma0", 1.0)),
                                   log_exponent=E, dense=_flag(cfg, "dense"))
    raise ValueError(f"unknown family {family!r}")


def header(cfg, out):
    keys = sorted(k for k in cfg if k != "func")
    out.write("# raredetect " + " ".join(f"{k}={cfg[k]}" for k in keys) + "\n")


# -- subcommands ------------------------------------------------------------

def cmd_boundary(cfg, out):
    fam = cfg.get("family") or "chimeric"
    beta = _f(cfg, "beta")
    if fam == "chimeric":
        val = det.boundary_chimeric(beta)
    elif fam == "powerlaw":
        val = det.boundary_powerlaw(beta, _f(cfg, "a"))
    elif fam == "normal":
        s0 = _f(cfg, "sigma0", 1.0)
        val = det.boundary_normal_sparse(beta, s0)
        out.write(f"E {det.log_exponent_E(beta, s0):.17g}\n")
    else:
        val = det.boundary_normal_dense(beta)
    out.write(f"{val:.17g}\n")


def cmd_classify(cfg, out):
    m = model_from(cfg)
    lab = det.classify_region(m, _f(cfg, "tau", 1.0))
    ev = lab.evidence
    out.write(f"label {lab}\n")
    out.write(f"slope {ev['slope']:.6g}  (tau 0.5: {ev['slope_tau_checks'][0.5]:.6g}, "
              f"tau 2: {ev['slope_tau_checks'][2.0]:.6g})\n")
    for n, a, b in zip(ev["n"], ev["i1"], ev["i2"]):
        out.write(f"n={n:.0e} I1={a:.6g} I2={b:.6g}\n")


def cmd_critical(cfg, out):
    m = model_from(cfg)
    test = cfg.get("test") or "hc"
    crit = mc.mc_critical_value(m, test, cfg["alpha"], cfg["reps"], cfg["seed"], cfg["threads"])
    out.write(f"critical {crit:.17g}\n")
    if test == "hc":
        from .statistics import hc_asymptotic_critical
        out.write(f"asymptotic {hc_asymptotic_critical(m.size, cfg['alpha']):.17g}\n")


def cmd_power(cfg, out):
    m = model_from(cfg)
    conf = mc.ExperimentConfig(m, cfg.get("test") or "both", cfg["alpha"], cfg["reps"], cfg["seed"], cfg["threads"])
    for t, e in mc.estimate_power(conf).items():
        x = e.extras
        out.write(f"{t}: power {e.estimate:.4f} [{e.wilson_lo:.4f}, {e.wilson_hi:.4f}] rejections {e.rejections}/"
                  f"{e.reps} critical {e.critical:.6g} null-mean {x['null_mean']:.6g} null-var {x['null_var']:.6g} "
                  f"alt-mean {x['alt_mean']:.6g} frac-alt>5 {np.mean(x['alt_stats'] > 5):.4f} "
                  f"config {e.config_hash}\n")


def _grid(text, default):
    if text is None:
        return default
    return [float(v) for v in str(text).split(",") if v.strip()]


def cmd_sweep(cfg, out):
    fam = cfg.get("family") or "chimeric"
    if fam == "normal" and _flag(cfg, "dense"):
        betas = _grid(cfg.get("betas"), [0.05, 0.15, 0.25, 0.35, 0.45])
    else:
        betas = _grid(cfg.get("betas"), [0.55, 0.65, 0.75, 0.85, 0.95])
    rs = _grid(cfg.get("rs"), [0.1, 0.3, 0.5, 0.7, 0.9])
    base = dict(cfg, beta=betas[0] if betas else 0.75, r=rs[0] if rs else 0.5)
    template = model_from(base)
    conf = None
    if _flag(cfg, "mc"):
        conf = mc.ExperimentConfig(template, "both", cfg["alpha"], cfg["reps"], cfg["seed"], cfg["threads"])
    rows = mc.phase_sweep(template, betas, rs, conf)
    os.makedirs(cfg["out"], exist_ok=True)
    csv_path = os.path.join(cfg["out"], "sweep.csv")
    rio.write_csv(rows, csv_path)
    out.write(f"wrote {csv_path} ({len(rows)} rows)\n")
    if rows:
        if template.chimeric:
            shape = template.signal.shape
            curve = rio.boundary_curve("powerlaw", shape.exponent) if shape.kind == "powerlaw" and \
                shape.exponent >= 0.5 else rio.boundary_curve("chimeric")
        elif template.dense:
            curve = rio.boundary_curve("normal-dense")
        else:
            curve = rio.boundary_curve("normal", template.signal.sigma0)
        svg_path = os.path.join(cfg["out"], "sweep.svg")
        rio.write_svg_phase(rows, curve, svg_path, title=f"{rows[0].family} {rows[0].param}")
        out.write(f"wrote {svg_path}\n")


def cmd_limits(cfg, out):
    m = model_from(cfg)
    pair = lim.limit_pair(m)
    draws = int(cfg.get("draws") or 100000)
    os.makedirs(cfg["out"], exist_ok=True)
    out.write(f"pair {pair.label}\n")
    for k, side in enumerate(("null", "alt")):
        tr = pair.side(side)
        d = lim.sample_limit(pair, side, dist.make_stream(cfg["seed"], 50 + k), draws)
        out.write(f"{side}: gamma {tr.gamma:.10g} sigma2 {tr.sigma2:.10g} mass_at_inf {tr.mass_at_inf:.10g} "
                  f"P(+inf) {d.frac_pos_inf:.4f}\n")
        if np.isfinite(tr.gamma):
            for t in (0.25, 0.5, 1.0, 2.0, 4.0):
                emp = d.empirical_cf(t)
                ana = lim.cf_side(pair, side, t)
                out.write(f"  t={t:g} cf {ana.real:+.6f}{ana.imag:+.6f}i empirical {emp.real:+.6f}{emp.imag:+.6f}i "
                          f"gap {abs(emp - ana):.2e}\n")
        x = np.sort(d.finite())
        path = os.path.join(cfg["out"], f"limit_ecdf_{side}.csv")
        step = max(1, x.size // 2000)
        idx = np.arange(step - 1, x.size, step)
        rio.write_table(path, ("x", "ecdf"), (x[idx], (idx + 1) / d.values.size))
        out.write(f"  wrote {path}\n")


def cmd_are(cfg, out):
    beta = _f(cfg, "beta")
    r = _f(cfg, "r")
    fam = cfg.get("family") or "chimeric"
    m1 = model_from(dict(cfg, shape=cfg.get("h1") or cfg.get("shape")))
    m2 = model_from(dict(cfg, shape=cfg.get("h2") or cfg.get("shape"),
                         beta=cfg.get("beta2") or beta, r=cfg.get("r2") or r))
    d = eff.diagnostics(m1, m2, cfg["alpha"])
    g = d["gamma"]
    out.write(f"gamma11 {g[0, 0]:.10g}\ngamma12 {g[0, 1]:.10g}\ngamma22 {g[1, 1]:.10g}\n")
    out.write(f"ARE {d['are']:.10g}\n")
    if fam == "chimeric" and m1.beta == m2.beta and m1.r == m2.r:
        try:
            out.write(f"ARE closed-form {eff.are_shapes(m1.signal.shape, m2.signal.shape):.10g}\n")
        except ValueError:
            pass
    out.write(f"matched power {d['matched_power']:.6f}\nmismatched power {d['mismatched_power']:.6f}\n")
    out.write(f"wasted fraction (1-ARE) {d['wasted_fraction_one_minus_are']:.6f}\n"
              f"needed fraction (ARE) {d['needed_fraction_are']:.6f}\n")


def cmd_selftest(cfg, out):
    only = [int(x) for x in str(cfg["only"]).split(",")] if cfg.get("only") else None
    res = acceptance.run(only, scale=float(cfg.get("scale") or 1.0), threads=cfg["threads"],
                         echo=lambda s: (out.write(s + "\n"), out.flush()))
    failed = [o.number for o in res if not o.passed]
    out.write(f"{len(res) - len(failed)}/{len(res)} criteria passed" + (f"; failed: {failed}" if failed else "")
              + "\n")
    return 1 if failed else 0


COMMANDS = {"boundary": cmd_boundary, "classify": cmd_classify, "critical": cmd_critical, "power": cmd_power,
            "sweep": cmd_sweep, "limits": cmd_limits, "are": cmd_are, "selftest": cmd_selftest}


def main(argv=None, out=None):
    out = out or sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if not args.command:
            parser.print_help(sys.stderr)
            return 2
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return 2
    try:
        cfg = resolve(args)
        header(cfg, out)
        code = COMMANDS[args.command](cfg, out)
    except (ValueError, ArithmeticError) as exc:
        print(f"raredetect: {exc}", file=sys.stderr)
        return 1
    return code or 0


if __name__ == "__main__":
    sys.exit(main())
