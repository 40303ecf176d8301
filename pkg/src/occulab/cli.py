"""Reproducible command-line front end for the occupation-time toolkit.

Subcommands
-----------
eval        closed-form quantities: densities, probabilities, asymptotics
laplace     occupation-transform values, quadrature oracle, equivalent forms
invert      numerical inversion of the occupation transform
simulate    Monte Carlo event estimates and conditioned path sampling
experiment  named reproducible studies from the experiments module
selftest    the acceptance gate; nonzero exit when any criterion fails

Every run emits CSV (default) or a human-readable summary, to stdout or to
--out.  The CSV layout is fixed: `# key=value` metadata lines carrying the
command, the seed, and the resolved parameters, then one header row, then
data rows with floats at 17 significant digits.  Identical argument vectors
reproduce the CSV byte for byte; the single timestamp metadata line is
removed by --no-timestamp.

Every option resolves as command-line flag, then --config file entry, then
built-in default.  The config file is flat `key=value` text keyed by the
long flag names without the leading dashes; entries the current subcommand
does not use are reported to stderr and skipped.  --threads falls back to
the OCCULAB_THREADS environment variable; the worker count never changes
any result, only wall time.

Exit codes: 0 success; 2 usage, domain, or configuration error; 3 accuracy
failure (independent numerical routes disagree); 4 partial result (a hard
cap was hit; whatever was produced is still written).
"""

import argparse
import datetime
import io
import math
import os
import sys

from dataclasses import dataclass
from types import MappingProxyType

from . import acceptance, analytic, asymptotic, montecarlo
from .errors import (
    AccuracyError,
    ConfigError,
    DomainError,
    PartialResultError,
    TruncationError,
)
from .experiments import EXPERIMENTS
from .inversion import DEFAULT_INVERSION, InversionConfig, invert
from .inversion import snu_from_transform
from .laplace import (
    fn_S_hat,
    fn_u,
    fn_v,
    fn_w,
    ingham_equivalent,
    laplace_R,
    laplace_R_mp,
    laplace_R_raw,
)


# ---------------------------------------------------------------------------
# value parsing


def _num(text):
    """A float; scientific notation accepted."""
    try:
        return float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}")


def _num_list(text):
    """Comma-separated floats, e.g. `2,3,4` or `1e-3,1e-2`."""
    try:
        return tuple(float(p) for p in text.split(",") if p.strip() != "")
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated number list: {text!r}")


def _count(text):
    """A positive integer; scientific notation accepted, so `1e7` works."""
    try:
        val = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}")
    n = int(round(val))
    if n < 1 or abs(val - n) > 1e-6 * max(1.0, abs(val)):
        raise argparse.ArgumentTypeError(f"not a positive integer: {text!r}")
    return n


def _seed(text):
    """A nonnegative integer seed."""
    try:
        n = int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer seed: {text!r}")
    if n < 0:
        raise argparse.ArgumentTypeError("seed must be >= 0")
    return n


def _complex_list(text):
    """Comma-separated reals or complex literals, e.g. `0.3,1+2j`."""
    try:
        return tuple(complex(p) for p in text.split(",") if p.strip() != "")
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated complex list: {text!r}")


def _start(text):
    """A start point: a float, or `qsd` for the quasi-stationary law."""
    if text.strip().lower() == "qsd":
        return "qsd"
    return _num(text)


def _bool(text):
    low = str(text).strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise argparse.ArgumentTypeError(f"not a boolean: {text!r}")


def _choice(*allowed):
    def conv(text):
        if text not in allowed:
            raise argparse.ArgumentTypeError(
                f"expected one of {', '.join(allowed)}; got {text!r}"
            )
        return text

    return conv


# ---------------------------------------------------------------------------
# flag registry with config-file fallback


class _Options:
    """Per-subcommand flag table that a key=value config file can fill.

    Flags parse with a None default; `resolve` replaces still-unset values
    from the config file (same converter) and finally from the built-in
    default, which keeps the precedence flags > file > defaults exact.
    """

    def __init__(self, parser):
        self.parser = parser
        self.table = {}

    def add(self, name, conv, default=None, help=None, flag=False):
        dest = name.replace("-", "_")
        if flag:
            self.parser.add_argument(
                "--" + name, dest=dest, action="store_const", const=True,
                default=None, help=help,
            )
            conv = _bool
        else:
            self.parser.add_argument(
                "--" + name, dest=dest, type=conv, default=None, help=help,
            )
        self.table[name] = (dest, conv, default)

    def resolve(self, ns, filecfg):
        merged = {}
        for name, (dest, conv, default) in self.table.items():
            val = getattr(ns, dest)
            if val is None and name in filecfg:
                try:
                    val = conv(filecfg[name])
                except argparse.ArgumentTypeError as exc:
                    raise ConfigError(f"config entry {name}: {exc}")
            merged[name] = default if val is None else val
        unused = sorted(set(filecfg) - set(self.table))
        return merged, unused


def _read_config(path):
    """Flat key=value text; blank lines and `#` comments ignored."""
    table = {}
    try:
        with open(path) as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise ConfigError(f"cannot read config file: {exc}")
    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, val = line.partition("=")
        if not sep:
            raise ConfigError(f"{path}:{lineno}: expected key=value, got {line!r}")
        table[key.strip()] = val.strip()
    return table


@dataclass(frozen=True)
class RunConfig:
    """One resolved invocation.

    parameters holds every option that can influence the numbers, in
    declaration order, and is echoed verbatim into the CSV metadata; output
    routing (out, format, timestamp) and the worker count are kept apart
    because they never change a result.
    """

    command: str
    parameters: MappingProxyType
    out: str
    format: str
    timestamp: bool
    threads: int

    def __post_init__(self):
        if self.format not in ("csv", "summary"):
            raise ConfigError(f"format must be csv or summary, got {self.format!r}")


# ---------------------------------------------------------------------------
# output


def _fmt(val):
    if val is None:
        return ""
    if isinstance(val, bool):
        return str(val)
    if isinstance(val, complex):
        if val.imag == 0.0:
            return format(val.real, ".17g")
        return f"{val.real:.17g}{val.imag:+.17g}j"
    if isinstance(val, float):
        return format(val, ".17g")
    if isinstance(val, (tuple, list)):
        return ",".join(_fmt(v) for v in val)
    text = str(val)
    if any(ch in text for ch in ',"\n'):
        text = '"' + text.replace('"', '""') + '"'
    return text


def _csv_text(cfg, columns, rows, extra_meta=()):
    buf = io.StringIO()
    buf.write(f"# command={cfg.command}\n")
    seed = cfg.parameters.get("seed")
    buf.write(f"# seed={'none' if seed is None else seed}\n")
    for key, val in cfg.parameters.items():
        if key != "seed" and val is not None:
            buf.write(f"# {key}={_fmt(val)}\n")
    for key, val in extra_meta:
        buf.write(f"# {key}={_fmt(val)}\n")
    if cfg.timestamp:
        now = datetime.datetime.now(datetime.timezone.utc)
        buf.write(f"# timestamp={now.isoformat()}\n")
    buf.write(",".join(columns) + "\n")
    for row in rows:
        buf.write(",".join(_fmt(v) for v in row) + "\n")
    return buf.getvalue()


def _summary_text(cfg, columns, rows, extra_meta=()):
    def short(val):
        if isinstance(val, float):
            return format(val, ".10g")
        return _fmt(val)

    lines = [cfg.command]
    for key, val in cfg.parameters.items():
        if val is not None:
            lines.append(f"  {key} = {_fmt(val)}")
    for key, val in extra_meta:
        lines.append(f"  {key} = {_fmt(val)}")
    cells = [tuple(short(v) for v in row) for row in rows]
    widths = [
        max(len(col), *(len(c[i]) for c in cells)) if cells else len(col)
        for i, col in enumerate(columns)
    ]
    lines.append("  " + "  ".join(c.ljust(w) for c, w in zip(columns, widths)))
    for row in cells:
        lines.append("  " + "  ".join(c.ljust(w) for c, w in zip(row, widths)))
    return "\n".join(lines) + "\n"


def _deliver(cfg, columns, rows, extra_meta=()):
    if cfg.format == "summary":
        text = _summary_text(cfg, columns, rows, extra_meta)
    else:
        text = _csv_text(cfg, columns, rows, extra_meta)
    _write_out(text, cfg.out)


def _write_out(text, out):
    if out is None:
        sys.stdout.write(text)
    else:
        with open(out, "w") as fh:
            fh.write(text)
        print(f"wrote {out}", file=sys.stderr)


# ---------------------------------------------------------------------------
# eval


def _asymp_cols(av):
    return av.value, av.log_value


def _tol_cols(tol):
    return ((tol or analytic.DEFAULT_TOL).abs_tol,)


_EVAL_TABLE = {
    "exit-prob-zero": (
        ("y", "T"), ("value", "abs_tol"),
        lambda p, tol: (analytic.exit_prob_zero(p["y"], p["T"], tol),) + _tol_cols(tol),
    ),
    "exit-time-density": (
        ("y", "t"), ("value", "abs_tol"),
        lambda p, tol: (analytic.exit_time_density(p["y"], p["t"], tol),) + _tol_cols(tol),
    ),
    "absorbed-density": (
        ("y", "x", "t"), ("value", "abs_tol"),
        lambda p, tol: (analytic.absorbed_density(p["y"], p["x"], p["t"], tol),)
        + _tol_cols(tol),
    ),
    "taboo-density": (
        ("y", "x", "t"), ("value", "abs_tol"),
        lambda p, tol: (analytic.taboo_transition_density(p["y"], p["x"], p["t"], tol),)
        + _tol_cols(tol),
    ),
    "qsd-density": (("y",), ("value",), lambda p, tol: (analytic.qsd_density(p["y"]),)),
    "qsd-cdf": (("y",), ("value",), lambda p, tol: (analytic.qsd_cdf(p["y"]),)),
    "taboo-drift": (("y",), ("value",), lambda p, tol: (analytic.taboo_drift(p["y"]),)),
    "asymp-prob-leq-s": (
        ("y", "s", "T"), ("value", "log_value"),
        lambda p, tol: _asymp_cols(asymptotic.asymp_prob_leq_s(p["y"], p["s"], p["T"])),
    ),
    "asymp-snu": (
        ("s", "T"), ("value", "log_value"),
        lambda p, tol: _asymp_cols(asymptotic.asymp_snu(p["s"], p["T"])),
    ),
    "saddle-exponent": (
        ("T", "s"), ("exponent_exact", "exponent_expanded"),
        lambda p, tol: asymptotic.saddle_exponent(p["T"], p["s"]),
    ),
}


def _cmd_eval(cfg):
    p = cfg.parameters
    needed, result_cols, fn = _EVAL_TABLE[p["what"]]
    tol = None
    if p["abs-tol"] is not None or p["max-terms"] is not None:
        tol = analytic.SeriesTolerance(
            abs_tol=p["abs-tol"] if p["abs-tol"] is not None else 1e-12,
            max_terms=p["max-terms"] if p["max-terms"] is not None else 10_000,
        )
    grids = []
    for name in needed:
        val = p[name]
        if val is None:
            raise ConfigError(f"eval --what {p['what']} needs --{name}")
        grids.append(val if isinstance(val, tuple) else (val,))
    rows = []
    for combo in _product(grids):
        point = dict(zip(needed, combo))
        rows.append(combo + tuple(fn(point, tol)))
    _deliver(cfg, needed + result_cols, rows)
    return 0


def _product(grids):
    out = [()]
    for grid in grids:
        out = [prefix + (val,) for prefix in out for val in grid]
    return out


# ---------------------------------------------------------------------------
# laplace


def _tv_cols(tv):
    return tv.log_modulus, tv.phase, (tv.value if tv.is_plain else None)


def _cmd_laplace(cfg):
    p = cfg.parameters
    what, s = p["what"], p["s"]
    if s is None:
        raise ConfigError("laplace needs --s")
    columns = {
        "transform": ("log_modulus", "phase", "value"),
        "raw": ("value",),
        "check": ("log_modulus", "phase", "raw_value", "rel_diff"),
        "s-hat": ("log_modulus", "phase", "value"),
        "ingham": ("log_modulus", "phase", "value"),
        "ingham-ratio": ("ratio", "abs_gap"),
        "uvw": ("u", "v", "w"),
    }[what]
    rows = []
    for lam in p["lam"]:
        lam = lam.real if lam.imag == 0.0 else lam
        for y in p["y"]:
            if what == "transform":
                cells = _tv_cols(laplace_R(lam, y, s))
            elif what == "raw":
                cells = (laplace_R_raw(lam, y, s),)
            elif what == "check":
                closed = laplace_R(lam, y, s)
                raw = laplace_R_raw(lam, y, s)
                rel = abs(closed.value - raw) / abs(raw)
                cells = (closed.log_modulus, closed.phase, raw, rel)
            elif what == "s-hat":
                cells = _tv_cols(fn_S_hat(lam, y, s))
            elif what == "ingham":
                cells = _tv_cols(ingham_equivalent(lam, y, s))
            elif what == "ingham-ratio":
                ratio = fn_S_hat(lam, y, s).ratio(ingham_equivalent(lam, y, s))
                cells = (ratio, abs(ratio - 1.0))
            else:
                cells = (fn_u(lam, y), fn_v(lam), fn_w(lam))
            rows.append((complex(lam), y) + cells)
    _deliver(cfg, ("lam", "y") + columns, rows)
    return 0


# ---------------------------------------------------------------------------
# invert


def _cmd_invert(cfg):
    p = cfg.parameters
    s = p["s"]
    if s is None:
        raise ConfigError("invert needs --s")
    base = DEFAULT_INVERSION
    rows = []
    for T in p["T"]:
        if p["what"] == "prob":
            y = p["y"]
            if y is None:
                raise ConfigError("invert --what prob needs --y")
            shift = p["bromwich-shift"]
            icfg = InversionConfig(
                method=p["method"] if p["method"] else base.method,
                precision_bits=p["precision-bits"] or base.precision_bits,
                n_terms=p["n-terms"] or base.n_terms,
                bromwich_shift=shift if shift is not None else 9.2 / T,
            )
            res = invert(
                lambda lam: laplace_R_mp(lam, y, s), T, icfg,
                agree_tol=p["agree-tol"],
            )
            rows.append(("prob", y, s, T, res.value, res.error, icfg.method))
        else:
            # the contour shift is rescaled per horizon internally
            icfg = InversionConfig(
                method=p["method"] if p["method"] else base.method,
                precision_bits=p["precision-bits"] or base.precision_bits,
                n_terms=p["n-terms"] or base.n_terms,
            )
            val = snu_from_transform(s, T, icfg)
            rows.append(("snu", None, s, T, val, None, icfg.method))
    _deliver(cfg, ("what", "y", "s", "T", "value", "error", "method"), rows)
    return 0


# ---------------------------------------------------------------------------
# simulate


def _narrow(cfg, drop):
    params = {k: v for k, v in cfg.parameters.items() if k not in drop}
    return RunConfig(
        command=cfg.command, parameters=MappingProxyType(params), out=cfg.out,
        format=cfg.format, timestamp=cfg.timestamp, threads=cfg.threads,
    )


def _cmd_simulate(cfg):
    p = cfg.parameters
    if p["mode"] == "conditioned":
        return _simulate_conditioned(
            _narrow(cfg, ("n", "chunk-size", "horizons", "tau-thresholds",
                          "no-bridge"))
        )
    cfg = _narrow(cfg, ("n-wanted", "max-paths"))
    event = p["event"]
    s = None if event == "eq_zero" else p["s"]
    if event != "eq_zero" and s is None:
        raise ConfigError(f"simulate --event {event} needs --s")
    counts = montecarlo.occupation_event_counts(
        p["y"], p["T"], p["dt"], s=s, n=p["n"], seed=p["seed"],
        chunk_size=p["chunk-size"], threads=cfg.threads,
        tau_thresholds=p["tau-thresholds"] or (),
        bridge=not p["no-bridge"], horizons=p["horizons"] or (),
    )
    pick = {"eq_zero": 1, "leq_s": 2, "in_0s": 3}[event]
    rows = []
    final = (p["T"], counts.n_zero, counts.n_leq, counts.n_in)
    for rec in counts.horizon_counts + (final,):
        k = rec[pick]
        rows.append((event, rec[0]) + _rate_cols(k, counts.n_total))
    for eps, k in zip(p["tau-thresholds"] or (), counts.n_tau):
        rows.append((f"leq_s&tau>={eps:g}", p["T"]) + _rate_cols(k, counts.n_total))
    _deliver(cfg, ("event", "t", "n", "n_accept", "p_hat", "std_err"), rows)
    return 0


def _rate_cols(k, n):
    phat = k / n
    return n, k, phat, math.sqrt(phat * (1.0 - phat) / n)


def _simulate_conditioned(cfg):
    p = cfg.parameters
    event, s = p["event"], p["s"]
    partial = False
    try:
        sample = montecarlo.sample_conditioned(
            p["y"], p["T"], p["dt"], s, event, p["n-wanted"], p["seed"],
            max_paths=p["max-paths"],
        )
    except PartialResultError as exc:
        print(f"warning: {exc}", file=sys.stderr)
        sample = exc.partial
        partial = True
    rows = [
        (i, occ.gamma_T, occ.tau, occ.tau0)
        for i, occ in enumerate(sample.occupation)
    ]
    meta = (
        ("n_matched", sample.n_matched),
        ("n_tried", sample.n_tried),
        ("acceptance_rate", sample.acceptance_rate),
        ("partial", partial),
    )
    _deliver(cfg, ("index", "gamma_T", "tau", "tau0"), rows, extra_meta=meta)
    return 4 if partial else 0


# ---------------------------------------------------------------------------
# experiment

# flag -> (keyword, converter) per experiment; flags stay strings until the
# experiment is known because e.g. --T is a list for ratio-qsd and a scalar
# for thm-main.
_EXP_KEYS = {
    "ratio-qsd": {
        "y": ("y_list", _num_list), "s": ("s", _num), "T": ("T_list", _num_list),
        "n": ("n", _count), "seed": ("seed", _seed), "dt": ("dt", _num),
    },
    "qsd-stationarity": {
        "t": ("t_list", _num_list), "T": ("t_list", _num_list),
        "n": ("n", _count), "seed": ("seed", _seed), "dt": ("dt", _num),
    },
    "thm-main": {
        "y": ("y", _num), "s": ("s", _num), "T": ("T", _num),
        "t": ("t_probes", _num_list), "n": ("n_wanted", _count),
        "seed": ("seed", _seed), "dt": ("dt", _num),
    },
    "prop-asymp": {
        "y": ("y", _num), "s": ("s", _num), "T": ("T_list", _num_list),
        "s-grid": ("s_grid", _num_list), "n": ("n", _count),
        "seed": ("seed", _seed), "dt": ("dt", _num),
    },
    "cor-outside": {
        "y": ("y", _num), "s": ("s", _num), "T": ("T_list", _num_list),
        "eps": ("eps_list", _num_list), "n": ("n", _count),
        "seed": ("seed", _seed), "dt": ("dt", _num),
    },
}


def _cmd_experiment(cfg):
    p = cfg.parameters
    name = p["name"]
    kwargs = {}
    for flag, (key, conv) in _EXP_KEYS[name].items():
        raw = p.get(flag)
        if raw is None:
            continue
        if key in kwargs:
            raise ConfigError(f"both aliases of {key} were given")
        try:
            kwargs[key] = conv(raw)
        except argparse.ArgumentTypeError as exc:
            raise ConfigError(f"--{flag}: {exc}")
    if cfg.threads is not None:
        kwargs["threads"] = cfg.threads
    report = EXPERIMENTS[name](**kwargs)
    if cfg.format == "summary":
        rcfg = RunConfig(
            command=f"experiment {name}",
            parameters=MappingProxyType(dict(report.parameters, seed=report.seed)),
            out=cfg.out, format="summary", timestamp=cfg.timestamp,
            threads=cfg.threads,
        )
        meta = tuple(
            (f"verdict_{k}", v) for k, v in report.verdicts.items()
        ) + (("passed", report.passed),)
        _deliver(rcfg, report.columns, report.rows, extra_meta=meta)
    else:
        _write_out(report.to_csv(timestamp=cfg.timestamp), cfg.out)
    return 0


# ---------------------------------------------------------------------------
# selftest


def _cmd_selftest(cfg):
    numbers = cfg.parameters["criteria"]
    numbers = tuple(int(x) for x in numbers) if numbers else None
    if cfg.format == "csv":
        results = acceptance.run_all(numbers, out=None)
        rows = [(r.number, r.title, r.passed, r.detail) for r in results]
        _deliver(cfg, ("number", "title", "passed", "detail"), rows)
    else:
        if cfg.out is None:
            results = acceptance.run_all(numbers, out=sys.stdout)
        else:
            with open(cfg.out, "w") as fh:
                results = acceptance.run_all(numbers, out=fh)
            print(f"wrote {cfg.out}", file=sys.stderr)
    return 0 if all(r.passed for r in results) else 1


# ---------------------------------------------------------------------------
# parser assembly


def _common(opts):
    opts.parser.add_argument(
        "--config", metavar="FILE",
        help="flat key=value file filling any flag not given on the line",
    )
    opts.add("out", str, help="write output to this file instead of stdout")
    opts.add("format", _choice("csv", "summary"), default="csv",
             help="csv (default) or summary")
    opts.add("no-timestamp", None, default=False, flag=True,
             help="omit the timestamp metadata line for byte-stable output")
    opts.add("threads", _count,
             help="worker count (default: OCCULAB_THREADS, then one per CPU)")


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="occulab",
        description="Occupation times of Brownian motion outside (-1, 1): "
        "closed forms, transforms, inversion, simulation, experiments.",
    )
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")
    registry = {}

    def command(name, help):
        sp = sub.add_parser(name, help=help, description=help)
        opts = _Options(sp)
        registry[name] = opts
        sp.set_defaults(command=name)
        return opts

    o = command("eval", "evaluate a closed-form quantity on a parameter grid")
    o.add("what", _choice(*_EVAL_TABLE), help="quantity to evaluate")
    o.add("y", _num_list, default=(0.0,), help="start/evaluation points, comma list")
    o.add("x", _num_list, help="second spatial argument for densities, comma list")
    o.add("t", _num_list, help="times for densities, comma list")
    o.add("T", _num_list, help="horizons, comma list")
    o.add("s", _num, help="occupation budget")
    o.add("abs-tol", _num, help="series truncation tolerance")
    o.add("max-terms", _count, help="series term cap")
    _common(o)

    o = command("laplace", "evaluate the occupation transform and its relatives")
    o.add("what", _choice("transform", "raw", "check", "s-hat", "ingham",
                          "ingham-ratio", "uvw"),
          default="transform",
          help="closed form, quadrature oracle, their check, the survival-"
          "weighted transform, its equivalent product form, their ratio, or "
          "the u/v/w building blocks")
    o.add("lam", _complex_list, default=(1.0,),
          help="transform arguments, comma list; complex literals like 1+2j work")
    o.add("y", _num_list, default=(0.0,), help="start points, comma list")
    o.add("s", _num, help="occupation budget")
    _common(o)

    o = command("invert", "invert the occupation transform numerically")
    o.add("what", _choice("snu", "prob"), default="snu",
          help="snu: scaled budget probability from the quasi-stationary "
          "start; prob: P_y(occupation in (0, s]) at a fixed start")
    o.add("y", _num, help="start point for --what prob")
    o.add("s", _num, help="occupation budget")
    o.add("T", _num_list, default=(2.0,), help="horizons, comma list")
    o.add("method", _choice("gaver_stehfest", "bromwich_trapezoid"),
          help="which method reports the value; the other feeds the error")
    o.add("precision-bits", _count, help="working precision for Gaver-Stehfest")
    o.add("n-terms", _count, help="Gaver-Stehfest term count (even, <= 64)")
    o.add("bromwich-shift", _num,
          help="contour abscissa for --what prob (default 9.2/T)")
    o.add("agree-tol", _num, help="allowed cross-method disagreement")
    _common(o)

    o = command("simulate", "Monte Carlo occupation estimates on fresh paths")
    o.add("mode", _choice("event", "conditioned"), default="event",
          help="event: acceptance-fraction estimate; conditioned: rejection-"
          "sample paths and emit their occupation measurements")
    o.add("y", _start, default=0.0, help="start point, or qsd")
    o.add("T", _num, default=2.0, help="horizon")
    o.add("dt", _num, default=1e-3, help="step size")
    o.add("s", _num, help="occupation budget")
    o.add("event", _choice("leq_s", "eq_zero", "in_0s"), default="eq_zero",
          help="conditioning event")
    o.add("n", _count, default=100_000, help="path count for --mode event")
    o.add("seed", _seed, default=0, help="stream seed")
    o.add("chunk-size", _count, help="paths per worker chunk")
    o.add("horizons", _num_list,
          help="also record the counters at these intermediate times")
    o.add("tau-thresholds", _num_list,
          help="also count {occupation <= s, first crossing >= eps} per eps")
    o.add("no-bridge", None, default=False, flag=True,
          help="disable the crossing-bridge correction (bias studies)")
    o.add("n-wanted", _count, default=1000,
          help="accepted paths for --mode conditioned")
    o.add("max-paths", _count, default=10_000_000,
          help="rejection budget for --mode conditioned")
    _common(o)

    o = command("experiment", "run a named reproducible study")
    o.parser.add_argument("name", choices=sorted(EXPERIMENTS),
                          help="experiment name")
    for flag in ("y", "s", "T", "t", "eps", "s-grid", "n", "seed", "dt"):
        o.add(flag, str, help="forwarded to the experiment (see its docs)")
    _common(o)

    o = command("selftest", "run the acceptance gate")
    o.add("criteria", _num_list, help="criterion numbers to run, comma list")
    _common(o)
    # human-readable lines by default; csv still available
    o.table["format"] = (o.table["format"][0], o.table["format"][1], "summary")

    return parser, registry


def run(argv=None):
    """Parse argv, run the subcommand, return the exit code."""
    parser, registry = _build_parser()
    ns = parser.parse_args(argv)
    try:
        filecfg = _read_config(ns.config) if ns.config else {}
        merged, unused = registry[ns.command].resolve(ns, filecfg)
        if unused:
            print(
                f"config: ignoring entries not used by {ns.command}: "
                + ", ".join(unused),
                file=sys.stderr,
            )
        if ns.command == "experiment":
            merged["name"] = ns.name
        threads = merged.pop("threads")
        if threads is None and os.environ.get("OCCULAB_THREADS"):
            try:
                threads = _count(os.environ["OCCULAB_THREADS"])
            except argparse.ArgumentTypeError as exc:
                raise ConfigError(f"OCCULAB_THREADS: {exc}")
        routing = {k: merged.pop(k) for k in ("out", "format", "no-timestamp")}
        cfg = RunConfig(
            command=ns.command,
            parameters=MappingProxyType(merged),
            out=routing["out"],
            format=routing["format"],
            timestamp=not routing["no-timestamp"],
            threads=threads,
        )
        handler = {
            "eval": _cmd_eval,
            "laplace": _cmd_laplace,
            "invert": _cmd_invert,
            "simulate": _cmd_simulate,
            "experiment": _cmd_experiment,
            "selftest": _cmd_selftest,
        }[cfg.command]
        return handler(cfg)
    except (ConfigError, DomainError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (AccuracyError, TruncationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except PartialResultError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
