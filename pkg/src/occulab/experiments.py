"""Named, reproducible verification suites tying simulation to closed forms.

Each experiment draws its own Monte Carlo evidence through the chunked
kernels in `montecarlo`, compares against the analytic or asymptotic
reference, and returns an ExperimentReport whose verdicts are computed from
tolerances fixed in this file, never from the data.  A report regenerates
bit-identically from (name, parameters, seed): every kernel invocation
inside one experiment gets a disjoint stream range under the single
experiment seed, and worker threads never affect the reduction order.

Trend verdicts come in two strengths.  `*_ordered` means the observed
values are strictly ordered in the stated direction; `*_3sigma` adds that
the end-to-end change is at least three times its standard error.  Both are
reported so that a shallow but real trend is visible as ordered-but-not-
significant instead of being rounded to a bare failure.
"""

from __future__ import annotations

import datetime
import io
import math
from dataclasses import dataclass
from functools import lru_cache
from types import MappingProxyType

import numpy as np
from scipy import stats

from .analytic import LAMBDA0, qsd_cdf, taboo_transition_density
from .asymptotic import asymp_prob_leq_s
from .errors import ConfigError, DomainError
from .montecarlo import (
    occupation_event_counts,
    sample_conditioned,
    _steps_for,
)

# Asymptotic Kolmogorov-Smirnov critical coefficient at the 1% level:
# reject when D > 1.6276 / sqrt(n) (one sample) or
# D > 1.6276 * sqrt((n + m) / (n m)) (two samples).
KS_COEFF_1PCT = 1.6276

# Disjoint chunk-stream ranges for the studies inside one experiment.
_STUDY_STRIDE = 1 << 32


def _ks_crit_one(n):
    return KS_COEFF_1PCT / math.sqrt(n)


def _ks_crit_two(n, m):
    return KS_COEFF_1PCT * math.sqrt((n + m) / (n * m))


def _binom_se(p, n):
    return math.sqrt(max(p * (1.0 - p), 0.0) / n)


def _ordered(values, increasing):
    pairs = zip(values, values[1:])
    if increasing:
        return all(b > a for a, b in pairs)
    return all(b < a for a, b in pairs)


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, bool):
        return str(v)
    if isinstance(v, float):
        return f"{v:.17g}"
    return str(v)


@dataclass(frozen=True)
class ExperimentReport:
    """Result of one named experiment.

    rows are plain tuples matching `columns`; every row carries the seed and
    the stream offset of the kernel run it came from, so any single row can
    be regenerated in isolation.  verdicts maps check names to booleans and
    is derived from the tolerances coded in the experiment, not from the
    observed spread.
    """

    name: str
    parameters: MappingProxyType
    columns: tuple
    rows: tuple
    verdicts: MappingProxyType
    seed: int

    @property
    def passed(self):
        """True when every verdict holds."""
        return all(self.verdicts.values())

    def to_csv(self, path=None, timestamp=True):
        """Render the report as CSV text; optionally write it to a file.

        The layout is `# key=value` metadata lines (name, parameters, seed,
        verdicts, and a UTC timestamp unless suppressed), one header row,
        then the data rows with floats at 17 significant digits.
        """
        buf = io.StringIO()
        buf.write(f"# experiment={self.name}\n")
        buf.write(f"# seed={self.seed}\n")
        for key, val in self.parameters.items():
            if isinstance(val, (tuple, list)):
                val = ",".join(_fmt(v) for v in val)
            buf.write(f"# {key}={_fmt(val)}\n")
        for key, val in self.verdicts.items():
            buf.write(f"# verdict_{key}={val}\n")
        if timestamp:
            now = datetime.datetime.now(datetime.timezone.utc)
            buf.write(f"# timestamp={now.isoformat()}\n")
        buf.write(",".join(self.columns) + "\n")
        for row in self.rows:
            buf.write(",".join(_fmt(v) for v in row) + "\n")
        text = buf.getvalue()
        if path is not None:
            with open(path, "w") as fh:
                fh.write(text)
        return text


def _report(name, params, columns, rows, verdicts, seed):
    return ExperimentReport(
        name=name,
        parameters=MappingProxyType(dict(params)),
        columns=tuple(columns),
        rows=tuple(tuple(r) for r in rows),
        verdicts=MappingProxyType({k: bool(v) for k, v in verdicts.items()}),
        seed=int(seed),
    )


@lru_cache(maxsize=32)
def _taboo_cdf_table(y0, t, m=4001):
    """Marginal CDF of the taboo process at time t from y0, by quadrature."""
    xg = np.linspace(-1.0, 1.0, m)
    dens = taboo_transition_density(y0, xg, t)
    cdf = np.concatenate(
        [[0.0], np.cumsum(0.5 * (dens[1:] + dens[:-1]) * np.diff(xg))]
    )
    cdf /= cdf[-1]
    return xg, cdf


def taboo_marginal_cdf(y0, t):
    """Callable CDF of the taboo marginal; 0 and 1 outside [-1, 1]."""
    if not -1.0 < y0 < 1.0:
        raise DomainError("the taboo process lives on (-1, 1)")
    if not t > 0.0:
        raise DomainError("t must be > 0")
    xg, cdf = _taboo_cdf_table(float(y0), float(t))
    return lambda x: np.interp(x, xg, cdf)


def exp_ratio_qsd(
    y_list=(0.0, 0.5),
    s=0.5,
    T_list=(2.0, 3.0, 4.0),
    n=60_000,
    seed=1009,
    dt=5e-4,
    threads=None,
):
    """Occupation-probability ratios against the quasi-stationary start.

    For each start y the ratio P_y(Gamma_T in (0, s]) / P_nu(Gamma_T in
    (0, s]) tends to (4/pi) cos(pi y / 2) as T grows.  One path ensemble per
    start is run to max(T_list) and read at every horizon, so the T-to-T
    differences share their randomness; the denominator ensemble is shared
    by all numerators.  Rows with zero acceptances are flagged degenerate
    and excluded from the trend checks.

    Verdicts per start: `trend_ordered_y*` (observed ratios strictly ordered
    toward the limit), `trend_3sigma_y*` (end-to-end movement at least three
    standard errors), and `final_within_10pct_3se_y*` (last ratio within
    10% of the limit plus three standard errors).
    """
    y_list = tuple(float(y) for y in y_list)
    T_list = tuple(float(T) for T in T_list)
    if len(T_list) < 2 or any(b <= a for a, b in zip(T_list, T_list[1:])):
        raise ConfigError("T_list must be strictly increasing with >= 2 entries")
    n = int(n)
    t_max = T_list[-1]

    nu = occupation_event_counts(
        "qsd", t_max, dt, s=s, n=n, seed=seed, threads=threads,
        stream_base=0, horizons=T_list,
    )
    p_nu = [h[3] / n for h in nu.horizon_counts]

    columns = (
        "y", "T", "p_y", "se_y", "p_nu", "se_nu", "ratio", "std_err",
        "reference", "degenerate", "seed", "stream_base",
    )
    rows = []
    verdicts = {}
    for i, y in enumerate(y_list):
        base = (i + 1) * _STUDY_STRIDE
        cy = occupation_event_counts(
            y, t_max, dt, s=s, n=n, seed=seed, threads=threads,
            stream_base=base, horizons=T_list,
        )
        target = (4.0 / math.pi) * math.cos(math.pi * y / 2.0)
        ratios, errs = [], []
        for j, T in enumerate(T_list):
            py = cy.horizon_counts[j][3] / n
            pn = p_nu[j]
            degenerate = py == 0.0 or pn == 0.0
            if degenerate:
                ratio = err = float("nan")
            else:
                ratio = py / pn
                err = ratio * math.sqrt(
                    (1.0 - py) / (py * n) + (1.0 - pn) / (pn * n)
                )
                ratios.append(ratio)
                errs.append(err)
            rows.append((
                y, T, py, _binom_se(py, n), pn, _binom_se(pn, n),
                ratio, err, target, degenerate, seed, base,
            ))
        tag = f"y{y:g}"
        if len(ratios) < 2:
            verdicts[f"trend_ordered_{tag}"] = False
            verdicts[f"trend_3sigma_{tag}"] = False
            verdicts[f"final_within_10pct_3se_{tag}"] = False
            continue
        toward_above = ratios[0] < target
        verdicts[f"trend_ordered_{tag}"] = _ordered(ratios, toward_above)
        move = abs(ratios[-1] - ratios[0])
        # Conservative: treats the shared-path estimates as independent.
        se_move = math.hypot(errs[0], errs[-1])
        verdicts[f"trend_3sigma_{tag}"] = (
            verdicts[f"trend_ordered_{tag}"] and move >= 3.0 * se_move
        )
        verdicts[f"final_within_10pct_3se_{tag}"] = (
            abs(ratios[-1] - target) <= 0.10 * target + 3.0 * errs[-1]
        )

    params = dict(
        y_list=y_list, s=float(s), T_list=T_list, n=n, dt=float(dt),
    )
    return _report("ratio-qsd", params, columns, rows, verdicts, seed)


def exp_qsd_stationarity(
    t_list=(0.5, 1.0, 2.0),
    n=200_000,
    seed=101,
    dt=2.5e-4,
    threads=None,
):
    """Stationarity of the arcsine-cosine start law under killing at +-1.

    Starting from the density (pi/4) cos(pi y / 2), the probability of
    never touching +-1 before t is exactly e^{-pi^2 t / 8}, and the law of
    the survivors at t is again the start law.  Each t runs its own
    ensemble; survivor positions feed a one-sample KS test against the
    closed-form CDF at the 1% level.

    Verdicts: `survival_3sigma_t*` and `ks_t*` per horizon.
    """
    t_list = tuple(float(t) for t in t_list)
    n = int(n)
    columns = (
        "t", "n", "n_survivors", "p_surv", "se", "target", "z",
        "ks_stat", "ks_crit_1pct", "seed", "stream_base",
    )
    rows = []
    verdicts = {}
    for i, t in enumerate(t_list):
        tag = f"t{t:g}"
        base = i * _STUDY_STRIDE
        if t == 0.0:
            rows.append((t, n, n, 1.0, 0.0, 1.0, 0.0, None, None, seed, base))
            verdicts[f"survival_3sigma_{tag}"] = True
            continue
        c = occupation_event_counts(
            "qsd", t, dt, s=None, n=n, seed=seed, threads=threads,
            stream_base=base, collect_survivors=True,
        )
        p = c.n_zero / n
        se = _binom_se(p, n)
        target = math.exp(-LAMBDA0 * t)
        z = (p - target) / se
        ks = stats.kstest(c.survivors, qsd_cdf).statistic
        crit = _ks_crit_one(c.n_zero)
        rows.append((t, n, c.n_zero, p, se, target, z, ks, crit, seed, base))
        verdicts[f"survival_3sigma_{tag}"] = abs(z) <= 3.0
        verdicts[f"ks_{tag}"] = ks <= crit
    params = dict(t_list=t_list, n=n, dt=float(dt))
    return _report("qsd-stationarity", params, columns, rows, verdicts, seed)


def exp_thm_main(
    y=0.0,
    s=0.5,
    T=4.0,
    t_probes=(1.0,),
    n_wanted=10_000,
    seed=2027,
    dt=1e-3,
    threads=None,
):
    """Conditioned path marginals against the taboo law.

    Draws n_wanted paths conditioned on {Gamma_T <= s} and, independently,
    on {Gamma_T = 0}, and compares their marginals at each probe time with
    the taboo marginal CDF (quadrature) and with the unconditioned Gaussian
    marginal.  The two samplers use adjacent seeds so the two-sample KS test
    sees independent draws.  A separate counting run reads the fraction of
    budget-respecting paths that never crossed at the horizons T/2, 3T/4,
    and T.

    Verdicts: per probe and event, `closer_to_taboo_*`; per probe,
    `two_sample_1pct_*` and `one_sample_1pct_*` for both events; plus
    `zero_fraction_increasing` across the three horizons.  The one-sample
    and two-sample checks at the 1% level are strict: at desk-scale T the
    law conditioned on a small positive budget still carries visible
    boundary mass (a few percent of paths sit outside the interval at any
    fixed probe time), so its KS distance from taboo does not shrink below
    the critical band; the verdicts record that honestly.
    """
    y = float(y)
    s = float(s)
    T = float(T)
    t_probes = tuple(float(t) for t in t_probes)
    if any(not 0.0 < t <= T for t in t_probes):
        raise DomainError("probe times must lie in (0, T]")
    n_wanted = int(n_wanted)

    cs_leq = sample_conditioned(
        y, T, dt, s, "leq_s", n_wanted, seed=seed
    )
    cs_zero = sample_conditioned(
        y, T, dt, s, "eq_zero", n_wanted, seed=seed + 1
    )
    marg = {
        "leq_s": {
            t: np.array([p.values[_steps_for(t, dt)] for p in cs_leq.paths])
            for t in t_probes
        },
        "eq_zero": {
            t: np.array([p.values[_steps_for(t, dt)] for p in cs_zero.paths])
            for t in t_probes
        },
    }

    columns = (
        "kind", "event", "t", "n", "value", "crit_or_se", "ks_bm",
        "acceptance_rate", "seed",
    )
    rows = []
    verdicts = {}
    for t in t_probes:
        ttag = f"t{t:g}"
        cdf_taboo = taboo_marginal_cdf(y, t)
        sd = math.sqrt(t)
        for event, cs, sd_seed in (
            ("leq_s", cs_leq, seed), ("eq_zero", cs_zero, seed + 1),
        ):
            m = marg[event][t]
            d_tab = stats.kstest(m, cdf_taboo).statistic
            d_bm = stats.kstest(m, lambda x: stats.norm.cdf(x, y, sd)).statistic
            crit = _ks_crit_one(m.size)
            rows.append((
                "one_sample", event, t, m.size, d_tab, crit, d_bm,
                cs.acceptance_rate, sd_seed,
            ))
            verdicts[f"closer_to_taboo_{event}_{ttag}"] = d_tab < d_bm
            verdicts[f"one_sample_1pct_{event}_{ttag}"] = d_tab <= crit
        a, b = marg["leq_s"][t], marg["eq_zero"][t]
        d2 = stats.ks_2samp(a, b).statistic
        crit2 = _ks_crit_two(a.size, b.size)
        rows.append(("two_sample", "both", t, a.size, d2, crit2, None,
                     None, seed))
        verdicts[f"two_sample_1pct_{ttag}"] = d2 <= crit2

    n_frac = 20 * n_wanted
    horizons = (T / 2.0, 3.0 * T / 4.0, T)
    counts = occupation_event_counts(
        y, T, dt, s=s, n=n_frac, seed=seed + 2, threads=threads,
        horizons=horizons,
    )
    fracs = []
    for t_h, n_zero, n_leq, _ in counts.horizon_counts:
        frac = n_zero / n_leq if n_leq else float("nan")
        fracs.append(frac)
        se = _binom_se(frac, n_leq) if n_leq else float("nan")
        rows.append(("zero_fraction", "leq_s", t_h, n_leq, frac, se, None,
                     None, seed + 2))
    verdicts["zero_fraction_increasing"] = _ordered(fracs, increasing=True)

    params = dict(
        y=y, s=s, T=T, t_probes=t_probes, n_wanted=n_wanted, dt=float(dt),
        n_fraction=n_frac,
    )
    return _report("thm-main", params, columns, rows, verdicts, seed)


def exp_prop_asymp(
    y=0.0,
    s=0.5,
    T_list=(2.0, 3.0, 4.0, 5.0, 6.0),
    dt=1e-3,
    n=400_000,
    seed=303,
    s_grid=None,
    threads=None,
):
    """Occupation probabilities against the stretched-exponential form.

    One shared ensemble read at every horizon gives P_hat_y(Gamma_T <= s)
    and P_hat_y(Gamma_T = 0); the report tracks the gap between
    log P_hat(Gamma_T <= s) and the three-term asymptotic exponent, the
    ratio P_hat(= 0) / P_hat(<= s), and, on separate ensembles, the
    monotonicity of P_hat(<= s) in the budget s at fixed T.

    Verdicts: `log_gap_decreasing` (ordered; a fitted slope of the gap in T
    is reported as a `log_gap_fit` row), `zero_to_leq_decreasing_3sigma`,
    and `s_monotone_3sigma`.
    """
    y = float(y)
    s = float(s)
    T_list = tuple(float(T) for T in T_list)
    if len(T_list) < 2 or any(b <= a for a, b in zip(T_list, T_list[1:])):
        raise ConfigError("T_list must be strictly increasing with >= 2 entries")
    n = int(n)
    if s_grid is None:
        s_grid = (0.5 * s, s, 2.0 * s)
    s_grid = tuple(float(v) for v in s_grid)

    c = occupation_event_counts(
        y, T_list[-1], dt, s=s, n=n, seed=seed, threads=threads,
        stream_base=0, horizons=T_list,
    )
    columns = (
        "kind", "T", "s", "p_leq", "se_leq", "p_zero", "log_p_leq",
        "asymp_log", "log_gap", "zero_to_leq", "seed", "stream_base",
    )
    rows = []
    gaps, zratio = [], []
    for (t_h, n_zero, n_leq, _n_in) in c.horizon_counts:
        p_leq = n_leq / n
        p_zero = n_zero / n
        a_log = asymp_prob_leq_s(y, s, t_h).log_value
        gap = abs(math.log(p_leq) - a_log) if p_leq > 0 else float("nan")
        zr = p_zero / p_leq if p_leq > 0 else float("nan")
        gaps.append(gap)
        zratio.append((zr, n_leq, n_zero))
        rows.append((
            "horizon", t_h, s, p_leq, _binom_se(p_leq, n), p_zero,
            math.log(p_leq) if p_leq > 0 else float("nan"), a_log, gap, zr,
            seed, 0,
        ))
    verdicts = {"log_gap_decreasing": _ordered(gaps, increasing=False)}
    slope = float(np.polyfit(T_list, gaps, 1)[0])
    rows.append(("log_gap_fit", None, s, None, None, None, None, None,
                 slope, None, seed, 0))

    zr_first, zr_last = zratio[0], zratio[-1]
    se_first = _binom_se(zr_first[0], zr_first[1])
    se_last = _binom_se(zr_last[0], zr_last[1])
    verdicts["zero_to_leq_decreasing_3sigma"] = (
        _ordered([v[0] for v in zratio], increasing=False)
        and (zr_first[0] - zr_last[0]) >= 3.0 * math.hypot(se_first, se_last)
    )

    t_mid = T_list[len(T_list) // 2]
    p_s, se_s = [], []
    for k, sv in enumerate(s_grid):
        base = (k + 1) * _STUDY_STRIDE
        cs = occupation_event_counts(
            y, t_mid, dt, s=sv, n=n, seed=seed, threads=threads,
            stream_base=base,
        )
        p = cs.n_leq / n
        p_s.append(p)
        se_s.append(_binom_se(p, n))
        rows.append((
            "s_scan", t_mid, sv, p, _binom_se(p, n), cs.n_zero / n,
            None, None, None, None, seed, base,
        ))
    verdicts["s_monotone_3sigma"] = all(
        (b - a) >= 3.0 * math.hypot(sa, sb)
        for (a, b, sa, sb) in zip(p_s, p_s[1:], se_s, se_s[1:])
    )

    params = dict(
        y=y, s=s, T_list=T_list, dt=float(dt), n=n, s_grid=s_grid,
    )
    return _report("prop-asymp", params, columns, rows, verdicts, seed)


def exp_cor_outside(
    y=1.2,
    s=0.5,
    eps_list=(0.1, 1e-6),
    T_list=(2.0, 3.0, 4.0),
    n=300_000,
    seed=55,
    dt=1e-3,
    threads=None,
):
    """Entry delay of an outside start conditioned on a small budget.

    For |y| > 1 and each horizon T, estimates P_y(tau >= eps | Gamma_T <= s)
    where tau is the first entry into [-1, 1]; under the conditioning the
    delay collapses, so the conditional probability falls with T for every
    fixed eps while tending to 1 as eps -> 0.  A companion inside-start
    ensemble tracks P_y(Gamma_T <= s) / P_0(Gamma_T <= s), which also falls
    with T.

    Verdicts: per eps, `decreasing_ordered_eps*` and `decreasing_3sigma_eps*`
    on the conditional probabilities, `final_leq_half_initial_eps*`, plus
    `eps_small_near_one` (value >= 0.99 at the smallest eps) and
    `outside_to_center_decreasing_3sigma` for the probability ratio.  The
    decrease verdicts are only emitted for thresholds of at least one time
    step; below dt the crossing grid cannot resolve the delay and the
    conditional probability is 1 identically, so a strict decrease is not a
    meaningful ask there.
    """
    y = float(y)
    if abs(y) <= 1.0:
        raise DomainError("exp_cor_outside needs an outside start, |y| > 1")
    s = float(s)
    eps_list = tuple(float(e) for e in eps_list)
    T_list = tuple(float(T) for T in T_list)
    if len(T_list) < 2 or any(b <= a for a, b in zip(T_list, T_list[1:])):
        raise ConfigError("T_list must be strictly increasing with >= 2 entries")
    n = int(n)

    columns = (
        "kind", "T", "eps", "n_leq", "p_leq", "value", "se", "seed",
        "stream_base",
    )
    rows = []
    cond = {e: [] for e in eps_list}
    ratio_rows = []
    for i, T in enumerate(T_list):
        base = 2 * i * _STUDY_STRIDE
        c = occupation_event_counts(
            y, T, dt, s=s, n=n, seed=seed, threads=threads,
            stream_base=base, tau_thresholds=eps_list,
        )
        c0 = occupation_event_counts(
            0.0, T, dt, s=s, n=n, seed=seed, threads=threads,
            stream_base=base + _STUDY_STRIDE,
        )
        p_leq = c.n_leq / n
        for e, n_tau in zip(eps_list, c.n_tau):
            p = n_tau / c.n_leq if c.n_leq else float("nan")
            se = _binom_se(p, c.n_leq) if c.n_leq else float("nan")
            cond[e].append((p, se))
            rows.append(("conditional", T, e, c.n_leq, p_leq, p, se, seed,
                         base))
        p0 = c0.n_leq / n
        r = p_leq / p0 if p0 else float("nan")
        se_r = (
            r * math.sqrt((1.0 - p_leq) / (p_leq * n) + (1.0 - p0) / (p0 * n))
            if p0 and p_leq else float("nan")
        )
        ratio_rows.append((r, se_r))
        rows.append(("outside_to_center", T, None, c.n_leq, p_leq, r, se_r,
                     seed, base + _STUDY_STRIDE))

    verdicts = {}
    for e in eps_list:
        if e < dt:
            continue
        tag = f"eps{e:g}"
        vals = [p for p, _ in cond[e]]
        errs = [se for _, se in cond[e]]
        verdicts[f"decreasing_ordered_{tag}"] = _ordered(vals, increasing=False)
        verdicts[f"decreasing_3sigma_{tag}"] = (
            verdicts[f"decreasing_ordered_{tag}"]
            and (vals[0] - vals[-1]) >= 3.0 * math.hypot(errs[0], errs[-1])
        )
        verdicts[f"final_leq_half_initial_{tag}"] = vals[-1] <= 0.5 * vals[0]
    e_min = min(eps_list)
    verdicts["eps_small_near_one"] = all(
        p >= 0.99 for p, _ in cond[e_min]
    )
    rv = [r for r, _ in ratio_rows]
    re = [se for _, se in ratio_rows]
    verdicts["outside_to_center_decreasing_3sigma"] = (
        _ordered(rv, increasing=False)
        and (rv[0] - rv[-1]) >= 3.0 * math.hypot(re[0], re[-1])
    )

    params = dict(
        y=y, s=s, eps_list=eps_list, T_list=T_list, n=n, dt=float(dt),
    )
    return _report("cor-outside", params, columns, rows, verdicts, seed)


EXPERIMENTS = {
    "ratio-qsd": exp_ratio_qsd,
    "qsd-stationarity": exp_qsd_stationarity,
    "thm-main": exp_thm_main,
    "prop-asymp": exp_prop_asymp,
    "cor-outside": exp_cor_outside,
}
