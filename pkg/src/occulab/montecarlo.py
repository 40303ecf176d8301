"""Path-level Monte Carlo: Brownian paths on a uniform grid, occupation time
outside (-1, 1) with a Brownian-bridge crossing correction, rejection sampling
of the conditioning events {Gamma_T = 0}, {Gamma_T <= s}, {Gamma_T in (0, s]},
Euler-Maruyama and exact-kernel simulation of the taboo process, and the
budget-exhaustion time sigma.

Occupation estimator (applies everywhere a path is measured): a grid node with
|value| >= 1 counts as outside.  A step contributes dt when both endpoints are
outside, dt/2 when exactly one is (the crossing happened somewhere inside the
step), and 0 when both are inside, except that an excursion invisible on the
grid is detected by flipping a coin with the bridge crossing probability
exp(-2 (1 -+ x1)(1 -+ x2) / dt) against each boundary; a detected excursion
contributes dt/2.  Crossing times are recorded at half steps, matching the
half-step occupation allocation.  The plain (uncorrected) mode is the bare
left-endpoint rule and is kept for bias studies.

Reproducibility: every consumer derives a counter-based Philox stream from a
(seed, stream_id) key.  Chunked estimators use stream_id = stream_base +
chunk_index and reduce their counters in chunk order, so results depend only
on the seed and the chunk layout, never on worker count or scheduling.
Per-path measurement streams in rejection sampling use stream_id = 2^63 +
path_index, which keeps the two families disjoint.
"""

import math
import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .analytic import qsd_sample, taboo_drift, absorbed_density
from .errors import ConfigError, DomainError, PartialResultError, TruncationError

TAU_INF = math.inf

# Bridge coins are only flipped where the crossing probability exceeds
# exp(-2 * _BRIDGE_CUT); below that the excursion probability is ~1e-16.
_BRIDGE_CUT = 18.0

# Per-path coin streams live above 2^63; chunk streams count up from 0.
_PATH_STREAM_BASE = 1 << 63

_DEFAULT_CHUNK = 500_000


def chunk_rng(seed, stream):
    """Counter-based generator for the (seed, stream) pair.

    Streams with distinct ids are statistically independent, so chunked
    estimators can be evaluated in any order or in parallel without changing
    their output.
    """
    key = np.array(
        [np.uint64(int(seed) & 0xFFFFFFFFFFFFFFFF), np.uint64(int(stream))],
        dtype=np.uint64,
    )
    return np.random.Generator(np.random.Philox(key=key))


def _resolve_threads(threads):
    if threads is None:
        threads = int(os.environ.get("OCCULAB_THREADS") or 1)
    threads = int(threads)
    if threads < 1:
        raise ConfigError(f"thread count must be >= 1, got {threads}")
    return threads


def _map_chunks(fn, jobs, threads):
    # Submission order == reduction order, whatever the worker count.
    if threads == 1 or len(jobs) == 1:
        return [fn(job) for job in jobs]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, jobs))


def _steps_for(T, dt):
    if not (dt > 0.0 and math.isfinite(dt)):
        raise DomainError(f"dt must be finite and > 0, got {dt}")
    if not (T > 0.0 and math.isfinite(T)):
        raise DomainError(f"T must be finite and > 0, got {T}")
    n = int(round(T / dt))
    if n < 1 or abs(n * dt - T) > 1e-12 * max(1.0, abs(T)):
        raise DomainError(f"T = {T} is not an integer multiple of dt = {dt}")
    return n


@dataclass(frozen=True)
class PathGrid:
    """A path sampled on the uniform grid 0, dt, ..., n_steps * dt.

    values[0] == y0 and len(values) == n_steps + 1; the horizon T is the
    derived product n_steps * dt.
    """

    y0: float
    dt: float
    n_steps: int
    values: np.ndarray

    def __post_init__(self):
        if not (self.dt > 0.0 and math.isfinite(self.dt)):
            raise DomainError(f"dt must be finite and > 0, got {self.dt}")
        if self.n_steps < 1:
            raise DomainError(f"n_steps must be >= 1, got {self.n_steps}")
        v = np.asarray(self.values, dtype=float)
        if v.shape != (self.n_steps + 1,):
            raise DomainError(
                f"values must have shape ({self.n_steps + 1},), got {v.shape}"
            )
        if not np.all(np.isfinite(v)):
            raise DomainError("path values must be finite")
        if v[0] != self.y0:
            raise DomainError("values[0] must equal y0")
        object.__setattr__(self, "values", v)

    @property
    def T(self):
        return self.n_steps * self.dt

    def times(self):
        """Grid times 0, dt, ..., T."""
        return self.dt * np.arange(self.n_steps + 1)


@dataclass(frozen=True)
class OccupationSample:
    """Occupation-time measurement of one path.

    gamma_T is the estimated time spent outside (-1, 1); tau the first time
    the path sits at or beyond a boundary (math.inf if it never does, 0.0 for
    a start outside); tau0 the first hit of the origin, with the same
    sentinel.
    """

    gamma_T: float
    tau: float
    tau0: float
    accepted: bool = True

    def __post_init__(self):
        if not (self.gamma_T >= 0.0):
            raise DomainError(f"gamma_T must be >= 0, got {self.gamma_T}")
        if not (self.tau >= 0.0 and self.tau0 >= 0.0):
            raise DomainError("crossing times must be >= 0 (or math.inf)")
        if math.isinf(self.tau) and self.gamma_T != 0.0:
            raise DomainError("tau = inf is only consistent with gamma_T = 0")


@dataclass(frozen=True)
class McEstimate:
    """Acceptance-fraction estimate with its binomial standard error.

    Reproducible from (seed, chunking) alone: chunking = (chunk_size,
    n_chunks) fixes the stream layout, and the reduction order is the chunk
    order regardless of worker count.
    """

    p_hat: float
    std_err: float
    n_total: int
    n_accept: int
    seed: int
    chunking: tuple

    def __post_init__(self):
        if self.n_total < 1 or not 0 <= self.n_accept <= self.n_total:
            raise ConfigError("need 0 <= n_accept <= n_total with n_total >= 1")
        if abs(self.p_hat - self.n_accept / self.n_total) > 1e-12:
            raise ConfigError("p_hat must equal n_accept / n_total")

    @classmethod
    def from_counts(cls, n_accept, n_total, seed, chunking):
        if n_total < 1 or not 0 <= n_accept <= n_total:
            raise ConfigError("need 0 <= n_accept <= n_total with n_total >= 1")
        p = n_accept / n_total
        se = math.sqrt(p * (1.0 - p) / n_total)
        return cls(p, se, int(n_total), int(n_accept), int(seed), tuple(chunking))

    @property
    def upper_95(self):
        """One-sided 95% upper bound; rule of three when nothing is accepted."""
        if self.n_accept == 0:
            return 3.0 / self.n_total
        return min(1.0, self.p_hat + 1.6448536269514722 * self.std_err)


def simulate_bm(y0, T, dt, rng):
    """Brownian path from y0 on the grid dt, 2 dt, ..., T.

    Increments are independent N(0, dt) draws from rng; T must be an integer
    multiple of dt within 1e-12.
    """
    y0 = float(y0)
    if not math.isfinite(y0):
        raise DomainError("y0 must be finite")
    n_steps = _steps_for(T, dt)
    v = np.empty(n_steps + 1)
    v[0] = y0
    np.cumsum(rng.standard_normal(n_steps), out=v[1:])
    v[1:] = y0 + math.sqrt(dt) * v[1:]
    v[0] = y0
    return PathGrid(y0, float(dt), n_steps, v)


def _first_time(node_mask, half_mask, dt):
    # Earliest of node times i*dt and within-step times (i + 1/2)*dt.
    t = TAU_INF
    idx = np.nonzero(node_mask)[0]
    if idx.size:
        t = idx[0] * dt
    jdx = np.nonzero(half_mask)[0]
    if jdx.size:
        t = min(t, (jdx[0] + 0.5) * dt)
    return t


def occupation_outside(path, bridge_corrected=True, rng=None):
    """Measure one path: occupation time outside (-1, 1), first boundary
    crossing, first hit of 0.

    Parameters
    ----------
    path : PathGrid
    bridge_corrected : bool
        True applies the half-step/bridge-coin estimator from the module
        docstring; False is the plain left-endpoint rule with grid-only
        crossing times.
    rng : numpy Generator, required in bridge mode
        Coins are consumed in a fixed order: boundary-excursion coins over the
        inside-inside steps in step order, then origin-hit coins.
        Re-measuring with a generator in the same state reproduces the sample
        exactly.

    Returns
    -------
    OccupationSample
    """
    v = path.values
    dt = path.dt
    x1 = v[:-1]
    x2 = v[1:]
    o1 = np.abs(x1) >= 1.0
    o2 = np.abs(x2) >= 1.0
    node_out = np.abs(v) >= 1.0
    start_inside = not node_out[0]

    if not bridge_corrected:
        gamma = dt * float(np.count_nonzero(o1))
        tau = _first_time(node_out, np.zeros(0, bool), dt)
        sign_flip = np.signbit(v) != np.signbit(v[0])
        tau0 = _first_time((v == 0.0) | sign_flip, np.zeros(0, bool), dt)
        return OccupationSample(gamma, tau, tau0)

    if rng is None:
        raise ConfigError("bridge-corrected measurement needs an rng for coins")

    gamma = dt * float(np.count_nonzero(o1 & o2))
    straddle = o1 ^ o2
    gamma += 0.5 * dt * float(np.count_nonzero(straddle))

    # Unseen-excursion coins on inside-inside steps near either boundary.
    cut = _BRIDGE_CUT * dt
    both_in = ~(o1 | o2)
    dplus = (1.0 - x1) * (1.0 - x2)
    dminus = (1.0 + x1) * (1.0 + x2)
    cand = both_in & ((dplus < cut) | (dminus < cut))
    ci = np.nonzero(cand)[0]
    hit = np.zeros(x1.shape, bool)
    if ci.size:
        p = np.exp(-2.0 * dplus[ci] / dt) + np.exp(-2.0 * dminus[ci] / dt)
        hit[ci[rng.random(ci.size) < p]] = True
        gamma += 0.5 * dt * float(np.count_nonzero(hit))

    # Origin-hit coins on steps that keep a consistent sign.
    same_sign = x1 * x2 > 0.0
    d0 = x1 * x2
    c0 = np.nonzero(same_sign & (d0 < cut))[0]
    hit0 = np.zeros(x1.shape, bool)
    if c0.size:
        hit0[c0[rng.random(c0.size) < np.exp(-2.0 * d0[c0] / dt)]] = True
    sign_flip = ~same_sign | (x2 == 0.0)
    tau0 = _first_time(v[:1] == 0.0, sign_flip | hit0, dt)

    if start_inside:
        tau = _first_time(np.zeros(1, bool), straddle | hit, dt)
    else:
        tau = 0.0

    return OccupationSample(gamma, tau, tau0)


@dataclass(frozen=True)
class EventCounts:
    """Raw counters from one chunked occupation study.

    n_zero counts paths with measured Gamma_T exactly 0; n_leq and n_in count
    Gamma_T <= s and 0 < Gamma_T <= s (None when no budget s was given);
    n_tau[k] counts paths with Gamma_T <= s whose first boundary crossing
    happened at or after tau_thresholds[k].

    horizon_counts holds one (t, n_zero, n_leq, n_in) tuple per requested
    intermediate horizon, measured on the same paths, so estimates at nested
    horizons share their randomness and differences between them carry far
    less Monte Carlo noise than independent runs would.
    """

    n_total: int
    n_zero: int
    n_leq: int | None
    n_in: int | None
    n_tau: tuple
    seed: int
    chunking: tuple
    survivors: np.ndarray | None = field(default=None, repr=False)
    horizon_counts: tuple = ()


def _occupation_chunk(job):
    (seed, stream, m, start, n_steps, dt, s, thresholds, bridge, collect,
     h_steps) = job
    rng = chunk_rng(seed, stream)
    sqdt = math.sqrt(dt)
    if start == "qsd":
        x = np.asarray(
            qsd_sample(np.maximum(rng.random(m), 2.0**-53)), dtype=float
        )
        outside_start = False
    else:
        x = np.full(m, float(start))
        outside_start = abs(start) >= 1.0

    gamma = np.zeros(m)
    track_tau = len(thresholds) > 0
    tau_t = np.full(m, TAU_INF) if track_tau else None
    if track_tau and outside_start and abs(start) <= 1.0:
        tau_t[:] = 0.0
    cut = _BRIDGE_CUT * dt
    half = 0.5 * dt
    hz = np.zeros((len(h_steps), 3), dtype=np.int64)

    for step in range(n_steps):
        if x.size == 0:
            break
        xn = x + sqdt * rng.standard_normal(x.size)
        o1 = np.abs(x) >= 1.0
        o2 = np.abs(xn) >= 1.0
        # Trapezoid allocation: dt, dt/2, 0 for two/one/zero outside endpoints.
        inc = half * (o1.astype(float) + o2.astype(float))
        if bridge:
            both_in = ~(o1 | o2)
            dplus = (1.0 - x) * (1.0 - xn)
            dminus = (1.0 + x) * (1.0 + xn)
            ci = np.nonzero(both_in & ((dplus < cut) | (dminus < cut)))[0]
            if ci.size:
                p = np.exp(-2.0 * dplus[ci] / dt) + np.exp(-2.0 * dminus[ci] / dt)
                inc[ci[rng.random(ci.size) < p]] += half
        if track_tau:
            if outside_start:
                # First entry into [-1, 1]: a node inside or a bridge touch.
                open_t = np.isinf(tau_t)
                if bridge:
                    both_out = o1 & o2 & (x * xn > 0.0)
                    dtouch = (np.abs(x) - 1.0) * (np.abs(xn) - 1.0)
                    ti = np.nonzero(open_t & both_out & (dtouch < cut))[0]
                    if ti.size:
                        th = ti[rng.random(ti.size) < np.exp(-2.0 * dtouch[ti] / dt)]
                        tau_t[th] = (step + 0.5) * dt
                tau_t[open_t & ~o2] = (step + 0.5) * dt
            else:
                tau_t[(gamma == 0.0) & (inc > 0.0)] = (step + 0.5) * dt
        gamma += inc
        x = xn
        dead = gamma > 0.0 if s is None else gamma > s
        nd = np.count_nonzero(dead)
        if nd:
            keep = ~dead
            x = x[keep]
            gamma = gamma[keep]
            if track_tau:
                tau_t = tau_t[keep]
        # Horizons not reached before extinction keep their zero counts.
        for j, hs in enumerate(h_steps):
            if hs == step + 1:
                nz = int(np.count_nonzero(gamma == 0.0))
                hz[j] = (nz, x.size, x.size - nz)

    n_tau = np.zeros(len(thresholds), dtype=np.int64)
    if s is None:
        n_zero, n_leq, n_in = x.size, None, None
    else:
        zero = gamma == 0.0
        leq = gamma <= s
        n_zero = int(np.count_nonzero(zero))
        n_leq = int(np.count_nonzero(leq))
        n_in = int(np.count_nonzero(leq & ~zero))
        for k, eps in enumerate(thresholds):
            n_tau[k] = np.count_nonzero(leq & (tau_t >= eps))
    survivors = x.copy() if collect else None
    return n_zero, n_leq, n_in, n_tau, survivors, hz


def occupation_event_counts(
    y0,
    T,
    dt,
    s=None,
    n=1,
    seed=0,
    chunk_size=None,
    threads=None,
    tau_thresholds=(),
    stream_base=0,
    bridge=True,
    collect_survivors=False,
    horizons=(),
):
    """Chunked occupation study over n fresh Brownian paths.

    Parameters
    ----------
    y0 : float or "qsd"
        Common start, or independent draws from the quasi-stationary law.
    s : float or None
        Occupation budget; None tracks only survival (Gamma_T = 0), which
        allows paths to be dropped at their first detected crossing.
    tau_thresholds : sequence of float
        For each eps, additionally count {Gamma_T <= s and tau >= eps}, where
        tau is the first exit (start inside) or first entry (start outside).
    stream_base : int
        Offset for the chunk stream ids; callers running several independent
        studies under one seed give each study a disjoint base.
    bridge : bool
        False switches the coin correction off (plain estimator bias studies).
    collect_survivors : bool
        With s None, also return the end positions of the never-crossed paths
        (concatenated in chunk order).
    horizons : sequence of float
        Intermediate times (positive multiples of dt, at most T) at which the
        same counters are also recorded, on the same paths.  Estimates at
        nested horizons are therefore positively correlated and their
        differences resolve trends that independent runs of the same size
        cannot.  Recording consumes no randomness, so passing horizons never
        changes the final counts.

    Returns
    -------
    EventCounts
    """
    if y0 != "qsd":
        y0 = float(y0)
        if not math.isfinite(y0):
            raise DomainError("y0 must be finite (or the string 'qsd')")
    n = int(n)
    if n < 1:
        raise DomainError(f"n must be >= 1, got {n}")
    if s is not None and not s > 0.0:
        raise DomainError(f"s must be > 0 (or None), got {s}")
    if s is None and tau_thresholds:
        raise ConfigError("tau_thresholds need an occupation budget s")
    if collect_survivors and s is not None:
        raise ConfigError("survivor collection is defined for the s = None study")
    thresholds = tuple(float(e) for e in tau_thresholds)
    if any(e < 0.0 for e in thresholds):
        raise DomainError("tau thresholds must be >= 0")
    n_steps = _steps_for(T, dt)
    h_times = tuple(float(h) for h in horizons)
    h_steps = tuple(_steps_for(h, dt) for h in h_times)
    if any(hs > n_steps for hs in h_steps):
        raise DomainError("horizons must not exceed the final time T")
    if chunk_size is None:
        chunk_size = _DEFAULT_CHUNK
    chunk_size = min(int(chunk_size), n)
    if chunk_size < 1:
        raise ConfigError(f"chunk_size must be >= 1, got {chunk_size}")
    n_chunks = (n + chunk_size - 1) // chunk_size
    sizes = [min(chunk_size, n - i * chunk_size) for i in range(n_chunks)]
    jobs = [
        (seed, stream_base + i, sizes[i], y0, n_steps, dt, s, thresholds, bridge,
         collect_survivors, h_steps)
        for i in range(n_chunks)
    ]
    parts = _map_chunks(_occupation_chunk, jobs, _resolve_threads(threads))

    n_zero = sum(p[0] for p in parts)
    n_leq = None if s is None else sum(p[1] for p in parts)
    n_in = None if s is None else sum(p[2] for p in parts)
    n_tau = tuple(int(v) for v in sum(p[3] for p in parts)) if thresholds else ()
    survivors = None
    if collect_survivors:
        survivors = np.concatenate([p[4] for p in parts]) if parts else None
    hz_total = sum(p[5] for p in parts)
    horizon_counts = tuple(
        (t, int(row[0]), None if s is None else int(row[1]),
         None if s is None else int(row[2]))
        for t, row in zip(h_times, hz_total)
    )
    return EventCounts(
        n, n_zero, n_leq, n_in, n_tau, int(seed), (chunk_size, n_chunks),
        survivors, horizon_counts
    )


_EVENTS = ("leq_s", "eq_zero", "in_0s")


def estimate_event(
    y0, T, dt, s, event, n, seed, chunk_size=None, threads=None, stream_base=0
):
    """Rejection-counting estimate of one conditioning event.

    event is "leq_s" for {Gamma_T <= s}, "eq_zero" for {Gamma_T = 0} (s is
    ignored and may be None), or "in_0s" for {Gamma_T in (0, s]}.  Returns an
    McEstimate; when nothing is accepted the estimate is 0 with the rule-of-
    three one-sided bound 3/n exposed as upper_95, and a warning is emitted.
    """
    if event not in _EVENTS:
        raise ConfigError(f"event must be one of {_EVENTS}, got {event!r}")
    if event == "eq_zero":
        s = None
    elif s is None:
        raise DomainError(f"event {event!r} needs a finite budget s")
    counts = occupation_event_counts(
        y0, T, dt, s=s, n=n, seed=seed, chunk_size=chunk_size, threads=threads,
        stream_base=stream_base,
    )
    n_accept = {
        "eq_zero": counts.n_zero,
        "leq_s": counts.n_leq,
        "in_0s": counts.n_in,
    }[event]
    est = McEstimate.from_counts(n_accept, counts.n_total, seed, counts.chunking)
    if n_accept == 0:
        warnings.warn(
            f"no path satisfied {event!r} out of n = {n}; the one-sided 95% "
            f"bound is 3/n = {3.0 / n:.3g}",
            RuntimeWarning,
            stacklevel=2,
        )
    return est


@dataclass(frozen=True)
class ConditionedSample:
    """Accepted paths from rejection sampling, with their measurements.

    paths[i] and occupation[i] correspond; n_matched counts every acceptance
    seen while n_tried paths were processed, so n_matched / n_tried is an
    unbiased acceptance rate even when the returned list was truncated to the
    requested size.
    """

    paths: list
    occupation: list
    n_tried: int
    n_matched: int
    seed: int

    @property
    def acceptance_rate(self):
        return self.n_matched / self.n_tried


def _event_test(event, sample, s):
    if event == "eq_zero":
        return sample.gamma_T == 0.0
    if event == "leq_s":
        return sample.gamma_T <= s
    return 0.0 < sample.gamma_T <= s


def sample_conditioned(
    y0, T, dt, s, event, n_wanted, seed, max_paths=10_000_000, batch=None
):
    """Draw paths conditioned on an occupation event by plain rejection.

    Paths are simulated in blocks; a cheap coin-free lower bound on Gamma_T
    prunes certain rejections, and the survivors are measured exactly with
    occupation_outside using the per-path coin stream (seed, 2^63 + index), so
    any accepted path can be re-measured bit-identically.

    Raises PartialResultError carrying the partial ConditionedSample when
    max_paths is exhausted before n_wanted acceptances.
    """
    if event not in _EVENTS:
        raise ConfigError(f"event must be one of {_EVENTS}, got {event!r}")
    if event != "eq_zero" and (s is None or not s > 0.0):
        raise DomainError(f"event {event!r} needs a budget s > 0")
    n_wanted = int(n_wanted)
    if n_wanted < 1:
        raise DomainError(f"n_wanted must be >= 1, got {n_wanted}")
    y0 = float(y0)
    n_steps = _steps_for(T, dt)
    if batch is None:
        batch = max(64, (1 << 23) // (n_steps + 1))
    sqdt = math.sqrt(dt)

    paths, occs = [], []
    n_tried = 0
    n_matched = 0
    block = 0
    while n_matched < n_wanted:
        if n_tried >= max_paths:
            partial = ConditionedSample(paths, occs, n_tried, n_matched, seed)
            raise PartialResultError(
                f"rejection budget exhausted: {n_matched} of {n_wanted} paths "
                f"accepted after {n_tried} tries",
                partial=partial,
            )
        m = min(batch, max_paths - n_tried)
        rng = chunk_rng(seed, block)
        x = np.empty((m, n_steps + 1))
        x[:, 0] = y0
        np.cumsum(rng.standard_normal((m, n_steps)), axis=1, out=x[:, 1:])
        x[:, 1:] = y0 + sqdt * x[:, 1:]

        # Coin-free lower bound on Gamma_T prunes certain rejections.
        out = np.abs(x) >= 1.0
        gmin = 0.5 * dt * (
            np.count_nonzero(out[:, :-1], axis=1)
            + np.count_nonzero(out[:, 1:], axis=1)
        )
        cand = np.nonzero(gmin == 0.0 if event == "eq_zero" else gmin <= s)[0]
        for row in cand:
            grid = PathGrid(y0, float(dt), n_steps, x[row].copy())
            coin = chunk_rng(seed, _PATH_STREAM_BASE + n_tried + int(row))
            samp = occupation_outside(grid, bridge_corrected=True, rng=coin)
            if _event_test(event, samp, s):
                n_matched += 1
                if len(paths) < n_wanted:
                    paths.append(grid)
                    occs.append(samp)
        n_tried += m
        block += 1
    return ConditionedSample(paths, occs, n_tried, n_matched, seed)


def _taboo_delta(dt):
    delta = 10.0 * math.sqrt(dt)
    if delta >= 0.5:
        raise ConfigError(
            f"dt = {dt} too coarse for the near-boundary policy: "
            f"10 sqrt(dt) = {delta:.3g} >= 0.5"
        )
    return delta


def _taboo_em_step(x, dt, delta, rng):
    # One EM step for every component; paths inside the near-boundary band
    # |x| > 1 - delta, and any path whose proposal exits, consume their dt in
    # halving substeps with exit proposals rejected and redrawn.
    prop = x + taboo_drift(x) * dt + math.sqrt(dt) * rng.standard_normal(x.size)
    easy = (np.abs(x) <= 1.0 - delta) & (np.abs(prop) < 1.0)
    out = np.where(easy, prop, x)
    hard = np.nonzero(~easy)[0]
    if hard.size == 0:
        return out
    xs = out[hard]
    rem = np.full(hard.size, dt)
    h = np.full(hard.size, dt)
    guard = dt * 2.0**-60
    while True:
        act = np.nonzero(rem > 0.0)[0]
        if act.size == 0:
            break
        h[act] = np.minimum(h[act], rem[act])
        if np.any(h[act] <= guard):
            raise TruncationError("taboo substep underflow at the boundary")
        za = rng.standard_normal(act.size)
        pa = xs[act] + taboo_drift(xs[act]) * h[act] + np.sqrt(h[act]) * za
        ok = np.abs(pa) < 1.0
        ia = act[ok]
        xs[ia] = pa[ok]
        rem[ia] -= h[ia]
        h[act[~ok]] *= 0.5
    out[hard] = xs
    return out


_TABOO_TABLE_CACHE = {}


def _taboo_table(dt, n_x=800, n_u=1024):
    # Quantile surface of the one-step taboo kernel: row i holds the inverse
    # CDF of the arrival point given departure x1g[i], on a uniform u-grid.
    key = (round(float(dt), 12), n_x, n_u)
    hit = _TABOO_TABLE_CACHE.get(key)
    if hit is not None:
        return hit
    x1g = np.linspace(-1.0, 1.0, n_x + 1)[1:-1]
    x2g = np.linspace(-1.0, 1.0, 2 * n_x + 1)
    dens = absorbed_density(x1g[:, None], x2g[None, :], dt)
    dens = dens * np.cos(np.pi * x2g / 2.0)[None, :]
    cdf = np.concatenate(
        [np.zeros((dens.shape[0], 1)),
         np.cumsum(0.5 * (dens[:, 1:] + dens[:, :-1]) * (x2g[1] - x2g[0]), axis=1)],
        axis=1,
    )
    cdf /= cdf[:, -1:]
    ug = np.linspace(0.0, 1.0, n_u + 1)
    Q = np.empty((x1g.size, ug.size))
    for i in range(x1g.size):
        Q[i] = np.interp(ug, cdf[i], x2g)
    table = (x1g, ug, Q)
    _TABOO_TABLE_CACHE[key] = table
    return table


def _taboo_exact_step(x, table, rng):
    x1g, ug, Q = table
    u = rng.random(x.size)
    fx = (x - x1g[0]) / (x1g[1] - x1g[0])
    ix = np.clip(np.floor(fx).astype(np.int64), 0, x1g.size - 2)
    fx = np.clip(fx - ix, 0.0, 1.0)
    fu = u * (ug.size - 1)
    iu = np.clip(fu.astype(np.int64), 0, ug.size - 2)
    fu -= iu
    val = (
        (1.0 - fx) * ((1.0 - fu) * Q[ix, iu] + fu * Q[ix, iu + 1])
        + fx * ((1.0 - fu) * Q[ix + 1, iu] + fu * Q[ix + 1, iu + 1])
    )
    return np.clip(val, -1.0 + 1e-12, 1.0 - 1e-12)


_TABOO_MODES = ("em", "exact")


def simulate_taboo(y0, T, dt, rng, mode="em"):
    """One path of the taboo process (conditioned never to leave (-1, 1)).

    mode "em" is Euler-Maruyama with the drift -(pi/2) tan(pi y / 2) and the
    halving/rejection policy near the boundary; mode "exact" draws each
    increment from the one-step taboo kernel by inverse CDF on a cached
    quantile table, and accepts any dt.
    """
    y0 = float(y0)
    if not -1.0 < y0 < 1.0:
        raise DomainError(f"y0 must lie strictly inside (-1, 1), got {y0}")
    if mode not in _TABOO_MODES:
        raise ConfigError(f"mode must be one of {_TABOO_MODES}, got {mode!r}")
    n_steps = _steps_for(T, dt)
    v = np.empty(n_steps + 1)
    v[0] = y0
    x = np.array([y0])
    if mode == "em":
        delta = _taboo_delta(dt)
        for i in range(n_steps):
            x = _taboo_em_step(x, dt, delta, rng)
            v[i + 1] = x[0]
    else:
        table = _taboo_table(dt)
        for i in range(n_steps):
            x = _taboo_exact_step(x, table, rng)
            v[i + 1] = x[0]
    return PathGrid(y0, float(dt), n_steps, v)


def _taboo_chunk(job):
    seed, stream, m, y0, n_steps, dt, mode = job
    rng = chunk_rng(seed, stream)
    x = np.full(m, float(y0))
    max_abs = abs(float(y0))
    if mode == "em":
        delta = _taboo_delta(dt)
        for _ in range(n_steps):
            x = _taboo_em_step(x, dt, delta, rng)
            max_abs = max(max_abs, float(np.max(np.abs(x))))
    else:
        table = _taboo_table(dt)
        for _ in range(n_steps):
            x = _taboo_exact_step(x, table, rng)
            max_abs = max(max_abs, float(np.max(np.abs(x))))
    return x, max_abs


def simulate_taboo_ensemble(
    y0, T, dt, n, seed, mode="em", chunk_size=100_000, threads=None, stream_base=0
):
    """End positions of n independent taboo paths, plus the largest |value|
    seen anywhere in the ensemble (a sanity probe: it must stay < 1).

    Returns
    -------
    (positions, max_abs) : (ndarray of shape (n,), float)
    """
    y0 = float(y0)
    if not -1.0 < y0 < 1.0:
        raise DomainError(f"y0 must lie strictly inside (-1, 1), got {y0}")
    if mode not in _TABOO_MODES:
        raise ConfigError(f"mode must be one of {_TABOO_MODES}, got {mode!r}")
    n = int(n)
    if n < 1:
        raise DomainError(f"n must be >= 1, got {n}")
    n_steps = _steps_for(T, dt)
    chunk_size = min(int(chunk_size), n)
    n_chunks = (n + chunk_size - 1) // chunk_size
    jobs = [
        (seed, stream_base + i, min(chunk_size, n - i * chunk_size), y0, n_steps,
         dt, mode)
        for i in range(n_chunks)
    ]
    parts = _map_chunks(_taboo_chunk, jobs, _resolve_threads(threads))
    positions = np.concatenate([p[0] for p in parts])
    return positions, max(p[1] for p in parts)


def _sigma_scan(x_prev, xs, clock, s, dt, rng):
    # Occupation increments over one simulated block, with bridge coins; the
    # return distinguishes "budget crossed inside the block" from "not yet".
    x1 = np.concatenate(([x_prev], xs[:-1]))
    o1 = np.abs(x1) >= 1.0
    o2 = np.abs(xs) >= 1.0
    inc = 0.5 * dt * (o1.astype(float) + o2.astype(float))
    cut = _BRIDGE_CUT * dt
    both_in = ~(o1 | o2)
    dplus = (1.0 - x1) * (1.0 - xs)
    dminus = (1.0 + x1) * (1.0 + xs)
    ci = np.nonzero(both_in & ((dplus < cut) | (dminus < cut)))[0]
    if ci.size:
        p = np.exp(-2.0 * dplus[ci] / dt) + np.exp(-2.0 * dminus[ci] / dt)
        inc[ci[rng.random(ci.size) < p]] += 0.5 * dt
    csum = clock + np.cumsum(inc)
    over = np.nonzero(csum > s)[0]
    if over.size == 0:
        return None, csum[-1]
    k = int(over[0])
    before = csum[k] - inc[k]
    return (k, before, inc[k]), csum[-1]


def sample_sigma(s, dt, rng, block=8192):
    """Time for a path started at 1 to spend more than s outside (-1, 1).

    Runs a Brownian path with the bridge-corrected occupation clock until the
    clock exceeds s and returns the crossing time, interpolated inside the
    crossing step (always >= s, since the clock cannot run faster than time).
    A runaway guard caps the simulation at 10^3 (s + 1) time units and raises
    PartialResultError; the cap probability is negligible.
    """
    if not (s > 0.0 and math.isfinite(s)):
        raise DomainError(f"s must be finite and > 0, got {s}")
    if not (dt > 0.0 and math.isfinite(dt)):
        raise DomainError(f"dt must be finite and > 0, got {dt}")
    t_max = 1e3 * (s + 1.0)
    sqdt = math.sqrt(dt)
    x = 1.0
    clock = 0.0
    t = 0.0
    while t < t_max:
        nb = min(block, int(math.ceil((t_max - t) / dt)))
        xs = x + sqdt * np.cumsum(rng.standard_normal(nb))
        crossing, end_clock = _sigma_scan(x, xs, clock, s, dt, rng)
        if crossing is not None:
            k, before, c = crossing
            # sigma >= s holds exactly; the max only undoes float rounding
            return max(t + k * dt + dt * (s - before) / c, s)
        clock = end_clock
        x = float(xs[-1])
        t += nb * dt
    raise PartialResultError(
        f"sigma cap hit: clock reached only {clock:.6g} of s = {s} within "
        f"t_max = {t_max:.6g}",
        partial=clock,
    )


def _sigma_chunk(job):
    seed, stream, m, s, dt, t_max = job
    rng = chunk_rng(seed, stream)
    sqdt = math.sqrt(dt)
    cut = _BRIDGE_CUT * dt
    half = 0.5 * dt
    x = np.full(m, 1.0)
    clock = np.zeros(m)
    idx = np.arange(m)
    out = np.full(m, np.nan)
    n_steps = int(math.ceil(t_max / dt))
    for step in range(n_steps):
        if x.size == 0:
            break
        xn = x + sqdt * rng.standard_normal(x.size)
        o1 = np.abs(x) >= 1.0
        o2 = np.abs(xn) >= 1.0
        inc = half * (o1.astype(float) + o2.astype(float))
        both_in = ~(o1 | o2)
        dplus = (1.0 - x) * (1.0 - xn)
        dminus = (1.0 + x) * (1.0 + xn)
        ci = np.nonzero(both_in & ((dplus < cut) | (dminus < cut)))[0]
        if ci.size:
            p = np.exp(-2.0 * dplus[ci] / dt) + np.exp(-2.0 * dminus[ci] / dt)
            inc[ci[rng.random(ci.size) < p]] += half
        newclock = clock + inc
        done = newclock > s
        if np.any(done):
            di = np.nonzero(done)[0]
            out[idx[di]] = np.maximum(step * dt + dt * (s - clock[di]) / inc[di], s)
            keep = ~done
            x, xn = x[keep], xn[keep]
            clock, newclock = clock[keep], newclock[keep]
            idx = idx[keep]
        x = xn
        clock = newclock
    if x.size:
        raise PartialResultError(
            f"sigma cap hit for {x.size} of {m} paths at t_max = {t_max:.6g}",
            partial=out[~np.isnan(out)],
        )
    return out


def sample_sigma_batch(s, dt, n, seed, chunk_size=100_000, threads=None,
                       stream_base=0):
    """n independent draws of the budget-exhaustion time, chunk-reproducible.

    Same estimator as sample_sigma; returns an array in simulation order.
    """
    if not (s > 0.0 and math.isfinite(s)):
        raise DomainError(f"s must be finite and > 0, got {s}")
    if not (dt > 0.0 and math.isfinite(dt)):
        raise DomainError(f"dt must be finite and > 0, got {dt}")
    n = int(n)
    if n < 1:
        raise DomainError(f"n must be >= 1, got {n}")
    t_max = 1e3 * (s + 1.0)
    chunk_size = min(int(chunk_size), n)
    n_chunks = (n + chunk_size - 1) // chunk_size
    jobs = [
        (seed, stream_base + i, min(chunk_size, n - i * chunk_size), s, dt, t_max)
        for i in range(n_chunks)
    ]
    parts = _map_chunks(_sigma_chunk, jobs, _resolve_threads(threads))
    return np.concatenate(parts)
