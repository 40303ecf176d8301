"""Numerical Laplace inversion for recovering R(T) = P_y(Gamma_T in (0, s])
and its survival-scaled companion S(T) = e^{pi^2 T/8} R(T) from the transform
layer.

Two deliberately different methods are kept side by side and every inversion
reports their disagreement.  Gaver-Stehfest samples the transform on the real
axis only and runs in mpmath extended precision, because its alternating
integer weights burn roughly 0.9 decimal digits per term.  The Bromwich
trapezoid rule with Euler acceleration samples a vertical contour and runs in
hardware floats; it is the independent cross-check, good to about 1e-8.

Transforms whose values overflow doubles (anything close to the essential
singularity of the shifted transform) are never inverted directly: the
contour is re-anchored by an exponential shift chosen from the saddle-point
scale, the shifted inverse is O(1), and the removed exponential is restored
afterwards in log space (see `snu_from_transform`).
"""

import math
from dataclasses import dataclass, replace
from fractions import Fraction
from functools import lru_cache
from types import MappingProxyType

import mpmath as mp

from .analytic import LAMBDA0
from .asymptotic import saddle_h
from .errors import AccuracyError, ConfigError, DomainError
from .laplace import TransformValue, laplace_R_mp

_METHODS = ("gaver_stehfest", "bromwich_trapezoid")

# Euler-accelerated trapezoid: base terms before averaging, averaging depth.
_BROMWICH_BASE = 40
_BROMWICH_EULER = 14

# Margin (in units of 1/T) subtracted from the saddle shift so the
# re-anchored contour stays strictly right of the transform's growth rate.
_SHIFT_MARGIN = 3.0


@dataclass(frozen=True)
class InversionConfig:
    """Settings shared by both inversion methods.

    Parameters
    ----------
    method : str
        Which value `invert` reports: "gaver_stehfest" or
        "bromwich_trapezoid".  Both always run; the other one feeds the
        error estimate.
    precision_bits : int
        mpmath working precision for Gaver-Stehfest.  Must cover the
        digit loss of the alternating weights: at least 8 * n_terms.
    n_terms : int
        Number of Gaver-Stehfest terms; even, at most 64.
    bromwich_shift : float
        Abscissa of the Bromwich contour Re lambda = shift.  Alias error
        decays like e^{-2 shift T} while truncation and roundoff residues
        are amplified by e^{shift T}, so shift * T around 9-14 is the
        accurate band; the default suits the T = 2..3 fixtures and should
        be rescaled like 9.2/T elsewhere.
    """

    method: str = "gaver_stehfest"
    precision_bits: int = 384
    n_terms: int = 48
    bromwich_shift: float = 4.6

    def __post_init__(self):
        if self.method not in _METHODS:
            raise ConfigError(f"unknown method {self.method!r}; use one of {_METHODS}")
        if not (isinstance(self.precision_bits, int) and self.precision_bits >= 64):
            raise ConfigError("precision_bits must be an integer >= 64")
        if not (
            isinstance(self.n_terms, int)
            and self.n_terms > 0
            and self.n_terms % 2 == 0
        ):
            raise ConfigError("n_terms must be a positive even integer")
        if self.n_terms > 64:
            raise ConfigError("n_terms must be <= 64")
        if self.precision_bits < 8 * self.n_terms:
            raise ConfigError(
                "gaver_stehfest loses ~0.9 digits per term; "
                f"precision_bits must be >= 8*n_terms = {8 * self.n_terms}"
            )
        if not (self.bromwich_shift > 0.0):
            raise ConfigError("bromwich_shift must be > 0")


DEFAULT_INVERSION = InversionConfig()


@dataclass(frozen=True)
class InversionResult:
    """Inverse-transform value plus the cross-method disagreement."""

    value: float
    error: float
    by_method: MappingProxyType


@lru_cache(maxsize=8)
def _gs_weights(n):
    """Gaver-Stehfest weights for even n as exact rationals."""
    half = n // 2
    fact = math.factorial
    out = []
    for k in range(1, n + 1):
        acc = Fraction(0)
        for j in range((k + 1) // 2, min(k, half) + 1):
            acc += Fraction(
                j**half * fact(2 * j),
                fact(half - j) * fact(j) * fact(j - 1) * fact(k - j) * fact(2 * j - k),
            )
        out.append((-1) ** (half + k) * acc)
    return tuple(out)


def _to_mp(val):
    if isinstance(val, TransformValue):
        return mp.exp(mp.mpc(val.log_modulus, val.phase))
    return mp.mpmathify(val)


def _to_complex(val):
    if isinstance(val, TransformValue):
        return val.value
    return complex(val)


def _gaver_stehfest(transform, T, cfg):
    weights = _gs_weights(cfg.n_terms)
    with mp.workprec(cfg.precision_bits):
        a = mp.ln(2) / T
        total = mp.fsum(
            mp.mpf(w.numerator) / w.denominator * _to_mp(transform(a * k))
            for k, w in enumerate(weights, start=1)
        )
        return float(mp.re(a * total))


def _bromwich_trapezoid(transform, T, cfg):
    c = float(cfg.bromwich_shift)
    if c * T > 600.0:
        raise DomainError(
            f"bromwich_shift*T = {c * T:.1f} overflows the contour scaling; "
            "pick a shift of order 9.2/T"
        )
    step = math.pi / T
    # alternating trapezoid series, then binomial (Euler) averaging of the
    # last partial sums
    acc = 0.5 * _to_complex(transform(complex(c, 0.0))).real
    partials = []
    for k in range(1, _BROMWICH_BASE + _BROMWICH_EULER + 1):
        term = _to_complex(transform(complex(c, k * step))).real
        acc += term if k % 2 == 0 else -term
        if k >= _BROMWICH_BASE:
            partials.append(acc)
    m = _BROMWICH_EULER
    avg = sum(math.comb(m, j) * partials[j] for j in range(m + 1)) / 2.0**m
    return math.exp(c * T) / T * avg


def invert(transform, T, cfg=DEFAULT_INVERSION, agree_tol=None):
    """Invert a Laplace transform at a single time.

    Parameters
    ----------
    transform : callable
        lambda -> value.  Called with positive mpmath reals by
        Gaver-Stehfest and with complex points on Re lambda =
        `cfg.bromwich_shift` by the trapezoid rule.  May return a float,
        complex, mpmath number, or TransformValue.
    T : float
        Time at which to evaluate the inverse; > 0.
    cfg : InversionConfig
        Method selection and numerical knobs.
    agree_tol : float, optional
        Allowed |GS - Bromwich| before the result is rejected.  Default
        max(1e-8, 1e-6 * |value|).

    Returns
    -------
    InversionResult
        `value` from the configured method, `error` = cross-method
        disagreement, `by_method` with both raw values.

    Raises
    ------
    AccuracyError
        If the two methods disagree beyond `agree_tol`; carries both
        values.
    """
    T = float(T)
    if not (T > 0.0):
        raise DomainError("T must be > 0")
    gs = _gaver_stehfest(transform, T, cfg)
    br = _bromwich_trapezoid(transform, T, cfg)
    primary = gs if cfg.method == "gaver_stehfest" else br
    err = abs(gs - br)
    tol = (
        max(1e-8, 1e-6 * abs(primary)) if agree_tol is None else float(agree_tol)
    )
    by_method = MappingProxyType({"gaver_stehfest": gs, "bromwich_trapezoid": br})
    if err > tol:
        raise AccuracyError(
            f"inversion methods disagree at T = {T}: |{gs} - {br}| = {err:.3e} "
            f"> {tol:.3e}",
            values=dict(by_method),
        )
    return InversionResult(value=primary, error=err, by_method=by_method)


def _qsd_transform(mu, s):
    """Transform of R under the arcsine-cosine start law, by quadrature.

    Integrates the y-dependence (entirely inside u) against the stationary
    density (pi/4) cos(pi y/2); the integrand is even in y.
    """
    return 2 * mp.quad(
        lambda y: laplace_R_mp(mu, y, s) * mp.pi / 4 * mp.cos(mp.pi * y / 2),
        [0, 1],
    )


def snu_from_transform(s, T, cfg=DEFAULT_INVERSION):
    """S_nu(T) = e^{pi^2 T/8} P_nu(Gamma_T in (0, s]) by numerical inversion.

    The start point is drawn from the quasi-stationary law nu, so the
    transform is the nu-average of the single-point transform, computed by
    quadrature at every node.  Direct inversion would need transform values
    of size e^{V} near the singularity, far outside double range; instead
    the contour is re-anchored at alpha = pi^2/8 - h(T) - 3/T (clamped at
    0), where h is the saddle point of the exponent.  The shifted transform
    mu -> L(R_nu)(mu - alpha) inverts to e^{alpha T} R_nu(T), which is
    moderate, and the factor e^{(pi^2/8 - alpha) T} is restored at the end.

    Parameters
    ----------
    s : float
        Occupation budget; > 0.
    T : float
        Horizon; > 0.  Values up to about 80 keep every intermediate
        inside double range.
    cfg : InversionConfig
        Forwarded to `invert`; the Bromwich abscissa is always replaced
        by the T-scaled value 9.2/T.

    Returns
    -------
    float
        S_nu(T).
    """
    s = float(s)
    T = float(T)
    if not (s > 0.0):
        raise DomainError("s must be > 0")
    if not (T > 0.0):
        raise DomainError("T must be > 0")
    alpha = max(0.0, LAMBDA0 - saddle_h(T, s) - _SHIFT_MARGIN / T)
    cfg = replace(cfg, bromwich_shift=9.2 / T)

    def shifted(mu):
        return _qsd_transform(mp.mpmathify(mu) - alpha, s)

    res = invert(shifted, T, cfg)
    # res.value = e^{alpha T} R_nu(T); multiply by e^{(pi^2/8 - alpha) T}
    return res.value * math.exp((LAMBDA0 - alpha) * T)
