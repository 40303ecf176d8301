"""Closed forms for Brownian motion on (-1, 1): exit probabilities, the
first-exit-time density, the absorbed and taboo transition densities, and the
quasi-stationary distribution.

Eigenstructure of -1/2 d^2/dy^2 on (-1, 1) with Dirichlet conditions:
rates lambda_n = (2n+1)^2 pi^2 / 8 with the cosine eigenfunctions for the
symmetric problem, and n^2 pi^2 / 8 with sines for the full absorbed kernel.

Every spectral series here converges slowly as t -> 0, so all time-dependent
quantities switch to a method-of-images (Gaussian) representation below
t = 0.1; both representations agree to ~1e-12 at the crossover and the switch
point is covered by tests.
"""

from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr

from .errors import ConfigError, DomainError, TruncationError

LAMBDA0 = np.pi**2 / 8.0

# Series/images crossover: at t = 0.1 the spectral series needs ~12 terms and
# the image sum ~3, and the two agree to better than 1e-12.
_T_CROSSOVER = 0.1

_SQRT_2PI = np.sqrt(2.0 * np.pi)


@dataclass(frozen=True)
class SeriesTolerance:
    """Truncation policy for all spectral and image series."""

    abs_tol: float = 1e-12
    max_terms: int = 10_000

    def __post_init__(self):
        if not (self.abs_tol > 0.0):
            raise ConfigError(f"abs_tol must be positive, got {self.abs_tol}")
        if self.max_terms < 1:
            raise ConfigError(f"max_terms must be >= 1, got {self.max_terms}")


DEFAULT_TOL = SeriesTolerance()


def eigen_lambda(n):
    """Decay rate lambda_n = (2n+1)^2 pi^2 / 8 of the n-th symmetric mode."""
    n = np.asarray(n)
    if np.any(n < 0):
        raise DomainError("mode index must be >= 0")
    out = (2 * n + 1) ** 2 * (np.pi**2 / 8.0)
    return float(out) if out.ndim == 0 else out


def eigen_phi(n, y):
    """Eigenfunction phi_n(y) = 4(-1)^n / (pi (2n+1)) * cos((2n+1) pi y / 2).

    Normalized so that the exit-time density is sum_n lambda_n e^{-lambda_n t}
    phi_n(y) and phi_0 carries the quasi-stationary profile.
    """
    n = np.asarray(n)
    if np.any(n < 0):
        raise DomainError("mode index must be >= 0")
    y = np.asarray(y, dtype=float)
    m = 2 * n + 1
    out = (4.0 * (-1.0) ** n / (np.pi * m)) * np.cos(m * np.pi * y / 2.0)
    return float(out) if out.ndim == 0 else out


def _check_in_closed_interval(y, name="y"):
    y = np.asarray(y, dtype=float)
    if np.any(np.abs(y) > 1.0) or np.any(~np.isfinite(y)):
        raise DomainError(f"{name} must lie in [-1, 1]")
    return y


def _series_k_needed(t_min, abs_tol, max_terms, quadratic_rate):
    # Terms are bounded by c * e^{-(2k+1)^2 rate * t}; find the first k where
    # the bound drops below abs_tol.
    k = 0
    while (2 * k + 1) ** 2 * quadratic_rate * t_min < np.log(4.0 / abs_tol):
        k += 1
        if k > max_terms:
            raise TruncationError(
                f"series needs more than {max_terms} terms at t = {t_min}"
            )
    return k + 1


def _image_k_needed(t_max, abs_tol):
    # Image terms at offset 4k are O(e^{-(4k-2)^2 / (2 t)}).
    z = np.sqrt(2.0 * max(np.log(1.0 / abs_tol), 1.0)) + 2.0
    return int(np.ceil((z * np.sqrt(t_max) + 2.0) / 4.0)) + 1


def exit_prob_zero(y, T, tol=None):
    """P_y(Gamma_T = 0): probability that the path stays inside (-1, 1) up to T.

    Parameters
    ----------
    y : array_like in [-1, 1]
        Starting point.
    T : array_like, >= 0
        Horizon.
    tol : SeriesTolerance, optional

    Returns
    -------
    float or ndarray
        For T >= 0.1 the spectral series (4/pi) sum_k (-1)^k/(2k+1)
        cos((2k+1) pi y/2) e^{-lambda_k T}; below that, the method-of-images
        sum of Gaussian CDFs. Exactly 1.0 at T = 0 with |y| < 1 and exactly
        0.0 at |y| = 1.
    """
    tol = tol or DEFAULT_TOL
    y = _check_in_closed_interval(y)
    T = np.asarray(T, dtype=float)
    if np.any(T < 0.0) or np.any(~np.isfinite(T)):
        raise DomainError("T must be finite and >= 0")
    y, T = np.broadcast_arrays(y, T)
    out = np.empty(y.shape, dtype=float)

    on_edge = np.abs(y) == 1.0
    zero_T = (T == 0.0) & ~on_edge
    series = (T >= _T_CROSSOVER) & ~on_edge
    images = ~(on_edge | zero_T | series)

    out[on_edge] = 0.0
    out[zero_T] = 1.0

    if np.any(series):
        ys, Ts = y[series], T[series]
        acc = np.zeros(ys.shape)
        kmax = _series_k_needed(Ts.min(), tol.abs_tol, tol.max_terms, np.pi**2 / 8.0)
        for k in range(kmax):
            m = 2 * k + 1
            acc += ((-1.0) ** k / m) * np.cos(m * np.pi * ys / 2.0) * np.exp(
                -(m**2) * (np.pi**2 / 8.0) * Ts
            )
        out[series] = (4.0 / np.pi) * acc

    if np.any(images):
        yi, Ti = y[images], T[images]
        sq = np.sqrt(Ti)
        acc = np.zeros(yi.shape)
        K = _image_k_needed(Ti.max(), tol.abs_tol)
        for k in range(-K, K + 1):
            acc += (
                ndtr((1.0 - yi - 4.0 * k) / sq)
                - ndtr((-1.0 - yi - 4.0 * k) / sq)
                - ndtr((yi - 1.0 - 4.0 * k) / sq)
                + ndtr((yi - 3.0 - 4.0 * k) / sq)
            )
        out[images] = acc

    np.clip(out, 0.0, 1.0, out=out)
    return float(out) if out.ndim == 0 else out


def exit_time_density(y, t, tol=None):
    """Density of the first exit time from (-1, 1) started at y.

    Spectral form sum_n lambda_n e^{-lambda_n t} phi_n(y) for t >= 0.1; the
    image (Gaussian) derivative sum below. Integrates to 1 - exit_prob_zero.
    """
    tol = tol or DEFAULT_TOL
    y = _check_in_closed_interval(y)
    t = np.asarray(t, dtype=float)
    if np.any(t <= 0.0) or np.any(~np.isfinite(t)):
        raise DomainError("t must be finite and > 0")
    y, t = np.broadcast_arrays(y, t)
    out = np.empty(y.shape, dtype=float)

    series = t >= _T_CROSSOVER
    images = ~series

    if np.any(series):
        ys, ts = y[series], t[series]
        acc = np.zeros(ys.shape)
        kmax = _series_k_needed(ts.min(), tol.abs_tol, tol.max_terms, np.pi**2 / 8.0)
        for k in range(kmax):
            m = 2 * k + 1
            lam = m**2 * (np.pi**2 / 8.0)
            acc += (
                lam
                * np.exp(-lam * ts)
                * (4.0 * (-1.0) ** k / (np.pi * m))
                * np.cos(m * np.pi * ys / 2.0)
            )
        out[series] = acc

    if np.any(images):
        yi, ti = y[images], t[images]
        acc = np.zeros(yi.shape)
        K = _image_k_needed(ti.max(), tol.abs_tol)
        inv = 1.0 / (2.0 * ti**1.5)
        for k in range(-K, K + 1):
            for a, sign in (
                (1.0 - yi - 4.0 * k, +1.0),
                (-1.0 - yi - 4.0 * k, -1.0),
                (yi - 1.0 - 4.0 * k, -1.0),
                (yi - 3.0 - 4.0 * k, +1.0),
            ):
                acc += sign * a * np.exp(-(a**2) / (2.0 * ti)) / _SQRT_2PI
        out[images] = acc * inv

    np.clip(out, 0.0, None, out=out)
    return float(out) if out.ndim == 0 else out


def absorbed_density(x1, x2, t, tol=None):
    """Transition density at time t of Brownian motion killed on leaving (-1, 1).

    Sub-stochastic: integrating over x2 gives exit_prob_zero(x1, t). Spectral
    sine series for t >= 0.1, image sum below.
    """
    tol = tol or DEFAULT_TOL
    x1 = _check_in_closed_interval(x1, "x1")
    x2 = _check_in_closed_interval(x2, "x2")
    t = np.asarray(t, dtype=float)
    if np.any(t <= 0.0) or np.any(~np.isfinite(t)):
        raise DomainError("t must be finite and > 0")
    x1, x2, t = np.broadcast_arrays(x1, x2, t)
    out = np.zeros(x1.shape, dtype=float)

    series = t >= _T_CROSSOVER
    images = ~series

    if np.any(series):
        a, b, ts = x1[series], x2[series], t[series]
        acc = np.zeros(a.shape)
        # Full sine kernel decays like e^{-n^2 pi^2 t / 8}: rate pi^2/8 with
        # n in place of 2k+1.
        n = 1
        while True:
            bound = np.exp(-(n**2) * (np.pi**2 / 8.0) * ts.min())
            if bound < tol.abs_tol:
                break
            acc += (
                np.exp(-(n**2) * (np.pi**2 / 8.0) * ts)
                * np.sin(n * np.pi * (a + 1.0) / 2.0)
                * np.sin(n * np.pi * (b + 1.0) / 2.0)
            )
            n += 1
            if n > tol.max_terms:
                raise TruncationError(
                    f"absorbed kernel needs more than {tol.max_terms} terms"
                )
        out[series] = acc

    if np.any(images):
        a, b, ti = x1[images], x2[images], t[images]
        acc = np.zeros(a.shape)
        K = _image_k_needed(ti.max(), tol.abs_tol)
        for k in range(-K, K + 1):
            d1 = b - a - 4.0 * k
            d2 = b + a - 2.0 - 4.0 * k
            acc += np.exp(-(d1**2) / (2.0 * ti)) - np.exp(-(d2**2) / (2.0 * ti))
        out[images] = acc / (_SQRT_2PI * np.sqrt(ti))

    np.clip(out, 0.0, None, out=out)
    return float(out) if out.ndim == 0 else out


def taboo_transition_density(x1, x2, t, tol=None):
    """Transition density of the taboo process (Brownian motion conditioned
    never to leave (-1, 1)): e^{pi^2 t/8} cos(pi x2/2)/cos(pi x1/2) times the
    absorbed kernel.

    x1 must be strictly inside (-1, 1); the cosine prefactor has a zero there.
    Rows integrate to 1 over x2 up to series truncation error.
    """
    x1 = np.asarray(x1, dtype=float)
    if np.any(np.abs(x1) >= 1.0):
        raise DomainError("x1 must lie strictly inside (-1, 1)")
    x2 = _check_in_closed_interval(x2, "x2")
    t = np.asarray(t, dtype=float)
    if np.any(t <= 0.0):
        raise DomainError("t must be > 0")
    p = absorbed_density(x1, x2, t, tol)
    x1b, x2b, tb = np.broadcast_arrays(x1, x2, t)
    out = (
        np.exp(LAMBDA0 * tb)
        * (np.cos(np.pi * x2b / 2.0) / np.cos(np.pi * x1b / 2.0))
        * p
    )
    return float(out) if np.ndim(out) == 0 else out


def qsd_density(y):
    """Quasi-stationary density (pi/4) cos(pi y / 2) on [-1, 1], 0 outside."""
    y = np.asarray(y, dtype=float)
    out = np.where(np.abs(y) <= 1.0, (np.pi / 4.0) * np.cos(np.pi * y / 2.0), 0.0)
    return float(out) if out.ndim == 0 else out


def qsd_cdf(y):
    """CDF of the quasi-stationary distribution: (1 + sin(pi y / 2)) / 2."""
    y = np.asarray(y, dtype=float)
    out = np.where(
        y <= -1.0, 0.0, np.where(y >= 1.0, 1.0, 0.5 * (1.0 + np.sin(np.pi * y / 2.0)))
    )
    return float(out) if out.ndim == 0 else out


def qsd_sample(u):
    """Map uniform(0,1) draws to quasi-stationary samples: (2/pi) asin(2u - 1)."""
    u = np.asarray(u, dtype=float)
    if np.any((u <= 0.0) | (u >= 1.0)):
        raise DomainError("u must lie strictly inside (0, 1)")
    out = (2.0 / np.pi) * np.arcsin(2.0 * u - 1.0)
    return float(out) if out.ndim == 0 else out


def taboo_drift(y):
    """Drift -(pi/2) tan(pi y / 2) of the taboo diffusion; |y| < 1 strictly."""
    y = np.asarray(y, dtype=float)
    if np.any(np.abs(y) >= 1.0) or np.any(~np.isfinite(y)):
        raise DomainError("taboo drift is defined on the open interval (-1, 1)")
    out = -(np.pi / 2.0) * np.tan(np.pi * y / 2.0)
    return float(out) if out.ndim == 0 else out
