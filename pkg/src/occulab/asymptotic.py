"""Saddle-point layer and closed-form asymptotics for the probability of
spending at most s time units outside (-1, 1) up to a large horizon T.

The Laplace-side exponent is V(lambda) = (pi^4/(32 lambda^2)
- 3 pi^2/(8 lambda) + (pi^2 + 21)/24) s.  The saddle h(T) solves
-V'(h) = T, a cubic with a single positive root; Th + V(h) expands as
a T^{2/3} - b T^{1/3} + c with an O(T^{-1/3}) remainder, which is the
exponential scale of the conditioning probabilities.
"""

from dataclasses import dataclass

import numpy as np

from .analytic import LAMBDA0
from .errors import DomainError

# -V' is positive and strictly decreasing on (0, pi^2/6), so the cubic root
# below is its honest inverse for every T > 0.  EPS marks the smaller region
# where the V-expansion is used; T0 = -V'(EPS) is the matching horizon.
EPS_SADDLE = np.pi**2 / 16.0


def _pos(x, name):
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0.0) or np.any(~np.isfinite(x)):
        raise DomainError(f"{name} must be finite and > 0")
    return x


def saddle_V(lam, s):
    """Leading Laplace exponent V(lambda) (times s); lambda != 0."""
    s = _pos(s, "s")
    lam = np.asarray(lam)
    if np.any(lam == 0):
        raise DomainError("V has an essential singularity at lambda = 0")
    out = (
        np.pi**4 / (32.0 * lam**2)
        - 3.0 * np.pi**2 / (8.0 * lam)
        + (np.pi**2 + 21.0) / 24.0
    ) * s
    return out if np.ndim(out) else out.item()


def saddle_Vp(lam, s):
    """V'(lambda) = (-pi^4/(16 lambda^3) + 3 pi^2/(8 lambda^2)) s."""
    s = _pos(s, "s")
    lam = np.asarray(lam)
    if np.any(lam == 0):
        raise DomainError("V' has an essential singularity at lambda = 0")
    out = (-(np.pi**4) / (16.0 * lam**3) + 3.0 * np.pi**2 / (8.0 * lam**2)) * s
    return out if np.ndim(out) else out.item()


def saddle_Vpp(lam, s):
    """V''(lambda) = (3 pi^4/(16 lambda^4) - 3 pi^2/(4 lambda^3)) s."""
    s = _pos(s, "s")
    lam = np.asarray(lam)
    if np.any(lam == 0):
        raise DomainError("V'' has an essential singularity at lambda = 0")
    out = (3.0 * np.pi**4 / (16.0 * lam**4) - 3.0 * np.pi**2 / (4.0 * lam**3)) * s
    return out if np.ndim(out) else out.item()


def saddle_T0(s):
    """Horizon -V'(EPS_SADDLE) above which h(T) < pi^2/16; equals 160 s/pi^2."""
    s = _pos(s, "s")
    out = -saddle_Vp(EPS_SADDLE, s)
    return out if np.ndim(out) else float(out)


def saddle_h(T, s):
    """Positive root of T h^3 = (pi^4/16 - 3 pi^2 h / 8) s, i.e. -V'(h) = T.

    Cardano in the factored form h = (pi^4 s / (32 T))^{1/3} / H(z) with
    z = 2s/(pi^2 T) and H(z) = ((sqrt(1+z)+1)^{2/3} + z^{1/3}
    + (sqrt(1+z)-1)^{2/3})/2, stable for all z > 0.  Valid for every T > 0;
    the root always lies in (0, pi^2/6) where -V' is injective.
    """
    T = _pos(T, "T")
    s = _pos(s, "s")
    z = 2.0 * s / (np.pi**2 * T)
    sq = np.sqrt(1.0 + z)
    # sqrt(1+z) - 1 without cancellation for small z
    sqm1 = z / (sq + 1.0)
    H = ((sq + 1.0) ** (2.0 / 3.0) + z ** (1.0 / 3.0) + sqm1 ** (2.0 / 3.0)) / 2.0
    out = (np.pi**4 * s / (32.0 * T)) ** (1.0 / 3.0) / H
    return out if np.ndim(out) else float(out)


def saddle_exponent(T, s):
    """Exact exponent T h + V(h) and its three-term expansion.

    Returns
    -------
    (exact, three_term) : pair of floats or arrays
        three_term = (3/2^{7/3}) pi^{4/3} s^{1/3} T^{2/3}
                   - (3/2^{5/3}) pi^{2/3} s^{2/3} T^{1/3} + (pi^2 + 12) s / 24;
        exact - three_term = O(s^{4/3} (s/T)^{1/3}).  The constant differs
        from the one inside V: evaluating the lambda-dependent part of V at
        the saddle contributes a further -3s/8 in the T -> infinity limit.
    """
    T = _pos(T, "T")
    s = _pos(s, "s")
    h = saddle_h(T, s)
    exact = T * h + saddle_V(h, s)
    three = (
        (3.0 / 2.0 ** (7.0 / 3.0)) * np.pi ** (4.0 / 3.0) * s ** (1.0 / 3.0) * T ** (2.0 / 3.0)
        - (3.0 / 2.0 ** (5.0 / 3.0)) * np.pi ** (2.0 / 3.0) * s ** (2.0 / 3.0) * T ** (1.0 / 3.0)
        + (np.pi**2 + 12.0) * s / 24.0
    )
    if np.ndim(exact) == 0:
        return float(exact), float(three)
    return exact, three


@dataclass(frozen=True)
class AsympValue:
    """An asymptotic value kept as log_prefactor + exponent to dodge overflow."""

    log_prefactor: float
    exponent: float

    @property
    def log_value(self):
        return self.log_prefactor + self.exponent

    @property
    def value(self):
        # May overflow to inf / underflow to 0 by design; use log_value then.
        return np.exp(self.log_value)


def asymp_prob_leq_s(y, s, T):
    """Asymptotic of P_y(Gamma_T <= s) for fixed s as T -> infinity.

    cos(pi y / 2) * 2^{19/6} / (sqrt(3) pi^{13/6} s^{1/6} T^{1/3})
    * exp(-pi^2 T/8 + (3/2^{7/3}) pi^{4/3} s^{1/3} T^{2/3}
          - (3/2^{5/3}) pi^{2/3} s^{2/3} T^{1/3} + (pi^2 + 12) s / 24).

    y must be strictly inside (-1, 1); the boundary constant is open.
    """
    y = np.asarray(y, dtype=float)
    if np.any(np.abs(y) >= 1.0):
        raise DomainError("y must lie strictly inside (-1, 1)")
    s = _pos(s, "s")
    T = _pos(T, "T")
    log_pref = (
        np.log(np.cos(np.pi * y / 2.0))
        + (19.0 / 6.0) * np.log(2.0)
        - 0.5 * np.log(3.0)
        - (13.0 / 6.0) * np.log(np.pi)
        - np.log(s) / 6.0
        - np.log(T) / 3.0
    )
    expo = (
        -LAMBDA0 * T
        + (3.0 / 2.0 ** (7.0 / 3.0)) * np.pi ** (4.0 / 3.0) * s ** (1.0 / 3.0) * T ** (2.0 / 3.0)
        - (3.0 / 2.0 ** (5.0 / 3.0)) * np.pi ** (2.0 / 3.0) * s ** (2.0 / 3.0) * T ** (1.0 / 3.0)
        + (np.pi**2 + 12.0) * s / 24.0
    )
    if np.ndim(log_pref) == 0 and np.ndim(expo) == 0:
        return AsympValue(float(log_pref), float(expo))
    log_pref, expo = np.broadcast_arrays(log_pref, expo)
    return AsympValue(log_pref, expo)


def asymp_snu(s, T):
    """Asymptotic of S_nu(T) = e^{pi^2 T/8} P_nu(Gamma_T in (0, s]) started
    from the quasi-stationary law: 2^{7/6} / (sqrt(3) pi^{7/6} s^{1/6} T^{1/3})
    times the same stretched-exponential factor without the -pi^2 T/8 term.
    """
    s = _pos(s, "s")
    T = _pos(T, "T")
    log_pref = (
        (7.0 / 6.0) * np.log(2.0)
        - 0.5 * np.log(3.0)
        - (7.0 / 6.0) * np.log(np.pi)
        - np.log(s) / 6.0
        - np.log(T) / 3.0
    )
    expo = (
        (3.0 / 2.0 ** (7.0 / 3.0)) * np.pi ** (4.0 / 3.0) * s ** (1.0 / 3.0) * T ** (2.0 / 3.0)
        - (3.0 / 2.0 ** (5.0 / 3.0)) * np.pi ** (2.0 / 3.0) * s ** (2.0 / 3.0) * T ** (1.0 / 3.0)
        + (np.pi**2 + 12.0) * s / 24.0
    )
    if np.ndim(log_pref) == 0 and np.ndim(expo) == 0:
        return AsympValue(float(log_pref), float(expo))
    log_pref, expo = np.broadcast_arrays(log_pref, expo)
    return AsympValue(log_pref, expo)
