"""The Laplace-transform layer: the building blocks v, u, w, the closed form
for the transform of R(T) = P_y(Gamma_T in (0, s]), its raw double-integral
counterpart (kept as an independent oracle), the shifted transform
S_hat(lambda) = lambda L(R)(lambda - pi^2/8), and the saddle-equivalent it is
compared against.

All three building blocks are even functions of sqrt(2 lambda), hence single
valued; the principal branch is used throughout and real arguments take a
real-arithmetic path so that values on (-pi^2/8, infinity) come back as
floats.  Transform values can reach e^{+-10^6} near the essential singularity
at the shifted origin, so results are carried as (log modulus, phase) pairs
and sums are accumulated after factoring out the largest term.

High-precision twins (suffix _mp) evaluate the same formulas in the current
mpmath context; the Gaver-Stehfest inverter relies on them.
"""

import cmath
import math
from dataclasses import dataclass

import mpmath as mp
import numpy as np
from scipy.special import wofz

from .analytic import LAMBDA0
from .errors import DomainError, PoleError


@dataclass(frozen=True)
class TransformValue:
    """A complex value stored as log|z| and arg z.

    Safe to hold magnitudes far outside double range; `value` materializes
    the plain complex number only when the modulus fits comfortably.
    """

    log_modulus: float
    phase: float

    @classmethod
    def from_complex(cls, z):
        z = complex(z)
        if z == 0:
            return cls(-math.inf, 0.0)
        return cls(math.log(abs(z)), cmath.phase(z))

    @property
    def value(self):
        """Plain complex value; inf/0 magnitudes if the log leaves +-700."""
        return cmath.rect(math.exp(min(self.log_modulus, 710.0)), self.phase)

    @property
    def is_plain(self):
        return abs(self.log_modulus) < 300.0

    def __mul__(self, other):
        if isinstance(other, TransformValue):
            return TransformValue(
                self.log_modulus + other.log_modulus, self.phase + other.phase
            )
        return self * TransformValue.from_complex(other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if not isinstance(other, TransformValue):
            other = TransformValue.from_complex(other)
        return TransformValue(
            self.log_modulus - other.log_modulus, self.phase - other.phase
        )

    def ratio(self, other):
        """Plain complex self/other (log-space difference, then exp)."""
        d = self / other
        return cmath.rect(math.exp(d.log_modulus), d.phase)


def _logc_sum(terms):
    """Sum of complex terms given as (log modulus, phase) pairs."""
    terms = [t for t in terms if t[0] != -math.inf]
    if not terms:
        return TransformValue(-math.inf, 0.0)
    m = max(t[0] for t in terms)
    acc = sum(cmath.rect(math.exp(t[0] - m), t[1]) for t in terms)
    if acc == 0:
        return TransformValue(-math.inf, 0.0)
    return TransformValue(m + math.log(abs(acc)), cmath.phase(acc))


def _check_pole(lam):
    # cosh(sqrt(2 lambda)) vanishes at lambda = -(2k+1)^2 pi^2/8.
    lam = complex(lam)
    if lam.imag == 0.0 and lam.real < 0.0:
        q = math.sqrt(-2.0 * lam.real)
        k = round(q / math.pi - 0.5)
        if k >= 0 and abs(q - (2 * k + 1) * math.pi / 2.0) < 1e-13:
            raise PoleError(f"lambda = {lam} sits on a pole of tanh/cosh")


def fn_v(lam):
    """v(lambda) = sqrt(2 lambda) tanh(sqrt(2 lambda)); even in the root.

    Real for real lambda > -pi^2/8 (and between consecutive poles below);
    equals -q tan q with q = sqrt(-2 lambda) on the negative axis.
    """
    _check_pole(lam)
    if isinstance(lam, complex):
        z = cmath.sqrt(2.0 * lam)
        return z * cmath.tanh(z)
    lam = float(lam)
    if lam >= 0.0:
        z = math.sqrt(2.0 * lam)
        return z * math.tanh(z)
    q = math.sqrt(-2.0 * lam)
    return -q * math.tan(q)


def fn_u(lam, y):
    """u(lambda, y) = cosh(y sqrt(2 lambda)) / cosh(sqrt(2 lambda))."""
    y = float(y)
    if abs(y) > 1.0:
        raise DomainError("y must lie in [-1, 1]")
    _check_pole(lam)
    if isinstance(lam, complex):
        z = cmath.sqrt(2.0 * lam)
        # exp-scaled to survive large |Re z|
        return cmath.exp(_log_cosh(y * z) - _log_cosh(z))
    lam = float(lam)
    if lam >= 0.0:
        z = math.sqrt(2.0 * lam)
        if z > 300.0:
            # cosh ratio via leading exponentials
            return math.exp((abs(y) - 1.0) * z) * (1.0 + math.exp(-2.0 * abs(y) * z)) / (1.0 + math.exp(-2.0 * z))
        return math.cosh(y * z) / math.cosh(z)
    q = math.sqrt(-2.0 * lam)
    c = math.cos(q)
    if c == 0.0:
        raise PoleError(f"lambda = {lam} sits on a pole of 1/cos")
    return math.cos(y * q) / c


def fn_w(lam):
    """w(lambda) = v(lambda)^2 / 2 - lambda."""
    v = fn_v(lam)
    return v * v / 2.0 - lam


def _log_cosh(z):
    # log cosh for complex z, stable for large |Re z|
    if z.real < 0:
        z = -z
    return z + cmath.log((1.0 + cmath.exp(-2.0 * z)) / 2.0)


def _log_u(lam, y):
    """log u as a complex number (principal log), overflow-free."""
    _check_pole(lam)
    if isinstance(lam, complex):
        z = cmath.sqrt(2.0 * lam)
        return _log_cosh(y * z) - _log_cosh(z)
    lam = float(lam)
    if lam >= 0.0:
        z = math.sqrt(2.0 * lam)
        return complex(_log_cosh(complex(y * z)).real - _log_cosh(complex(z)).real)
    q = math.sqrt(-2.0 * lam)
    c, cy = math.cos(q), math.cos(y * q)
    if c == 0.0:
        raise PoleError(f"lambda = {lam} sits on a pole of 1/cos")
    r = cy / c
    if r == 0.0:
        return complex(-math.inf)
    return complex(math.log(abs(r)), 0.0 if r > 0 else math.pi)


def fn_v_left(lam):
    """Shifted v->(lambda) = v(lambda - pi^2/8), the combination that appears
    once the spectral gap is factored out."""
    return fn_v(_shift(lam))


def fn_u_left(lam, y):
    """Shifted u->(lambda, y) = u(lambda - pi^2/8, y)."""
    return fn_u(_shift(lam), y)


def fn_w_left(lam):
    """Shifted w->(lambda) = w(lambda - pi^2/8)."""
    return fn_w(_shift(lam))


def _shift(lam):
    if isinstance(lam, complex):
        return lam - LAMBDA0
    return float(lam) - LAMBDA0


def expansion_residual_v(lam):
    """fn_v_left minus its expansion -pi^2/(4 lambda) + 3/2
    + (3 + pi^2) lambda / (3 pi^2); the remainder is O(lambda^2)."""
    v = fn_v_left(lam)
    return v - (
        -np.pi**2 / (4.0 * lam) + 1.5 + (3.0 + np.pi**2) * lam / (3.0 * np.pi**2)
    )


def expansion_residual_w(lam):
    """fn_w_left minus pi^4/(32 lambda^2) - 3 pi^2/(8 lambda)
    + (pi^2 + 21)/24; the remainder is O(lambda)."""
    w = fn_w_left(lam)
    return w - (
        np.pi**4 / (32.0 * lam**2)
        - 3.0 * np.pi**2 / (8.0 * lam)
        + (np.pi**2 + 21.0) / 24.0
    )


def laplace_R(lam, y, s):
    """Laplace transform (in T) of P_y(Gamma_T in (0, s]) as a TransformValue.

    Closed form (u(lambda, y) / lambda) * (1 - e^{w s} erfc(v sqrt(s/2))):
    u/lambda transforms P_y(tau <= T) and the erfc factor removes the paths
    whose occupation outside exceeds s.  As s -> infinity the erfc term dies
    (w < 0 for real lambda > 0) and the plain exit-time transform remains.

    Holomorphic on Re lambda > -pi^2/8 minus the origin.  The product
    e^{ws} erfc(.) is evaluated through the scaled complementary error
    function, so the e^{ws} growth (log-magnitude up to ~10^6 near the
    shifted singularity) never materializes outside log space.
    """
    lam = _as_scalar(lam)
    if lam == 0:
        raise DomainError("laplace_R is singular at lambda = 0")
    if complex(lam).real <= -LAMBDA0:
        raise DomainError("lambda must satisfy Re lambda > -pi^2/8")
    if abs(float(y)) > 1.0:
        raise DomainError("y must lie in [-1, 1]")
    if not (s > 0.0):
        raise DomainError("s must be > 0")
    v = fn_v(lam)
    w = v * v / 2.0 - lam
    alpha = v * math.sqrt(s / 2.0)
    terms = [(0.0, 0.0)]
    if complex(v).real >= 0.0:
        # e^{ws} erfc(alpha) = e^{-lambda s} wofz(i alpha), all moderate
        g = wofz(1j * complex(alpha))
        lg = cmath.log(g) - complex(lam) * s
        terms.append((lg.real, lg.imag + math.pi))  # minus sign
    else:
        # erfc(alpha) = 2 - erfc(-alpha): split so each piece stays scaled
        ws = complex(w) * s
        terms.append((math.log(2.0) + ws.real, ws.imag + math.pi))
        g = wofz(-1j * complex(alpha))
        lg = cmath.log(g) - complex(lam) * s
        terms.append((lg.real, lg.imag))
    bracket = _logc_sum(terms)
    lu = _log_u(lam, y)
    llam = cmath.log(complex(lam))
    return TransformValue(
        bracket.log_modulus + lu.real - llam.real,
        bracket.phase + lu.imag - llam.imag,
    )


def _as_scalar(lam):
    if isinstance(lam, (complex, np.complexfloating)):
        lam = complex(lam)
        return lam.real if lam.imag == 0.0 else lam
    return float(lam)


def laplace_R_raw(lam, y, s, rel_tol=1e-11):
    """The same transform by direct 2-D quadrature of
    (2u/sqrt(2 pi)) e^{-vx - lambda r - x^2/(2r)} (r^{-1/2} + vx/(2 lambda r^{3/2}))
    over (x, r) in (0, inf) x (0, s).  Oracle for laplace_R; needs Re lambda > 0.

    Uses the substitution (x, r) = (q xi, q^2): it removes the endpoint
    singularity at r = 0 and gives the inner integrand an O(1) width in xi
    for every q, where the original inner integral narrows like x ~ q and
    starves an adaptive rule of nodes.
    """
    from scipy.integrate import dblquad

    lam = _as_scalar(lam)
    if complex(lam).real <= 0.0:
        raise DomainError("raw quadrature requires Re lambda > 0")
    if not (s > 0.0):
        raise DomainError("s must be > 0")
    v = fn_v(lam)
    u = fn_u(lam, y)

    def integrand(xi, q):
        # dx dr = 2 q^2 dxi dq; the two bracket pieces become 2q and v xi/lam
        return np.exp(-lam * q * q - v * q * xi - xi * xi / 2.0) * (
            2.0 * q + v * xi / lam
        )

    def part(fn):
        val, err = dblquad(
            fn, 0.0, math.sqrt(s), 0.0, np.inf, epsabs=1e-14, epsrel=rel_tol
        )
        return val

    if isinstance(lam, complex) or isinstance(v, complex):
        re = part(lambda xi, q: integrand(xi, q).real)
        im = part(lambda xi, q: integrand(xi, q).imag)
        total = complex(re, im)
    else:
        total = part(integrand)
    return 2.0 * u / math.sqrt(2.0 * math.pi) * total


def fn_S_hat(lam, y, s):
    """S_hat(lambda) = lambda * L(R)(lambda - pi^2/8): the transform of
    e^{pi^2 T/8} P_y(Gamma_T in (0, s]) times lambda, as a TransformValue."""
    lam = _as_scalar(lam)
    if lam == 0:
        raise DomainError("S_hat is singular at lambda = 0")
    if complex(lam).real <= 0.0:
        raise DomainError("S_hat is defined for Re lambda > 0")
    base = laplace_R(_shift(lam), y, s)
    llam = cmath.log(complex(lam))
    return TransformValue(base.log_modulus + llam.real, base.phase + llam.imag)


def ingham_equivalent(lam, y, s):
    """(16/pi^2) lambda u->(lambda, y) e^{V(lambda)}: the expression S_hat is
    asymptotically equivalent to as lambda -> 0+, as a TransformValue."""
    from .asymptotic import saddle_V

    lam = _as_scalar(lam)
    if complex(lam).real <= 0.0:
        raise DomainError("the equivalent is defined for Re lambda > 0")
    lu = _log_u(_shift(lam), y)
    V = saddle_V(complex(lam), s) if isinstance(lam, complex) else saddle_V(lam, s)
    llam = cmath.log(complex(lam))
    V = complex(V)
    return TransformValue(
        math.log(16.0 / np.pi**2) + llam.real + lu.real + V.real,
        llam.imag + lu.imag + V.imag,
    )


# ---------------------------------------------------------------------------
# mpmath twins: same formulas in the active mpmath precision.  Used by the
# Gaver-Stehfest inverter, whose alternating weights devour ~0.9 digit per
# term.  Arguments may be mpf/mpc/float/complex.


def fn_v_mp(lam):
    """fn_v in the current mpmath context."""
    lam = mp.mpmathify(lam)
    if mp.im(lam) == 0:
        lam = mp.re(lam)
        if lam >= 0:
            z = mp.sqrt(2 * lam)
            return z * mp.tanh(z)
        q = mp.sqrt(-2 * lam)
        c = mp.cos(q)
        if c == 0:
            raise PoleError(f"lambda = {lam} sits on a pole")
        return -q * mp.sin(q) / c
    z = mp.sqrt(2 * lam)
    return z * mp.tanh(z)


def fn_u_mp(lam, y):
    """fn_u in the current mpmath context."""
    lam = mp.mpmathify(lam)
    y = mp.mpf(y)
    if mp.im(lam) == 0:
        lam = mp.re(lam)
        if lam >= 0:
            z = mp.sqrt(2 * lam)
            return mp.cosh(y * z) / mp.cosh(z)
        q = mp.sqrt(-2 * lam)
        c = mp.cos(q)
        if c == 0:
            raise PoleError(f"lambda = {lam} sits on a pole")
        return mp.cos(y * q) / c
    z = mp.sqrt(2 * lam)
    return mp.cosh(y * z) / mp.cosh(z)


def laplace_R_mp(lam, y, s):
    """laplace_R evaluated with mpmath; returns mpf (real lam) or mpc.

    mpmath's unbounded exponent range makes the erfcx splitting unnecessary:
    the direct bracket is evaluated and cancellation is absorbed by working
    precision.
    """
    lam = mp.mpmathify(lam)
    if lam == 0:
        raise DomainError("laplace_R is singular at lambda = 0")
    if mp.re(lam) <= -mp.pi**2 / 8:
        raise DomainError("lambda must satisfy Re lambda > -pi^2/8")
    if abs(float(y)) > 1.0:
        raise DomainError("y must lie in [-1, 1]")
    s = mp.mpf(s)
    v = fn_v_mp(lam)
    u = fn_u_mp(lam, y)
    w = v * v / 2 - lam
    alpha = v * mp.sqrt(s / 2)
    out = u / lam * (1 - mp.exp(w * s) * mp.erfc(alpha))
    return mp.re(out) if mp.im(lam) == 0 and mp.im(out) == 0 else out


def survival_transform_mp(lam, y):
    """Survival transform (1 - u(lambda, y)) / lambda; textbook fixture for
    the inverters.  u is the transform of the exit-time density, so this
    inverts to the survival probability P_y(tau > T) = P_y(Gamma_T = 0)."""
    lam = mp.mpmathify(lam)
    if lam == 0:
        raise DomainError("singular at lambda = 0")
    return (1 - fn_u_mp(lam, y)) / lam
