"""Complex special functions in double precision.

log-gamma (Stirling after upward recursion), the upper incomplete gamma
function, Riemann/Hurwitz zeta by Euler-Maclaurin, L(s, chi_{-4}) and the
chi-factor of the binary Epstein functional equation.

All functions take Python ``complex`` (or anything coercible to it).
Gamma ratios are formed in the log domain so that factors like
exp(-pi |t| / 2) never need to be represented on their own.
"""

from __future__ import annotations

import cmath
import math
from fractions import Fraction

import numpy as np

from critline.errors import DomainError

HEIGHT_CAP = 1e5
REFLECT_BELOW = -0.5  # left of this, zeta and L go through their functional equations
INCGAMMA_IM_CAP = 40.0
POLE_GUARD_GAMMA = 1e-8
POLE_GUARD_ZETA = 1e-6
STIRLING_SHIFT = 10.0
LOG_2PI_HALF = 0.5 * math.log(2 * math.pi)

# B_2, B_4, ..., B_24
_BERNOULLI = [
    Fraction(1, 6), Fraction(-1, 30), Fraction(1, 42), Fraction(-1, 30),
    Fraction(5, 66), Fraction(-691, 2730), Fraction(7, 6), Fraction(-3617, 510),
    Fraction(43867, 798), Fraction(-174611, 330), Fraction(854513, 138),
    Fraction(-236364091, 2730),
]
# Stirling series coefficients B_2k / (2k (2k-1))
_STIRLING = [float(b / ((2 * k) * (2 * k - 1))) for k, b in enumerate(_BERNOULLI, start=1)]
# Euler-Maclaurin coefficients B_2k / (2k)!
_EM = [float(b / math.factorial(2 * k)) for k, b in enumerate(_BERNOULLI, start=1)]


def _near_nonpositive_integer(s: complex, tol: float) -> bool:
    return s.real <= tol and abs(s - round(s.real)) < tol


def _stirling(z):
    """log Gamma(z) for Re z >= 10 (works on scalars and arrays)."""
    inv = 1.0 / z
    inv2 = inv * inv
    series = 0.0
    for c in reversed(_STIRLING):
        series = series * inv2 + c
    return (z - 0.5) * np.log(z) - z + LOG_2PI_HALF + series * inv


def log_gamma(s: complex) -> complex:
    """log Gamma(s), the branch continued analytically from the positive axis.

    This is the same branch as ``scipy.special.loggamma``: it differs from the
    principal log of Gamma(s) by a multiple of 2 pi i away from the real axis,
    which is what keeps arg Gamma continuous in t on vertical lines.
    """
    s = complex(s)
    if _near_nonpositive_integer(s, POLE_GUARD_GAMMA):
        raise DomainError(f"log_gamma: s = {s} is at a pole of Gamma")
    shift = 0j
    z = s
    while z.real < STIRLING_SHIFT:
        shift += cmath.log(z)
        z += 1
    return complex(_stirling(z)) - shift


def log_gamma_array(s: np.ndarray) -> np.ndarray:
    """Vectorized ``log_gamma``; same branch, same algorithm."""
    z = np.array(s, dtype=np.complex128, copy=True)
    if np.any((z.real <= POLE_GUARD_GAMMA) & (np.abs(z - np.round(z.real)) < POLE_GUARD_GAMMA)):
        raise DomainError("log_gamma: argument at a pole of Gamma")
    shift = np.zeros_like(z)
    mask = z.real < STIRLING_SHIFT
    while np.any(mask):
        shift[mask] += np.log(z[mask])
        z[mask] += 1
        mask = z.real < STIRLING_SHIFT
    return _stirling(z) - shift


def gamma(s: complex) -> complex:
    return cmath.exp(log_gamma(s))


def chi_factor(s: complex, D: float) -> complex:
    """(sqrt(D)/pi)^(1-2s) Gamma(1-s)/Gamma(s), assembled in the log domain."""
    s = complex(s)
    if not D > 0:
        raise DomainError(f"chi_factor needs D > 0, got {D}")
    log_val = (1 - 2 * s) * math.log(math.sqrt(D) / math.pi) + log_gamma(1 - s) - log_gamma(s)
    return cmath.exp(log_val)


# -- incomplete gamma -------------------------------------------------------

_TINY = 1e-300
_CF_EPS = 1e-16
_CF_MAXITER = 20000


def _lower_series(a: complex, z: np.ndarray) -> np.ndarray:
    """sum_k z^k / (a (a+1) ... (a+k)), the Kummer series of gamma(a, z) z^-a e^z."""
    term = np.full(z.shape, 1.0 / a, dtype=np.complex128)
    total = term.copy()
    ap = a
    active = np.ones(z.shape, dtype=bool)
    for _ in range(_CF_MAXITER):
        ap += 1
        term = np.where(active, term * z / ap, 0)
        total += term
        active &= np.abs(term) > np.abs(total) * _CF_EPS
        if not active.any():
            return total
    raise DomainError("incomplete gamma series did not converge")


def _legendre_cf(a: complex, z: np.ndarray) -> np.ndarray:
    """Modified Lentz evaluation of the continued fraction for Gamma(a,z) z^-a e^z."""
    b = z + 1 - a
    c = np.full(z.shape, 1.0 / _TINY, dtype=np.complex128)
    d = 1.0 / b
    h = d.copy()
    active = np.ones(z.shape, dtype=bool)
    for i in range(1, _CF_MAXITER):
        an = -i * (i - a)
        b = b + 2
        d = an * d + b
        d = np.where(np.abs(d) < _TINY, _TINY, d)
        c = b + an / c
        c = np.where(np.abs(c) < _TINY, _TINY, c)
        d = 1.0 / d
        delta = np.where(active, d * c, 1.0)
        h = h * delta
        active &= np.abs(delta - 1) > _CF_EPS
        if not active.any():
            return h
    raise DomainError("incomplete gamma continued fraction did not converge")


def _exp1_series(z: np.ndarray) -> np.ndarray:
    """E1(z) = Gamma(0, z) for small |z| via its power series."""
    total = -np.euler_gamma - np.log(z)
    term = np.ones_like(z)
    for k in range(1, 200):
        term = term * (-z) / k
        total = total - term / k
        if np.all(np.abs(term / k) <= _CF_EPS * np.abs(total)):
            break
    return total


def upper_gamma_array(a: complex, z: np.ndarray) -> np.ndarray:
    """Gamma(a, z) for one complex order ``a`` and an array of complex ``z``.

    ``z`` must lie in the right half-plane (the theta evaluator only ever
    rotates by less than pi/2). The continued fraction is used when
    |z| >= max(1, |a|); otherwise Gamma(a) - gamma(a, z). Orders at or next
    to a non-positive integer, where Gamma(a) blows up, are reached from
    Gamma(0, z) = E1(z) or Gamma(a + n, z) by the downward recurrence.
    """
    a = complex(a)
    z = np.asarray(z, dtype=np.complex128)
    if abs(a.imag) > INCGAMMA_IM_CAP:
        raise DomainError(f"incomplete gamma: |Im a| = {abs(a.imag):.3g} exceeds {INCGAMMA_IM_CAP}")
    if np.any(z.real <= 0):
        raise DomainError("incomplete gamma: z must have positive real part")
    out = np.empty(z.shape, dtype=np.complex128)
    logz = np.log(z)
    use_cf = np.abs(z) >= max(1.0, abs(a))
    if use_cf.any():
        zc = z[use_cf]
        out[use_cf] = np.exp(a * logz[use_cf] - zc) * _legendre_cf(a, zc)
    rest = ~use_cf
    if rest.any():
        zr, lr = z[rest], logz[rest]
        if a.real < 0.5 and abs(a - round(a.real)) < 0.25:
            out[rest] = _upper_by_recurrence(a, zr, lr)
        else:
            lower = np.exp(a * lr - zr) * _lower_series(a, zr)
            out[rest] = cmath.exp(log_gamma(a)) - lower
    return out


def _upper_small_order(b: complex, z: np.ndarray, logz: np.ndarray) -> np.ndarray:
    """Gamma(b, z) for |b| small, without the Gamma(b) - gamma(b, z) cancellation.

    Gamma(b, z) = (Gamma(1+b) - 1)/b - (z^b - 1)/b - z^b sum_k>=1 (-z)^k / (k! (b+k)).
    """
    if b == 0:
        return _exp1_series(z)
    # log Gamma(1+b) / b = -gamma + sum_k>=2 (-1)^k zeta(k) b^(k-1) / k
    lg_over_b = -np.euler_gamma
    bk = 1.0 + 0j
    for k in range(2, 40):
        bk *= b
        term = (-1) ** k * _zeta_int(k) * bk / k
        lg_over_b += term
        if abs(term) < 1e-18:
            break
    gamma_part = lg_over_b * _expm1_over_w(lg_over_b * b)
    zb = np.exp(b * logz)
    power_part = logz * np.array([_expm1_over_w(w) for w in (b * logz).ravel()]).reshape(z.shape)
    total = np.zeros_like(z)
    term = np.ones_like(z)
    for k in range(1, 400):
        term = term * (-z) / k
        inc = term / (b + k)
        total += inc
        if np.all(np.abs(inc) <= _CF_EPS * np.abs(total)):
            break
    return gamma_part - power_part - zb * total


_ZETA_INT: dict = {}


def _zeta_int(k: int) -> float:
    if k not in _ZETA_INT:
        _ZETA_INT[k] = riemann_zeta(k).real
    return _ZETA_INT[k]


def _upper_by_recurrence(a: complex, z: np.ndarray, logz: np.ndarray) -> np.ndarray:
    # Gamma(b, z) = (Gamma(b+1, z) - z^b e^-z) / b, run downward from b0 = a + n
    n = int(round(-a.real))
    b0 = a + n
    if abs(b0) < 0.05:
        g = _upper_small_order(b0, z, logz)
    else:
        lower = np.exp(b0 * logz - z) * _lower_series(b0, z)
        g = cmath.exp(log_gamma(b0)) - lower
    for k in range(n):
        b = b0 - 1 - k
        g = (g - np.exp(b * logz - z)) / b
    return g


def upper_incomplete_gamma(s: complex, x) -> complex:
    """Gamma(s, x) = int_x^inf u^(s-1) e^-u du for x > 0 (or Re x > 0).

    Accuracy target is 1e-9 relative for |Im s| <= 40; beyond that the
    function refuses rather than returning digits it cannot vouch for.
    """
    x = complex(x)
    if x.real <= 0:
        raise DomainError(f"upper_incomplete_gamma needs Re x > 0, got {x}")
    return complex(upper_gamma_array(complex(s), np.array([x]))[0])


# -- zeta functions ---------------------------------------------------------


def _em_cutoff(t: float) -> int:
    return max(30, math.ceil(1.5 * (abs(t) + 10)))


def _check_height(s: complex) -> None:
    if abs(s.imag) > HEIGHT_CAP:
        raise DomainError(f"|Im s| = {abs(s.imag):.6g} exceeds the height cap {HEIGHT_CAP:g}")


def _em_tail(s: complex, base: float, order: int = len(_EM)) -> complex:
    """Boundary correction (1/2) base^-s + sum_k B_2k/(2k)! (s)_(2k-1) base^(-s-2k+1)."""
    p = cmath.exp(-s * math.log(base))
    total = 0.5 * p
    rising = s
    power = p / base
    for k in range(order):
        total += _EM[k] * rising * power
        rising *= (s + 2 * k + 1) * (s + 2 * k + 2)
        power /= base * base
    return total


def _hurwitz_head(s: complex, a: float, n: int) -> complex:
    logs = np.log(np.arange(n, dtype=np.float64) + a)
    return complex(np.sum(np.exp(-s * logs)))


def hurwitz_zeta(s: complex, a: float = 1.0, order: int = 12, cutoff: int | None = None) -> complex:
    """zeta(s, a) = sum_{n>=0} (n + a)^-s for 0 < a <= 1, via Euler-Maclaurin.

    ``order`` and ``cutoff`` exist for the self-consistency tests; the
    defaults are the production parameters.
    """
    s = complex(s)
    if not 0 < a <= 1:
        raise DomainError(f"Hurwitz parameter must lie in (0, 1], got {a}")
    if abs(s - 1) < POLE_GUARD_ZETA:
        raise DomainError("zeta: s is at the pole s = 1")
    _check_height(s)
    n = cutoff if cutoff is not None else _em_cutoff(s.imag)
    base = n + a
    head = _hurwitz_head(s, a, n)
    pole = cmath.exp((1 - s) * math.log(base)) / (s - 1)
    return head + pole + _em_tail(s, base, order)


def riemann_zeta(s: complex, order: int = 12, cutoff: int | None = None) -> complex:
    """zeta(s); for Re s < 0 through the functional equation.

    Euler-Maclaurin to the left of the critical strip cancels terms of size
    N^(1-sigma), so there zeta(1-s) is computed instead and reflected.
    """
    s = complex(s)
    if s.real < REFLECT_BELOW:
        _check_height(s)
        if s.imag == 0 and s.real == round(s.real) and round(s.real) % 2 == 0:
            return 0j  # trivial zeros
        # zeta(s) = 2^s pi^(s-1) sin(pi s / 2) Gamma(1 - s) zeta(1 - s)
        log_f = s * math.log(2) + (s - 1) * math.log(math.pi) + log_gamma(1 - s) + _log_sin(math.pi * s / 2)
        val = cmath.exp(log_f) * hurwitz_zeta(1 - s, 1.0, order, cutoff)
        return complex(val.real, 0.0) if s.imag == 0 else val
    return hurwitz_zeta(s, 1.0, order, cutoff)


def _log_sin(z: complex) -> complex:
    """A logarithm of sin z that does not overflow for large |Im z|."""
    if z.imag == 0:
        return cmath.log(complex(math.sin(z.real)))
    if z.imag < 0:
        return _log_sin(z.conjugate()).conjugate()
    # sin z = e^(-iz) (e^(2iz) - 1) / (2i), with |e^(2iz)| < 1
    return -1j * z + cmath.log((cmath.exp(2j * z) - 1) / 2j)


def _expm1_over_w(w: complex) -> complex:
    """(e^w - 1) / w, accurate near w = 0."""
    if abs(w) < 0.1:
        total, term = 1.0 + 0j, 1.0 + 0j
        for k in range(2, 14):
            term *= w / k
            total += term
        return total
    return (cmath.exp(w) - 1) / w


def dirichlet_L_chi4(s: complex) -> complex:
    """L(s, chi_{-4}) = 4^-s (zeta(s, 1/4) - zeta(s, 3/4)); entire.

    The two Euler-Maclaurin pole terms are combined analytically so that
    s = 1 needs no special casing.
    """
    s = complex(s)
    _check_height(s)
    if s.real < REFLECT_BELOW:
        if s.imag == 0 and s.real == round(s.real) and round(s.real) % 2:
            return 0j  # trivial zeros at negative odd integers
        # L(s) = (4/pi)^(1/2 - s) Gamma(1 - s/2) / Gamma((1 + s)/2) L(1 - s)
        log_f = (0.5 - s) * math.log(4 / math.pi) + log_gamma(1 - s / 2) - log_gamma((1 + s) / 2)
        val = cmath.exp(log_f) * dirichlet_L_chi4(1 - s)
        return complex(val.real, 0.0) if s.imag == 0 else val
    n = _em_cutoff(s.imag)
    b1, b3 = n + 0.25, n + 0.75
    head = _hurwitz_head(s, 0.25, n) - _hurwitz_head(s, 0.75, n)
    # (b1^(1-s) - b3^(1-s)) / (s - 1) without the 0/0 at s = 1
    log_ratio = math.log(b1 / b3)
    w = (1 - s) * log_ratio
    pole = -cmath.exp((1 - s) * math.log(b3)) * log_ratio * _expm1_over_w(w)
    tails = _em_tail(s, b1) - _em_tail(s, b3)
    return cmath.exp(-s * math.log(4.0)) * (head + pole + tails)
