"""Eisenstein series for SL2(Z) and SL2(Z[i]) through Epstein zeta functions.

With Q_z(c, d) = |cz + d|^2 (a binary form for z in the upper half-plane,
a quaternary one in the Gaussian variables c, d for z in upper half-space)

    zeta(2s) E(s, z)            = y^s Z_{Q_z}(s)      (modular)
    zeta(s) L(s, chi_4) E(s, z) = y^s Z_{Q_z}(s)      (Picard)

where E(s, z) = sum over coprime pairs (c, d), units included, of
y^s / Q_z(c, d)^s. Both series are normalised so that the constant term
is a multiple of y^s plus the scattering term.
"""

from __future__ import annotations

import cmath
import enum
import math
from dataclasses import dataclass

import numpy as np

from critline import epstein
from critline import specialfns as sf
from critline.errors import DomainError, FormError
from critline.forms import HyperbolicPoint, evaluate_many, form_from_h2, form_from_h3

ZERO_GUARD = 1e-8


class LatticeId(enum.Enum):
    MODULAR = "modular"
    PICARD = "picard"

    @property
    def rank(self) -> int:
        """n with the boundary at s = n (1 for SL2(Z), 2 for SL2(Z[i]))."""
        return 1 if self is LatticeId.MODULAR else 2

    @property
    def dim(self) -> int:
        return 2 if self is LatticeId.MODULAR else 3


def lattice_form(lat: LatticeId, z: HyperbolicPoint):
    if z.dim != lat.dim:
        raise FormError(f"{lat.value} needs a point with dim {lat.dim}")
    return form_from_h2(z) if lat is LatticeId.MODULAR else form_from_h3(z)


def normalizer(lat: LatticeId, s: complex) -> complex:
    """zeta(2s) for SL2(Z), zeta(s) L(s, chi_4) for SL2(Z[i])."""
    s = complex(s)
    if lat is LatticeId.MODULAR:
        return sf.riemann_zeta(2 * s)
    return sf.riemann_zeta(s) * sf.dirichlet_L_chi4(s)


def _guarded_normalizer(lat: LatticeId, s: complex) -> complex:
    c = normalizer(lat, s)
    if abs(c) <= ZERO_GUARD:
        raise DomainError(f"normalizing zeta factor is {abs(c):.1e} at s = {s}, too close to a zero")
    return c


def _eis(lat: LatticeId, s: complex, z: HyperbolicPoint, method: str, **kw) -> complex:
    s = complex(s)
    Q = lattice_form(lat, z)
    c = _guarded_normalizer(lat, s)
    Z = epstein.evaluate(Q, s, method, **kw)
    return cmath.exp(s * math.log(z.y)) * Z / c


def eis_modular(s: complex, z: HyperbolicPoint, method: str = "auto", **kw) -> complex:
    """E(s, z) on SL2(Z) \\ H; ``kw`` (value lists, eps) go to the Epstein evaluator."""
    return _eis(LatticeId.MODULAR, s, z, method, **kw)


def eis_picard(s: complex, z: HyperbolicPoint, method: str = "auto", **kw) -> complex:
    """E(s, z) on SL2(Z[i]) \\ H^3. Note y enters both as y^s and through Q_z."""
    return _eis(LatticeId.PICARD, s, z, method, **kw)


def eis(lat: LatticeId, s: complex, z: HyperbolicPoint, method: str = "auto", **kw) -> complex:
    return _eis(lat, s, z, method, **kw)


def eis_picard_special_point(t: float) -> complex:
    """E(1 + it, j) in closed form.

    At z = j the form is the sum of four squares, whose Epstein zeta is
    8 (1 - 4^(1-s)) zeta(s) zeta(s-1); dividing by zeta(s) L(s, chi_4) gives
    8 (1 - 4^(1-s)) zeta(s-1) / L(s, chi_4).
    """
    s = complex(1.0, t)
    L = sf.dirichlet_L_chi4(s)
    if abs(L) <= ZERO_GUARD:
        raise DomainError(f"|L(1+it, chi_4)| = {abs(L):.1e} at t = {t}")
    return 8 * (1 - cmath.exp((1 - s) * math.log(4))) * sf.riemann_zeta(s - 1) / L


# -- slow reference: the coprime-pair series ----------------------------------


def _gaussian_gcd_norm(a_re, a_im, b_re, b_im) -> np.ndarray:
    """Norm of gcd(a, b) in Z[i], vectorised Euclid with nearest-integer quotients."""
    a_re, a_im = a_re.astype(np.int64).copy(), a_im.astype(np.int64).copy()
    b_re, b_im = b_re.astype(np.int64).copy(), b_im.astype(np.int64).copy()
    live = (b_re != 0) | (b_im != 0)
    while live.any():
        ar, ai, br, bi = a_re[live], a_im[live], b_re[live], b_im[live]
        n = br * br + bi * bi
        # a / b = a conj(b) / N(b), rounded to the nearest Gaussian integer
        pr, pi = ar * br + ai * bi, ai * br - ar * bi
        qr = np.floor_divide(2 * pr + n, 2 * n)
        qi = np.floor_divide(2 * pi + n, 2 * n)
        rr, ri = ar - (qr * br - qi * bi), ai - (qr * bi + qi * br)
        a_re[live], a_im[live] = br, bi
        b_re[live], b_im[live] = rr, ri
        live = (b_re != 0) | (b_im != 0)
    return a_re * a_re + a_im * a_im


def coprime_mask(lat: LatticeId, v: np.ndarray) -> np.ndarray:
    """Rows (c, d) (Gaussian: (c1, c2, d1, d2)) that are coprime."""
    if lat is LatticeId.MODULAR:
        return np.gcd(v[:, 0], v[:, 1]) == 1
    return _gaussian_gcd_norm(v[:, 0], v[:, 1], v[:, 2], v[:, 3]) == 1


@dataclass(frozen=True)
class CoprimeSum:
    value: complex
    tail: float
    cutoff: float
    terms: int


def _coprime_tail(lat: LatticeId, s: complex, z: HyperbolicPoint, X: float) -> complex:
    # coprime pairs have density Res / normalizer(m/2) per unit of Q-value
    Q = lattice_form(lat, z)
    half = Q.m / 2
    dens = epstein.residue_at_pole(Q) / normalizer(lat, half).real
    return cmath.exp(s * math.log(z.y) + (half - s) * math.log(X)) * dens / (s - half)


def coprime_cutoff(lat: LatticeId, s: complex, z: HyperbolicPoint, tail: float) -> float:
    """Cutoff X at which the integral-comparison tail drops to ``tail``."""
    s = complex(s)
    half = lat.rank
    at_one = abs(_coprime_tail(lat, s, z, 1.0))
    return (at_one / tail) ** (1 / (s.real - half))


def eis_direct_coprime(s: complex, z: HyperbolicPoint, cutoff: float,
                       lat: LatticeId | None = None) -> CoprimeSum:
    """Truncated series over coprime (c, d) with Q_z(c, d) <= cutoff.

    The part beyond the cutoff is replaced by its integral against the
    asymptotic density of coprime pairs; ``tail`` is the size of that
    replacement, a conservative estimate of what truncation leaves out.
    """
    s = complex(s)
    lat = lat or (LatticeId.MODULAR if z.dim == 2 else LatticeId.PICARD)
    n = lat.rank
    if s.real < n + 0.5:
        raise DomainError(f"coprime series needs Re s >= {n + 0.5}, got {s.real}")
    Q = epstein._require_pd(lattice_form(lat, z))
    X = float(cutoff)
    epstein._check_budget(Q, X, epstein.POINT_BUDGET)
    partial, count = [], 0
    for block in epstein._fincke_pohst(Q, X):
        vals = evaluate_many(Q, block)
        keep = (vals > 0) & (vals <= X) & coprime_mask(lat, block)
        vals = vals[keep]
        count += vals.size
        partial.append(epstein._fsum_complex(np.exp(-s * np.log(vals))))
    head = complex(math.fsum(p.real for p in partial), math.fsum(p.imag for p in partial))
    tail = _coprime_tail(lat, s, z, X)
    value = cmath.exp(s * math.log(z.y)) * head + tail
    return CoprimeSum(value, abs(tail), X, count)
