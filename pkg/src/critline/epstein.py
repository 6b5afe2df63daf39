"""Epstein zeta functions Z_Q(s) = sum_{v != 0} Q(v)^-s of positive-definite forms.

Three evaluators with overlapping domains:

* ``eval_direct``: smoothed partial sum of the Dirichlet series plus the
  exact contribution of the pole at s = m/2 (Re s > m/2 + 1/4).
* ``eval_theta``: the incomplete-gamma (theta function) continuation, valid
  for |Im s| <= 30 anywhere except s = m/2.
* ``eval_afe``: the two-sum approximate functional equation for binary
  forms on the critical line, |t| >= 1, error O(log |t|).

``evaluate(Q, s, method="auto")`` routes between them.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from scipy.special import erfc

from critline import specialfns as sf
from critline.errors import DomainError, FormError
from critline.forms import GramForm, discriminant, dual, evaluate_many

MERGE_RTOL = 1e-9
POINT_BUDGET = 10**9
THETA_IM_CAP = 30.0
POLE_GUARD = 1e-6
DIRECT_ABSCISSA_MARGIN = 0.25


def _require_pd(Q: GramForm) -> GramForm:
    if not Q.is_positive_definite:
        Q = Q.classify()
        if not Q.is_positive_definite:
            raise FormError("form must be positive definite")
    return Q


def estimated_point_count(Q: GramForm, X: float) -> float:
    """Volume estimate of #{v : Q(v) <= X}."""
    m = Q.m
    vol = math.pi ** (m / 2) / math.gamma(m / 2 + 1)
    return vol * X ** (m / 2) / math.sqrt(discriminant(Q)) + 1


def _check_budget(Q: GramForm, X: float, budget: float) -> None:
    if estimated_point_count(Q, X) > budget:
        raise DomainError(f"enumeration up to X = {X:g} exceeds the point budget {budget:g}")


def _expand(R: np.ndarray, coords: np.ndarray, rem: np.ndarray, i: int):
    """One Fincke-Pohst level: all integer v_i compatible with the remaining budget.

    ``coords`` holds v_{m-1}, ..., v_{i+1} (last coordinate first).
    """
    rii = R[i, i]
    if coords.shape[1]:
        centre = -(coords[:, ::-1] @ R[i, i + 1 :]) / rii
    else:
        centre = np.zeros(len(rem))
    half = np.sqrt(np.maximum(rem, 0.0)) / rii
    lo = np.ceil(centre - half - 1e-9).astype(np.int64)
    hi = np.floor(centre + half + 1e-9).astype(np.int64)
    cnt = np.maximum(hi - lo + 1, 0)
    parent = np.repeat(np.arange(len(cnt)), cnt)
    first = np.repeat(np.cumsum(cnt) - cnt, cnt)
    vi = lo[parent] + (np.arange(parent.size) - first)
    rem = rem[parent] - (rii * (vi - centre[parent])) ** 2
    return np.column_stack([coords[parent], vi]), rem


def _fincke_pohst(Q: GramForm, X: float, chunk: int = 1 << 18):
    """Yield blocks of integer vectors (rows, in original coordinate order) with Q(v) <= X (+ slack)."""
    m = Q.m
    R = np.linalg.cholesky(Q.gram).T  # Q(v) = |R v|^2, R upper triangular
    coords = np.zeros((1, 0), dtype=np.int64)
    rem = np.array([X * (1 + 1e-9) + 1e-12])
    for i in range(m - 1, 0, -1):
        coords, rem = _expand(R, coords, rem, i)
    # the last level is where the point count explodes; do it in pieces
    step = max(1, chunk // max(1, int(2 * math.sqrt(X / R[0, 0] ** 2)) + 1))
    for k in range(0, len(rem), step):
        block, _ = _expand(R, coords[k : k + step], rem[k : k + step], 0)
        yield block[:, ::-1]


def lattice_points(Q: GramForm, X: float, budget: float = POINT_BUDGET) -> tuple[np.ndarray, np.ndarray]:
    """All nonzero v in Z^m with Q(v) <= X, with their values.

    Fincke-Pohst on the Cholesky factor, expanded breadth-first one
    coordinate at a time so each level is a handful of array operations.
    Rows come back sorted by value (ties in lexicographic order of v).
    """
    Q = _require_pd(Q)
    m = Q.m
    if not X > 0:
        return np.zeros((0, m), dtype=np.int64), np.zeros(0)
    _check_budget(Q, X, budget)
    blocks = list(_fincke_pohst(Q, X))
    points = np.concatenate(blocks) if blocks else np.zeros((0, m), dtype=np.int64)
    values = evaluate_many(Q, points)
    keep = (values > 0) & (values <= X * (1 + MERGE_RTOL))
    points, values = points[keep], values[keep]
    order = np.lexsort(tuple(points[:, k] for k in range(m - 1, -1, -1)) + (values,))
    return points[order], values[order]


def lattice_values(Q: GramForm, X: float, budget: float = POINT_BUDGET) -> np.ndarray:
    """Sorted values Q(v) of all nonzero v with Q(v) <= X (no coordinates kept)."""
    Q = _require_pd(Q)
    if not X > 0:
        return np.zeros(0)
    _check_budget(Q, X, budget)
    parts = []
    for block in _fincke_pohst(Q, X):
        vals = evaluate_many(Q, block)
        parts.append(vals[(vals > 0) & (vals <= X * (1 + MERGE_RTOL))])
    values = np.concatenate(parts) if parts else np.zeros(0)
    values.sort()
    return values


@dataclass(frozen=True, eq=False)
class ValueList:
    """Distinct values lam_1 < lam_2 < ... of Q up to ``cutoff`` with multiplicities."""

    form_digest: str
    cutoff: float
    lambdas: np.ndarray
    mults: np.ndarray

    def __post_init__(self) -> None:
        lam = np.asarray(self.lambdas, dtype=np.float64)
        a = np.asarray(self.mults, dtype=np.int64)
        if lam.shape != a.shape:
            raise ValueError("lambdas and mults differ in length")
        if lam.size and (np.any(np.diff(lam) <= 0) or np.any(a < 1) or lam[0] <= 0):
            raise ValueError("value list must be strictly ascending with positive multiplicities")
        lam.setflags(write=False)
        a.setflags(write=False)
        object.__setattr__(self, "lambdas", lam)
        object.__setattr__(self, "mults", a)

    def __len__(self) -> int:
        return len(self.lambdas)

    @property
    def total(self) -> int:
        return int(self.mults.sum())

    def upto(self, X: float) -> "ValueList":
        """Entries with lam <= X; a value within 1e-9 relative of X is kept."""
        if X > self.cutoff * (1 + MERGE_RTOL):
            raise DomainError(f"value list only reaches {self.cutoff:g}, need {X:g}")
        k = int(np.searchsorted(self.lambdas, X * (1 + MERGE_RTOL), side="right"))
        return ValueList(self.form_digest, X, self.lambdas[:k], self.mults[:k])

    def entries(self) -> list[tuple[float, int]]:
        return list(zip(self.lambdas.tolist(), self.mults.tolist()))


def group_values(values: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Merge sorted values closer than MERGE_RTOL (relative) into classes."""
    if values.size == 0:
        return np.zeros(0), np.zeros(0, dtype=np.int64)
    starts = [0]
    anchor = values[0]
    for k in range(1, values.size):
        if values[k] - anchor > MERGE_RTOL * anchor:
            starts.append(k)
            anchor = values[k]
    starts_arr = np.array(starts)
    mults = np.diff(np.append(starts_arr, values.size))
    return values[starts_arr].copy(), mults.astype(np.int64)


def enumerate_values(Q: GramForm, X: float) -> ValueList:
    Q = _require_pd(Q)
    lam, mult = _group_fast(lattice_values(Q, X))
    return ValueList(Q.digest, float(X), lam, mult)


def _group_fast(values: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    # exact duplicates first (the +-v symmetry alone halves the work), then
    # the tolerance merge over the distinct values
    uniq, counts = np.unique(values, return_counts=True)
    if uniq.size < 2 or np.all(np.diff(uniq) > MERGE_RTOL * uniq[:-1]):
        return uniq, counts.astype(np.int64)
    lam, sizes = group_values(uniq)
    bounds = np.cumsum(np.append(0, sizes))
    csum = np.append(0, np.cumsum(counts))
    return lam, (csum[bounds[1:]] - csum[bounds[:-1]]).astype(np.int64)


def _fsum_complex(z: np.ndarray) -> complex:
    return complex(math.fsum(z.real), math.fsum(z.imag))


# -- pole and smoothing helpers ---------------------------------------------


def residue_at_pole(Q: GramForm) -> float:
    """Residue of Z_Q at s = m/2: pi^(m/2) / (Gamma(m/2) sqrt(D))."""
    Q = _require_pd(Q)
    m = Q.m
    return math.pi ** (m / 2) / (math.gamma(m / 2) * math.sqrt(discriminant(Q)))


# log-erfc cutoff w(r) = erfc(log(r) / a) / 2: its Mellin transform is
# exp(a^2 w^2 / 4) / w, Gaussian along vertical lines, so the smoothed sum
# converges to Z_Q(s) much faster than any compactly supported weight
SMOOTH_WIDTH = 0.15
SMOOTH_REACH = math.exp(6.3 * SMOOTH_WIDTH)  # erfc(6.3) < 1e-18


def _direct_range(s: complex, eps: float) -> float:
    # empirical: error <~ eps once the summed range reaches 100 per digit,
    # stretched linearly with |t| (checked against eval_theta for m = 2..4)
    digits = max(1.0, -math.log10(eps))
    return 100.0 * digits * (1.0 + abs(s.imag) / 20.0)


def eval_direct(Q: GramForm, s: complex, eps: float = 1e-10) -> complex:
    """Z_Q(s) from the Dirichlet series, Re s >= m/2 + 1/4.

    Sums Q(v)^-s w(Q(v)/Y) with the smooth cutoff w(r) = erfc(log(r)/a)/2
    and adds back the discarded tail integrated against the lattice-point
    density, which is exactly -Res * Y^w0 * exp(a^2 w0^2 / 4) / w0 with
    w0 = m/2 - s (for a -> 0 this is the familiar Res * Y^(m/2-s)/(s-m/2)).
    What is left is a Mellin integral of Z_Q to the left of s; the range Y
    is chosen so that it stays below ``eps``.
    """
    Q = _require_pd(Q)
    s = complex(s)
    m = Q.m
    if s.real < m / 2 + DIRECT_ABSCISSA_MARGIN:
        raise DomainError(f"eval_direct needs Re s >= {m / 2 + DIRECT_ABSCISSA_MARGIN}, got {s.real}")
    # Z_cQ(s) = c^-s Z_Q(s): eps is rescaled by the mean scale D^(1/m), the
    # range by the top eigenvalue (below it an eccentric lattice still
    # looks lower-dimensional and the smoothed sum converges slowly)
    c = discriminant(Q) ** (1.0 / m)
    top = float(np.linalg.eigvalsh(Q.gram)[-1])
    reach = _direct_range(s, min(1.0, eps * c ** s.real)) * top
    Y = reach / SMOOTH_REACH
    _check_budget(Q, reach, POINT_BUDGET)
    # streamed block by block: the range can hold ~1e8 points for m = 4
    partial = []
    for block in _fincke_pohst(Q, reach):
        lam = evaluate_many(Q, block)
        lam = lam[(lam > 0) & (lam <= reach)]
        terms = 0.5 * erfc(np.log(lam / Y) / SMOOTH_WIDTH) * np.exp(-s * np.log(lam))
        partial.append(complex(terms.real.sum(), terms.imag.sum()))
    w0 = m / 2 - s
    tail = -residue_at_pole(Q) * cmath.exp(w0 * math.log(Y) + (SMOOTH_WIDTH * w0) ** 2 / 4) / w0
    return _fsum_complex(np.array(partial + [tail]))


# -- theta continuation -----------------------------------------------------


def _theta_rotation(t: float) -> float:
    # rotate the Mellin contour towards the imaginary axis so that the
    # completed function's exp(-pi|t|/2) decay is carried by delta^s instead
    # of cancellation between O(1) terms; at most ~e^6 of headroom is lost
    eps = min(math.pi / 2, 6.0 / abs(t)) if t else math.pi / 2
    return math.copysign(math.pi / 2 - eps, t) if t else 0.0


def theta_cutoff(s: complex) -> float:
    return max(20.0, 2.0 * abs(s.imag))


def _check_theta_envelope(m: int, s: complex) -> None:
    if abs(s.imag) > THETA_IM_CAP:
        raise DomainError(f"eval_theta needs |Im s| <= {THETA_IM_CAP:g}; use eval_afe")
    if abs(s - m / 2) < POLE_GUARD:
        raise DomainError(f"s = {s} is at the pole s = m/2 of Z_Q")
    if abs(s) < POLE_GUARD:
        raise DomainError("s = 0 is a removable point; evaluate nearby")


def completed(Q: GramForm, s: complex, values: ValueList | None = None,
              dual_values: ValueList | None = None) -> complex:
    """Lambda_Q(s) = pi^-s Gamma(s) Z_Q(s) by the theta-function identity.

    With delta = exp(i phi), |phi| < pi/2,

        Lambda_Q(s) = -delta^s / s - D^-1/2 delta^(s-m/2) / (m/2 - s)
                      + sum_v (pi Q(v))^-s Gamma(s, pi delta Q(v))
                      + D^-1/2 sum_v (pi Q_-(v))^(s-m/2) Gamma(m/2-s, pi Q_-(v)/delta),

    which is the usual formula at phi = 0. Both lattice sums are cut at
    max(20, 2|Im s|).
    """
    Q = _require_pd(Q)
    s = complex(s)
    m = Q.m
    _check_theta_envelope(m, s)
    X = theta_cutoff(s)
    D = discriminant(Q)
    phi = _theta_rotation(s.imag)
    delta = cmath.exp(1j * phi)
    lv = values.upto(X) if values is not None else enumerate_values(Q, X)
    dv = dual_values.upto(X) if dual_values is not None else enumerate_values(dual(Q), X)
    inv_sqrt_d = 1.0 / math.sqrt(D)
    half = m / 2
    # log delta = i phi exactly, so delta^s = exp(i phi s)
    parts = [
        -cmath.exp(1j * phi * s) / s,
        -inv_sqrt_d * cmath.exp(1j * phi * (s - half)) / (half - s),
    ]
    x = math.pi * lv.lambdas
    if x.size:
        terms = lv.mults * np.exp(-s * np.log(x)) * sf.upper_gamma_array(s, x * delta)
        parts.extend(terms.tolist())
    y = math.pi * dv.lambdas
    if y.size:
        terms = dv.mults * np.exp((s - half) * np.log(y)) * sf.upper_gamma_array(half - s, y / delta)
        parts.extend((inv_sqrt_d * terms).tolist())
    return complex(math.fsum(p.real for p in parts), math.fsum(p.imag for p in parts))


def eval_theta(Q: GramForm, s: complex, values: ValueList | None = None,
               dual_values: ValueList | None = None) -> complex:
    """Z_Q(s) for |Im s| <= 30, s != m/2, via the theta continuation."""
    s = complex(s)
    if s.real < 0 and abs(s - round(s.real)) < 1e-8:
        _check_theta_envelope(Q.m, s)
        return 0j  # trivial zeros: Lambda is finite, Gamma(s) has a pole
    lam = completed(Q, s, values, dual_values)
    return lam * cmath.exp(s * math.log(math.pi) - sf.log_gamma(s))


# -- approximate functional equation ----------------------------------------


def afe_length(Q: GramForm, t: float) -> float:
    """X(t) = |t| sqrt(D) / pi."""
    return abs(t) * math.sqrt(discriminant(Q)) / math.pi


def afe_dual_cutoff(Q: GramForm, t: float) -> float:
    """How far the dual(Q) value list has to reach for ``eval_afe`` at height t.

    The second AFE sum runs over values mu <= X(t) of the adjugate form
    D * G^-1, i.e. over dual(Q) values up to X(t) / D.
    """
    return afe_length(Q, t) / discriminant(Q)


def eval_afe(Q: GramForm, t: float, values: ValueList | None = None,
             dual_values: ValueList | None = None) -> complex:
    """Main terms of the approximate functional equation at s = 1/2 + it.

    S1 + chi(s) S2 with S1 = sum_{lam <= X} a lam^-s over values of Q and
    S2 = sum_{mu <= X} b mu^(s-1) over values of the adjugate form D G^-1
    (= D times the values of dual(Q)); X = |t| sqrt(D) / pi. With that
    normalization chi(s) = (sqrt(D)/pi)^(1-2s) Gamma(1-s)/Gamma(s) is the exact
    factor of the functional equation and |chi| = 1 on the critical line.
    The omitted error is O(log |t|).
    """
    Q = _require_pd(Q)
    if Q.m != 2:
        raise DomainError("eval_afe is implemented for binary forms only")
    t = float(t)
    if abs(t) < 1:
        raise DomainError(f"eval_afe needs |t| >= 1, got {t}")
    D = discriminant(Q)
    X = afe_length(Q, t)
    lv = values.upto(X) if values is not None else enumerate_values(Q, X)
    dv = (dual_values.upto(X / D) if dual_values is not None
          else enumerate_values(dual(Q), X / D))
    s = complex(0.5, t)
    s1 = _fsum_complex(lv.mults * np.exp(-s * np.log(lv.lambdas)))
    s2 = _fsum_complex(dv.mults * np.exp((s - 1) * np.log(D * dv.lambdas)))
    return s1 + sf.chi_factor(s, D) * s2


# -- diagnostics and routing ------------------------------------------------


def functional_residual(Q: GramForm, s: complex) -> float:
    """|Lambda_Q(s) - D^-1/2 Lambda_{Q_-}(m/2 - s)| / (1 + |Lambda_Q(s)|)."""
    Q = _require_pd(Q)
    s = complex(s)
    lhs = completed(Q, s)
    rhs = completed(dual(Q), Q.m / 2 - s) / math.sqrt(discriminant(Q))
    return abs(lhs - rhs) / (1 + abs(lhs))


METHODS = ("direct", "theta", "afe", "auto")


def route(Q: GramForm, s: complex) -> str:
    m = Q.m
    if s.real > m / 2 + DIRECT_ABSCISSA_MARGIN:
        return "direct"
    if abs(s.imag) <= THETA_IM_CAP:
        return "theta"
    if m == 2 and s.real == 0.5:
        return "afe"
    raise DomainError(f"no evaluator covers s = {s} for m = {m}")


def evaluate(Q: GramForm, s: complex, method: str = "auto", **kw) -> complex:
    """Z_Q(s) by the named method; "auto" picks by validity domain."""
    s = complex(s)
    if method not in METHODS:
        raise FormError(f"unknown method {method!r}")
    if method == "auto":
        method = route(Q, s)
    if method == "direct":
        return eval_direct(Q, s, **kw)
    if method == "theta":
        return eval_theta(Q, s, **kw)
    if s.real != 0.5:
        raise DomainError("eval_afe only covers the critical line Re s = 1/2")
    return eval_afe(Q, s.imag, **kw)
