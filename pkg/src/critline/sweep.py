"""Mean squares on the critical line, growth fits and grid sweeps.

All integrals are trapezoidal sums on a uniform t-grid. Samples are
computed independently (optionally on a thread pool) and combined with
``math.fsum`` in t-order, so a report never depends on the thread count.
"""

from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from critline import epstein
from critline.cache import values_for
from critline.eisenstein import LatticeId, eis_modular, eis_picard_special_point, lattice_form
from critline.errors import DomainError, FormError
from critline.forms import GramForm, HyperbolicPoint, discriminant, dual

DEFAULT_STEP = 1.0 / 16
MAX_STEP = 1.0 / 8
GUARD_SHIFT = 1.0 / 7  # fraction of the step a guarded sample is moved by
GUARD_SATURATION = 0.01
T_LADDER = (128, 256, 512, 1024, 2048)


@dataclass(frozen=True)
class MeanSquareReport:
    kind: str
    T: float
    window: str
    integral: float
    step: float
    evaluator: str
    samples: int
    shifted_samples: int
    argmax_point: tuple | None = None
    per_point: tuple = ()

    def to_json(self) -> str:
        d = asdict(self)
        if d["argmax_point"] is None:
            del d["argmax_point"]
        if not d["per_point"]:
            del d["per_point"]
        return json.dumps(d, sort_keys=True)


@dataclass(frozen=True)
class ExponentFit:
    """Least-squares line log Y = slope log X + intercept."""

    slope: float
    intercept: float
    max_abs_residual: float
    points: tuple

    def predict(self, X: float) -> float:
        return math.exp(self.intercept + self.slope * math.log(X))


def fit_exponent(points) -> ExponentFit:
    pts = [(float(x), float(y)) for x, y in points]
    if len(pts) < 3:
        raise FormError("need at least 3 points to fit an exponent")
    xs = np.array([p[0] for p in pts])
    ys = np.array([p[1] for p in pts])
    if np.any(xs <= 0) or np.any(ys <= 0):
        raise FormError("fit_exponent needs positive X and Y")
    if np.any(np.diff(xs) <= 0):
        raise FormError("X must be strictly ascending")
    lx, ly = np.log(xs), np.log(ys)
    A = np.column_stack([lx, np.ones_like(lx)])
    (slope, intercept), *_ = np.linalg.lstsq(A, ly, rcond=None)
    resid = float(np.max(np.abs(ly - (slope * lx + intercept))))
    return ExponentFit(float(slope), float(intercept), resid, tuple(zip(lx.tolist(), ly.tolist())))


# -- sampling -----------------------------------------------------------------


def grid(start: float, length: float, step: float) -> np.ndarray:
    """start + k step for k = 0 .. floor(length / step)."""
    n = int(math.floor(length / step + 1e-9))
    return start + step * np.arange(n + 1)


def _map(fn, items, threads: int) -> list:
    if threads is None or threads <= 1 or len(items) < 2:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(threads) as pool:
        return list(pool.map(fn, items))


def _trapezoid(values: np.ndarray, step: float) -> float:
    w = np.full(values.size, step)
    w[0] = w[-1] = step / 2
    return math.fsum((w * values).tolist())


def _guarded(fn, t: float, shift: float):
    """fn(t), or fn(t + shift) when t sits on a zeta zero/pole; returns (value, shifted)."""
    try:
        return fn(t), False
    except DomainError:
        return fn(t + shift), True


# -- Epstein ------------------------------------------------------------------


def epstein_values(Q: GramForm, T_max: float, cache_dir=None):
    """Value lists of Q and dual(Q) long enough for eval_afe up to height T_max."""
    X = epstein.afe_length(Q, T_max)
    return values_for(cache_dir, Q, X), values_for(cache_dir, dual(Q), epstein.afe_dual_cutoff(Q, T_max))


def epstein_samples(Q: GramForm, ts: np.ndarray, values=None, dual_values=None,
                    threads: int = 1) -> np.ndarray:
    """Z_Q(1/2 + it) on the given grid via the AFE (|t| >= 1)."""
    if values is None or dual_values is None:
        values, dual_values = epstein_values(Q, float(np.max(np.abs(ts))))
    fn = lambda t: epstein.eval_afe(Q, t, values, dual_values)  # noqa: E731
    return np.array(_map(fn, [float(t) for t in ts], threads), dtype=complex)


def mean_square_epstein(Q: GramForm, T: float, step: float = DEFAULT_STEP, values=None,
                        dual_values=None, threads: int = 1) -> MeanSquareReport:
    """Trapezoidal integral of |Z_Q(1/2 + it)|^2 over [T, 2T] with eval_afe."""
    Q = epstein._require_pd(Q)
    if Q.m != 2:
        raise DomainError("the critical-line mean square is implemented for binary forms")
    if T < 64:
        raise DomainError(f"mean_square_epstein needs T >= 64, got {T}")
    if not 0 < step <= MAX_STEP:
        raise DomainError(f"step must be in (0, {MAX_STEP}], got {step}")
    ts = grid(T, T, step)
    z = epstein_samples(Q, ts, values, dual_values, threads)
    return MeanSquareReport(
        kind="epstein",
        T=float(T),
        window="[T,2T]",
        integral=_trapezoid(np.abs(z) ** 2, step),
        step=step,
        evaluator="afe",
        samples=ts.size,
        shifted_samples=0,
    )


# -- Eisenstein ---------------------------------------------------------------


def eisenstein_values(z: HyperbolicPoint, T_max: float, cache_dir=None):
    Q = lattice_form(LatticeId.MODULAR, z)
    return epstein_values(Q, max(T_max, 1.0), cache_dir)


def _eis_critical(z: HyperbolicPoint, values, dual_values):
    def fn(t: float) -> complex:
        s = complex(0.5, t)
        if abs(t) < 1:
            return eis_modular(s, z, "theta")
        return eis_modular(s, z, "afe", values=values, dual_values=dual_values)
    return fn


def eisenstein_samples(z: HyperbolicPoint, ts: np.ndarray, step: float, values=None,
                       dual_values=None, threads: int = 1):
    """E(1/2 + it, z) on the grid; guarded samples are moved by step/7 away from 0.

    Returns (values, effective t, shifted mask).
    """
    if values is None or dual_values is None:
        values, dual_values = eisenstein_values(z, float(np.max(np.abs(ts))) + step)
    fn = _eis_critical(z, values, dual_values)

    def one(t: float):
        shift = math.copysign(GUARD_SHIFT * step, t) if t else GUARD_SHIFT * step
        return _guarded(fn, t, shift)

    out = _map(one, [float(t) for t in ts], threads)
    vals = np.array([v for v, _ in out], dtype=complex)
    shifted = np.array([sh for _, sh in out], dtype=bool)
    eff = ts + np.where(shifted, np.copysign(GUARD_SHIFT * step, np.where(ts == 0, 1.0, ts)), 0.0)
    return vals, eff, shifted


def half_line_integral(z: HyperbolicPoint, T: float, step: float = DEFAULT_STEP, sign: int = 1,
                       values=None, dual_values=None, threads: int = 1) -> tuple[float, int, int]:
    """Trapezoid of |E(1/2 + it, z)|^2 over [0, T] (sign=1) or [-T, 0] (sign=-1)."""
    ts = sign * grid(0.0, T, step)
    vals, _, shifted = eisenstein_samples(z, ts, step, values, dual_values, threads)
    n_shift = int(shifted.sum())
    if n_shift > GUARD_SATURATION * ts.size:
        raise DomainError(f"{n_shift} of {ts.size} samples hit the zeta guard; the grid is bad")
    return _trapezoid(np.abs(vals) ** 2, step), ts.size, n_shift


def mean_square_eisenstein(lat: LatticeId, z: HyperbolicPoint, T: float,
                           step: float = DEFAULT_STEP, values=None, dual_values=None,
                           threads: int = 1) -> MeanSquareReport:
    """2 * integral_0^T |E(1/2 + it, z)|^2 dt, the [-T, T] mean square by symmetry."""
    if lat is not LatticeId.MODULAR:
        raise DomainError("critical-line mean squares are available on the modular surface only")
    if not 0 < step <= MAX_STEP:
        raise DomainError(f"step must be in (0, {MAX_STEP}], got {step}")
    if values is None or dual_values is None:
        values, dual_values = eisenstein_values(z, T + step)
    half, n, n_shift = half_line_integral(z, T, step, 1, values, dual_values, threads)
    return MeanSquareReport(
        kind="eisenstein",
        T=float(T),
        window="[-T,T]",
        integral=2 * half,
        step=step,
        evaluator="afe (theta for |t| < 1)",
        samples=n,
        shifted_samples=n_shift,
    )


def eisenstein_ladder(z: HyperbolicPoint, T_list, step: float = DEFAULT_STEP, values=None,
                      dual_values=None, threads: int = 1) -> list[MeanSquareReport]:
    """mean_square_eisenstein for every T in T_list from one pass over [0, max T].

    Each T must be a multiple of the step; the reports are identical to
    separate calls because they share the very same samples.
    """
    T_list = [float(T) for T in T_list]
    for T in T_list:
        if abs(T / step - round(T / step)) > 1e-9:
            raise FormError(f"T = {T} is not a multiple of the step")
    T_max = max(T_list)
    if values is None or dual_values is None:
        values, dual_values = eisenstein_values(z, T_max + step)
    ts = grid(0.0, T_max, step)
    vals, _, shifted = eisenstein_samples(z, ts, step, values, dual_values, threads)
    abs2 = np.abs(vals) ** 2
    out = []
    for T in T_list:
        n = int(round(T / step)) + 1
        n_shift = int(shifted[:n].sum())
        if n_shift > GUARD_SATURATION * n:
            raise DomainError(f"{n_shift} of {n} samples hit the zeta guard; the grid is bad")
        out.append(MeanSquareReport(
            kind="eisenstein", T=T, window="[-T,T]", integral=2 * _trapezoid(abs2[:n], step),
            step=step, evaluator="afe (theta for |t| < 1)", samples=n, shifted_samples=n_shift,
        ))
    return out


def sup_over_grid(lat: LatticeId, points, T: float, step: float = DEFAULT_STEP,
                  threads: int = 1, cache_dir=None) -> MeanSquareReport:
    """Largest mean square over a grid of points, with the maximiser recorded."""
    points = list(points)
    if not points:
        raise FormError("grid must be nonempty")
    reports = []
    for z in points:
        v, dv = eisenstein_values(z, T + step, cache_dir)
        reports.append(mean_square_eisenstein(lat, z, T, step, v, dv, threads))
    k = max(range(len(reports)), key=lambda i: reports[i].integral)  # first maximiser on ties
    best = reports[k]
    z = points[k]
    return MeanSquareReport(
        kind="eisenstein-sup",
        T=best.T,
        window=best.window,
        integral=best.integral,
        step=step,
        evaluator=best.evaluator,
        samples=best.samples,
        shifted_samples=sum(r.shifted_samples for r in reports),
        argmax_point=(z.x1, z.x2, z.y),
        per_point=tuple(r.integral for r in reports),
    )


def fundamental_grid(nx: int = 3, ny: int = 3) -> list[HyperbolicPoint]:
    """Uniform grid in {|x| <= 1/2, 1 <= y <= 2}."""
    return [HyperbolicPoint.h2(x, y) for x in np.linspace(-0.5, 0.5, nx) for y in np.linspace(1.0, 2.0, ny)]


# -- pointwise growth on the Picard side ---------------------------------------


def windowed_max(T: float, width: float = 10.0, samples: int = 21) -> float:
    return max(abs(eis_picard_special_point(float(t))) for t in np.linspace(T, T + width, samples))


def pointwise_picard_growth(T_list, width: float = 10.0, samples: int = 21) -> ExponentFit:
    """Fit log W(T) against log T, W(T) = max of |E(1 + it, j)| over [T, T + width]."""
    T_list = [float(T) for T in T_list]
    if len(T_list) < 4:
        raise FormError("need at least 4 heights")
    if max(T_list) > 1e4:
        raise DomainError("heights above 1e4 are outside the growth experiment")
    return fit_exponent([(T, windowed_max(T, width, samples)) for T in T_list])


# -- I/O ----------------------------------------------------------------------


def samples_to_csv(ts, vals) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["t", "re", "im", "abs2"])
    for t, v in zip(np.asarray(ts, float).tolist(), np.asarray(vals, complex).tolist()):
        w.writerow([f"{t:.17g}", f"{v.real:.17g}", f"{v.imag:.17g}", f"{abs(v) ** 2:.17g}"])
    return buf.getvalue()


def read_points(text: str) -> list[tuple[float, float]]:
    """Two-column X,Y CSV, header optional."""
    out = []
    for row in csv.reader(io.StringIO(text)):
        if not row or not "".join(row).strip():
            continue
        try:
            out.append((float(row[0]), float(row[1])))
        except ValueError:
            if out:
                raise FormError(f"bad CSV row {row!r}") from None
    return out
