"""Counting integer vectors with ||v|| <= A and |Q(v)| < B for indefinite Q.

``count_box`` is the general exact scan. ``count_difference`` is the fast
path for difference forms Q(u) - Q(v): it works with the values of Q on
the ball of radius A in m variables instead of the 2m-dimensional box.
"""

from __future__ import annotations

import csv
import io
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from critline import epstein
from critline.errors import DomainError, FormError
from critline.forms import (
    GramForm,
    Signature,
    difference_form,
    discriminant,
    evaluate_many,
    signature_of,
    split_difference,
)

BOX_BUDGET = 2e9
TIE_ULPS = 128  # |Q| within this many ulps of the value scale below B counts as a tie with B
REGIONS = ("separate", "joint")
CSV_COLUMNS = ("A", "B", "count", "count_no_origin", "normalized", "normalized_log", "p", "q", "seconds")


@dataclass(frozen=True)
class CountQuery:
    form: GramForm
    A: float
    B: float
    include_origin: bool = True

    def __post_init__(self) -> None:
        if not (math.isfinite(self.A) and self.A > 0):
            raise FormError(f"A must be positive, got {self.A}")
        if not (math.isfinite(self.B) and self.B > 0):
            raise FormError(f"B must be positive, got {self.B}")


@dataclass(frozen=True)
class CountReport:
    """Exact count plus the ratios count / (B A^(n-2)) and count / (B A^(n-2) log A).

    ``normalized_log`` is nan for A <= 1. ``det`` is recorded because the
    ratios are only comparable within one form.
    """

    A: float
    B: float
    n: int
    count: int
    count_no_origin: int
    signature: Signature
    det: float
    seconds: float
    region: str = "ball"
    extra: dict = field(default_factory=dict)

    @property
    def normalized(self) -> float:
        return self.count / (self.B * self.A ** (self.n - 2))

    @property
    def normalized_log(self) -> float:
        if self.A <= 1:
            return math.nan
        return self.normalized / math.log(self.A)

    def row(self) -> dict:
        return {
            "A": self.A,
            "B": self.B,
            "count": self.count,
            "count_no_origin": self.count_no_origin,
            "normalized": self.normalized,
            "normalized_log": self.normalized_log,
            "p": self.signature.p,
            "q": self.signature.q,
            "seconds": self.seconds,
        }


def _require_indefinite(Q: GramForm) -> Signature:
    sig = signature_of(Q)
    if sig.p == 0 or sig.q == 0:
        raise FormError("counting needs an indefinite form; use enumerate_values for definite ones")
    return sig


def ball_points(m: int, A: float) -> np.ndarray:
    """All v in Z^m with ||v|| <= A, the origin first."""
    R2 = A * A
    pts = [np.zeros((1, m), dtype=np.int64)]
    if m == 1:
        a = int(math.floor(A))
        ks = np.arange(1, a + 1, dtype=np.int64)
        pts.append(np.stack([ks, -ks], axis=1).reshape(-1, 1))
    elif R2 >= 1:
        for block in epstein._fincke_pohst(GramForm.identity(m), R2):
            norm2 = (block * block).sum(axis=1)
            pts.append(block[(norm2 > 0) & (norm2 <= R2)])
    return np.concatenate(pts)


def tie_bound(G: np.ndarray, A: float, B: float) -> float:
    """Working threshold for the strict test |Q| < B.

    Values are rounded, so an exact tie |Q| = B can land a few ulps below B
    (and differently on the two counting paths). Everything within
    TIE_ULPS ulps of the largest possible |Q| on the ball is treated as a tie
    and excluded, which makes both paths agree with exact arithmetic for
    rational forms.
    """
    scale = B + G.shape[0] * float(np.max(np.abs(G))) * A * A
    return B - TIE_ULPS * np.finfo(float).eps * scale


# -- general box scan ---------------------------------------------------------


def _disc(r: int):
    """Integer points of the disc of radius r, sorted by squared norm."""
    x, y = np.meshgrid(np.arange(-r, r + 1), np.arange(-r, r + 1), indexing="ij")
    x, y = x.ravel(), y.ravel()
    n2 = x * x + y * y
    order = np.argsort(n2, kind="stable")
    return x[order].astype(np.float64), y[order].astype(np.float64), n2[order]


def _count_slices(G: np.ndarray, outer: np.ndarray, A2: float, B: float, disc) -> int:
    k = G.shape[0] - 2
    x, y, n2 = disc
    gxx, gxy, gyy = G[k, k], G[k, k + 1], G[k + 1, k + 1]
    quad = gxx * x * x + 2 * gxy * x * y + gyy * y * y
    total = 0
    for w in outer:
        wf = w.astype(np.float64)
        c0 = wf @ G[:k, :k] @ wf
        lx, ly = 2 * (wf @ G[:k, k]), 2 * (wf @ G[:k, k + 1])
        n = int(np.searchsorted(n2, A2 - int(w @ w), side="right"))
        vals = c0 + lx * x[:n] + ly * y[:n] + quad[:n]
        total += int(np.count_nonzero(np.abs(vals) < B))
    return total


def count_box(q: CountQuery, threads: int = 1) -> CountReport:
    """Exact scan of the Euclidean ball, strict inequality |Q(v)| < B.

    The first n-2 coordinates are looped over; the last two are handled as
    one vectorised disc. With ``threads`` > 1 the outer points are split in
    contiguous chunks whose integer counts are simply added.
    """
    Q, A, B = q.form, float(q.A), float(q.B)
    n = Q.m
    if not 3 <= n <= 6:
        raise FormError(f"count_box handles 3 to 6 variables, got {n}")
    sig = _require_indefinite(Q)
    a = int(math.floor(A))
    if float(2 * a + 1) ** n > BOX_BUDGET:
        raise DomainError(f"box (2*{a}+1)^{n} exceeds the enumeration budget {BOX_BUDGET:g}")
    t0 = time.perf_counter()
    A2 = A * A
    outer = ball_points(n - 2, A)
    disc = _disc(a)
    G = Q.gram
    B = tie_bound(G, A, B)
    workers = max(1, int(threads))
    if workers == 1:
        found = _count_slices(G, outer, A2, B, disc)
    else:
        chunks = np.array_split(outer, workers)
        with ThreadPoolExecutor(workers) as pool:
            found = sum(pool.map(lambda c: _count_slices(G, c, A2, B, disc), chunks))
    no_origin = found - 1
    return CountReport(
        A, float(q.B), n,
        count=no_origin + int(q.include_origin),
        count_no_origin=no_origin,
        signature=sig,
        det=discriminant(Q),
        seconds=time.perf_counter() - t0,
    )


# -- difference forms ---------------------------------------------------------


def _window_counts(sorted_vals: np.ndarray, centres: np.ndarray, B: float) -> np.ndarray:
    hi = np.searchsorted(sorted_vals, centres + B, side="left")
    lo = np.searchsorted(sorted_vals, centres - B, side="right")
    return hi - lo


def _pairs_separate(qv: np.ndarray, B: float) -> int:
    svals = np.sort(qv)
    return int(_window_counts(svals, svals, B).sum())


def _pairs_joint(qv: np.ndarray, n2: np.ndarray, A2: int, B: float) -> int:
    """#{(u, v) : |u|^2 + |v|^2 <= A2, |Q(u) - Q(v)| < B} with a Fenwick tree.

    Points u are visited by decreasing |u|^2, so the admissible partners
    (|v|^2 <= A2 - |u|^2) only ever grow; they are inserted keyed by the
    rank of Q(v) and each u asks for the number of partners in its window.
    """
    keys = np.unique(qv)
    rank = np.searchsorted(keys, qv) + 1  # 1-based tree positions
    lo = np.searchsorted(keys, qv - B, side="right")  # positions <= lo are too small
    hi = np.searchsorted(keys, qv + B, side="left")  # positions <= hi are below qv + B
    size = keys.size
    tree = np.zeros(size + 1, dtype=np.int64)

    def prefix(idx: np.ndarray) -> np.ndarray:
        acc = np.zeros(idx.size, dtype=np.int64)
        idx = idx.copy()
        while True:
            live = idx > 0
            if not live.any():
                return acc
            acc[live] += tree[idx[live]]
            idx[live] -= idx[live] & -idx[live]

    def insert(idx: np.ndarray) -> None:
        idx = idx.copy()
        while idx.size:
            np.add.at(tree, idx, 1)
            idx = idx + (idx & -idx)
            idx = idx[idx <= size]

    by_norm = np.argsort(n2, kind="stable")
    sorted_n = n2[by_norm]
    inserted = 0
    total = 0
    for lev in np.unique(n2)[::-1]:
        reach = int(np.searchsorted(sorted_n, A2 - lev, side="right"))
        if reach > inserted:
            insert(rank[by_norm[inserted:reach]])
            inserted = reach
        us = by_norm[np.searchsorted(sorted_n, lev, "left"):np.searchsorted(sorted_n, lev, "right")]
        total += int((prefix(hi[us]) - prefix(lo[us])).sum())
    return total


def count_difference(Q: GramForm, A: float, B: float, region: str = "separate",
                     include_origin: bool = True) -> CountReport:
    """Pairs (u, v) in Z^m x Z^m with |Q(u) - Q(v)| < B.

    region="separate": ||u|| <= A and ||v|| <= A (the default fast path; a
    subset of the joint ball of radius sqrt(2) A). region="joint":
    ||(u, v)|| <= A, the same set ``count_box`` scans for the difference form.
    ``extra`` records the diagonal pairs u = v and the pairs with u = 0 or
    v = 0, so count = diagonal + 2 * (pairs with u before v).
    """
    Q = epstein._require_pd(Q)
    if region not in REGIONS:
        raise FormError(f"region must be one of {REGIONS}")
    m = Q.m
    if m not in (2, 3):
        raise FormError(f"count_difference handles m = 2 or 3, got {m}")
    A, B = float(A), float(B)
    CountQuery(difference_form(Q), A, B)  # argument validation
    if float(2 * math.floor(A) + 1) ** m > BOX_BUDGET:
        raise DomainError("ball enumeration exceeds the budget")
    t0 = time.perf_counter()
    B_query = B
    B = tie_bound(difference_form(Q).gram, A, B)
    pts = ball_points(m, A)
    qv = evaluate_many(Q, pts)
    n2 = (pts * pts).sum(axis=1)
    if region == "separate":
        total = _pairs_separate(qv, B)
        diagonal = pts.shape[0]
        # u = 0 (Q(0) = 0) paired with every v of small value, and vice versa
        axis = 2 * int(np.count_nonzero(np.abs(qv) < B)) - 1
    else:
        A2 = A * A
        total = _pairs_joint(qv, n2, A2, B)
        diagonal = int(np.count_nonzero(2 * n2 <= A2))
        axis = 2 * int(np.count_nonzero((np.abs(qv) < B) & (n2 <= A2))) - 1
    no_origin = total - 1
    return CountReport(
        A, B_query, 2 * m,
        count=no_origin + int(include_origin),
        count_no_origin=no_origin,
        signature=Signature(m, m),
        det=discriminant(Q) ** 2,
        seconds=time.perf_counter() - t0,
        region=region,
        extra={"diagonal": diagonal, "axis_pairs": axis, "base_points": int(pts.shape[0])},
    )


def count(q: CountQuery, threads: int = 1, region: str = "joint") -> CountReport:
    """Count for the ball ||v|| <= A, taking the fast path for difference forms."""
    base = split_difference(q.form)
    if base is not None and base.m in (2, 3):
        return count_difference(base, q.A, q.B, region=region, include_origin=q.include_origin)
    return count_box(q, threads=threads)


def dyadic_table(Q: GramForm, A_list, B_list, threads: int = 1, region: str = "joint",
                 include_origin: bool = True) -> list[CountReport]:
    """Counts on the grid A_list x B_list, row-major (A outer, B inner)."""
    return [
        count(CountQuery(Q, float(A), float(B), include_origin), threads=threads, region=region)
        for A in A_list
        for B in B_list
    ]


def _csv_cell(x) -> str:
    if isinstance(x, float):
        return format(x, ".17g")
    return str(x)


def reports_to_csv(reports) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for r in reports:
        row = r.row()
        writer.writerow([_csv_cell(row[c]) for c in CSV_COLUMNS])
    return buf.getvalue()
