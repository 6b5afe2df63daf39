"""Quadratic forms stored as symmetric Gram matrices, Q(v) = v^T G v."""

from __future__ import annotations

import hashlib
import math
from fractions import Fraction
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from critline.errors import FormError

POSITIVE_DEFINITE = "positive_definite"
INDEFINITE = "indefinite"
UNCHECKED = "unchecked"
_FLAGS = (POSITIVE_DEFINITE, INDEFINITE, UNCHECKED)

# relative thresholds below which pivot / eigenvalue signs are not trusted
SINGULAR_RTOL = 1e-12
DEGENERATE_RTOL = 1e-10


class Signature(NamedTuple):
    p: int
    q: int


@dataclass(frozen=True, eq=False)
class GramForm:
    """A quadratic form in ``m`` variables, 2 <= m <= 8.

    ``gram`` is copied into a read-only float64 array. Asymmetric input is
    rejected outright rather than symmetrized. Passing
    ``definite="positive_definite"`` runs a Cholesky check at construction;
    ``"indefinite"`` checks that the signature is mixed.
    """

    gram: np.ndarray
    definite: str = UNCHECKED
    _digest: list = field(default_factory=list, repr=False, compare=False)
    _dual: list = field(default_factory=list, repr=False, compare=False)

    def __post_init__(self) -> None:
        g = np.array(self.gram, dtype=np.float64, copy=True)
        if g.ndim != 2 or g.shape[0] != g.shape[1]:
            raise FormError(f"Gram matrix must be square, got shape {g.shape}")
        if not 2 <= g.shape[0] <= 8:
            raise FormError(f"dimension must be in [2, 8], got {g.shape[0]}")
        if not np.all(np.isfinite(g)):
            raise FormError("Gram matrix has non-finite entries")
        if not np.array_equal(g, g.T):
            raise FormError("Gram matrix is not symmetric")
        if self.definite not in _FLAGS:
            raise FormError(f"unknown definite flag {self.definite!r}")
        g.setflags(write=False)
        object.__setattr__(self, "gram", g)
        if self.definite == POSITIVE_DEFINITE and not _cholesky_ok(g):
            raise FormError("form is not positive definite")
        if self.definite == INDEFINITE:
            sig = signature_of(self)
            if sig.p == 0 or sig.q == 0:
                raise FormError(f"form is definite, signature {tuple(sig)}")

    @property
    def m(self) -> int:
        return self.gram.shape[0]

    @property
    def is_positive_definite(self) -> bool:
        return self.definite == POSITIVE_DEFINITE

    @classmethod
    def positive(cls, gram) -> "GramForm":
        return cls(gram, POSITIVE_DEFINITE)

    @classmethod
    def identity(cls, m: int) -> "GramForm":
        return cls(np.eye(m), POSITIVE_DEFINITE)

    def classify(self) -> "GramForm":
        """Return a copy whose flag reflects the actual signature."""
        if self.definite != UNCHECKED:
            return self
        if _cholesky_ok(self.gram):
            return GramForm(self.gram, POSITIVE_DEFINITE)
        return GramForm(self.gram, INDEFINITE)

    def to_text(self) -> str:
        rows = [" ".join(format(float(x), ".17g") for x in row) for row in self.gram]
        return "\n".join([str(self.m), *rows]) + "\n"

    @property
    def digest(self) -> str:
        # memoized in a list so the dataclass can stay frozen
        if not self._digest:
            self._digest.append(hashlib.sha256(self.to_text().encode()).hexdigest()[:32])
        return self._digest[0]

    def __eq__(self, other) -> bool:
        return isinstance(other, GramForm) and np.array_equal(self.gram, other.gram)

    def __hash__(self) -> int:
        return hash(self.gram.tobytes())

    def __repr__(self) -> str:
        return f"GramForm({self.gram.tolist()!r}, {self.definite!r})"


def _cholesky_ok(g: np.ndarray) -> bool:
    try:
        c = np.linalg.cholesky(g)
    except np.linalg.LinAlgError:
        return False
    return bool(np.all(np.diag(c) > 0))


def parse_text(text: str, definite: str = UNCHECKED) -> GramForm:
    """Parse the on-disk form format: ``m`` then ``m`` whitespace-separated rows."""
    lines = [ln for ln in text.strip().splitlines() if ln.strip()]
    try:
        m = int(lines[0])
        rows = [[float(x) for x in ln.split()] for ln in lines[1:]]
    except (IndexError, ValueError) as exc:
        raise FormError(f"malformed form text: {exc}") from None
    if len(rows) != m or any(len(r) != m for r in rows):
        raise FormError(f"expected {m} rows of {m} entries")
    return GramForm(rows, definite)


def parse_inline(text: str, definite: str = UNCHECKED) -> GramForm:
    """Parse the inline syntax ``"2,1;1,1"`` (rows by ';', entries by ',')."""
    try:
        rows = [[float(x) for x in row.split(",")] for row in text.strip().split(";")]
    except ValueError as exc:
        raise FormError(f"malformed inline Gram {text!r}: {exc}") from None
    if any(len(r) != len(rows) for r in rows):
        raise FormError(f"inline Gram {text!r} is not square")
    return GramForm(rows, definite)


def evaluate(Q: GramForm, v: Sequence[float]) -> float:
    """v^T G v with exactly-rounded summation of the m^2 products."""
    v = [float(x) for x in v]
    if len(v) != Q.m:
        raise FormError(f"vector length {len(v)} does not match dimension {Q.m}")
    g = Q.gram
    return math.fsum(g[i, j] * v[i] * v[j] for i in range(Q.m) for j in range(Q.m))


def evaluate_many(Q: GramForm, vs: np.ndarray) -> np.ndarray:
    """Vectorized Q(v) for the rows of ``vs``; exact for integer Gram and small v."""
    vs = np.asarray(vs, dtype=np.float64)
    return np.einsum("ni,ij,nj->n", vs, Q.gram, vs)


def _row_scale(g: np.ndarray) -> float:
    return float(np.prod(np.max(np.abs(g), axis=1)))


def dual(Q: GramForm) -> GramForm:
    """The form with Gram matrix G^{-1}."""
    g = Q.gram
    det = discriminant(Q)
    if abs(det) <= SINGULAR_RTOL * _row_scale(g):
        raise FormError("Gram matrix is numerically singular")
    if Q._dual:
        return Q._dual[0]
    flag = POSITIVE_DEFINITE if Q.is_positive_definite else UNCHECKED
    out = GramForm(_exact_inverse(g), flag)
    Q._dual.append(out)
    return out


def _exact_inverse(g: np.ndarray) -> np.ndarray:
    """G^-1 with every entry correctly rounded (Gauss-Jordan over the rationals).

    The result is exactly symmetric. Costs a few ms for m = 8, and dual()
    memoizes it per form.
    """
    m = g.shape[0]
    a = [[Fraction(float(x)) for x in row] + [Fraction(int(i == j)) for j in range(m)]
         for i, row in enumerate(g)]
    for col in range(m):
        piv = max(range(col, m), key=lambda r: abs(a[r][col]))
        a[col], a[piv] = a[piv], a[col]
        p = a[col][col]
        a[col] = [x / p for x in a[col]]
        for r in range(m):
            if r != col and a[r][col]:
                f = a[r][col]
                a[r] = [x - f * y for x, y in zip(a[r], a[col])]
    return np.array([[float(x) for x in row[m:]] for row in a])


def discriminant(Q: GramForm) -> float:
    """det(G), via pivoted LU (signed for indefinite forms)."""
    g = Q.gram
    if Q.m == 2:
        return float(g[0, 0] * g[1, 1] - g[0, 1] * g[1, 0])
    return float(np.linalg.det(g))


def signature_of(Q: GramForm) -> Signature:
    eig = np.linalg.eigvalsh(Q.gram)
    norm = float(np.max(np.abs(eig)))
    if norm == 0 or np.min(np.abs(eig)) <= DEGENERATE_RTOL * norm:
        raise FormError("form is (numerically) degenerate")
    return Signature(int(np.sum(eig > 0)), int(np.sum(eig < 0)))


@dataclass(frozen=True)
class HyperbolicPoint:
    """z = x1 + i x2 + j y in upper half-space (dim 3) or x1 + i y (dim 2)."""

    x1: float
    x2: float
    y: float
    dim: int = 2

    def __post_init__(self) -> None:
        if self.dim not in (2, 3):
            raise FormError(f"dim must be 2 or 3, got {self.dim}")
        if not (math.isfinite(self.x1) and math.isfinite(self.x2) and math.isfinite(self.y)):
            raise FormError("non-finite coordinate")
        if not self.y > 0:
            raise FormError(f"y must be positive, got {self.y}")
        if self.dim == 2 and self.x2 != 0:
            raise FormError("x2 must be 0 for a point of the upper half-plane")

    @classmethod
    def h2(cls, x: float, y: float) -> "HyperbolicPoint":
        return cls(float(x), 0.0, float(y), 2)

    @classmethod
    def h3(cls, x1: float, x2: float, y: float) -> "HyperbolicPoint":
        return cls(float(x1), float(x2), float(y), 3)

    @property
    def norm(self) -> float:
        """Quaternion norm N(z) = x1^2 + x2^2 + y^2."""
        return self.x1 * self.x1 + self.x2 * self.x2 + self.y * self.y

    def translate(self, a: float = 1.0, b: float = 0.0) -> "HyperbolicPoint":
        return HyperbolicPoint(self.x1 + a, self.x2 + b, self.y, self.dim)

    def invert(self) -> "HyperbolicPoint":
        """z -> -z^{-1}; for dim 2 this is z -> -1/z."""
        n = self.norm
        return HyperbolicPoint(-self.x1 / n, self.x2 / n, self.y / n, self.dim)


def form_from_h2(z: HyperbolicPoint) -> GramForm:
    """Q_z(c, d) = |cz + d|^2 = (x^2 + y^2) c^2 + 2 x c d + d^2."""
    if z.dim != 2:
        raise FormError("form_from_h2 needs a point of the upper half-plane")
    x, y = z.x1, z.y
    return GramForm([[x * x + y * y, x], [x, 1.0]], POSITIVE_DEFINITE)


def form_from_h3(z: HyperbolicPoint) -> GramForm:
    """Q_z(c, d) = N(cz + d) for Gaussian integers c = c1 + i c2, d = d1 + i d2.

    Variable order is (c1, c2, d1, d2).
    """
    if z.dim != 3:
        raise FormError("form_from_h3 needs a point of upper half-space")
    x1, x2, n = z.x1, z.x2, z.norm
    return GramForm(
        [
            [n, 0.0, x1, x2],
            [0.0, n, -x2, x1],
            [x1, -x2, 1.0, 0.0],
            [x2, x1, 0.0, 1.0],
        ],
        POSITIVE_DEFINITE,
    )


def difference_form(Q: GramForm) -> GramForm:
    """Q~(u, v) = Q(u) - Q(v), Gram diag(G, -G), signature (m, m)."""
    if not Q.is_positive_definite:
        Q = Q.classify()
        if not Q.is_positive_definite:
            raise FormError("difference_form needs a positive-definite form")
    m = Q.m
    if 2 * m > 8:
        raise FormError("difference form would exceed 8 variables")
    g = np.zeros((2 * m, 2 * m))
    g[:m, :m] = Q.gram
    g[m:, m:] = -Q.gram
    return GramForm(g, INDEFINITE)


def split_difference(Q: GramForm) -> GramForm | None:
    """Recover the positive block of a difference form, or None."""
    n = Q.m
    if n % 2:
        return None
    m = n // 2
    g = Q.gram
    if np.any(g[:m, m:]) or not np.array_equal(g[m:, m:], -g[:m, :m]):
        return None
    base = GramForm(g[:m, :m]).classify()
    return base if base.is_positive_definite else None


def scale(Q: GramForm, c: float) -> GramForm:
    if not c > 0:
        raise FormError(f"scale factor must be positive, got {c}")
    return GramForm(c * Q.gram, Q.definite)


def integer_det(U: Sequence[Sequence[int]]) -> int:
    """Exact determinant of an integer matrix (Bareiss elimination)."""
    a = [[int(x) for x in row] for row in U]
    n = len(a)
    sign, prev = 1, 1
    for k in range(n - 1):
        if a[k][k] == 0:
            swap = next((i for i in range(k + 1, n) if a[i][k] != 0), None)
            if swap is None:
                return 0
            a[k], a[swap] = a[swap], a[k]
            sign = -sign
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                a[i][j] = (a[i][j] * a[k][k] - a[i][k] * a[k][j]) // prev
        prev = a[k][k]
    return sign * a[n - 1][n - 1]


def unimodular_transform(Q: GramForm, U) -> GramForm:
    """G -> U^T G U for an integer matrix U with det = +-1."""
    U = np.asarray(U)
    if U.shape != (Q.m, Q.m):
        raise FormError(f"U must be {Q.m}x{Q.m}")
    if not np.all(np.equal(np.mod(U, 1), 0)):
        raise FormError("U must have integer entries")
    if abs(integer_det(U.tolist())) != 1:
        raise FormError("U is not unimodular")
    Uf = U.astype(np.float64)
    g = Uf.T @ Q.gram @ Uf
    g = 0.5 * (g + g.T)
    return GramForm(g, Q.definite)
