import itertools
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from critline import counting as ct
from critline.errors import DomainError, FormError
from critline.forms import GramForm, Signature, difference_form

I2 = GramForm.identity(2)
D22 = difference_form(I2)
D21 = GramForm(np.diag([1.0, 1.0, -1.0]))

# frozen at first run: max normalized_log of the (2,2) difference form over
# A in {20, 40, 80, 160}, B in {1, 2, 4}
C_COUNT = 4.9144912347370555

DYADIC_FORMS = [
    GramForm.identity(2),
    GramForm.positive([[2.0, 1.0], [1.0, 1.0]]),
    GramForm.positive([[1.0, 0.25], [0.25, 1.5]]),
    GramForm.identity(3),
    GramForm.positive([[2.0, 0.5, 0.0], [0.5, 1.0, -0.25], [0.0, -0.25, 1.5]]),
]


def brute(G, A, B, region="joint"):
    """Count of v in the box with the region's norm test and |Q(v)| < B, origin included."""
    G = np.asarray(G, dtype=float)
    n = G.shape[0]
    a = int(math.floor(A))
    v = np.array(list(itertools.product(range(-a, a + 1), repeat=n)))
    vals = np.einsum("ij,jk,ik->i", v, G, v)
    if region == "joint":
        inside = (v * v).sum(axis=1) <= A * A
    else:
        h = n // 2
        inside = ((v[:, :h] ** 2).sum(axis=1) <= A * A) & ((v[:, h:] ** 2).sum(axis=1) <= A * A)
    return int(np.count_nonzero(inside & (np.abs(vals) < B)))


def brute_pairs(Q, A, B, region):
    """Difference-form count by comparing every pair (u, v) of ball points directly."""
    a = int(math.floor(A))
    u = np.array(list(itertools.product(range(-a, a + 1), repeat=Q.m)))
    n2 = (u * u).sum(axis=1)
    u, n2 = u[n2 <= A * A], n2[n2 <= A * A]
    q = np.einsum("ij,jk,ik->i", u, Q.gram, u)
    close = np.abs(q[:, None] - q[None, :]) < B
    if region == "joint":
        close &= (n2[:, None] + n2[None, :]) <= A * A
    return int(np.count_nonzero(close))


def exact_pairs(gram, A, B):
    """Joint-region difference count in exact rational arithmetic."""
    g = [[Fraction(x).limit_denominator(1000) for x in row] for row in gram]
    B = Fraction(B)
    q = lambda a, b: g[0][0] * a * a + 2 * g[0][1] * a * b + g[1][1] * b * b  # noqa: E731
    pts = [(a, b) for a in range(-A, A + 1) for b in range(-A, A + 1) if a * a + b * b <= A * A]
    return sum(1 for u in pts for v in pts
               if u[0] ** 2 + u[1] ** 2 + v[0] ** 2 + v[1] ** 2 <= A * A and abs(q(*u) - q(*v)) < B)


class TestQuery:
    @pytest.mark.parametrize("A,B", [(0, 1), (-1, 1), (2, 0), (2, -1), (math.inf, 1), (2, math.nan)])
    def test_validation(self, A, B):
        with pytest.raises(FormError):
            ct.CountQuery(D22, A, B)

    def test_definite_rejected(self):
        with pytest.raises(FormError):
            ct.count_box(ct.CountQuery(GramForm.identity(3), 3, 1))

    def test_dimension(self):
        with pytest.raises(FormError):
            ct.count_box(ct.CountQuery(GramForm(np.diag([1.0, -1.0])), 3, 1))

    def test_budget(self):
        with pytest.raises(DomainError):
            ct.count_box(ct.CountQuery(GramForm(np.diag([1.0, 1.0, 1.0, -1.0, -1.0, -1.0])), 60, 1))


class TestBox:
    def test_origin_only(self):
        assert ct.count_box(ct.CountQuery(D22, 0.5, 1)).count == 1

    def test_small_ball(self):
        rep = ct.count_box(ct.CountQuery(D22, 2, 0.5))
        assert rep.count == 33 and rep.count_no_origin == 32

    def test_pythagorean(self):
        rep = ct.count_box(ct.CountQuery(D21, 10, 0.5, include_origin=False))
        assert rep.count == 72
        assert rep.count == brute(D21.gram, 10, 0.5) - 1

    def test_report_fields(self):
        rep = ct.count_box(ct.CountQuery(D21, 12, 2))
        assert rep.signature == Signature(2, 1) and rep.n == 3 and rep.det == -1
        assert rep.normalized == rep.count / (2 * 12)
        assert rep.normalized_log == rep.normalized / math.log(12)
        assert math.isnan(ct.count_box(ct.CountQuery(D21, 1, 2)).normalized_log)

    @pytest.mark.parametrize(
        "gram",
        [
            np.diag([1.0, 1.0, -1.0]),
            np.diag([2.0, 1.0, -3.0]),
            [[1.0, 0.5, 0.0], [0.5, -1.0, 0.25], [0.0, 0.25, 1.5]],
            np.diag([1.0, -1.0, 1.0, -1.0]),
            [[0.0, 1.0, 0.0, 0.0], [1.0, 0.0, 0.0, 0.0], [0.0, 0.0, 1.0, 0.5], [0.0, 0.0, 0.5, -2.0]],
            np.diag([1.0, 1.0, 1.0, -1.0, -2.0]),
        ],
    )
    @pytest.mark.parametrize("A,B", [(3.5, 0.75), (5, 2), (6.2, 1)])
    def test_matches_brute_force(self, gram, A, B):
        Q = GramForm(gram)
        assert ct.count_box(ct.CountQuery(Q, A, B)).count == brute(Q.gram, A, B)

    @pytest.mark.parametrize("threads", [2, 3, 8])
    def test_threads_exact(self, threads):
        Q = GramForm(np.diag([1.0, 2.0, -1.0, -1.5]))
        q = ct.CountQuery(Q, 14, 3)
        assert ct.count_box(q, threads=threads).count == ct.count_box(q).count

    @given(st.floats(1, 9), st.floats(0.1, 6), st.floats(0, 3), st.floats(0, 3))
    def test_monotone(self, A, B, dA, dB):
        lo = ct.count_box(ct.CountQuery(D21, A, B)).count
        hi = ct.count_box(ct.CountQuery(D21, A + dA, B + dB)).count
        assert lo <= hi

    def test_strict_window(self):
        # x^2 + y^2 - z^2 takes the value 1 at (1, 0, 0): excluded for B = 1
        at = ct.count_box(ct.CountQuery(D21, 5, 1)).count
        above = ct.count_box(ct.CountQuery(D21, 5, 1 + 1e-9)).count
        assert at == brute(D21.gram, 5, 1) and above > at


class TestDifference:
    def test_joint_small_ball(self):
        rep = ct.count_difference(I2, 2, 0.5, region="joint")
        assert rep.count == 33 == ct.count_box(ct.CountQuery(D22, 2, 0.5)).count

    def test_separate_small_ball(self):
        assert ct.count_difference(I2, 2, 0.5).count == brute(D22.gram, 2, 0.5, "separate") == 49

    @pytest.mark.parametrize("Q", DYADIC_FORMS, ids=lambda q: q.digest[:8])
    @pytest.mark.parametrize("A", [1, 2.5, 4, 6.5, 8])
    def test_cross_path_exact(self, Q, A):
        for B in (0.5, 1.0, 3.0):
            for region in ct.REGIONS:
                fast = ct.count_difference(Q, A, B, region=region).count
                assert fast == brute_pairs(Q, A, B, region)

    @pytest.mark.parametrize("A", [2, 3.5])
    def test_pair_oracle_matches_box_oracle(self, A):
        Q = DYADIC_FORMS[1]
        for region in ct.REGIONS:
            assert brute_pairs(Q, A, 1.0, region) == brute(difference_form(Q).gram, A, 1.0, region)

    @pytest.mark.parametrize("A", [3, 6, 8])
    def test_joint_matches_box(self, A):
        Q = GramForm.positive([[2.0, 1.0], [1.0, 1.0]])
        for B in (0.5, 2.0):
            fast = ct.count_difference(Q, A, B, region="joint").count
            slow = ct.count_box(ct.CountQuery(difference_form(Q), A, B)).count
            assert fast == slow

    @pytest.mark.parametrize("A", [3, 8])
    def test_window_covers_everything(self, A):
        rep = ct.count_difference(I2, A, 3 * A * A)
        N = rep.extra["base_points"]
        assert rep.count == N * N

    @pytest.mark.parametrize("region", ct.REGIONS)
    @pytest.mark.parametrize("Q", DYADIC_FORMS[:3], ids=["I2", "a", "b"])
    def test_swap_symmetry(self, region, Q):
        rep = ct.count_difference(Q, 7.5, 1.5, region=region)
        strictly_ordered, odd = divmod(rep.count - rep.extra["diagonal"], 2)
        assert odd == 0 and strictly_ordered >= 0

    def test_origin_flag(self):
        a = ct.count_difference(I2, 5, 1, include_origin=True)
        b = ct.count_difference(I2, 5, 1, include_origin=False)
        assert a.count == b.count + 1 == a.count_no_origin + 1

    def test_signature_recorded(self):
        rep = ct.count_difference(I2, 5, 1)
        assert rep.signature == Signature(2, 2) and rep.n == 4

    def test_rejects_other_dims(self):
        with pytest.raises(FormError):
            ct.count_difference(GramForm.identity(4), 3, 1)
        with pytest.raises(FormError):
            ct.count_difference(I2, 3, 1, region="ball")

    @pytest.mark.parametrize("A,B", [(4, 2.0), (5, 0.5), (6, 2.0)])
    def test_decimal_entries_match_exact_arithmetic(self, A, B):
        # Q(u) - Q(v) hits B exactly for these decimal entries; both paths must exclude the tie
        Q = GramForm.positive([[1.0, 0.3], [0.3, 1.7]])
        exact = exact_pairs(Q.gram, A, B)
        assert ct.count_difference(Q, A, B, region="joint").count == exact
        assert ct.count_box(ct.CountQuery(difference_form(Q), A, B)).count == exact

    def test_dispatch_takes_fast_path(self):
        rep = ct.count(ct.CountQuery(D22, 6, 1))
        assert rep.region == "joint" and rep.count == ct.count_box(ct.CountQuery(D22, 6, 1)).count
        assert ct.count(ct.CountQuery(D21, 6, 1)).region == "ball"


class TestDyadic:
    def test_grid_order_and_monotone(self):
        reps = ct.dyadic_table(D22, [20, 40], [1, 2])
        assert [(r.A, r.B) for r in reps] == [(20, 1), (20, 2), (40, 1), (40, 2)]
        c = [r.count for r in reps]
        assert c[0] <= c[1] and c[2] <= c[3] and c[0] <= c[2] and c[1] <= c[3]
        assert all(r.signature == Signature(2, 2) for r in reps)

    def test_regression_counts(self):
        reps = ct.dyadic_table(D22, [20, 40], [1, 2, 4])
        assert [r.count for r in reps] == [5889, 9193, 14961, 27905, 40457, 63665]

    def test_regression_signature_21(self):
        reps = ct.dyadic_table(D21, [50, 400], [1, 2])
        assert [r.count for r in reps] == [489, 1407, 5313, 15439]

    def test_ratio_spread_and_bound(self):
        reps = ct.dyadic_table(D22, [20, 40, 80], [1, 2, 4])
        logs = [r.normalized_log for r in reps]
        assert max(logs) / min(logs) <= 4
        assert max(logs) <= C_COUNT

    def test_csv(self):
        reps = ct.dyadic_table(D22, [20], [1, 2])
        lines = ct.reports_to_csv(reps).splitlines()
        assert lines[0] == ",".join(ct.CSV_COLUMNS)
        first = lines[1].split(",")
        assert first[:4] == ["20", "1", "5889", "5888"]
        assert float(first[4]) == reps[0].normalized
        assert first[6:8] == ["2", "2"]
