import itertools
import math
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from crowdcap.lp import INFEASIBLE, OPTIMAL, UNBOUNDED, LinearProgram, solve_lp, solve_packing_lp


def test_single_bound():
    r = solve_lp(LinearProgram([1], [([1], 1)]))
    assert r.status == OPTIMAL and r.x == pytest.approx((1,)) and r.value == pytest.approx(1)


def test_box_with_diagonal_cut():
    p = LinearProgram([1, 1], [([1, 0], 1), ([0, 1], 1), ([1, 1], Fraction(3, 2))])
    assert solve_lp(p).value == pytest.approx(1.5)
    assert solve_lp(p, exact=True).value == Fraction(3, 2)


def test_contradictory_bounds_are_infeasible():
    r = solve_lp(LinearProgram([1], [([-1], -2), ([1], 1)]))
    assert r.status == INFEASIBLE


def test_unbounded_is_reported():
    assert solve_lp(LinearProgram([1, 0], [([0, 1], 3)])).status == UNBOUNDED
    assert solve_lp(LinearProgram([1], [])).status == UNBOUNDED


def test_negative_rhs_phase_one_finds_feasible_start():
    # min x  s.t. x >= 2  as  max -x, -x <= -2
    r = solve_lp(LinearProgram([-1], [([-1], -2), ([1], 10)]), exact=True)
    assert r.status == OPTIMAL and r.x == (2,)


def test_row_length_mismatch_raises():
    with pytest.raises(ValueError):
        solve_lp(LinearProgram([1, 1], [([1], 1)]))


def _vertex_optimum(c, A, b):
    """Brute force: best objective over basic solutions of Ax <= b, x >= 0 (exact)."""
    n, m = len(c), len(A)
    rows = [list(map(Fraction, a)) for a in A] + [[Fraction(int(i == k)) * -1 for i in range(n)] for k in range(n)]
    rhs = [Fraction(x) for x in b] + [Fraction(0)] * n
    best = None
    for pick in itertools.combinations(range(m + n), n):
        M = [rows[i][:] + [rhs[i]] for i in pick]
        ok = True
        for col in range(n):
            piv = next((r for r in range(col, n) if M[r][col] != 0), None)
            if piv is None:
                ok = False
                break
            M[col], M[piv] = M[piv], M[col]
            for r in range(n):
                if r != col and M[r][col] != 0:
                    f = M[r][col] / M[col][col]
                    M[r] = [a - f * b2 for a, b2 in zip(M[r], M[col])]
        if not ok:
            continue
        x = [M[i][n] / M[i][i] for i in range(n)]
        if all(xi >= 0 for xi in x) and all(sum(a * xi for a, xi in zip(rows[i], x)) <= rhs[i] for i in range(m)):
            v = sum(Fraction(ci) * xi for ci, xi in zip(c, x))
            best = v if best is None else max(best, v)
    return best


@given(st.integers(1, 3), st.integers(1, 3), st.data())
def test_exact_simplex_matches_vertex_enumeration(n, m, data):
    c = [data.draw(st.integers(0, 6)) for _ in range(n)]
    A = [[data.draw(st.integers(1, 5)) for _ in range(n)] for _ in range(m)]
    b = [data.draw(st.integers(0, 12)) for _ in range(m)]
    r = solve_lp(LinearProgram(c, list(zip(A, b))), exact=True)
    assert r.status == OPTIMAL
    assert r.value == _vertex_optimum(c, A, b)
    assert all(sum(a * x for a, x in zip(row, r.x)) <= bi for row, bi in zip(A, b))


@given(st.integers(1, 5), st.integers(1, 3), st.data())
def test_duals_certify_optimality(n, m, data):
    c = [data.draw(st.integers(0, 6)) for _ in range(n)]
    A = [[data.draw(st.integers(1, 5)) for _ in range(n)] for _ in range(m)]
    b = [data.draw(st.integers(0, 12)) for _ in range(m)]
    r = solve_lp(LinearProgram(c, list(zip(A, b))), exact=True)
    y = r.dual
    assert all(v >= 0 for v in y)
    assert sum(yi * bi for yi, bi in zip(y, b)) == r.value
    assert all(sum(y[i] * A[i][k] for i in range(m)) >= c[k] for k in range(n))


@given(st.integers(1, 6), st.integers(1, 3), st.data())
def test_packing_lp_matches_general_simplex(n, m, data):
    v = [data.draw(st.integers(0, 9)) for _ in range(n)]
    W = [[data.draw(st.integers(0, 5)) for _ in range(n)] for _ in range(m)]
    for k in range(n):
        if not any(W[d][k] for d in range(m)):
            W[0][k] = 1
    cap = [data.draw(st.integers(0, 20)) for _ in range(m)]
    ub = [data.draw(st.one_of(st.just(math.inf), st.integers(0, 6))) for _ in range(n)]
    rows = [(W[d], cap[d]) for d in range(m)]
    for k, u in enumerate(ub):
        if u != math.inf:
            rows.append(([int(i == k) for i in range(n)], u))
    ref = solve_lp(LinearProgram(v, rows), exact=True)
    got = solve_packing_lp(v, W, cap, ub)
    assert got.status == OPTIMAL
    assert got.value == pytest.approx(float(ref.value), abs=1e-7)
    assert all(-1e-9 <= x <= u + 1e-9 for x, u in zip(got.x, ub))
    assert all(sum(W[d][k] * got.x[k] for k in range(n)) <= cap[d] + 1e-7 for d in range(m))


def test_packing_lp_rejects_negative_capacity():
    assert solve_packing_lp([1], [[1]], [-1], [math.inf]).status == INFEASIBLE
