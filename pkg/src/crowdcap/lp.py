"""Dense-tableau two-phase simplex with Bland's rule.

Solves ``max c.x  s.t.  A x <= b, x >= 0``.  With ``exact=True`` the tableau
holds :class:`fractions.Fraction` entries and every comparison is exact;
otherwise it runs on float64 with tolerance ``tol``.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"


@dataclass(frozen=True)
class LinearProgram:
    objective: Sequence  # c, maximized
    constraints: Sequence[tuple[Sequence, object]]  # rows (a, bound): a.x <= bound

    @property
    def n(self) -> int:
        return len(self.objective)


@dataclass(frozen=True)
class LPResult:
    status: str
    x: Optional[tuple] = None
    value: object = None
    dual: Optional[tuple] = None  # one multiplier per constraint row, >= 0


def solve_lp(p: LinearProgram, tol: float = 1e-9, exact: bool = False, max_pivots: int = 100_000) -> LPResult:
    n = p.n
    m = len(p.constraints)
    for a, _ in p.constraints:
        if len(a) != n:
            raise ValueError("constraint row length differs from objective length")
    if exact:
        tol = 0
        conv = lambda v: v if isinstance(v, Fraction) else Fraction(v) if isinstance(v, int) else Fraction(repr(v))
        zero, one, dtype = Fraction(0), Fraction(1), object
    else:
        conv, zero, one, dtype = float, 0.0, 1.0, np.float64
    c = np.array([conv(v) for v in p.objective], dtype=dtype)
    A = np.array([[conv(v) for v in a] for a, _ in p.constraints], dtype=dtype).reshape(m, n)
    b = np.array([conv(bd) for _, bd in p.constraints], dtype=dtype)
    if m == 0:
        if any(ci > tol for ci in c):
            return LPResult(UNBOUNDED)
        return LPResult(OPTIMAL, tuple([zero] * n), zero, ())

    neg = np.array([bi < 0 for bi in b])
    n_art = int(neg.sum())
    # columns: x (n) | slack e_i (m) | artificials (n_art) | rhs
    ncol = n + m + n_art
    T = np.empty((m + 1, ncol + 1), dtype=dtype)
    T[...] = zero
    T[1:, :n] = A
    for i in range(m):
        T[1 + i, n + i] = one
    T[1:, -1] = b
    basis = [n + i for i in range(m)]
    k = 0
    for i in range(m):
        if neg[i]:
            T[1 + i, :] = -T[1 + i, :]
            T[1 + i, n + m + k] = one
            basis[i] = n + m + k
            k += 1

    if n_art:
        # phase 1: maximize -sum(artificials); objective row holds z_j - c_j
        T[0, :] = zero
        T[0, n + m:ncol] = one
        for i in range(m):
            if neg[i]:
                T[0, :] = T[0, :] - T[1 + i, :]
        _iterate(T, basis, ncol, tol, max_pivots)
        if T[0, -1] < -tol:
            return LPResult(INFEASIBLE)
        # drive degenerate artificials out of the basis
        keep = list(range(m))
        for i in range(m):
            if basis[i] >= n + m:
                row = T[1 + i, : n + m]
                cand = [j for j in range(n + m) if abs(row[j]) > tol]
                if cand:
                    _pivot(T, basis, i, cand[0])
                else:
                    keep.remove(i)
        T = np.vstack([T[:1], T[[1 + i for i in keep]]])
        T = np.hstack([T[:, : n + m], T[:, -1:]])
        basis = [basis[i] for i in keep]
        ncol = n + m

    # phase 2
    T[0, :] = zero
    T[0, :n] = -c
    for i, bv in enumerate(basis):
        if bv < n and T[0, bv] != 0:
            T[0, :] = T[0, :] - T[0, bv] * T[1 + i, :]
    status = _iterate(T, basis, ncol, tol, max_pivots)
    if status == UNBOUNDED:
        return LPResult(UNBOUNDED)
    x = [zero] * n
    for i, bv in enumerate(basis):
        if bv < n:
            x[bv] = T[1 + i, -1]
    if not exact:
        x = [float(v) for v in x]
    dual = tuple(T[0, n + i] if exact else float(T[0, n + i]) for i in range(m))
    value = T[0, -1] if exact else float(T[0, -1])
    return LPResult(OPTIMAL, tuple(x), value, dual)


def _pivot(T: np.ndarray, basis: list, r: int, col: int) -> None:
    T[1 + r, :] = T[1 + r, :] / T[1 + r, col]
    colv = T[:, col].copy()
    colv[1 + r] = 0
    T -= np.outer(colv, T[1 + r, :])
    basis[r] = col


def _iterate(T: np.ndarray, basis: list, ncol: int, tol, max_pivots: int) -> str:
    for _ in range(max_pivots):
        obj = T[0, :ncol]
        entering = next((j for j in range(ncol) if obj[j] < -tol), None)
        if entering is None:
            return OPTIMAL
        col = T[1:, entering]
        best = None
        for i in range(len(basis)):
            if col[i] > tol:
                ratio = T[1 + i, -1] / col[i]
                if best is None or ratio < best[0] - tol:
                    best = (ratio, i)
                elif ratio <= best[0] + tol and basis[i] < basis[best[1]]:
                    best = (ratio, i)
        if best is None:
            return UNBOUNDED
        _pivot(T, basis, best[1], entering)
    raise RuntimeError("simplex exceeded its pivot limit")


def solve_packing_lp(values: Sequence[float], weights: Sequence[Sequence[float]], capacities: Sequence[float],
                     upper: Sequence[float], tol: float = 1e-9, max_pivots: int = 10_000) -> LPResult:
    """``max v.x  s.t.  W x <= cap, 0 <= x <= upper`` by a bounded-variable primal simplex.

    ``weights[d][j]`` is the load of item j on row d; ``upper`` entries may be
    ``math.inf``.  Needs ``cap >= 0`` (x = 0 is then feasible).  Upper bounds
    are handled implicitly, so the tableau has one row per capacity, which
    keeps node relaxations in branch and bound cheap.  Dantzig's rule, with
    Bland's rule after ``2 * (n + m)`` iterations to rule out cycling.
    """
    n, m = len(values), len(capacities)
    if any(c < 0 for c in capacities):
        return LPResult(INFEASIBLE)
    inf = float("inf")
    ub = [float(u) for u in upper] + [inf] * m
    cost = [float(v) for v in values] + [0.0] * m
    # tableau rows: B^-1 [W | I]; basis starts on the slacks
    T = [[float(w) for w in weights[d]] + [1.0 if k == d else 0.0 for k in range(m)] for d in range(m)]
    beta = [float(c) for c in capacities]
    basis = list(range(n, n + m))
    at_upper = [False] * (n + m)
    rc = cost[:]  # reduced costs; the basis is all slacks
    basic = [False] * n + [True] * m
    bland_after = 2 * (n + m)
    for it in range(max_pivots):
        enter, gain = -1, tol
        for k in range(n + m):
            if basic[k]:
                continue
            g = rc[k] if not at_upper[k] and ub[k] > 0 else -rc[k] if at_upper[k] else 0.0
            if g > gain:
                enter, gain = k, g
                if it >= bland_after:
                    break
        if enter < 0:
            break
        sign = -1.0 if at_upper[enter] else 1.0
        step, leave, leave_up = ub[enter], -1, False
        for i in range(m):
            delta = -sign * T[i][enter]  # change of basic i per unit step
            if delta < -tol:
                t = beta[i] / -delta
                up = False
            elif delta > tol and ub[basis[i]] < inf:
                t = (ub[basis[i]] - beta[i]) / delta
                up = True
            else:
                continue
            if t < step - tol or (abs(t - step) <= tol and leave >= 0 and basis[i] < basis[leave]):
                step, leave, leave_up = t, i, up
        if step == inf:
            return LPResult(UNBOUNDED)
        for i in range(m):
            beta[i] -= sign * T[i][enter] * step
        if leave < 0:
            at_upper[enter] = not at_upper[enter]
            continue
        out = basis[leave]
        at_upper[out] = leave_up
        start = ub[enter] if at_upper[enter] else 0.0
        at_upper[enter] = False
        piv = T[leave][enter]
        row = [v / piv for v in T[leave]]
        T[leave] = row
        for i in range(m):
            if i != leave and T[i][enter] != 0.0:
                f = T[i][enter]
                Ti = T[i]
                T[i] = [a - f * b for a, b in zip(Ti, row)]
        f = rc[enter]
        rc = [a - f * b for a, b in zip(rc, row)]
        basis[leave] = enter
        basic[out], basic[enter] = False, True
        beta[leave] = start + sign * step
    else:
        raise RuntimeError("packing LP exceeded the pivot limit")
    x = [ub[k] if at_upper[k] else 0.0 for k in range(n)]
    for i, k in enumerate(basis):
        if k < n:
            x[k] = beta[i]
    value = sum(v * xv for v, xv in zip(values, x))
    return LPResult(OPTIMAL, tuple(x), float(value))
