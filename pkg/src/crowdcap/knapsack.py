"""Knapsack kernels behind the single-category MaxWeight step.

All capacity and weight arithmetic is on Python integers.  Item values may be
integers or Fractions; they are only added and compared.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

from .lp import OPTIMAL, LinearProgram, solve_lp, solve_packing_lp


def unbounded_knapsack(values: Sequence, weights: Sequence[int], capacity: int) -> tuple[tuple[int, ...], object]:
    """Exact unbounded knapsack: maximize sum(v*x) s.t. sum(w*x) <= capacity.

    Only the best-ratio item can appear more than ``w_best - 1`` times beside
    other items in some optimum (replace any ``w_best`` other items by a
    subset whose weight is a multiple of ``w_best``), so the DP runs over
    capacities up to ``(w_best - 1) * max(w)`` and the best item fills the rest.
    """
    if len(values) != len(weights):
        raise ValueError("values and weights differ in length")
    if capacity < 0:
        raise ValueError("capacity must be >= 0")
    n = len(values)
    counts = [0] * n
    items = []
    for k, (v, w) in enumerate(zip(values, weights)):
        if v < 0 or w < 0:
            raise ValueError("values and weights must be non-negative")
        if v == 0:
            continue
        if w == 0:
            raise ValueError(f"item {k} has positive value and zero weight (unbounded objective)")
        items.append(k)
    if not items or capacity == 0:
        return tuple(counts), 0
    # one item per distinct weight suffices: keep the most valuable, lowest index on ties
    by_weight: dict[int, int] = {}
    for k in items:
        w = weights[k]
        if w not in by_weight or values[k] > values[by_weight[w]]:
            by_weight[w] = k
    kept = sorted(by_weight.values())
    best = kept[0]
    for k in kept[1:]:
        # higher value per unit weight wins, then lighter, then lower index
        lhs, rhs = values[k] * weights[best], values[best] * weights[k]
        if lhs > rhs or (lhs == rhs and weights[k] < weights[best]):
            best = k
    wb, vb = weights[best], values[best]
    if capacity % wb == 0:
        # the best item alone meets the fractional bound capacity * vb / wb
        counts[best] = capacity // wb
        return tuple(counts), counts[best] * vb
    others = [k for k in kept if k != best]
    span = min(capacity, (wb - 1) * max(weights[k] for k in kept))

    ow = [(weights[k], values[k], k) for k in others]
    dp = [0] * (span + 1)  # best value of other items with weight <= c
    choice = [-2] * (span + 1)  # -2: inherit from c-1
    for c in range(1, span + 1):
        best_here, pick = dp[c - 1], -2
        for w, v, k in ow:
            if w <= c and dp[c - w] + v > best_here:
                best_here, pick = dp[c - w] + v, k
        dp[c], choice[c] = best_here, pick
    best_c, best_val = 0, dp[0] + (capacity // wb) * vb
    for c in range(1, span + 1):
        val = dp[c] + ((capacity - c) // wb) * vb
        if val > best_val:
            best_c, best_val = c, val
    c = best_c
    while c > 0:
        k = choice[c]
        if k == -2:
            c -= 1
        else:
            counts[k] += 1
            c -= weights[k]
    counts[best] += (capacity - best_c) // wb
    return tuple(counts), best_val


@dataclass(frozen=True)
class KnapsackInstance:
    """max sum(values[j] * x_j) s.t. sum_j weights[j][d] * x_j <= capacities[d], x integer >= 0."""

    values: tuple
    weights: tuple  # weights[j] is a tuple of length `dimensions`
    capacities: tuple

    def __post_init__(self):
        d = len(self.capacities)
        if d < 1:
            raise ValueError("need at least one dimension")
        if len(self.values) != len(self.weights):
            raise ValueError("values and weights differ in length")
        for j, (v, w) in enumerate(zip(self.values, self.weights)):
            if len(w) != d:
                raise ValueError(f"item {j} has {len(w)} weights for {d} dimensions")
            if v < 0 or any(x < 0 for x in w):
                raise ValueError(f"item {j} has a negative value or weight")
            if v > 0 and not any(w):
                raise ValueError(f"item {j} has positive value and zero weight (unbounded objective)")
        if any(c < 0 for c in self.capacities):
            raise ValueError("capacities must be >= 0")

    @property
    def dimensions(self) -> int:
        return len(self.capacities)

    def feasible(self, counts: Sequence[int]) -> bool:
        return all(
            sum(x * w[d] for x, w in zip(counts, self.weights)) <= self.capacities[d]
            for d in range(self.dimensions)
        ) and all(x >= 0 for x in counts)

    def objective(self, counts: Sequence[int]):
        return sum((v * x for v, x in zip(self.values, counts)), 0)

    def item_bound(self, j: int) -> int:
        return min(self.capacities[d] // self.weights[j][d] for d in range(self.dimensions) if self.weights[j][d] > 0)


@dataclass(frozen=True)
class KnapsackResult:
    status: str  # "exact" or "budget_exceeded"
    counts: tuple[int, ...]
    objective: object
    upper_bound: object  # LP bound; equals objective when exact
    nodes: int = 0


def _relaxation(inst: KnapsackInstance, items: Sequence[int], lower: dict, upper: dict, exact: bool):
    """LP over ``items`` with per-item bounds; returns (value, x) or None if infeasible."""
    cap = [inst.capacities[d] - sum(lower.get(j, 0) * inst.weights[j][d] for j in items) for d in range(inst.dimensions)]
    if any(c < 0 for c in cap):
        return None
    free = [j for j in items if upper.get(j, math.inf) > lower.get(j, 0)]
    base = sum((inst.values[j] * lower.get(j, 0) for j in items), 0)
    if not free:
        return base, {j: lower.get(j, 0) for j in items}
    if exact:
        rows = [([inst.weights[j][d] for j in free], cap[d]) for d in range(inst.dimensions)]
        for k, j in enumerate(free):
            if upper.get(j, math.inf) != math.inf:
                row = [0] * len(free)
                row[k] = 1
                rows.append((row, upper[j] - lower.get(j, 0)))
        res = solve_lp(LinearProgram([inst.values[j] for j in free], rows), exact=True)
    else:
        res = solve_packing_lp([inst.values[j] for j in free],
                               [[inst.weights[j][d] for j in free] for d in range(inst.dimensions)], cap,
                               [upper.get(j, math.inf) - lower.get(j, 0) for j in free])
    if res.status != OPTIMAL:
        return None
    x = {j: lower.get(j, 0) for j in items}
    for k, j in enumerate(free):
        x[j] += res.x[k]
    return base + res.value, x


def _floor_repair(inst: KnapsackInstance, items: Sequence[int], x: dict) -> list[int]:
    """Floor an LP point, undo float overshoot, then greedily top up."""
    counts = [0] * len(inst.values)
    for j in items:
        counts[j] = max(0, math.floor(x[j] + 1e-9))
    load = [sum(counts[j] * inst.weights[j][d] for j in items) for d in range(inst.dimensions)]
    for j in items:
        while counts[j] > 0 and any(load[d] > inst.capacities[d] for d in range(inst.dimensions)):
            counts[j] -= 1
            for d in range(inst.dimensions):
                load[d] -= inst.weights[j][d]
    return counts


def lp_relax_and_floor(inst: KnapsackInstance, exact: bool = False) -> tuple[tuple[int, ...], object]:
    """Component-wise floor of an LP optimum; loses at most sum(values) vs the ILP."""
    items = [j for j, v in enumerate(inst.values) if v > 0]
    if not items:
        return tuple([0] * len(inst.values)), 0
    rel = _relaxation(inst, items, {}, {}, exact)
    counts = _floor_repair(inst, items, rel[1])
    return tuple(counts), inst.objective(counts)


def multidim_knapsack_exact(inst: KnapsackInstance, node_budget: int = 1_000_000) -> KnapsackResult:
    """Depth-first branch and bound with LP bounds.

    Branches on the fractional variable with the largest LP value, trying the
    ceiling branch first.  When more than ``node_budget`` nodes would be
    needed, returns the incumbent with the root LP value as upper bound.
    """
    n = len(inst.values)
    items = _undominated(inst, [j for j, v in enumerate(inst.values) if v > 0])
    if not items:
        return KnapsackResult("exact", tuple([0] * n), 0, 0, 0)
    m, D = len(items), inst.dimensions
    v = [inst.values[j] for j in items]
    W = [inst.weights[j] for j in items]
    rows = [[w[d] for w in W] for d in range(D)]
    C = inst.capacities
    by_value = sorted(range(m), key=lambda i: -v[i])
    integral_values = all(Fraction(x).denominator == 1 for x in v)

    def relax(lo, up):
        cap = [C[d] - sum(a * b for a, b in zip(lo, rows[d])) for d in range(D)]
        if min(cap) < 0:
            return None
        free = [i for i in range(m) if up[i] > lo[i]]
        base = sum((a * b for a, b in zip(v, lo)), 0)
        if not free:
            return base, [float(a) for a in lo]
        res = solve_packing_lp([v[i] for i in free], [[r[i] for i in free] for r in rows], cap,
                               [up[i] - lo[i] for i in free])
        if res.status != OPTIMAL:
            return None
        x = [float(a) for a in lo]
        for k, i in enumerate(free):
            x[i] += res.x[k]
        return base + res.value, x

    def rounded(x, lo):
        """Floor of x kept above ``lo``, float overshoot undone, then greedily topped up."""
        cnt = [max(lo[i], math.floor(x[i] + 1e-9)) for i in range(m)]
        load = [sum(a * b for a, b in zip(cnt, r)) for r in rows]
        for i in range(m):
            while cnt[i] > lo[i] and any(load[d] > C[d] for d in range(D)):
                cnt[i] -= 1
                load = [ld - w for ld, w in zip(load, W[i])]
        if any(load[d] > C[d] for d in range(D)):
            return None
        for i in by_value:
            room = min((C[d] - load[d]) // W[i][d] for d in range(D) if W[i][d] > 0)
            if room > 0:
                cnt[i] += room
                load = [ld + room * w for ld, w in zip(load, W[i])]
        return cnt

    def prunable(bound) -> bool:
        if integral_values:
            return math.floor(bound + 1e-7) <= inc_val
        return bound <= inc_val + 1e-9

    zeros = [0] * m
    root_bound, root_x = relax(zeros, [inst.item_bound(j) for j in items])
    inc = rounded(root_x, zeros)
    inc_val = sum((a * b for a, b in zip(v, inc)), 0)
    nodes = 0
    stack = [(zeros, [inst.item_bound(j) for j in items])]
    while stack:
        if nodes >= node_budget:
            return KnapsackResult("budget_exceeded", _expand(n, items, inc), inc_val, max(root_bound, inc_val), nodes)
        lo, up = stack.pop()
        nodes += 1
        rel = relax(lo, up)
        if rel is None:
            continue
        bound, x = rel
        if prunable(bound):
            continue
        cand = rounded(x, lo)
        if cand is not None:
            val = sum((a * b for a, b in zip(v, cand)), 0)
            if val > inc_val:
                inc, inc_val = cand, val
                if prunable(bound):
                    continue
        frac = [i for i in range(m) if abs(x[i] - round(x[i])) > 1e-7]
        if not frac:
            continue
        i = max(frac, key=lambda k: (x[k], -k))
        down_up = up[:]
        down_up[i] = math.floor(x[i])
        up_lo = lo[:]
        up_lo[i] = math.ceil(x[i])
        stack.append((lo, down_up))
        stack.append((up_lo, up))  # popped first: high-count branch
    return KnapsackResult("exact", _expand(n, items, inc), inc_val, inc_val, nodes)


def _expand(n: int, items: Sequence[int], local: Sequence[int]) -> tuple[int, ...]:
    counts = [0] * n
    for j, c in zip(items, local):
        counts[j] = c
    return tuple(counts)


def _undominated(inst: KnapsackInstance, items: list[int]) -> list[int]:
    """Drop items another item beats on value with no more weight in any dimension.

    With unbounded counts a dominated item can always be swapped for its
    dominator, so some optimum avoids it.  Among identical items the lowest
    index survives.
    """
    keep = []
    for j in items:
        vj, wj = inst.values[j], inst.weights[j]
        dominated = False
        for k in items:
            if k == j:
                continue
            vk, wk = inst.values[k], inst.weights[k]
            if vk >= vj and all(a <= b for a, b in zip(wk, wj)):
                if vk > vj or wk != wj or k < j:
                    dominated = True
                    break
        if not dominated:
            keep.append(j)
    return keep
