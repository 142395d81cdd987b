"""Centralized MaxWeight allocation (MWTA) and JLTT routing across pools.

Queues are integer arrays ``q[p, j, s]`` of unallocated (j, s)-tasks.  Plain
MWTA keeps one pool (p = 0) shared by every category; JLTT policies keep one
pool per category and route each arrival to a single pool.

Within a pool and job type, tasks of every skill are served oldest first, so
the jobs still waiting are exactly the newest ``max_s q[p, j, s]`` ones.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

import numpy as np

from .capacity import CategorySplit, cac_check
from .flow import transport
from .knapsack import KnapsackInstance, lp_relax_and_floor, multidim_knapsack_exact, unbounded_knapsack
from .lp import OPTIMAL, LinearProgram, solve_lp
from .model import PolicyConfig, Scenario, SystemClass


class PolicyError(ValueError):
    """Policy cannot run on this scenario (class, categories or options)."""


@dataclass
class QueueState:
    q: np.ndarray  # (P, N, S) int64

    @classmethod
    def zeros(cls, P: int, N: int, S: int) -> "QueueState":
        return cls(np.zeros((P, N, S), dtype=np.int64))

    @property
    def pools(self) -> int:
        return self.q.shape[0]

    def copy(self) -> "QueueState":
        return QueueState(self.q.copy())

    def total(self) -> int:
        return int(self.q.sum())

    def job_backlog(self, needs: np.ndarray) -> np.ndarray:
        """(P, N) unallocated jobs: a job waits while any of its tasks waits."""
        return np.where(needs[None], self.q, 0).max(axis=2)

    def nd_consistent(self, needs: np.ndarray) -> bool:
        """Equal backlog across the needed skills of every job type."""
        hi = np.where(needs[None], self.q, np.iinfo(np.int64).min).max(axis=2)
        lo = np.where(needs[None], self.q, np.iinfo(np.int64).max).min(axis=2)
        return bool((hi == lo).all())


# One row per piece of work: (category, agent type, agent instance, pool,
# job type, job position in the pool's waiting list at epoch start, skill, hours).
Assignment = tuple


@dataclass
class AllocationPlan:
    routed: np.ndarray  # (P, N) accepted arrivals per pool
    departures: np.ndarray  # (P, N, S) tasks completed this epoch
    split: CategorySplit  # realized category split of the departing tasks
    hours_used: np.ndarray  # (L, S) hours spent on departing tasks
    wasted: np.ndarray  # (L, S) hours spent on tasks that did not depart
    proposed: Optional[CategorySplit] = None  # MaxWeight split before truncation to real tasks
    assignments: Optional[list] = None
    info: dict = field(default_factory=dict)

    @property
    def task_departures(self) -> np.ndarray:
        return self.departures.sum(axis=0)


def weights_of(q: np.ndarray, needs: np.ndarray) -> np.ndarray:
    return np.where(needs, q, 0)


# single-category MaxWeight

def solve_single_category(Q: np.ndarray, R: np.ndarray, needs: np.ndarray, cap: np.ndarray,
                          decomposable: bool, cfg: PolicyConfig, stats: Optional[dict] = None) -> np.ndarray:
    """Task counts (N, S) maximizing sum Q_js * d_js within one category's hours ``cap``."""
    N, S = Q.shape
    out = np.zeros((N, S), dtype=np.int64)
    if decomposable:
        # Q is zero wherever r is, so every positive-value item has positive weight
        for s, (qcol, rcol, c) in enumerate(zip(Q.T.tolist(), R.T.tolist(), cap.tolist())):
            if c > 0:
                out[:, s] = unbounded_knapsack(qcol, rcol, c)[0]
        return out
    Rl = R.tolist()
    W = np.where(needs, Q, 0).sum(axis=1).tolist()
    items = [j for j in range(N) if W[j] > 0]
    if not items:
        return out
    inst = KnapsackInstance(tuple(W[j] for j in items), tuple(tuple(Rl[j]) for j in items),
                            tuple(int(c) for c in cap))
    counts = _exact_or_floor(inst, cfg, stats)
    for j, c in zip(items, counts):
        out[j] = c * needs[j]
    return out


def _exact_or_floor(inst: KnapsackInstance, cfg: PolicyConfig, stats: Optional[dict]) -> tuple:
    res = multidim_knapsack_exact(inst, node_budget=cfg.node_budget)
    if res.status == "exact":
        return res.counts
    floor_counts, floor_val = lp_relax_and_floor(inst)
    if stats is not None:
        stats["budget_exceeded"] = stats.get("budget_exceeded", 0) + 1
    return res.counts if res.objective >= floor_val else floor_counts


# multi-category MaxWeight (one shared pool)

def _solve_multi_fd(Q, R, cap, adj) -> np.ndarray:
    """Per skill each category serves its best value-per-hour neighbor; floor the totals."""
    L, S = cap.shape
    N = Q.shape[0]
    z = np.empty((L, N, S), dtype=object)
    z[...] = 0
    a = np.zeros((N, S), dtype=np.int64)
    for s in range(S):
        choice = {}
        for l in range(L):
            cand = [j for j in range(N) if adj[j, l] and Q[j, s] > 0 and R[j, s] > 0]
            if cand and cap[l, s] > 0:
                choice[l] = max(cand, key=lambda j: (Fraction(int(Q[j, s]), int(R[j, s])), -j))
        for j in set(choice.values()):
            ls = [l for l in sorted(choice) if choice[l] == j]
            r = int(R[j, s])
            a[j, s] = sum(int(cap[l, s]) for l in ls) // r
            need = a[j, s] * r
            for l in ls:
                x = min(int(cap[l, s]), need)
                need -= x
                z[l, j, s] = Fraction(x, r)
    return _normalize(z), a


def _solve_multi_fnd(Q, R, needs, cap, adj) -> tuple:
    """LP over job counts a_j and hours x^l_js, floor a, recover integral hours by max-flow."""
    L, S = cap.shape
    N = Q.shape[0]
    W = np.where(needs, Q, 0).sum(axis=1)
    jobs = [j for j in range(N) if W[j] > 0]
    a = np.zeros(N, dtype=np.int64)
    if jobs:
        hv = [(j, l, s) for j in jobs for l in range(L) if adj[j, l] for s in range(S) if needs[j, s]]
        nv = len(jobs) + len(hv)
        col = {j: k for k, j in enumerate(jobs)}
        rows = []
        for j in jobs:
            for s in range(S):
                if needs[j, s]:
                    row = [0.0] * nv
                    row[col[j]] = -float(R[j, s])
                    for k, (jj, l, ss) in enumerate(hv):
                        if jj == j and ss == s:
                            row[len(jobs) + k] = 1.0
                    rows.append((row, 0.0))
                    rows.append(([-x for x in row], 0.0))
        for l in range(L):
            for s in range(S):
                row = [0.0] * nv
                for k, (jj, ll, ss) in enumerate(hv):
                    if ll == l and ss == s:
                        row[len(jobs) + k] = 1.0
                rows.append((row, float(cap[l, s])))
        res = solve_lp(LinearProgram([float(W[j]) for j in jobs] + [0.0] * len(hv), rows))
        if res.status == OPTIMAL:
            for j in jobs:
                a[j] = max(0, math.floor(res.x[col[j]] + 1e-9))
    while True:
        z = _flow_split(a[:, None] * needs, R, cap, adj)
        if z is not None:
            return z, a[:, None] * needs
        j = int(np.argmax(a))  # float overshoot in the LP: shed one job and retry
        a[j] -= 1


def _flow_split(counts, R, cap, adj) -> Optional[np.ndarray]:
    """Category split with integral hours for fixed task counts, or None if none exists."""
    L, S = cap.shape
    N = counts.shape[0]
    z = np.empty((L, N, S), dtype=object)
    z[...] = 0
    edges = [(j, l) for j in range(N) for l in range(L) if adj[j, l]]
    for s in range(S):
        supply = [int(counts[j, s] * R[j, s]) for j in range(N)]
        if not any(supply):
            continue
        shipped, flows, _ = transport(supply, [int(c) for c in cap[:, s]], edges)
        if shipped < sum(supply):
            return None
        for (j, l), f in flows.items():
            if f:
                z[l, j, s] = Fraction(f, int(R[j, s]))
    return _normalize(z)


def _solve_multi_ind(Q, R, needs, cap, adj, cfg, stats) -> np.ndarray:
    """Whole jobs per (category, type): a knapsack over L*S hour dimensions."""
    L, S = cap.shape
    N = Q.shape[0]
    W = np.where(needs, Q, 0).sum(axis=1)
    items = [(l, j) for l in range(L) for j in range(N) if adj[j, l] and W[j] > 0]
    z = np.zeros((L, N, S), dtype=np.int64)
    if not items:
        return z
    weights = []
    for l, j in items:
        w = [0] * (L * S)
        w[l * S:(l + 1) * S] = [int(x) for x in R[j]]
        weights.append(tuple(w))
    inst = KnapsackInstance(tuple(int(W[j]) for _, j in items), tuple(weights),
                            tuple(int(c) for c in cap.reshape(-1)))
    if cfg.use_exact:
        counts = _exact_or_floor(inst, cfg, stats)
    else:
        counts, _ = lp_relax_and_floor(inst)
    for (l, j), c in zip(items, counts):
        z[l, j] = c * needs[j]
    return z


def _normalize(z: np.ndarray) -> np.ndarray:
    """Object array of Fractions -> int64 when every share is integral."""
    if all(Fraction(v).denominator == 1 for v in z.flat):
        return np.array([int(v) for v in z.flat], dtype=np.int64).reshape(z.shape)
    return z


def maxweight_solve(qs: QueueState, arrivals, u, s: Scenario, cfg: Optional[PolicyConfig] = None,
                    stats: Optional[dict] = None) -> CategorySplit:
    """MaxWeight split: maximize sum Q_js(t) * a_js subject to the allocation constraints.

    Weights are the backlogs carried into the epoch.  One category: exact
    knapsacks (per-skill DP when decomposable, branch and bound otherwise).
    Several categories: LP relaxation with floor rounding (exact branch and
    bound for IND when ``cfg.use_exact``).  ``arrivals`` does not enter the
    objective; it is accepted for interface symmetry with the other steps.
    """
    cfg = cfg or s.policy
    if qs.pools != 1:
        raise ValueError("maxweight_solve works on a single shared pool; use jltt_mwta_step for pools")
    Q = weights_of(qs.q[0], s.needs)
    R, needs = s.R, s.needs
    cap = s.capacities(u)
    cls = s.system_class
    if cls is SystemClass.ID:
        raise PolicyError("plain MWTA does not handle ID systems; use jltt-mwta")
    if s.L == 1:
        return CategorySplit.single(solve_single_category(Q, R, needs, cap[0], cls.decomposable, cfg, stats))
    adj = s.adjacency
    if cls is SystemClass.FD:
        z, a = _solve_multi_fd(Q, R, cap, adj)
        return CategorySplit(z, a)
    if cls is SystemClass.FND:
        z, a = _solve_multi_fnd(Q, R, needs, cap, adj)
        return CategorySplit(z, a)
    z = _solve_multi_ind(Q, R, needs, cap, adj, cfg, stats)
    return CategorySplit(z, z.sum(axis=0))


# Task Allocation

def task_allocation(split: CategorySplit, qs: QueueState, arrivals, u, s: Scenario,
                    check: bool = True, trace: bool = False) -> AllocationPlan:
    """Turn a category split into task-level work for one shared pool.

    For each (j, s), waiting tasks are ordered oldest first and category l
    takes the interval [sum_{k<l} z^k, sum_{k<=l} z^k] of that order, shared
    boundary tasks included.  Categories fill their agents in declaration
    order.  Only tasks that exist depart: D = min(a, Q + A).
    """
    if check:
        res = cac_check(split, u, s)
        if not res.ok:
            raise ValueError(f"split violates the allocation constraints: {res.message}")
    A = np.asarray(arrivals, dtype=np.int64)
    R, needs = s.R, s.needs
    avail = qs.q[0] + A[:, None] * needs
    D = np.minimum(split.task_counts, avail)
    L = s.L
    if L == 1:
        z_real = D[None].copy()
    else:
        z = split.z
        cum = np.zeros(D.shape, dtype=object)
        z_real = np.empty_like(z, dtype=object)
        for l in range(L):
            lo = np.minimum(cum, D)
            cum = cum + z[l]
            z_real[l] = np.minimum(cum, D) - lo
        z_real = _normalize(z_real)
    hours = (z_real * R[None]).sum(axis=1)
    hours = np.array([int(v) for v in hours.flat], dtype=np.int64).reshape(L, s.S) \
        if hours.dtype == object and all(Fraction(v).denominator == 1 for v in hours.flat) else hours
    plan = AllocationPlan(
        routed=A[None].copy(),
        departures=D[None].copy(),
        split=CategorySplit(z_real, D.copy()),
        hours_used=hours,
        wasted=np.zeros((L, s.S), dtype=np.int64),
        proposed=split,
    )
    if trace:
        jb = qs.job_backlog(needs)[0]
        plan.assignments = _trace_intervals(z_real, D, qs.q[0], jb, u, s, pool_of=lambda l: 0)
    return plan


def agent_slots(s: Scenario, u, l: int, sk: int) -> list[tuple[int, int, int]]:
    """(agent type, instance, hours) of category ``l`` in declaration order."""
    out = []
    for a, at in enumerate(s.agent_types):
        if at.category == l and at.availability[sk] > 0:
            out += [(a, i, at.availability[sk]) for i in range(int(u[a]))]
    return out


def fill_agents(pieces, slots, l: int, sk: int) -> list:
    """Walk the agents' hours in order, splitting pieces (pool, j, pos, hours) across agents."""
    out = []
    k, left = 0, (slots[0][2] if slots else 0)
    for pool, j, pos, need in pieces:
        while need > 0:
            if k >= len(slots):
                raise ValueError(f"category {l} skill {sk} ran out of agent hours")
            take = min(need, left)
            if take > 0:
                out.append((l, slots[k][0], slots[k][1], pool, j, pos, sk, take))
                need -= take
                left -= take
            if left == 0:
                k += 1
                left = slots[k][2] if k < len(slots) else 0
    return out


def _trace_intervals(z_real, D, q, jb, u, s: Scenario, pool_of) -> list:
    out = []
    R = s.R
    L = z_real.shape[0]
    for sk in range(s.S):
        start = [Fraction(0)] * s.N
        for l in range(L):
            pieces = []
            for j in range(s.N):
                zl = Fraction(z_real[l, j, sk])
                if zl == 0:
                    continue
                lo, hi = start[j], start[j] + zl
                start[j] = hi
                offset = int(jb[j] - q[j, sk])  # jobs ahead whose task is already done
                n = math.floor(lo)
                while n < hi:
                    part = min(hi, n + 1) - max(lo, n)
                    pieces.append((pool_of(l), j, n + offset, part * int(R[j, sk])))
                    n += 1
            out += fill_agents(pieces, agent_slots(s, u, l, sk), l, sk)
    return out


def mwta_step(qs: QueueState, arrivals, u, s: Scenario, cfg: Optional[PolicyConfig] = None,
              stats: Optional[dict] = None, trace: bool = False) -> AllocationPlan:
    split = maxweight_solve(qs, arrivals, u, s, cfg, stats)
    return task_allocation(split, qs, arrivals, u, s, check=False, trace=trace)


# JLTT

def jltt_route(arrivals, qs: QueueState, s: Scenario) -> np.ndarray:
    """(L, N) arrivals per pool: each type splits evenly over its least-loaded feasible pools.

    Load is the pool's unallocated task count for the type; remainders go to
    the lowest pool indices.
    """
    A = np.asarray(arrivals, dtype=np.int64)
    tot = qs.q.sum(axis=2)  # (L, N)
    out = np.zeros((qs.pools, s.N), dtype=np.int64)
    adj = s.adjacency
    for j in range(s.N):
        if A[j] == 0:
            continue
        feas = [l for l in range(s.L) if adj[j, l]]
        if not feas:
            raise ValueError(f"job type {j} has no feasible pool")
        m = min(tot[l, j] for l in feas)
        best = [l for l in feas if tot[l, j] == m]
        base, rem = divmod(int(A[j]), len(best))
        for k, l in enumerate(best):
            out[l, j] = base + (1 if k < rem else 0)
    return out


def pooled_plan(routed, per_pool_D, s: Scenario, wasted=None) -> AllocationPlan:
    """Disjoint union of single-category plans, pool l served by category l."""
    D = np.asarray(per_pool_D, dtype=np.int64)
    hours = (D * s.R[None]).sum(axis=1)
    return AllocationPlan(
        routed=routed,
        departures=D,
        split=CategorySplit(D.copy(), D.sum(axis=0)),
        hours_used=hours,
        wasted=np.zeros_like(hours) if wasted is None else wasted,
    )


def jltt_mwta_step(qs: QueueState, arrivals, u, s: Scenario, cfg: Optional[PolicyConfig] = None,
                   stats: Optional[dict] = None, trace: bool = False) -> AllocationPlan:
    """Route with JLTT, then run single-category MWTA independently in every pool."""
    cfg = cfg or s.policy
    routed = jltt_route(arrivals, qs, s)
    R, needs = s.R, s.needs
    cap = s.capacities(u)
    dec = s.system_class.decomposable
    D = np.zeros_like(qs.q)
    for l in range(s.L):
        delta = solve_single_category(weights_of(qs.q[l], needs), R, needs, cap[l], dec, cfg, stats)
        D[l] = np.minimum(delta, qs.q[l] + routed[l][:, None] * needs)
    plan = pooled_plan(routed, D, s)
    if trace:
        jb = qs.job_backlog(needs)
        out = []
        for l in range(s.L):
            z = np.zeros((s.L, s.N, s.S), dtype=np.int64)
            z[l] = D[l]
            out += [a for a in _trace_intervals(z, D[l], qs.q[l], jb[l], u, s, pool_of=lambda _l: l)]
        plan.assignments = out
    return plan


# Policies

class Policy:
    """Maps (queues, accepted arrivals, availability) to an allocation plan each epoch."""

    name = ""
    pooled = False

    def __init__(self, s: Scenario, cfg: Optional[PolicyConfig] = None):
        self.s = s
        self.cfg = cfg or s.policy
        self.stats: dict = {}
        self.check_compatible(s)

    def check_compatible(self, s: Scenario) -> None:
        pass

    def pools(self) -> int:
        return self.s.L if self.pooled else 1

    def step(self, qs: QueueState, arrivals, u, epoch: int, seed: int, trace: bool = False) -> AllocationPlan:
        raise NotImplementedError


class MWTAPolicy(Policy):
    name = "mwta"

    def check_compatible(self, s):
        if s.system_class is SystemClass.ID:
            raise PolicyError("mwta does not stabilize ID systems; use jltt-mwta")

    def step(self, qs, arrivals, u, epoch, seed, trace=False):
        return mwta_step(qs, arrivals, u, self.s, self.cfg, self.stats, trace)


class JLTTMWTAPolicy(Policy):
    name = "jltt-mwta"
    pooled = True

    def check_compatible(self, s):
        if s.system_class.flexible:
            raise PolicyError("jltt-mwta is for inflexible (ID, IND) systems")

    def step(self, qs, arrivals, u, epoch, seed, trace=False):
        return jltt_mwta_step(qs, arrivals, u, self.s, self.cfg, self.stats, trace)
