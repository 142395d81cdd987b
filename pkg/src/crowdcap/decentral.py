"""Decentralized allocation: agents or jobs contend in a random order.

GreedyAgent: available agents take turns.  On its turn an agent works each
skill separately: first it takes as many whole unallocated tasks as fit in
its hours, then it continues the skill's open partial task, then it opens a
partial task with whatever hours remain.  At most one partial task per skill
is open at a time; if it is still unfinished at epoch end its hours are lost
and the task stays in the queue.

GreedyJob: waiting jobs take turns and a job is allocated only if the
category's remaining hours cover every one of its tasks.
"""
from __future__ import annotations

import heapq
import math
from typing import Callable, Iterator, Optional

import numpy as np

from .capacity import CategorySplit
from .central import (AllocationPlan, Policy, PolicyError, QueueState, agent_slots, fill_agents,
                      pooled_plan)
from .model import Scenario, SystemClass
from .stochastic import STREAM_POLICY, epoch_rng

GREEDY_MODES = ("fifo", "random", "adversarial")


def agent_turns(u, s: Scenario, rng: np.random.Generator, category: int = 0) -> list[tuple[int, int]]:
    """Contention order over the available agent instances of one category."""
    inst = [(a, i) for a, at in enumerate(s.agent_types) if at.category == category for i in range(int(u[a]))]
    if not inst:
        return []
    return [inst[k] for k in rng.permutation(len(inst))]


def greedy_agent_step(qs: QueueState, arrivals, u, s: Scenario, rng: np.random.Generator,
                      mode: str = "fifo", trace: bool = False) -> AllocationPlan:
    """One GreedyAgent epoch in a single category.

    ``fifo`` scans waiting tasks by job type, oldest first within a type.
    ``random`` and ``adversarial`` change which job an agent picks and apply
    to non-decomposable jobs only: under ``random`` each agent works through
    its own uniformly random sequence of jobs; under ``adversarial`` an agent
    sticks to jobs only it has touched, then takes untouched jobs, and only
    then joins jobs other agents started, which keeps agents with
    complementary skills apart whenever there are enough jobs.
    """
    if mode not in GREEDY_MODES:
        raise ValueError(f"unknown greedy mode {mode!r}")
    if s.L != 1:
        raise PolicyError("greedy-agent runs on a single category")
    turns = agent_turns(u, s, rng)
    if s.system_class.decomposable:
        if mode != "fifo":
            raise PolicyError(f"greedy mode {mode!r} applies to non-decomposable jobs only")
        return _greedy_agent_fifo(qs, arrivals, u, s, turns, trace)
    return _greedy_agent_jobs(qs, arrivals, u, s, turns, rng, mode, trace)


def _greedy_agent_fifo(qs, arrivals, u, s: Scenario, turns, trace) -> AllocationPlan:
    N, S = s.N, s.S
    A = np.asarray(arrivals, dtype=np.int64)
    needs = s.needs
    R = s.R.tolist()
    H = s.H.tolist()
    pend = (qs.q[0] + A[:, None] * needs).tolist()
    offset = (qs.job_backlog(needs)[0][:, None] - qs.q[0]).tolist()  # jobs ahead with this task done
    D = np.zeros((N, S), dtype=np.int64)
    wasted = np.zeros((1, S), dtype=np.int64)
    out: Optional[list] = [] if trace else None
    for sk in range(S):
        avail = [pend[j][sk] if R[j][sk] > 0 else 0 for j in range(N)]
        nonempty = [j for j in range(N) if avail[j] > 0]
        taken = [0] * N  # tasks taken from the front of each type, whole or partial
        done = [0] * N
        open_j, open_left, open_pieces = -1, 0, []
        for a, inst in turns:
            h = H[a][sk]
            if h == 0:
                continue
            if not nonempty and open_j < 0:
                break
            # (i) whole tasks, first fit in scan order
            k = 0
            while k < len(nonempty) and h > 0:
                j = nonempty[k]
                r = R[j][sk]
                if r <= h:
                    t = min(avail[j], h // r)
                    if trace:
                        for n in range(taken[j], taken[j] + t):
                            out.append((0, a, inst, 0, j, n + offset[j][sk], sk, r))
                    avail[j] -= t
                    taken[j] += t
                    done[j] += t
                    h -= t * r
                    if avail[j] == 0:
                        nonempty.pop(k)
                        continue
                k += 1
            # (ii) continue the open partial task
            if open_j >= 0 and h > 0:
                g = min(h, open_left)
                h -= g
                open_left -= g
                if trace:
                    open_pieces.append((0, a, inst, 0, open_j, open_pos, sk, g))
                if open_left == 0:
                    done[open_j] += 1
                    if trace:
                        out += open_pieces
                    open_j, open_pieces = -1, []
            # (iii) open a new partial task
            if h > 0 and nonempty:
                j = nonempty[0]
                avail[j] -= 1
                open_pos = taken[j] + offset[j][sk]
                taken[j] += 1
                if avail[j] == 0:
                    nonempty.pop(0)
                open_j, open_left = j, R[j][sk] - h
                open_pieces = [(0, a, inst, 0, j, open_pos, sk, h)] if trace else []
        if open_j >= 0:
            wasted[0, sk] = R[open_j][sk] - open_left
            if trace:
                out += open_pieces
        D[:, sk] = done
    hours = (D * s.R).sum(axis=0)[None]
    return AllocationPlan(
        routed=A[None].copy(),
        departures=D[None].copy(),
        split=CategorySplit.single(D),
        hours_used=hours,
        wasted=wasted,
        assignments=out,
    )


class _JobPicker:
    """Job preference sequences over the epoch's waiting jobs 0..K-1 (type-major, oldest first)."""

    def __init__(self, K: int, mode: str, rng: np.random.Generator):
        self.K, self.mode, self.rng = K, mode, rng
        self.touched: dict[int, set] = {}
        self.cursor = 0  # no job below this index is untouched
        self.perm: dict[int, list] = {}
        self.seen: dict[int, set] = {}
        self._buf: list = []

    def touch(self, k: int, agent: int) -> None:
        self.touched.setdefault(k, set()).add(agent)

    def _rand(self) -> int:
        if not self._buf:
            self._buf = self.rng.integers(0, self.K, size=64).tolist()
        return self._buf.pop()

    def order(self, agent: int) -> Iterator[int]:
        if self.mode == "fifo":
            yield from range(self.K)
        elif self.mode == "random":
            perm = self.perm.setdefault(agent, [])
            seen = self.seen.setdefault(agent, set())
            yield from list(perm)
            while len(seen) < self.K:
                k = self._rand()
                if k in seen:
                    continue
                seen.add(k)
                perm.append(k)
                yield k
        else:
            own = [k for k in sorted(self.touched) if self.touched[k] == {agent}]
            yield from own
            k = self.cursor
            while k < self.K:
                if k not in self.touched:
                    yield k
                elif k == self.cursor:
                    self.cursor += 1
                k += 1
            yield from [k for k in sorted(self.touched) if self.touched[k] != {agent}]


def _greedy_agent_jobs(qs, arrivals, u, s: Scenario, turns, rng, mode, trace) -> AllocationPlan:
    """Instance-level GreedyAgent for non-decomposable jobs: a job departs only if all its tasks fill."""
    N, S = s.N, s.S
    A = np.asarray(arrivals, dtype=np.int64)
    needs = s.needs
    R = s.R.tolist()
    H = s.H.tolist()
    n_jobs = (qs.job_backlog(needs)[0] + A).tolist()
    starts = [0] * (N + 1)
    for j in range(N):
        starts[j + 1] = starts[j] + n_jobs[j]
    K = starts[N]
    type_of = lambda k: int(np.searchsorted(starts, k, side="right") - 1)
    picker = _JobPicker(K, mode, rng)
    alloc: dict[int, list] = {}
    pieces: dict[int, list] = {}
    free = [[n_jobs[j] if R[j][sk] > 0 else 0 for sk in range(S)] for j in range(N)]
    open_task: list = [None] * S  # (job, hours still missing)
    for g, (a, inst) in enumerate(turns):
        h = list(H[a])
        if not any(h):
            continue
        for sk in range(S):
            if h[sk] == 0:
                continue
            fitting = [R[j][sk] for j in range(N) if free[j][sk] > 0]
            # (i) whole tasks in this agent's job order
            if fitting and h[sk] >= min(fitting):
                for k in picker.order(g):
                    j = type_of(k)
                    r = R[j][sk]
                    if r == 0 or alloc.get(k, (0,) * S)[sk] > 0 or r > h[sk]:
                        continue
                    alloc.setdefault(k, [0] * S)[sk] = r
                    pieces.setdefault(k, []).append((0, a, inst, 0, j, k - starts[j], sk, r))
                    picker.touch(k, g)
                    free[j][sk] -= 1
                    h[sk] -= r
                    rest = [R[jj][sk] for jj in range(N) if free[jj][sk] > 0]
                    if not rest or h[sk] < min(rest):
                        break
            # (ii) continue the open partial task
            if open_task[sk] is not None and h[sk] > 0:
                k, missing = open_task[sk]
                g_h = min(h[sk], missing)
                alloc[k][sk] += g_h
                pieces[k].append((0, a, inst, 0, type_of(k), k - starts[type_of(k)], sk, g_h))
                picker.touch(k, g)
                h[sk] -= g_h
                open_task[sk] = (k, missing - g_h) if missing > g_h else None
            # (iii) open a new partial task
            if h[sk] > 0 and any(free[j][sk] > 0 for j in range(N)):
                for k in picker.order(g):
                    j = type_of(k)
                    if R[j][sk] == 0 or alloc.get(k, (0,) * S)[sk] > 0:
                        continue
                    alloc.setdefault(k, [0] * S)[sk] = h[sk]
                    pieces.setdefault(k, []).append((0, a, inst, 0, j, k - starts[j], sk, h[sk]))
                    picker.touch(k, g)
                    free[j][sk] -= 1
                    open_task[sk] = (k, R[j][sk] - h[sk])
                    h[sk] = 0
                    break
    done = [0] * N
    used = [0] * S
    wasted = [0] * S
    out: Optional[list] = [] if trace else None
    for k, hv in alloc.items():
        j = type_of(k)
        complete = all(hv[sk] == R[j][sk] for sk in range(S))
        if complete:
            done[j] += 1
        for sk in range(S):
            if complete:
                used[sk] += hv[sk]
            else:
                wasted[sk] += hv[sk]
        if trace:
            out += pieces[k]
    D = np.array(done, dtype=np.int64)[:, None] * needs
    return AllocationPlan(
        routed=A[None].copy(),
        departures=D[None].copy(),
        split=CategorySplit.single(D),
        hours_used=np.array([used], dtype=np.int64),
        wasted=np.array([wasted], dtype=np.int64),
        assignments=out,
    )


def contend_jobs(n_jobs, cap, R, needs, rng: np.random.Generator) -> tuple[list[int], list[int]]:
    """GreedyJob contention in one category; returns (jobs allocated per type, allocation order).

    Jobs are drawn one at a time uniformly from those still contending, which
    is a uniformly random permutation of the job instances.  A job that does
    not fit leaves contention; since hours only shrink, every later job of
    its type would fail too, so the whole type leaves.
    """
    N, S = len(n_jobs), len(cap)
    Rl = [[int(x) for x in row] for row in R]
    rem = [int(c) for c in cap]
    left = [int(x) for x in n_jobs]
    alloc = [0] * N
    order: list[int] = []
    need_all = [sum(left[j] * Rl[j][sk] for j in range(N)) for sk in range(S)]
    if all(need_all[sk] <= rem[sk] for sk in range(S)):
        # everything fits: the outcome does not depend on the order
        for j in range(N):
            order += [j] * left[j]
        return left, order
    active = [j for j in range(N) if left[j] > 0]
    buf: list = []
    while active:
        total = sum(left[j] for j in active)
        if not buf:
            buf = rng.random(64).tolist()
        x = buf.pop() * total
        pick = active[-1]
        for j in active:
            if x < left[j]:
                pick = j
                break
            x -= left[j]
        row = Rl[pick]
        if all(rem[sk] >= row[sk] for sk in range(S)):
            for sk in range(S):
                rem[sk] -= row[sk]
            left[pick] -= 1
            alloc[pick] += 1
            order.append(pick)
            if left[pick] == 0:
                active.remove(pick)
        else:
            active.remove(pick)
    return alloc, order


def _greedy_job_pool(q_pool, routed_pool, cap, u, s: Scenario, rng, pool: int, category: int, trace):
    needs = s.needs
    jb = np.where(needs, q_pool, 0).max(axis=1)
    n_jobs = (jb + routed_pool).tolist()
    alloc, order = contend_jobs(n_jobs, cap, s.R, needs, rng)
    D = np.array(alloc, dtype=np.int64)[:, None] * needs
    out = None
    if trace:
        out = []
        pos = [0] * s.N
        per_job = []
        for j in order:
            per_job.append((j, pos[j]))
            pos[j] += 1
        for sk in range(s.S):
            pieces = [(pool, j, p, int(s.R[j, sk])) for j, p in per_job if s.R[j, sk] > 0]
            out += fill_agents(pieces, agent_slots(s, u, category, sk), category, sk)
    return D, out


def greedy_job_step(qs: QueueState, arrivals, u, s: Scenario, rng: np.random.Generator,
                    trace: bool = False) -> AllocationPlan:
    """One GreedyJob epoch in a single category."""
    if s.L != 1:
        raise PolicyError("greedy-job runs on a single category; use ijltt-greedyjob for pools")
    A = np.asarray(arrivals, dtype=np.int64)
    cap = s.capacities(u)[0]
    D, out = _greedy_job_pool(qs.q[0], A, cap, u, s, rng, 0, 0, trace)
    plan = pooled_plan(A[None].copy(), D[None], s)
    plan.assignments = out
    return plan


def improvised_jltt_route(arrivals, qs: QueueState, s: Scenario) -> np.ndarray:
    """(L, N) arrivals per pool, dispatching one job at a time.

    Counters start at each pool's unallocated job count for the type; every
    job goes to the feasible pool with the smallest counter (lowest index on
    ties) and increments it.
    """
    A = np.asarray(arrivals, dtype=np.int64)
    jb = qs.job_backlog(s.needs)  # (L, N)
    out = np.zeros((qs.pools, s.N), dtype=np.int64)
    adj = s.adjacency
    for j in range(s.N):
        if A[j] == 0:
            continue
        heap = [(int(jb[l, j]), l) for l in range(s.L) if adj[j, l]]
        if not heap:
            raise ValueError(f"job type {j} has no feasible pool")
        heapq.heapify(heap)
        for _ in range(int(A[j])):
            c, l = heapq.heappop(heap)
            out[l, j] += 1
            heapq.heappush(heap, (c + 1, l))
    return out


def improvised_jltt_greedyjob_step(qs: QueueState, arrivals, u, s: Scenario,
                                   rng_for: Callable[[int], np.random.Generator],
                                   trace: bool = False) -> AllocationPlan:
    """Improvised JLTT routing, then GreedyJob independently in every pool (pool l = category l)."""
    routed = improvised_jltt_route(arrivals, qs, s)
    cap = s.capacities(u)
    D = np.zeros_like(qs.q)
    out = [] if trace else None
    for l in range(s.L):
        D[l], pieces = _greedy_job_pool(qs.q[l], routed[l], cap[l], u, s, rng_for(l), l, l, trace)
        if trace:
            out += pieces
    plan = pooled_plan(routed, D, s)
    plan.assignments = out
    return plan


class GreedyAgentPolicy(Policy):
    name = "greedy-agent"

    def check_compatible(self, s):
        if s.L != 1:
            raise PolicyError("greedy-agent needs a single-category scenario")
        if s.system_class is not SystemClass.FD:
            if self.cfg.greedy_mode == "fifo" or s.system_class is not SystemClass.FND:
                raise PolicyError(
                    "greedy-agent is for FD systems; FND runs only in the 'random' or "
                    "'adversarial' demonstration modes"
                )
        elif self.cfg.greedy_mode != "fifo":
            raise PolicyError("greedy modes other than 'fifo' apply to non-decomposable jobs only")

    def step(self, qs, arrivals, u, epoch, seed, trace=False):
        rng = epoch_rng(seed, epoch, STREAM_POLICY, 0)
        return greedy_agent_step(qs, arrivals, u, self.s, rng, self.cfg.greedy_mode, trace)


class GreedyJobPolicy(Policy):
    name = "greedy-job"

    def check_compatible(self, s):
        if s.L != 1:
            raise PolicyError("greedy-job needs a single-category scenario; use ijltt-greedyjob")
        if not s.system_class.flexible:
            raise PolicyError("greedy-job is for FD or FND systems")

    def step(self, qs, arrivals, u, epoch, seed, trace=False):
        rng = epoch_rng(seed, epoch, STREAM_POLICY, 0)
        return greedy_job_step(qs, arrivals, u, self.s, rng, trace)


class IJLTTGreedyJobPolicy(Policy):
    name = "ijltt-greedyjob"
    pooled = True

    def check_compatible(self, s):
        if s.system_class.flexible:
            raise PolicyError("ijltt-greedyjob is for inflexible (ID, IND) systems")

    def step(self, qs, arrivals, u, epoch, seed, trace=False):
        return improvised_jltt_greedyjob_step(
            qs, arrivals, u, self.s, lambda l: epoch_rng(seed, epoch, STREAM_POLICY, l), trace
        )
