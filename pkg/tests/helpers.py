"""Small scenario builders and brute-force oracles shared by the tests."""
from __future__ import annotations

import itertools
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

from crowdcap.model import (AgentTypeSpec, AvailabilityBlock, FeasibilityGraph, JobTypeSpec, PolicyConfig, Scenario,
                            SystemClass)
from crowdcap.stochastic import DistributionSpec


def _dist(x) -> DistributionSpec:
    return x if isinstance(x, DistributionSpec) else DistributionSpec.constant(int(x))


def scenario(R: Sequence[Sequence[int]], agents: Sequence[tuple[int, Sequence[int]]], cls: str = "FD",
             arrivals: Optional[Sequence] = None, avail: Optional[Sequence] = None, edges=None,
             horizon: int = 100, seed: int = 0, policy: str = "mwta", **policy_opts) -> Scenario:
    """Scenario from requirement rows and (category, hours) agent types.

    ``arrivals`` and ``avail`` take DistributionSpecs or ints (constants);
    defaults are no arrivals and one agent of every type.
    """
    N, S = len(R), len(R[0])
    L = max(c for c, _ in agents) + 1
    M = [0] * L
    ats = []
    for c, h in agents:
        ats.append(AgentTypeSpec(c, M[c], tuple(int(x) for x in h)))
        M[c] += 1
    arrivals = [0] * N if arrivals is None else arrivals
    avail = [1] * len(agents) if avail is None else avail
    graph = FeasibilityGraph.complete(N, L) if edges is None else FeasibilityGraph(frozenset(edges))
    return Scenario(
        N=N, L=L, S=S, M=tuple(M),
        job_types=tuple(JobTypeSpec(tuple(int(x) for x in r)) for r in R),
        agent_types=tuple(ats),
        graph=graph,
        system_class=SystemClass(cls),
        arrival_dists=tuple(_dist(a) for a in arrivals),
        availability_dists=tuple(AvailabilityBlock((k,), _dist(a)) for k, a in enumerate(avail)),
        horizon=horizon, seed=seed,
        policy=PolicyConfig(name=policy, **policy_opts),
        name="test",
    )


def enumerate_knapsack(values, weights, capacities):
    """Best objective over every count vector within capacities (multi-dimensional)."""
    D = len(capacities)
    bounds = []
    for w in weights:
        pos = [capacities[d] // w[d] for d in range(D) if w[d] > 0]
        bounds.append(min(pos) if pos else 0)
    best = 0
    for counts in itertools.product(*[range(b + 1) for b in bounds]):
        if all(sum(c * w[d] for c, w in zip(counts, weights)) <= capacities[d] for d in range(D)):
            best = max(best, sum(c * v for c, v in zip(counts, values)))
    return best


def subset_outer_check(rates, s: Scenario) -> bool:
    """All-subsets form of the outer region: every J and skill fits the hours of N(J)."""
    mu = s.mean_capacities()
    for k in range(1, s.N + 1):
        for J in itertools.combinations(range(s.N), k):
            nb = s.graph.neighbors(J)
            for sk in range(s.S):
                load = sum(Fraction(rates[j]) * s.job_types[j].requirement[sk] for j in J)
                if load > sum(mu[l][sk] for l in nb):
                    return False
    return True


def naive_greedy_agent_fd(q: np.ndarray, A: np.ndarray, s: Scenario, turns) -> tuple[np.ndarray, np.ndarray]:
    """Task-by-task GreedyAgent for FD jobs in one category; returns (departures (N,S), wasted (S,)).

    Tasks are listed type-major, oldest first.  Each agent, per skill: takes
    every whole task that still fits in scan order, continues the open
    partial task, then opens a partial on the first unallocated task.
    """
    R = s.R
    N, S = R.shape
    D = np.zeros((N, S), dtype=np.int64)
    wasted = np.zeros(S, dtype=np.int64)
    for sk in range(S):
        tasks = [j for j in range(N) if R[j, sk] > 0 for _ in range(int(q[j, sk] + A[j]))]
        state = ["free"] * len(tasks)
        open_k, open_left = None, 0
        for a, _ in turns:
            h = int(s.agent_types[a].availability[sk])
            for k, j in enumerate(tasks):
                if state[k] == "free" and R[j, sk] <= h:
                    state[k] = "done"
                    h -= int(R[j, sk])
            if open_k is not None and h > 0:
                g = min(h, open_left)
                h -= g
                open_left -= g
                if open_left == 0:
                    state[open_k] = "done"
                    open_k = None
            if h > 0:
                for k, j in enumerate(tasks):
                    if state[k] == "free":
                        state[k] = "open"
                        open_k, open_left = k, int(R[j, sk]) - h
                        h = 0
                        break
        for k, j in enumerate(tasks):
            if state[k] == "done":
                D[j, sk] += 1
        if open_k is not None:
            wasted[sk] = int(R[tasks[open_k], sk]) - open_left
    return D, wasted
