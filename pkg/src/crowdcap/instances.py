"""Named scenario generators."""
from __future__ import annotations

import math
from fractions import Fraction
from typing import Callable

import numpy as np

from .model import (AgentTypeSpec, AvailabilityBlock, FeasibilityGraph, JobTypeSpec, PolicyConfig, Scenario,
                    SystemClass, validate_scenario)
from .stochastic import DistributionSpec, to_fraction


def counterexample_3a(lam: int = 4, arrivals: str = "constant", horizon: int = 5000, seed: int = 0) -> Scenario:
    """One job type needing 1 hour of each of two skills; each agent type has 1 hour of one skill.

    Either ten agents of the first type or ten of the second show up, never
    both, so no job can ever be allocated although mean hours cover the load.
    """
    if arrivals == "constant":
        arr = DistributionSpec.constant(lam)
    elif arrivals == "poisson":
        arr = DistributionSpec.poisson(lam)
    else:
        raise ValueError("arrivals must be 'constant' or 'poisson'")
    return Scenario(
        N=1, L=1, S=2, M=(2,),
        job_types=(JobTypeSpec((1, 1)),),
        agent_types=(AgentTypeSpec(0, 0, (1, 0)), AgentTypeSpec(0, 1, (0, 1))),
        graph=FeasibilityGraph.complete(1, 1),
        system_class=SystemClass.FND,
        arrival_dists=(arr,),
        availability_dists=(AvailabilityBlock((0, 1), DistributionSpec.categorical(
            [(0, 10), (10, 0)], [Fraction(1, 2), Fraction(1, 2)])),),
        horizon=horizon, seed=seed,
        policy=PolicyConfig(name="mwta"),
        name="counterexample_3a",
    )


def prop5_nd(S: int = 4, lam: int = 20, alpha=Fraction(1, 5), horizon: int = 10000, seed: int = 0,
             greedy_mode: str = "random") -> Scenario:
    """Non-decomposable jobs needing 1 hour of every skill; two agent types split the skills in halves.

    ``lam`` agents of each type are always present.  Arrivals are a two-point
    law: a low value w.p. 1 - eps and 2*lam w.p. eps = 1/(2 lam), the low value
    (1 - alpha - delta) lam rounded down to an integer, with delta chosen so
    the mean is (1 - alpha) lam before rounding.
    """
    if S < 2 or S % 2:
        raise ValueError(f"S must be even and >= 2, got {S}")
    if lam < 1:
        raise ValueError("lam must be >= 1")
    a = to_fraction(alpha)
    eps = Fraction(1, 2 * lam)
    delta = (1 + a) * eps / (1 - eps)
    low = math.floor((1 - a - delta) * lam)
    if low < 0:
        raise ValueError("alpha too large for this lam")
    half = S // 2
    return Scenario(
        N=1, L=1, S=S, M=(2,),
        job_types=(JobTypeSpec((1,) * S),),
        agent_types=(AgentTypeSpec(0, 0, (1,) * half + (0,) * half),
                     AgentTypeSpec(0, 1, (0,) * half + (1,) * half)),
        graph=FeasibilityGraph.complete(1, 1),
        system_class=SystemClass.FND,
        arrival_dists=(DistributionSpec.categorical([low, 2 * lam], [1 - eps, eps]),),
        availability_dists=(AvailabilityBlock((0,), DistributionSpec.constant(lam)),
                            AvailabilityBlock((1,), DistributionSpec.constant(lam))),
        horizon=horizon, seed=seed,
        policy=PolicyConfig(name="greedy-agent", greedy_mode=greedy_mode),
        name=f"prop5_nd_S{S}_lam{lam}",
    )


def intro_two_category(lam1=6, lam2=6, mu1: int = 8, mu2: int = 8, cls: str = "ID",
                       horizon: int = 2000, seed: int = 0) -> Scenario:
    """Two single-task job types, two categories; type 0 fits both, type 1 only category 1."""
    return Scenario(
        N=2, L=2, S=1, M=(1, 1),
        job_types=(JobTypeSpec((1,)), JobTypeSpec((1,))),
        agent_types=(AgentTypeSpec(0, 0, (1,)), AgentTypeSpec(1, 0, (1,))),
        graph=FeasibilityGraph(frozenset({(0, 0), (0, 1), (1, 1)})),
        system_class=SystemClass(cls),
        arrival_dists=(DistributionSpec.poisson(lam1), DistributionSpec.poisson(lam2)),
        availability_dists=(AvailabilityBlock((0,), DistributionSpec.constant(mu1)),
                            AvailabilityBlock((1,), DistributionSpec.constant(mu2))),
        horizon=horizon, seed=seed,
        policy=PolicyConfig(name="jltt-mwta" if cls in ("ID", "IND") else "mwta"),
        name="intro_two_category",
    )


def symmetric_pools(L: int = 1, N: int = 10, S: int = 3, cls: str = "FD", load=Fraction(4, 5),
                    rmax: int = 5, hours: int = 10, p=Fraction(1, 2), lam_target=10,
                    gen_seed: int = 0, horizon: int = 2000, seed: int = 0, policy: str | None = None) -> Scenario:
    """L identical categories of skill specialists, complete graph, Poisson arrivals.

    Requirements are drawn once from ``gen_seed`` uniformly in 1..rmax.
    Each category has one specialist type per skill with ``hours`` hours of
    that skill, available as Binomial(n_s, p) with n_s sized so every skill
    can carry ``lam_target`` jobs of each type per pool.  Every type then
    arrives at ``load`` times the boundary of the class's outer region,
    computed exactly.
    """
    if min(L, N, S, rmax, hours) < 1:
        raise ValueError("L, N, S, rmax and hours must be positive")
    load, p, lam_target = to_fraction(load), to_fraction(p), to_fraction(lam_target)
    if not 0 < p <= 1:
        raise ValueError("p must lie in (0, 1]")
    R = np.random.default_rng(gen_seed).integers(1, rmax + 1, size=(N, S))
    need = [lam_target * int(R[:, s].sum()) for s in range(S)]
    n = [max(1, math.ceil(need[s] / (hours * p))) for s in range(S)]
    boundary = min(n[s] * hours * p / int(R[:, s].sum()) for s in range(S))  # per type, one pool
    lam = load * boundary * L
    agents, blocks = [], []
    for l in range(L):
        for s in range(S):
            h = [0] * S
            h[s] = hours
            blocks.append(AvailabilityBlock((len(agents),), DistributionSpec.binomial(n[s], p)))
            agents.append(AgentTypeSpec(l, s, tuple(h)))
    sc = SystemClass(cls)
    if policy is None:
        policy = "mwta" if sc.flexible else "jltt-mwta"
    return Scenario(
        N=N, L=L, S=S, M=(S,) * L,
        job_types=tuple(JobTypeSpec(tuple(int(x) for x in row)) for row in R),
        agent_types=tuple(agents),
        graph=FeasibilityGraph.complete(N, L),
        system_class=sc,
        arrival_dists=tuple(DistributionSpec.poisson(lam) for _ in range(N)),
        availability_dists=tuple(blocks),
        horizon=horizon, seed=seed,
        policy=PolicyConfig(name=policy),
        name=f"symmetric_pools_L{L}_N{N}_S{S}_{cls}",
    )


INSTANCES: dict[str, Callable[..., Scenario]] = {
    "counterexample_3a": counterexample_3a,
    "prop5_nd": prop5_nd,
    "intro_two_category": intro_two_category,
    "symmetric_pools": symmetric_pools,
}


def generate(name: str, **params) -> Scenario:
    if name not in INSTANCES:
        raise ValueError(f"unknown instance {name!r}; choose from {sorted(INSTANCES)}")
    s = INSTANCES[name](**params)
    bad = validate_scenario(s)
    if bad:
        raise ValueError(f"generated scenario is invalid: {bad}")
    return s
