"""Static description of a crowd system: job types, agent types, graph, class."""
from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from enum import Enum
from fractions import Fraction
from functools import cached_property
from pathlib import Path
from typing import Iterable, Optional

import numpy as np

from .stochastic import DistributionSpec, _num_out, mean_of, scale_distribution, to_fraction


class ScenarioError(ValueError):
    """Malformed scenario document (missing keys, wrong types)."""


class SystemClass(str, Enum):
    FD = "FD"
    FND = "FND"
    ID = "ID"
    IND = "IND"

    @property
    def decomposable(self) -> bool:
        return self in (SystemClass.FD, SystemClass.ID)

    @property
    def flexible(self) -> bool:
        return self in (SystemClass.FD, SystemClass.FND)


@dataclass(frozen=True)
class JobTypeSpec:
    requirement: tuple[int, ...]  # r_{j,s} hours per skill


@dataclass(frozen=True)
class AgentTypeSpec:
    category: int
    type_in_category: int
    availability: tuple[int, ...]  # h^l_{i,s} hours per skill


@dataclass(frozen=True)
class AvailabilityBlock:
    """Law of the number of available agents for a group of agent types.

    Scalar laws are drawn independently for every listed agent type; a vector
    categorical law is drawn once and spread over the listed types in order,
    which is how correlated availability such as "either all of type 1 or all
    of type 2" is expressed.
    """

    agents: tuple[int, ...]
    dist: DistributionSpec


@dataclass(frozen=True)
class FeasibilityGraph:
    edges: frozenset  # of (job type, category) pairs

    @classmethod
    def complete(cls, N: int, L: int) -> "FeasibilityGraph":
        return cls(frozenset((j, l) for j in range(N) for l in range(L)))

    def neighbors(self, J: Iterable[int]) -> set[int]:
        return neighbors(self, J)


def neighbors(g: FeasibilityGraph, J: Iterable[int]) -> set[int]:
    """Categories adjacent to at least one job type in ``J``."""
    J = set(J)
    return {l for (j, l) in g.edges if j in J}


@dataclass(frozen=True)
class PolicyConfig:
    name: Optional[str] = None
    node_budget: int = 20_000
    use_exact: bool = False
    greedy_mode: str = "fifo"

    def to_dict(self) -> dict:
        return {"name": self.name, "node_budget": self.node_budget,
                "use_exact": self.use_exact, "greedy_mode": self.greedy_mode}


@dataclass(frozen=True)
class Scenario:
    N: int
    L: int
    S: int
    M: tuple[int, ...]
    job_types: tuple[JobTypeSpec, ...]
    agent_types: tuple[AgentTypeSpec, ...]
    graph: FeasibilityGraph
    system_class: SystemClass
    arrival_dists: tuple[DistributionSpec, ...]
    availability_dists: tuple[AvailabilityBlock, ...]
    horizon: int = 1000
    seed: int = 0
    admission_nu: Optional[Fraction] = None
    policy: PolicyConfig = field(default_factory=PolicyConfig)
    name: str = ""

    # Derived arrays. Only meaningful for scenarios that validate.

    @cached_property
    def R(self) -> np.ndarray:
        """(N, S) requirement matrix."""
        return np.array([jt.requirement for jt in self.job_types], dtype=np.int64).reshape(self.N, self.S)

    @cached_property
    def needs(self) -> np.ndarray:
        """(N, S) mask of (j, s)-tasks."""
        return self.R > 0

    @cached_property
    def H(self) -> np.ndarray:
        """(number of agent types, S) skill-hours per agent."""
        return np.array([a.availability for a in self.agent_types], dtype=np.int64).reshape(-1, self.S)

    @cached_property
    def agent_category(self) -> np.ndarray:
        return np.array([a.category for a in self.agent_types], dtype=np.int64)

    @cached_property
    def adjacency(self) -> np.ndarray:
        """(N, L) boolean mask of the feasibility graph."""
        adj = np.zeros((self.N, self.L), dtype=bool)
        for j, l in self.graph.edges:
            adj[j, l] = True
        return adj

    def capacities(self, u: np.ndarray) -> np.ndarray:
        """(L, S) available skill-hours per category for availability ``u``."""
        return (self._category_onehot * np.asarray(u, dtype=np.int64)) @ self.H

    @cached_property
    def _category_onehot(self) -> np.ndarray:
        return (self.agent_category[None, :] == np.arange(self.L)[:, None]).astype(np.int64)

    def arrival_means(self) -> tuple[Fraction, ...]:
        return tuple(mean_of(d) for d in self.arrival_dists)

    def availability_means(self) -> tuple[Fraction, ...]:
        mu = [Fraction(0)] * len(self.agent_types)
        for block in self.availability_dists:
            m = mean_of(block.dist)
            for k, a in enumerate(block.agents):
                mu[a] = m[k] if isinstance(m, tuple) else m
        return tuple(mu)

    def mean_capacities(self) -> list[list[Fraction]]:
        """(L, S) mean skill-hours per category, as exact rationals."""
        mu = self.availability_means()
        cap = [[Fraction(0)] * self.S for _ in range(self.L)]
        for a, at in enumerate(self.agent_types):
            for s in range(self.S):
                cap[at.category][s] += mu[a] * at.availability[s]
        return cap

    def scaled(self, factor) -> "Scenario":
        """Same scenario with every arrival mean multiplied by ``factor``."""
        return replace(self, arrival_dists=tuple(scale_distribution(d, factor) for d in self.arrival_dists))

    def with_(self, **changes) -> "Scenario":
        return replace(self, **changes)

    # JSON

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "N": self.N,
            "L": self.L,
            "S": self.S,
            "M": list(self.M),
            "system_class": self.system_class.value,
            "job_types": [{"requirement": list(jt.requirement)} for jt in self.job_types],
            "agent_types": [
                {"category": a.category, "type_in_category": a.type_in_category, "availability": list(a.availability)}
                for a in self.agent_types
            ],
            "edges": sorted([j, l] for j, l in self.graph.edges),
            "arrival_dists": [d.to_dict() for d in self.arrival_dists],
            "availability_dists": [{"agents": list(b.agents), "dist": b.dist.to_dict()} for b in self.availability_dists],
            "horizon": self.horizon,
            "seed": self.seed,
            "admission_nu": None if self.admission_nu is None else _num_out(self.admission_nu),
            "policy": self.policy.to_dict(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Scenario":
        try:
            N, L, S = int(d["N"]), int(d["L"]), int(d["S"])
            edges = d.get("edges", "complete")
            if edges == "complete":
                graph = FeasibilityGraph.complete(N, L)
            else:
                graph = FeasibilityGraph(frozenset((int(j), int(l)) for j, l in edges))
            nu = d.get("admission_nu")
            pol = d.get("policy") or {}
            return cls(
                N=N, L=L, S=S,
                M=tuple(int(m) for m in d["M"]),
                job_types=tuple(JobTypeSpec(tuple(int(x) for x in jt["requirement"])) for jt in d["job_types"]),
                agent_types=tuple(
                    AgentTypeSpec(int(a["category"]), int(a["type_in_category"]),
                                  tuple(int(x) for x in a["availability"]))
                    for a in d["agent_types"]
                ),
                graph=graph,
                system_class=SystemClass(d["system_class"]),
                arrival_dists=tuple(DistributionSpec.from_dict(x) for x in d["arrival_dists"]),
                availability_dists=tuple(_block_from(x, k) for k, x in enumerate(d["availability_dists"])),
                horizon=int(d.get("horizon", 1000)),
                seed=int(d.get("seed", 0)),
                admission_nu=None if nu is None else to_fraction(nu),
                policy=PolicyConfig(
                    name=pol.get("name"),
                    node_budget=int(pol.get("node_budget", PolicyConfig.node_budget)),
                    use_exact=bool(pol.get("use_exact", False)),
                    greedy_mode=str(pol.get("greedy_mode", "fifo")),
                ),
                name=str(d.get("name", "")),
            )
        except ScenarioError:
            raise
        except (KeyError, TypeError, ValueError) as exc:
            raise ScenarioError(f"malformed scenario document: {exc!r}") from exc


def _block_from(x: dict, k: int) -> AvailabilityBlock:
    if "kind" in x:  # shorthand: one scalar law for agent type k
        return AvailabilityBlock((k,), DistributionSpec.from_dict(x))
    return AvailabilityBlock(tuple(int(a) for a in x["agents"]), DistributionSpec.from_dict(x["dist"]))


def load_scenario(path) -> Scenario:
    p = Path(path)
    try:
        doc = json.loads(p.read_text())
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"{p}: not valid JSON ({exc})") from exc
    if not isinstance(doc, dict):
        raise ScenarioError(f"{p}: top-level JSON value must be an object")
    return Scenario.from_dict(doc)


def save_scenario(s: Scenario, path) -> None:
    Path(path).write_text(json.dumps(s.to_dict(), indent=2) + "\n")


def validate_scenario(s: Scenario) -> list[str]:
    """Every invariant violation of ``s`` as ``"path: message"``; empty if valid."""
    v: list[str] = []
    for name in ("N", "L", "S"):
        if getattr(s, name) < 1:
            v.append(f"{name}: must be a positive integer")
    if v:
        return v
    if len(s.M) != s.L:
        v.append(f"M: has {len(s.M)} entries for L={s.L} categories")
    elif any(m < 1 for m in s.M):
        v.append("M: every category needs at least one agent type")
    if len(s.job_types) != s.N:
        v.append(f"job_types: has {len(s.job_types)} entries for N={s.N}")
    for j, jt in enumerate(s.job_types):
        if len(jt.requirement) != s.S:
            v.append(f"job_types[{j}].requirement: length {len(jt.requirement)} != S={s.S}")
        elif any(x < 0 for x in jt.requirement):
            v.append(f"job_types[{j}].requirement: negative hours")
        elif not any(x > 0 for x in jt.requirement):
            v.append(f"job_types[{j}].requirement: job type has no tasks")
    seen = set()
    for a, at in enumerate(s.agent_types):
        p = f"agent_types[{a}]"
        if not 0 <= at.category < s.L:
            v.append(f"{p}.category: category {at.category} out of range")
        elif len(s.M) == s.L and not 0 <= at.type_in_category < s.M[at.category]:
            v.append(f"{p}.type_in_category: {at.type_in_category} out of range for M[{at.category}]")
        if (at.category, at.type_in_category) in seen:
            v.append(f"{p}: duplicate (category, type) pair")
        seen.add((at.category, at.type_in_category))
        if len(at.availability) != s.S:
            v.append(f"{p}.availability: length {len(at.availability)} != S={s.S}")
        elif any(x < 0 for x in at.availability):
            v.append(f"{p}.availability: negative hours")
    if len(s.M) == s.L and len(s.agent_types) != sum(s.M):
        v.append(f"agent_types: has {len(s.agent_types)} entries, M declares {sum(s.M)}")
    for j, l in sorted(s.graph.edges):
        if not 0 <= j < s.N:
            v.append(f"edges[({j}, {l})]: edge references unknown job type")
        if not 0 <= l < s.L:
            v.append(f"edges[({j}, {l})]: edge references unknown category")
    for j in range(s.N):
        if not any(jj == j for jj, _ in s.graph.edges):
            v.append(f"edges: job type {j} has no neighboring category")
    if s.L == 1 and s.graph.edges != {(j, 0) for j in range(s.N)}:
        v.append("edges: single-category scenarios need the complete graph")
    if len(s.arrival_dists) != s.N:
        v.append(f"arrival_dists: has {len(s.arrival_dists)} entries for N={s.N}")
    for j, d in enumerate(s.arrival_dists):
        v += d.violations(f"arrival_dists[{j}]")
        if d.is_vector:
            v.append(f"arrival_dists[{j}]: arrival laws must be scalar")
    covered: list[int] = []
    for b, block in enumerate(s.availability_dists):
        p = f"availability_dists[{b}]"
        v += block.dist.violations(p + ".dist")
        if not block.agents:
            v.append(f"{p}.agents: empty")
        if block.dist.is_vector and block.dist.width != len(block.agents):
            v.append(f"{p}: vector width {block.dist.width} != {len(block.agents)} agent types")
        for a in block.agents:
            if not 0 <= a < len(s.agent_types):
                v.append(f"{p}.agents: unknown agent type {a}")
        covered += list(block.agents)
    if sorted(covered) != list(range(len(s.agent_types))):
        v.append("availability_dists: every agent type must be covered exactly once")
    if s.horizon < 0:
        v.append("horizon: must be >= 0")
    if not 0 <= s.seed < 2**64:
        v.append("seed: must be a 64-bit unsigned integer")
    if s.admission_nu is not None and s.admission_nu < 0:
        v.append("admission_nu: must be >= 0")
    if s.policy.node_budget < 1:
        v.append("policy.node_budget: must be positive")
    if s.policy.greedy_mode not in ("fifo", "random", "adversarial"):
        v.append(f"policy.greedy_mode: unknown mode {s.policy.greedy_mode!r}")
    return v
