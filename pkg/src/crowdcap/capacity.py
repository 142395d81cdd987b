"""Allocation feasibility (CAC) and outer-region membership.

The exact capacity region of a system needs the convex hull of the
single-epoch allocation sets over every availability realization; it is not
decided here.  Only the first-order outer regions are: the all-subsets region
``C_out`` for any system, and its per-pool decomposition for inflexible
systems.  Probe the true region empirically with ``engine.sweep``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

from .flow import transport
from .lp import OPTIMAL, LinearProgram, solve_lp
from .model import Scenario, SystemClass
from .stochastic import to_fraction


@dataclass
class CategorySplit:
    """Tasks ``task_counts[j, s]`` divided over categories as ``z[l, j, s]``.

    ``z`` is an int64 array for integral splits or an object array of
    Fractions when boundary tasks are shared between categories.
    """

    z: np.ndarray  # (L, N, S)
    task_counts: np.ndarray  # (N, S) int64

    @classmethod
    def zeros(cls, L: int, N: int, S: int) -> "CategorySplit":
        return cls(np.zeros((L, N, S), dtype=np.int64), np.zeros((N, S), dtype=np.int64))

    @classmethod
    def single(cls, counts: np.ndarray) -> "CategorySplit":
        """All tasks in the only category."""
        counts = np.asarray(counts, dtype=np.int64)
        return cls(counts[None].copy(), counts.copy())

    @property
    def integral(self) -> bool:
        if self.z.dtype != object:
            return True
        return all(Fraction(v).denominator == 1 for v in self.z.flat)


@dataclass(frozen=True)
class CACResult:
    ok: bool
    message: str = ""
    where: dict = field(default_factory=dict)

    def __bool__(self) -> bool:
        return self.ok


def _viol(msg: str, **where) -> CACResult:
    loc = ", ".join(f"{k}={v}" for k, v in where.items())
    return CACResult(False, f"{msg} at ({loc})" if loc else msg, where)


def _first(mask: np.ndarray):
    """Index tuple of the first True entry, or None."""
    if not mask.any():
        return None
    return tuple(int(i) for i in np.argwhere(mask)[0])


def cac_check(split: CategorySplit, u, s: Scenario) -> CACResult:
    """First violated allocation constraint of ``split`` under availability ``u``.

    Raises ValueError on shape mismatch (a usage error, not a violation).
    """
    z, a = split.z, split.task_counts
    if z.shape != (s.L, s.N, s.S) or a.shape != (s.N, s.S):
        raise ValueError(f"split shapes {z.shape}, {a.shape} do not match L={s.L}, N={s.N}, S={s.S}")
    u = np.asarray(u)
    if u.shape != (len(s.agent_types),):
        raise ValueError(f"availability has shape {u.shape}, expected ({len(s.agent_types)},)")
    R = s.R
    bad = _first(a < 0)
    if bad:
        return _viol("task count must be a non-negative integer", j=bad[0], s=bad[1])
    bad = _first((a > 0) & ~s.needs)
    if bad:
        return _viol("tasks allocated for a skill the job type does not need", j=bad[0], s=bad[1])
    bad = _first(z < 0)
    if bad:
        return _viol("negative category share", l=bad[0], j=bad[1], s=bad[2])
    bad = _first((z != 0) & ~s.adjacency.T[:, :, None])
    if bad:
        return _viol("share on a category outside the feasibility graph", l=bad[0], j=bad[1], s=bad[2])
    bad = _first(z.sum(axis=0) != a)
    if bad:
        return _viol("category shares do not sum to the task count", j=bad[0], s=bad[1])
    bad = _first((z * R).sum(axis=1) > s.capacities(u))
    if bad:
        return _viol("skill-hours exceed availability", l=bad[0], s=bad[1])
    cls = s.system_class
    needs = s.needs
    if not cls.decomposable:
        hi = np.where(needs, a, np.iinfo(np.int64).min).max(axis=1)
        lo = np.where(needs, a, np.iinfo(np.int64).max).min(axis=1)
        bad = np.flatnonzero(hi != lo)
        if len(bad):
            return _viol("non-decomposable equality broken", j=int(bad[0]))
    if not cls.flexible:
        if z.dtype == object:
            for (l, j, sk), v in np.ndenumerate(z):
                if Fraction(v).denominator != 1:
                    return _viol("inflexible share is not integral", l=l, j=j, s=sk)
        if cls is SystemClass.IND:
            for l in range(s.L):
                for j in range(s.N):
                    vals = {z[l, j, sk] for sk in range(s.S) if needs[j, sk]}
                    if len(vals) > 1:
                        return _viol("inflexible share differs across skills", l=l, j=j)
    return CACResult(True)


@dataclass(frozen=True)
class RatePoint:
    rates: tuple  # N non-negative Fractions

    @classmethod
    def of(cls, rates) -> "RatePoint":
        if isinstance(rates, RatePoint):
            return rates
        out = tuple(to_fraction(x) if not isinstance(x, (np.integer,)) else Fraction(int(x)) for x in rates)
        if any(x < 0 for x in out):
            raise ValueError("rates must be non-negative")
        return cls(out)

    def scaled(self, factor) -> "RatePoint":
        f = to_fraction(factor)
        return RatePoint(tuple(x * f for x in self.rates))


@dataclass(frozen=True)
class RegionVerdict:
    inside: bool
    witness_jobs: Optional[tuple[int, ...]] = None  # bottleneck J when outside
    witness_skill: Optional[int] = None
    decomposition: Optional[tuple] = None  # per-pool rates when inside C^O
    region: str = "outer"

    def to_json(self) -> dict:
        w: dict = {}
        if self.witness_jobs is not None:
            w = {"jobs": list(self.witness_jobs), "skill": self.witness_skill}
        elif self.decomposition is not None:
            w = {"decomposition": [[_fmt(x) for x in row] for row in self.decomposition]}
        return {"region": self.region, "verdict": "inside" if self.inside else "outside", "witness": w}


def _fmt(x: Fraction):
    return int(x) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


def _rates(rates, s: Scenario) -> tuple:
    r = RatePoint.of(rates).rates
    if len(r) != s.N:
        raise ValueError(f"rate vector has {len(r)} entries for N={s.N}")
    return r


def outer_region_check(rates, s: Scenario) -> RegionVerdict:
    """Is sum_{j in J} lam_j r_js <= sum_{l in N(J)} mean hours_ls for all J, s?

    Per skill this is feasibility of a transportation problem (job supplies
    lam_j r_js, category sinks of mean hours, arcs along the graph), and by
    max-flow/min-cut the all-subsets condition holds iff the max flow ships
    every supply.  A deficient min cut yields the witness set J.
    """
    lam = _rates(rates, s)
    mu = s.mean_capacities()
    R = s.R
    edges = sorted(s.graph.edges)
    for sk in range(s.S):
        supply = [lam[j] * int(R[j, sk]) for j in range(s.N)]
        cap = [mu[l][sk] for l in range(s.L)]
        den = math.lcm(*(x.denominator for x in supply + cap))
        si = [int(x * den) for x in supply]
        ci = [int(x * den) for x in cap]
        shipped, _, J = transport(si, ci, edges)
        if shipped < sum(si):
            return RegionVerdict(False, tuple(sorted(J)), sk)
    return RegionVerdict(True)


def inflexible_outer_check(rates, s: Scenario, respect_graph: bool = False) -> RegionVerdict:
    """Does lam split as sum_l lam^(l) with every lam^(l) in pool l's outer region?

    Pool l's region is single-category, so it is the per-skill inequality
    sum_j lam^l_j r_js <= mean hours_ls.  As stated, the decomposition does
    not force lam^l_j = 0 off the feasibility graph; pass
    ``respect_graph=True`` to add that restriction.
    """
    lam = _rates(rates, s)
    mu = s.mean_capacities()
    R = s.R
    var = [(l, j) for l in range(s.L) for j in range(s.N) if not respect_graph or s.adjacency[j, l]]
    nv = len(var)
    rows = []
    for j in range(s.N):
        row = [Fraction(1) if jj == j else Fraction(0) for (_, jj) in var]
        rows.append((row, lam[j]))
        rows.append(([-x for x in row], -lam[j]))
    for l in range(s.L):
        for sk in range(s.S):
            row = [Fraction(int(R[jj, sk])) if ll == l else Fraction(0) for (ll, jj) in var]
            rows.append((row, mu[l][sk]))
    if nv == 0:
        return RegionVerdict(all(x == 0 for x in lam), region="inflexible")
    res = solve_lp(LinearProgram([Fraction(0)] * nv, rows), exact=True)
    if res.status != OPTIMAL:
        return RegionVerdict(False, region="inflexible")
    dec = [[Fraction(0)] * s.N for _ in range(s.L)]
    for (l, j), x in zip(var, res.x):
        dec[l][j] = x
    return RegionVerdict(True, decomposition=tuple(tuple(r) for r in dec), region="inflexible")


def decomposition_valid(dec, rates, s: Scenario) -> bool:
    """Re-substitute a per-pool decomposition into its defining constraints."""
    lam = _rates(rates, s)
    if any(x < 0 for row in dec for x in row):
        return False
    if any(sum(dec[l][j] for l in range(s.L)) != lam[j] for j in range(s.N)):
        return False
    mu = s.mean_capacities()
    return all(
        sum(dec[l][j] * int(s.R[j, sk]) for j in range(s.N)) <= mu[l][sk]
        for l in range(s.L) for sk in range(s.S)
    )


def region_check(rates, s: Scenario) -> RegionVerdict:
    """The outer region matching the scenario class."""
    if s.system_class.flexible:
        return outer_region_check(rates, s)
    return inflexible_outer_check(rates, s)


def boundary_factor(rates, s: Scenario, tol: float = 1e-9) -> Fraction:
    """Largest a with a * rates inside the class's outer region.

    Exact for one category (min over skills of hours / load); bisection to
    ``tol`` otherwise.  Returns a huge sentinel for an all-zero load.
    """
    lam = _rates(rates, s)
    if s.L == 1:
        mu = s.mean_capacities()[0]
        ratios = []
        for sk in range(s.S):
            load = sum(lam[j] * int(s.R[j, sk]) for j in range(s.N))
            if load > 0:
                ratios.append(mu[sk] / load)
        return min(ratios) if ratios else Fraction(10**18)
    pt = RatePoint(lam)
    lo, hi = Fraction(0), Fraction(1)
    while region_check(pt.scaled(hi), s).inside:
        lo, hi = hi, hi * 2
        if hi > 10**12:
            return Fraction(10**18)
    while hi - lo > tol:
        mid = (lo + hi) / 2
        if region_check(pt.scaled(mid), s).inside:
            lo = mid
        else:
            hi = mid
    return lo
