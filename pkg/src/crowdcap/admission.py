"""Statistics-agnostic job declining.

Each epoch the controller picks a decline probability beta minimizing

    beta * sum_j A_j  -  nu * beta * sum_{(j,s): r_js > 0} Qt_js * A_j

where Qt is the backlog of accepted tasks carried into the epoch (variant I,
one shared pool) or its minimum over the type's feasible pools (variant II,
one pool per category).  The objective is linear in beta, so the minimizer
is 0 or 1.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

import numpy as np

from .capacity import RatePoint, region_check
from .model import Scenario
from .stochastic import to_fraction

VARIANTS = ("I", "II")


@dataclass(frozen=True)
class AdmissionConfig:
    nu: Fraction
    variant: str = "I"

    def __post_init__(self):
        if self.nu <= 0:
            raise ValueError("nu must be positive")
        if self.variant not in VARIANTS:
            raise ValueError(f"variant must be one of {VARIANTS}")

    @classmethod
    def parse(cls, text: str) -> "AdmissionConfig":
        """From ``"nu=0.01,variant=II"``; variant defaults to I."""
        fields = {}
        for part in text.split(","):
            if not part.strip():
                continue
            if "=" not in part:
                raise ValueError(f"admission option {part!r} is not key=value")
            k, v = part.split("=", 1)
            fields[k.strip()] = v.strip()
        unknown = set(fields) - {"nu", "variant"}
        if unknown:
            raise ValueError(f"unknown admission options {sorted(unknown)}")
        if "nu" not in fields:
            raise ValueError("admission needs nu=...")
        return cls(to_fraction(fields["nu"]), fields.get("variant", "I"))

    def to_dict(self) -> dict:
        return {"nu": float(self.nu), "variant": self.variant}


@dataclass(frozen=True)
class AdmissionRecord:
    epoch: int
    beta: float
    offered: tuple
    accepted: tuple


def beta_coefficient(arrivals, q_tilde: np.ndarray, needs: np.ndarray, cfg: AdmissionConfig,
                     adjacency: Optional[np.ndarray] = None) -> Fraction:
    """Coefficient c of beta in the decline objective.

    ``q_tilde`` is (P, N, S).  Variant II takes, per (j, s), the minimum over
    pools adjacent to j (all pools when ``adjacency`` is None).
    """
    A = np.asarray(arrivals, dtype=np.int64)
    q = np.asarray(q_tilde, dtype=np.int64)
    if cfg.variant == "I":
        if q.shape[0] != 1:
            raise ValueError("variant I uses a single shared pool")
        Qt = q[0]
    else:
        big = np.iinfo(np.int64).max
        mask = np.ones(q.shape[:2], dtype=bool) if adjacency is None else np.asarray(adjacency).T
        Qt = np.where(mask[:, :, None], q, big).min(axis=0)
    weighted = int((np.where(needs, Qt, 0) * A[:, None]).sum())
    return Fraction(int(A.sum())) - cfg.nu * weighted


def compute_beta(arrivals, q_tilde: np.ndarray, needs: np.ndarray, cfg: AdmissionConfig,
                 adjacency: Optional[np.ndarray] = None) -> int:
    """1 (decline all) if the coefficient is negative, else 0; ties accept."""
    return 1 if beta_coefficient(arrivals, q_tilde, needs, cfg, adjacency) < 0 else 0


def admit(arrivals, beta: float, rng: Optional[np.random.Generator] = None) -> np.ndarray:
    """Accepted arrivals: each job independently kept with probability 1 - beta."""
    A = np.asarray(arrivals, dtype=np.int64)
    if beta <= 0:
        return A.copy()
    if beta >= 1:
        return np.zeros_like(A)
    if rng is None:
        raise ValueError("fractional beta needs a random generator")
    return rng.binomial(A, 1.0 - float(beta)).astype(np.int64)


@dataclass(frozen=True)
class BenchmarkResult:
    status: str  # "ok", "infeasible" (even beta = 1 is outside) or "zero_load"
    beta: Optional[float]
    surrogate: str = "outer region"


def static_benchmark_beta(rates, s: Scenario, eps, tol: float = 1e-6) -> BenchmarkResult:
    """Smallest beta with (1 - beta) * rates + eps * 1 inside the outer-region surrogate.

    The true capacity region is not decidable here, so the class's outer
    region stands in for it.  The two agree for one category with constant
    availability, which is the setting the benchmark is meant for.
    """
    lam = RatePoint.of(rates).rates
    e = to_fraction(eps)
    if all(x == 0 for x in lam):
        return BenchmarkResult("zero_load", 0.0)

    def inside(beta: Fraction) -> bool:
        pt = RatePoint(tuple((1 - beta) * x + e for x in lam))
        return region_check(pt, s).inside

    if inside(Fraction(0)):
        return BenchmarkResult("ok", 0.0)
    if not inside(Fraction(1)):
        return BenchmarkResult("infeasible", None)
    lo, hi = Fraction(0), Fraction(1)  # lo outside, hi inside
    while hi - lo > tol:
        mid = (lo + hi) / 2
        if inside(mid):
            hi = mid
        else:
            lo = mid
    return BenchmarkResult("ok", float(hi))
