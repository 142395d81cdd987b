"""Epoch loop, per-epoch audits, stability diagnostic, load sweeps and reports."""
from __future__ import annotations

import csv
import io
import json
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np

from .admission import AdmissionConfig, admit, compute_beta
from .capacity import cac_check
from .central import AllocationPlan, JLTTMWTAPolicy, MWTAPolicy, Policy, PolicyError, QueueState
from .decentral import GreedyAgentPolicy, GreedyJobPolicy, IJLTTGreedyJobPolicy
from .model import Scenario, validate_scenario
from .stochastic import STREAM_ADMISSION, epoch_rng, sample_arrivals, sample_availability

log = logging.getLogger("crowdcap")

POLICIES = {
    p.name: p for p in (MWTAPolicy, GreedyAgentPolicy, GreedyJobPolicy, JLTTMWTAPolicy, IJLTTGreedyJobPolicy)
}


class InvariantViolation(RuntimeError):
    """A policy produced an infeasible plan or the queue accounting broke."""

    def __init__(self, epoch: int, message: str):
        super().__init__(f"epoch {epoch}: {message}")
        self.epoch = epoch


def make_policy(name: Optional[str], s: Scenario) -> Policy:
    name = name or s.policy.name or "mwta"
    if name not in POLICIES:
        raise PolicyError(f"unknown policy {name!r}; choose from {sorted(POLICIES)}")
    return POLICIES[name](s)


@dataclass
class SimRun:
    scenario: Scenario
    policy: str
    admission: Optional[AdmissionConfig]
    seed: int
    horizon: int
    total_backlog: np.ndarray  # (T,) unallocated tasks after the epoch
    job_backlog: np.ndarray  # (T, N) unallocated jobs per type after the epoch
    pool_backlog: np.ndarray  # (T, P) unallocated tasks per pool
    departed_tasks: np.ndarray
    departed_jobs: np.ndarray
    offered_total: np.ndarray  # jobs offered
    offered_tasks: np.ndarray
    accepted_total: np.ndarray  # jobs accepted
    beta: np.ndarray
    wasted_hours: np.ndarray
    final_state: QueueState
    audited_epochs: int = 0
    stats: dict = field(default_factory=dict)

    def records(self) -> list[dict]:
        """One dict per epoch keyed by the CSV header."""
        head = self.csv_header()
        return [dict(zip(head, row)) for row in self.csv_rows()]

    def csv_header(self) -> list[str]:
        return (["t", "total_backlog"] + [f"backlog_j{j}" for j in range(self.scenario.N)]
                + ["departed_tasks", "departed_jobs", "offered_total", "accepted_total", "beta", "wasted_hours"])

    def csv_rows(self):
        for t in range(self.horizon):
            yield ([t, int(self.total_backlog[t])] + [int(x) for x in self.job_backlog[t]]
                   + [int(self.departed_tasks[t]), int(self.departed_jobs[t]), int(self.offered_total[t]),
                      int(self.accepted_total[t]), float(self.beta[t]), int(self.wasted_hours[t])])

    def acceptance_rate(self) -> Optional[float]:
        off = int(self.offered_total.sum())
        return None if off == 0 else int(self.accepted_total.sum()) / off


def audit_epoch(s: Scenario, t: int, q: np.ndarray, accepted: np.ndarray, plan: AllocationPlan, u) -> None:
    needs = s.needs
    routed, D = plan.routed, plan.departures
    if routed.shape != (q.shape[0], s.N) or D.shape != q.shape:
        raise InvariantViolation(t, "plan shapes do not match the queue state")
    if (routed < 0).any() or not np.array_equal(routed.sum(axis=0), accepted):
        raise InvariantViolation(t, "routed arrivals differ from accepted arrivals")
    if q.shape[0] > 1 and (routed.T[~s.adjacency] != 0).any():
        raise InvariantViolation(t, "arrival routed to a pool outside the feasibility graph")
    if (D < 0).any():
        raise InvariantViolation(t, "negative departures")
    if (D > q + routed[:, :, None] * needs).any():
        raise InvariantViolation(t, "departures exceed waiting plus arriving tasks")
    if not np.array_equal(plan.split.task_counts, D.sum(axis=0)):
        raise InvariantViolation(t, "split task counts differ from departures")
    res = cac_check(plan.split, u, s)
    if not res.ok:
        raise InvariantViolation(t, f"allocation constraint violated: {res.message}")
    if (plan.hours_used + plan.wasted > s.capacities(u)).any():
        raise InvariantViolation(t, "used plus wasted hours exceed available hours")
    if (plan.wasted < 0).any():
        raise InvariantViolation(t, "negative wasted hours")


def run(s: Scenario, policy: Union[str, Policy, None] = None, admission: Optional[AdmissionConfig] = None,
        T: Optional[int] = None, seed: Optional[int] = None, audit: bool = True,
        initial: Optional[QueueState] = None) -> SimRun:
    """Simulate ``T`` epochs.  Deterministic in (scenario, policy, admission, T, seed)."""
    pol = policy if isinstance(policy, Policy) else make_policy(policy, s)
    T = s.horizon if T is None else int(T)
    seed = s.seed if seed is None else int(seed)
    P = pol.pools()
    if admission is not None and (admission.variant == "I") != (P == 1):
        raise PolicyError(f"admission variant {admission.variant} needs "
                          f"{'a single shared pool' if admission.variant == 'I' else 'one pool per category'}")
    N, S = s.N, s.S
    needs = s.needs
    n_tasks = needs.sum(axis=1)
    qs = initial.copy() if initial is not None else QueueState.zeros(P, N, S)
    if qs.q.shape != (P, N, S):
        raise ValueError(f"initial state shape {qs.q.shape} != {(P, N, S)}")
    out = dict(
        total_backlog=np.zeros(T, dtype=np.int64), job_backlog=np.zeros((T, N), dtype=np.int64),
        pool_backlog=np.zeros((T, P), dtype=np.int64), departed_tasks=np.zeros(T, dtype=np.int64),
        departed_jobs=np.zeros(T, dtype=np.int64), offered_total=np.zeros(T, dtype=np.int64),
        offered_tasks=np.zeros(T, dtype=np.int64), accepted_total=np.zeros(T, dtype=np.int64),
        beta=np.zeros(T, dtype=np.float64), wasted_hours=np.zeros(T, dtype=np.int64),
    )
    cum_acc = qs.job_backlog(needs).sum(axis=0)
    cum_dep = np.zeros(N, dtype=np.int64)
    jb = qs.job_backlog(needs)
    for t in range(T):
        A = sample_arrivals(s, t, seed)
        u = sample_availability(s, t, seed)
        beta = 0
        acc = A
        if admission is not None:
            beta = compute_beta(A, qs.q, needs, admission, s.adjacency)
            acc = admit(A, beta, epoch_rng(seed, t, STREAM_ADMISSION))
        plan = pol.step(qs, acc, u, t, seed)
        if audit:
            audit_epoch(s, t, qs.q, acc, plan, u)
        qs.q += plan.routed[:, :, None] * needs - plan.departures
        jb_new = qs.job_backlog(needs)
        dep_jobs = (jb + plan.routed - jb_new).sum(axis=0)
        if audit:
            if (qs.q < 0).any():
                raise InvariantViolation(t, "negative queue")
            if not s.system_class.decomposable and not qs.nd_consistent(needs):
                raise InvariantViolation(t, "non-decomposable backlog differs across skills")
            cum_acc += acc
            cum_dep += dep_jobs
            if (dep_jobs < 0).any() or not np.array_equal(cum_acc, cum_dep + jb_new.sum(axis=0)):
                raise InvariantViolation(t, "job conservation broken")
        jb = jb_new
        out["total_backlog"][t] = qs.q.sum()
        out["job_backlog"][t] = jb.sum(axis=0)
        out["pool_backlog"][t] = qs.q.sum(axis=(1, 2))
        out["departed_tasks"][t] = plan.departures.sum()
        out["departed_jobs"][t] = dep_jobs.sum()
        out["offered_total"][t] = A.sum()
        out["offered_tasks"][t] = A @ n_tasks
        out["accepted_total"][t] = acc.sum()
        out["beta"][t] = beta
        out["wasted_hours"][t] = plan.wasted.sum()
    log.info("run %s policy=%s T=%d seed=%d final backlog=%d", s.name, pol.name, T, seed, qs.total())
    return SimRun(s, pol.name, admission, seed, T, final_state=qs, audited_epochs=T if audit else 0,
                  stats=dict(pol.stats), **out)


@dataclass(frozen=True)
class StabilityVerdict:
    classification: str  # bounded, growing or inconclusive
    slope: float
    r2: float
    slope_tol: float

    def to_dict(self) -> dict:
        return {"classification": self.classification, "slope": self.slope, "r2": self.r2,
                "slope_tol": self.slope_tol}


def stability_diagnostic(run_or_series, slope_tol: Optional[float] = None) -> StabilityVerdict:
    """Linear fit of the backlog over the second half of a run.

    A heuristic proxy for a bounded expected backlog, not a proof.  Bounded
    if |slope| <= tol; growing if slope > 10 tol with r2 >= 0.8; otherwise
    inconclusive.  For a SimRun the default tol is 1% of the mean number of
    tasks offered per epoch; a raw series needs an explicit tol.
    """
    if isinstance(run_or_series, SimRun):
        y = run_or_series.total_backlog.astype(float)
        if slope_tol is None:
            slope_tol = 0.01 * float(run_or_series.offered_tasks.mean()) if len(y) else 0.0
            slope_tol = slope_tol or 0.01
    else:
        y = np.asarray(run_or_series, dtype=float)
        if slope_tol is None:
            raise ValueError("slope_tol is required for a raw series")
    y = y[len(y) // 2:]
    if len(y) < 2:
        return StabilityVerdict("inconclusive", 0.0, 0.0, float(slope_tol))
    x = np.arange(len(y), dtype=float)
    xc = x - x.mean()
    yc = y - y.mean()
    sxx = float(xc @ xc)
    slope = float(xc @ yc) / sxx
    syy = float(yc @ yc)
    r2 = 1.0 if syy == 0 else float((xc @ yc) ** 2 / (sxx * syy))
    if abs(slope) <= slope_tol:
        cls = "bounded"
    elif slope > 10 * slope_tol and r2 >= 0.8:
        cls = "growing"
    else:
        cls = "inconclusive"
    return StabilityVerdict(cls, slope, r2, float(slope_tol))


def replica_seed(seed: int, replica: int) -> int:
    return int(np.random.SeedSequence([seed, replica]).generate_state(1, np.uint64)[0])


@dataclass
class SweepResult:
    rows: list  # one dict per (factor, replica)
    summary: list  # one dict per factor
    monotone: bool  # mean backlog non-decreasing in the load factor

    def to_json(self) -> dict:
        return {"rows": self.rows, "summary": self.summary, "monotone_mean_backlog": self.monotone}


def _sweep_job(args):
    s, policy, factor, replica, T, seed, admission = args
    r = run(s.scaled(factor), policy, admission, T, replica_seed(seed, replica))
    v = stability_diagnostic(r)
    return {
        "factor": float(factor), "replica": replica, "seed": r.seed,
        "verdict": v.classification, "slope": v.slope, "r2": v.r2,
        "mean_backlog": float(r.total_backlog.mean()) if T else 0.0,
        "final_backlog": int(r.total_backlog[-1]) if T else 0,
    }


def sweep(s: Scenario, policy: Optional[str], load_factors: Sequence, replicas: int = 1,
          T: Optional[int] = None, seed: Optional[int] = None, workers: int = 1,
          admission: Optional[AdmissionConfig] = None) -> SweepResult:
    """Runs at scaled arrival means.  Replica k uses the same seed at every factor."""
    T = s.horizon if T is None else T
    seed = s.seed if seed is None else seed
    make_policy(policy, s)  # fail fast on an incompatible policy
    jobs = [(s, policy, f, k, T, seed, admission) for f in load_factors for k in range(replicas)]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            rows = list(ex.map(_sweep_job, jobs))
    else:
        rows = [_sweep_job(j) for j in jobs]
    summary = []
    for f in load_factors:
        rs = [r for r in rows if r["factor"] == float(f)]
        counts = {c: sum(r["verdict"] == c for r in rs) for c in ("bounded", "growing", "inconclusive")}
        mb = [r["mean_backlog"] for r in rs]
        summary.append({"factor": float(f), "replicas": len(rs), **counts,
                        "mean_backlog": float(np.mean(mb)) if mb else 0.0,
                        "std_backlog": float(np.std(mb)) if mb else 0.0})
    means = [x["mean_backlog"] for x in summary]
    order = np.argsort([x["factor"] for x in summary], kind="stable")
    monotone = all(means[order[i]] <= means[order[i + 1]] for i in range(len(order) - 1))
    return SweepResult(rows, summary, monotone)


def fmt_value(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return "%.12g" % float(v)


def write_csv(r: SimRun, fh) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(r.csv_header())
    for row in r.csv_rows():
        w.writerow([fmt_value(v) for v in row])


def csv_text(r: SimRun) -> str:
    buf = io.StringIO()
    write_csv(r, buf)
    return buf.getvalue()


def summary(r: SimRun, policy_cfg: Optional[dict] = None) -> dict:
    v = stability_diagnostic(r)
    scen = r.scenario.to_dict()
    return {
        "verdict": v.to_dict(),
        "mean_backlog": float(r.total_backlog.mean()) if r.horizon else 0.0,
        "final_backlog": int(r.total_backlog[-1]) if r.horizon else 0,
        "acceptance_rate": r.acceptance_rate(),
        "departed_jobs": int(r.departed_jobs.sum()),
        "departed_tasks": int(r.departed_tasks.sum()),
        "wasted_hours": int(r.wasted_hours.sum()),
        "audited_epochs": r.audited_epochs,
        "solver_stats": r.stats,
        "config": {
            "policy": r.policy,
            "policy_options": policy_cfg or r.scenario.policy.to_dict(),
            "admission": None if r.admission is None else r.admission.to_dict(),
            "horizon": r.horizon,
            "seed": r.seed,
            "scenario": scen,
        },
    }


def dumps(doc) -> str:
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"
