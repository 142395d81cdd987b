"""Command-line entry point: generate, run, sweep, compare and check.

Exit codes: 0 success, 2 invalid input (missing file, bad schema, incompatible
policy), 3 invariant breach during simulation.
"""
from __future__ import annotations

import argparse
import csv
import logging
import os
import sys
from fractions import Fraction
from pathlib import Path
from typing import Optional, Sequence

from .admission import AdmissionConfig
from .capacity import boundary_factor, region_check
from .central import PolicyError
from .engine import (POLICIES, InvariantViolation, dumps, fmt_value, make_policy, run, stability_diagnostic, summary,
                     sweep, write_csv)
from .instances import INSTANCES, generate
from .model import Scenario, ScenarioError, load_scenario, save_scenario, validate_scenario
from .stochastic import to_fraction

log = logging.getLogger("crowdcap")

EXIT_OK, EXIT_INVALID, EXIT_INVARIANT = 0, 2, 3


class UsageError(Exception):
    """Bad input detected by the CLI itself; maps to exit code 2."""


def _configure_logging() -> None:
    level = os.environ.get("CROWDCAP_LOG", "WARNING").upper()
    if level.isdigit():
        lvl = int(level)
    else:
        lvl = logging.getLevelName(level)
        if not isinstance(lvl, int):
            lvl = logging.WARNING
    logging.basicConfig(level=lvl, format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)


def _parse_value(text: str):
    for conv in (int, to_fraction):
        try:
            return conv(text)
        except (ValueError, ZeroDivisionError):
            pass
    return text


def _parse_params(items: Sequence[str]) -> dict:
    out = {}
    for item in items or ():
        if "=" not in item:
            raise UsageError(f"--param {item!r} is not key=value")
        k, v = item.split("=", 1)
        out[k.strip()] = _parse_value(v.strip())
    return out


def _parse_factors(text: str) -> list[Fraction]:
    try:
        vals = [to_fraction(x.strip()) for x in text.split(",") if x.strip()]
    except (ValueError, ZeroDivisionError) as exc:
        raise UsageError(f"--factors: {exc}") from exc
    if not vals or any(v < 0 for v in vals):
        raise UsageError("--factors needs a comma-separated list of non-negative numbers")
    return vals


def _load(path: str) -> Scenario:
    p = Path(path)
    if not p.is_file():
        raise UsageError(f"scenario file not found: {p}")
    s = load_scenario(p)
    bad = validate_scenario(s)
    if bad:
        raise ScenarioError(f"{p}: invalid scenario:\n  " + "\n  ".join(bad))
    return s


def _admission(text: Optional[str], s: Scenario, policy: Optional[str]) -> Optional[AdmissionConfig]:
    """The --admission flag, else the scenario's ``admission_nu`` with the variant matching the policy."""
    if not text:
        if s.admission_nu is None:
            return None
        pooled = make_policy(policy, s).pooled and s.L > 1
        return AdmissionConfig(s.admission_nu, "II" if pooled else "I")
    try:
        return AdmissionConfig.parse(text)
    except (ValueError, ZeroDivisionError) as exc:
        raise UsageError(f"--admission: {exc}") from exc


def _out_dir(path: str) -> Path:
    p = Path(path)
    p.mkdir(parents=True, exist_ok=True)
    return p


def cmd_generate(args) -> int:
    params = _parse_params(args.param)
    if args.horizon is not None:
        params["horizon"] = args.horizon
    if args.seed is not None:
        params["seed"] = args.seed
    try:
        s = generate(args.instance, **params)
    except TypeError as exc:
        raise UsageError(f"bad parameters for {args.instance}: {exc}") from exc
    out = _out_dir(args.out) / f"{args.instance}.json"
    save_scenario(s, out)
    print(out)
    return EXIT_OK


def cmd_run(args) -> int:
    s = _load(args.scenario)
    adm = _admission(args.admission, s, args.policy)
    r = run(s, args.policy, adm, args.horizon, args.seed)
    out = _out_dir(args.out)
    with open(out / "run.csv", "w", newline="") as fh:
        write_csv(r, fh)
    doc = summary(r)
    (out / "summary.json").write_text(dumps(doc))
    print(f"{r.policy}: {doc['verdict']['classification']} (mean backlog {doc['mean_backlog']:.6g}) -> {out}")
    return EXIT_OK


def cmd_sweep(args) -> int:
    s = _load(args.scenario)
    factors = _parse_factors(args.factors)
    if args.replicas < 1:
        raise UsageError("--replicas must be >= 1")
    res = sweep(s, args.policy, factors, args.replicas, args.horizon, args.seed, args.workers,
                _admission(args.admission, s, args.policy))
    out = _out_dir(args.out)
    cols = ["factor", "replica", "seed", "verdict", "slope", "r2", "mean_backlog", "final_backlog"]
    with open(out / "sweep.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(cols)
        for row in res.rows:
            w.writerow([row[c] if isinstance(row[c], str) else fmt_value(row[c]) for c in cols])
    doc = res.to_json()
    doc["config"] = {"policy": args.policy or s.policy.name, "factors": [float(f) for f in factors],
                     "replicas": args.replicas, "horizon": s.horizon if args.horizon is None else args.horizon,
                     "seed": s.seed if args.seed is None else args.seed, "scenario": s.to_dict()}
    (out / "sweep.json").write_text(dumps(doc))
    for row in res.summary:
        print(f"factor {row['factor']:g}: bounded {row['bounded']} growing {row['growing']} "
              f"inconclusive {row['inconclusive']} mean backlog {row['mean_backlog']:.6g}")
    return EXIT_OK


def cmd_compare(args) -> int:
    s = _load(args.scenario)
    names = args.policy or sorted(POLICIES)
    rows, skipped = [], []
    for name in names:
        try:
            r = run(s, name, None, args.horizon, args.seed)
        except PolicyError as exc:
            if args.policy:
                raise
            skipped.append({"policy": name, "reason": str(exc)})
            continue
        v = stability_diagnostic(r)
        rows.append({"policy": name, "verdict": v.classification, "slope": v.slope,
                     "mean_backlog": float(r.total_backlog.mean()) if r.horizon else 0.0,
                     "final_backlog": int(r.total_backlog[-1]) if r.horizon else 0,
                     "departed_jobs": int(r.departed_jobs.sum()), "wasted_hours": int(r.wasted_hours.sum())})
    out = _out_dir(args.out)
    cols = ["policy", "verdict", "slope", "mean_backlog", "final_backlog", "departed_jobs", "wasted_hours"]
    with open(out / "compare.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(cols)
        for row in rows:
            w.writerow([row[c] if isinstance(row[c], str) else fmt_value(row[c]) for c in cols])
    (out / "compare.json").write_text(dumps({"rows": rows, "skipped": skipped}))
    for row in rows:
        print(f"{row['policy']}: {row['verdict']} (mean backlog {row['mean_backlog']:.6g})")
    return EXIT_OK


def cmd_check(args) -> int:
    s = _load(args.scenario)
    if args.rates:
        try:
            rates = tuple(to_fraction(x.strip()) for x in args.rates.split(","))
        except (ValueError, ZeroDivisionError) as exc:
            raise UsageError(f"--rates: {exc}") from exc
    else:
        rates = s.arrival_means()
    if len(rates) != s.N:
        raise UsageError(f"--rates has {len(rates)} entries for N={s.N}")
    if any(x < 0 for x in rates):
        raise UsageError("--rates must be non-negative")
    verdict = region_check(rates, s)
    doc = verdict.to_json()
    doc["rates"] = [str(x) for x in rates]
    doc["system_class"] = s.system_class.value
    factor = boundary_factor(rates, s) if any(rates) else None
    doc["boundary_factor"] = None if factor is None else float(factor)
    out = _out_dir(args.out)
    (out / "check.json").write_text(dumps(doc))
    print(f"{doc['verdict']} {doc['region']} region")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="crowdcap", description="Crowd task-allocation simulator.")
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="write a named scenario to JSON")
    g.add_argument("instance", choices=sorted(INSTANCES))
    g.add_argument("--param", action="append", default=[], metavar="KEY=VALUE",
                   help="generator parameter, repeatable (e.g. S=4, alpha=1/5)")
    g.add_argument("--horizon", type=int)
    g.add_argument("--seed", type=int)
    g.add_argument("--out", default=".", help="output directory")
    g.set_defaults(func=cmd_generate)

    def common(p, policy_many=False):
        p.add_argument("--scenario", required=True, metavar="PATH")
        if policy_many:
            p.add_argument("--policy", action="append", choices=sorted(POLICIES),
                           help="repeatable; default: every compatible policy")
        else:
            p.add_argument("--policy", choices=sorted(POLICIES), help="default: the scenario's policy block")
        p.add_argument("--horizon", type=int, help="epochs; default: the scenario's horizon")
        p.add_argument("--seed", type=int, help="default: the scenario's seed")
        p.add_argument("--out", default=".", metavar="DIR")

    r = sub.add_parser("run", help="simulate one policy; writes run.csv and summary.json")
    common(r)
    r.add_argument("--admission", metavar="nu=FLOAT,variant={I,II}")
    r.set_defaults(func=cmd_run)

    w = sub.add_parser("sweep", help="scale arrival means; writes sweep.csv and sweep.json")
    common(w)
    w.add_argument("--factors", required=True, metavar="CSV-list")
    w.add_argument("--replicas", type=int, default=1)
    w.add_argument("--workers", type=int, default=1)
    w.add_argument("--admission", metavar="nu=FLOAT,variant={I,II}")
    w.set_defaults(func=cmd_sweep)

    c = sub.add_parser("compare", help="run several policies on one scenario; writes compare.csv and compare.json")
    common(c, policy_many=True)
    c.set_defaults(func=cmd_compare)

    k = sub.add_parser("check", help="outer-region membership; writes check.json")
    k.add_argument("--scenario", required=True, metavar="PATH")
    k.add_argument("--rates", metavar="CSV-list", help="default: the scenario's arrival means")
    k.add_argument("--out", default=".", metavar="DIR")
    k.set_defaults(func=cmd_check)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    _configure_logging()
    args = build_parser().parse_args(argv)
    if getattr(args, "horizon", None) is not None and args.horizon < 0:
        print("error: --horizon must be >= 0", file=sys.stderr)
        return EXIT_INVALID
    try:
        return args.func(args)
    except InvariantViolation as exc:
        print(f"invariant breach: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    except (UsageError, ScenarioError, PolicyError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
