"""Batch elicitation experiments: run the four procedures over repeated
random instances and emit per-query mean metric curves plus a summary.

Outputs one CSV per procedure (metric-trace schema, values averaged across
repetitions at each query index, shorter runs carrying their last value
forward) and a summary JSON with final interval-mass ratios, queries to the
regret threshold, and distinct-pair counts.  Deterministic per seed set.
"""

from __future__ import annotations

import csv
import json
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .domains import AutonomicSpec, RandomMdpSpec, gen_autonomic, gen_random
from .elicitation import ElicitationSession, SimulatedUser, run_elicitation
from .formats import METRIC_TRACE_HEADER, load_instance

PROCEDURES = {
    "MMR-HLG": ("mmr", "hlg"),
    "MMR-CS": ("mmr", "cs"),
    "MM-HLG": ("maximin", "hlg"),
    "MM-CS": ("maximin", "cs"),
}


@dataclass
class ExperimentPlan:
    procedures: tuple = ("MMR-CS", "MMR-HLG", "MM-CS", "MM-HLG")
    repetitions: int = 1
    seed: int = 0
    n: int = 10
    k: int = 5
    domain: str = "random"  # "random" | "autonomic" | "file"
    instance_file: str = None
    solver_mode: str = "relaxed"
    metric_mode: str = "exact"
    tau_fraction: float = 0.01
    budget: int = None
    out_dir: str = "experiment-out"
    jobs: int = 1
    domain_kwargs: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.repetitions < 1:
            raise ValueError("repetitions must be >= 1")
        if not self.procedures:
            raise ValueError("at least one procedure required")
        for p in self.procedures:
            if p not in PROCEDURES:
                raise ValueError(f"unknown procedure {p!r}")


def _make_instance(plan: ExperimentPlan, rep: int):
    seed = plan.seed + rep
    if plan.domain == "random":
        return gen_random(RandomMdpSpec(n=plan.n, k=plan.k, seed=seed, **plan.domain_kwargs))
    if plan.domain == "autonomic":
        return gen_autonomic(AutonomicSpec(seed=seed, **plan.domain_kwargs))
    if plan.domain == "file":
        mdp, R, r_true = load_instance(plan.instance_file)
        if r_true is None:
            raise ValueError("instance file lacks r_true; simulated runs need it")
        return mdp, R, r_true
    raise ValueError(f"unknown domain {plan.domain!r}")


def _run_one(args):
    plan, procedure, rep = args
    criterion, strategy = PROCEDURES[procedure]
    try:
        mdp, R, r_true = _make_instance(plan, rep)
        session = ElicitationSession(
            mdp,
            R,
            criterion=criterion,
            strategy=strategy,
            solver_mode=plan.solver_mode,
            metric_mode=plan.metric_mode,
            tau_fraction=plan.tau_fraction,
            budget=plan.budget,
            user=SimulatedUser(r_true),
        )
        trace, _ = run_elicitation(session)
        return procedure, rep, [_snapshot_row(m) for m in trace], None
    except Exception as exc:  # record, keep the batch going
        return procedure, rep, None, f"{type(exc).__name__}: {exc}"


def _snapshot_row(m):
    return [
        m.query_index,
        m.max_regret,
        m.maximin_value,
        np.nan if m.true_regret is None else m.true_regret,
        m.chi,
        m.distinct_pairs,
        m.elapsed_ms,
    ]


def _mean_curves(traces):
    """Average metric rows across repetitions, carrying each run's last row
    forward so all curves share the longest run's length."""
    longest = max(len(t) for t in traces)
    padded = []
    for t in traces:
        rows = [row[:] for row in t]
        while len(rows) < longest:
            rows.append(rows[-1][:])
        padded.append(rows)
    arr = np.asarray(padded, dtype=float)  # (reps, len, fields)
    means = arr.mean(axis=0)
    means[:, 0] = np.arange(longest)  # query index column stays integral
    return means


def run_experiment(plan: ExperimentPlan) -> dict:
    os.makedirs(plan.out_dir, exist_ok=True)
    tasks = [(plan, proc, rep) for proc in plan.procedures for rep in range(plan.repetitions)]
    if plan.jobs > 1:
        with ProcessPoolExecutor(max_workers=plan.jobs) as pool:
            results = list(pool.map(_run_one, tasks))
    else:
        results = [_run_one(t) for t in tasks]

    summary = {"plan": {k: v for k, v in vars(plan).items() if k != "domain_kwargs"}, "procedures": {}}
    for procedure in plan.procedures:
        rows = [r for r in results if r[0] == procedure]
        failures = {rep: err for _, rep, _, err in rows if err is not None}
        traces = [trace for _, _, trace, err in rows if err is None]
        entry = {"repetitions": len(rows), "failures": failures}
        if traces:
            curves = _mean_curves(traces)
            path = os.path.join(plan.out_dir, f"{procedure}.csv")
            _write_curve_csv(path, curves)
            finals = [t[-1] for t in traces]
            initials = [t[0] for t in traces]
            entry.update(
                {
                    "curve_csv": path,
                    "mean_queries": float(np.mean([len(t) - 1 for t in traces])),
                    "mean_final_chi_ratio": float(
                        np.mean([f[4] / i[4] if i[4] > 0 else 1.0 for f, i in zip(finals, initials)])
                    ),
                    "mean_distinct_pairs": float(np.mean([f[5] for f in finals])),
                    "mean_queries_to_threshold": _mean_queries_to_threshold(
                        traces, plan.tau_fraction
                    ),
                }
            )
        summary["procedures"][procedure] = entry
    with open(os.path.join(plan.out_dir, "summary.json"), "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
    return summary


def _mean_queries_to_threshold(traces, tau_fraction):
    counts = []
    for t in traces:
        initial = t[0][1]
        threshold = (tau_fraction if tau_fraction is not None else 1e-6) * initial
        hit = next((row[0] for row in t if row[1] <= threshold), None)
        if hit is not None:
            counts.append(hit)
    return float(np.mean(counts)) if counts else None


def _write_curve_csv(path, curves):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(METRIC_TRACE_HEADER)
        for row in curves:
            w.writerow(
                [int(row[0])]
                + [("" if np.isnan(v) else repr(float(v))) for v in row[1:4]]
                + [repr(float(row[4])), repr(float(row[5])), repr(float(row[6]))]
            )
