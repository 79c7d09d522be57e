"""Command-line entry point.

Subcommands: solve, maximin, elicit, experiment, gen-random, gen-autonomic,
serve.  Exit codes: 0 on success (certified solve), 2 for an uncertified
solve (cap hit), 1 for usage or input errors.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from .domains import AutonomicSpec, RandomMdpSpec, gen_autonomic, gen_random
from .elicitation import ElicitationSession, SimulatedUser, run_elicitation
from .experiments import PROCEDURES, ExperimentPlan, run_experiment
from .formats import (
    FormatError,
    load_instance,
    save_instance,
    write_metric_trace,
    write_regret_trace,
)
from .maximin import maximin
from .mdp import policy_of_occupancy
from .regret import minimax_regret


def _add_instance_arg(p):
    p.add_argument("instance", help="instance JSON file (mdp + polytope [+ r_true])")


def _load(path):
    try:
        return load_instance(path)
    except FormatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        raise SystemExit(1)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        raise SystemExit(1)


def _print_policy(mdp, f):
    pi = policy_of_occupancy(mdp, f)
    for s in range(mdp.n):
        row = " ".join(f"{p:.3f}" for p in pi.matrix[s])
        print(f"  state {s}: [{row}]")


def cmd_solve(args):
    mdp, R, _ = _load(args.instance)
    sol = minimax_regret(
        mdp,
        R,
        mode=args.mode,
        tolerance=args.tolerance,
        max_iterations=args.max_iterations,
        time_limit=args.time_limit,
        certify=args.certify,
    )
    print(f"minimax regret ({args.mode}): {sol.delta:.6g}")
    print(f"  lower bound {sol.lower_bound:.6g}"
          + (f", certified upper bound {sol.upper_bound:.6g}" if sol.upper_bound is not None else ""))
    print(f"  termination: {sol.termination} after {len(sol.trace)} iterations")
    if sol.witness is not None:
        print(f"  witness adversary value: {sol.witness.value:.6g}")
    print("policy (from occupancy frequencies):")
    _print_policy(mdp, sol.f)
    if args.trace_out:
        write_regret_trace(args.trace_out, sol.trace)
        print(f"trace written to {args.trace_out}")
    if args.out:
        payload = {
            "delta": sol.delta,
            "lower_bound": sol.lower_bound,
            "upper_bound": sol.upper_bound,
            "certified": sol.certified,
            "termination": sol.termination,
            "occupancy": list(map(float, sol.f)),
            "witness_reward": None if sol.witness is None else list(map(float, sol.witness.r)),
        }
        with open(args.out, "w") as fh:
            json.dump(payload, fh, indent=2)
    return 0 if (sol.certified or args.mode != "exact" and sol.termination == "converged") else 2


def cmd_maximin(args):
    mdp, R, _ = _load(args.instance)
    sol = maximin(mdp, R)
    print(f"maximin security value: {sol.security_value:.6g}")
    print("policy (from occupancy frequencies):")
    _print_policy(mdp, sol.f)
    if args.out:
        payload = {
            "security_value": sol.security_value,
            "occupancy": list(map(float, sol.f)),
            "worst_case_reward": list(map(float, sol.worst_case_reward)),
        }
        with open(args.out, "w") as fh:
            json.dump(payload, fh, indent=2)
    return 0


def cmd_elicit(args):
    mdp, R, r_true = _load(args.instance)
    if r_true is None:
        print("error: r_true: instance has no true reward; simulated elicitation needs one",
              file=sys.stderr)
        return 1
    session = ElicitationSession(
        mdp,
        R,
        criterion=args.criterion,
        strategy=args.strategy,
        solver_mode=args.mode,
        metric_mode=args.metric_mode,
        tau=args.tau,
        tau_fraction=args.tau_fraction,
        budget=args.budget,
        user=SimulatedUser(np.asarray(r_true)),
    )
    trace, _ = run_elicitation(session)
    last = trace[-1]
    print(f"stopped: {session.terminated} after {len(session.query_log)} queries")
    print(f"  max regret {last.max_regret:.6g}, true regret {last.true_regret:.6g}, "
          f"chi {last.chi:.6g}, distinct pairs {last.distinct_pairs}/{mdp.n_pairs}")
    if args.out:
        write_metric_trace(args.out, trace)
        print(f"metric trace written to {args.out}")
    return 0


def cmd_experiment(args):
    plan = ExperimentPlan(
        procedures=tuple(args.procedures.split(",")),
        repetitions=args.reps,
        seed=args.seed,
        n=args.n,
        k=args.k,
        domain=args.domain,
        instance_file=args.instance,
        solver_mode=args.mode,
        metric_mode=args.metric_mode,
        tau_fraction=args.tau_fraction,
        budget=args.budget,
        out_dir=args.out,
        jobs=args.jobs,
    )
    summary = run_experiment(plan)
    for name, entry in summary["procedures"].items():
        queries = entry.get("mean_queries")
        chi = entry.get("mean_final_chi_ratio")
        print(f"{name}: reps {entry['repetitions']}, failures {len(entry['failures'])}"
              + (f", mean queries {queries:.1f}, final chi ratio {chi:.3f}" if queries is not None else ""))
    print(f"summary written to {plan.out_dir}/summary.json")
    return 0


def cmd_gen_random(args):
    spec = RandomMdpSpec(
        n=args.n, k=args.k, seed=args.seed,
        reward_min=args.reward_min, reward_max=args.reward_max,
        width_scale=args.width_scale, gamma=args.gamma,
    )
    mdp, R, r_true = gen_random(spec)
    save_instance(args.out, mdp, R, r_true)
    print(f"wrote {args.out}: n={mdp.n} k={mdp.k} chi={float(np.sum(R.hi - R.lo)):.4g}")
    return 0


def cmd_gen_autonomic(args):
    spec = AutonomicSpec(
        servers=args.servers, units=args.units, demand_levels=args.demands,
        kappa=args.kappa, seed=args.seed, monotonic=args.monotonic, gamma=args.gamma,
    )
    mdp, R, r_true = gen_autonomic(spec)
    save_instance(args.out, mdp, R, r_true)
    print(f"wrote {args.out}: n={mdp.n} k={mdp.k} (allocations x demand states)")
    return 0


def cmd_serve(args):
    from .server import make_server

    server = make_server(
        host=args.host, port=args.port, state_dir=args.state_dir, static_dir=args.static_dir
    )
    host, port = server.server_address[:2]
    print(f"serving on http://{host}:{port} "
          f"(state dir: {args.state_dir or 'none'}, static: {args.static_dir or 'none'})",
          flush=True)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()
    return 0


def build_parser():
    p = argparse.ArgumentParser(prog="irmdp",
                                description="Robust MDP planning and reward elicitation "
                                            "under imprecise rewards")
    sub = p.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("solve", help="minimax-regret policy for an instance")
    _add_instance_arg(sp)
    sp.add_argument("--mode", choices=["exact", "relaxed", "alternating"], default="exact")
    sp.add_argument("--tolerance", type=float, default=1e-6)
    sp.add_argument("--max-iterations", type=int, default=200)
    sp.add_argument("--time-limit", type=float, default=None)
    sp.add_argument("--certify", action="store_true",
                    help="attach an exact upper bound in relaxed/alternating modes")
    sp.add_argument("--trace-out", help="write constraint-generation trace CSV")
    sp.add_argument("--out", help="write solution JSON")
    sp.set_defaults(func=cmd_solve)

    sp = sub.add_parser("maximin", help="maximin (security) policy for an instance")
    _add_instance_arg(sp)
    sp.add_argument("--out", help="write solution JSON")
    sp.set_defaults(func=cmd_maximin)

    sp = sub.add_parser("elicit", help="run simulated elicitation on an instance")
    _add_instance_arg(sp)
    sp.add_argument("--criterion", choices=["mmr", "maximin"], default="mmr")
    sp.add_argument("--strategy", choices=["hlg", "cs"], default="cs")
    sp.add_argument("--mode", choices=["exact", "relaxed", "alternating"], default="relaxed")
    sp.add_argument("--metric-mode", choices=["exact", "relaxed", "alternating"], default="exact")
    sp.add_argument("--tau", type=float, default=None)
    sp.add_argument("--tau-fraction", type=float, default=None)
    sp.add_argument("--budget", type=int, default=None)
    sp.add_argument("--out", help="write metric trace CSV")
    sp.set_defaults(func=cmd_elicit)

    sp = sub.add_parser("experiment", help="batch elicitation across procedures")
    sp.add_argument("--procedures", default="MMR-CS,MMR-HLG,MM-CS,MM-HLG",
                    help=f"comma list from {sorted(PROCEDURES)}")
    sp.add_argument("--reps", type=int, default=1)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--n", type=int, default=10)
    sp.add_argument("--k", type=int, default=5)
    sp.add_argument("--domain", choices=["random", "autonomic", "file"], default="random")
    sp.add_argument("--instance", help="instance file when --domain file")
    sp.add_argument("--mode", choices=["exact", "relaxed", "alternating"], default="relaxed")
    sp.add_argument("--metric-mode", choices=["exact", "relaxed", "alternating"], default="exact")
    sp.add_argument("--tau-fraction", type=float, default=0.01)
    sp.add_argument("--budget", type=int, default=None)
    sp.add_argument("--jobs", type=int, default=1)
    sp.add_argument("--out", default="experiment-out")
    sp.set_defaults(func=cmd_experiment)

    sp = sub.add_parser("gen-random", help="generate a random semi-sparse instance")
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--k", type=int, required=True)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--reward-min", type=float, default=0.0)
    sp.add_argument("--reward-max", type=float, default=10.0)
    sp.add_argument("--width-scale", type=float, default=1.0)
    sp.add_argument("--gamma", type=float, default=0.95)
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_gen_random)

    sp = sub.add_parser("gen-autonomic", help="generate a resource-allocation instance")
    sp.add_argument("--servers", type=int, default=2)
    sp.add_argument("--units", type=int, default=3)
    sp.add_argument("--demands", type=int, default=3)
    sp.add_argument("--kappa", type=float, default=0.5)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--monotonic", action="store_true")
    sp.add_argument("--gamma", type=float, default=0.95)
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_gen_autonomic)

    sp = sub.add_parser("serve", help="run the elicitation HTTP service")
    sp.add_argument("--host", default="127.0.0.1")
    sp.add_argument("--port", type=int, default=8000)
    sp.add_argument("--state-dir", default=None,
                    help="directory for session snapshots (sessions survive restarts)")
    sp.add_argument("--static-dir", default=None, help="directory of UI assets to serve at /")
    sp.set_defaults(func=cmd_serve)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
