"""Command line interface.

Subcommands:
  gen         write an instance file (trap families, worked 5-item
              instances, or seeded random)
  solve       run the exact oracles and the greedy baseline on a file
  run         one seeded EA run, with an optional per-generation trace
  experiment  batch runner driven by a JSON config; exit code reports
              whether the declared success predicate held
  bench       time the generation kernels under the active backend,
              optionally against the other backend
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import subprocess
import sys
import time

from . import __version__
from .backend import ACTIVE_BACKEND, BACKEND_ENV_VAR
from .core import (
    as_rational,
    format_rational,
    load_instance,
    save_instance,
)
from .engines import AlgorithmConfig, InitMode, run
from .errors import KnapeaError
from .generators import gen_prop1, gen_prop3, gen_random, gen_section5
from .harness import ExperimentConfig, run_experiment
from .operators import (
    PROFIT_GREEDY,
    RANDOM_REPAIR,
    RATIO_GREEDY,
    RepairMixture,
)
from .oracles import brute_force_opt, dp_opt, greedy_baseline, solve

ALGO_PRESETS = {
    "pure-profit": ("pure", RepairMixture.singleton(PROFIT_GREEDY)),
    "pure-ratio": ("pure", RepairMixture.singleton(RATIO_GREEDY)),
    "pure-random": ("pure", RepairMixture.singleton(RANDOM_REPAIR)),
    "mixed2": ("mixed", RepairMixture.uniform((RATIO_GREEDY, PROFIT_GREEDY))),
    "mixed3": (
        "mixed",
        RepairMixture.uniform((RATIO_GREEDY, PROFIT_GREEDY, RANDOM_REPAIR)),
    ),
    "moea": ("moea", RepairMixture.uniform((RATIO_GREEDY, PROFIT_GREEDY))),
}


def _cmd_gen(args) -> int:
    if args.family == "prop1":
        inst = gen_prop1(args.n, as_rational(args.alpha))
    elif args.family == "prop3":
        inst = gen_prop3(args.n, as_rational(args.alpha))
    elif args.family == "section5":
        inst = gen_section5(args.which)
    else:
        inst = gen_random(
            args.n,
            args.profit_max,
            args.weight_max,
            as_rational(args.cap_fraction),
            args.seed,
        )
    if args.out:
        save_instance(inst, args.out)
    else:
        from .core import dumps_instance

        sys.stdout.write(dumps_instance(inst))
    return 0


def _cmd_solve(args) -> int:
    inst = load_instance(args.instance)
    if args.method == "brute":
        cert = brute_force_opt(inst)
    elif args.method == "dp":
        cert = dp_opt(inst)
    else:
        cert = solve(inst)
    greedy = greedy_baseline(inst)
    out = {
        "opt_value": format_rational(cert.value),
        "witness": str(cert.witness),
        "greedy_value": format_rational(greedy.value),
        "a_star": str(greedy.a_star),
        "b_star": str(greedy.b_star),
    }
    print(json.dumps(out, indent=2, sort_keys=True))
    return 0


def _parse_init_flag(text: str) -> InitMode:
    if text == "random":
        return InitMode.random()
    if text == "zero":
        return InitMode.zero()
    if text.startswith("file:"):
        return InitMode.from_file(text[len("file:") :])
    raise KnapeaError(f"--init must be random, zero, or file:PATH; got {text!r}")


def _cmd_run(args) -> int:
    inst = load_instance(args.instance)
    family, mixture = ALGO_PRESETS[args.algo]
    cfg = AlgorithmConfig(
        family=family,
        repair=mixture,
        pop_size=args.pop_size,
        seed=args.seed,
        budget=args.budget,
        init=_parse_init_flag(args.init),
        stop_value=as_rational(args.stop_value) if args.stop_value else None,
        first_hit_thresholds=tuple(as_rational(t) for t in args.threshold),
    )
    trace = run(inst, cfg)
    if args.trace:
        with open(args.trace, "w") as fh:
            for eval_count, best_f in trace.generations():
                fh.write(
                    json.dumps(
                        {"eval_count": eval_count, "best_f": format_rational(best_f)}
                    )
                    + "\n"
                )
    summary = {
        "algo": args.algo,
        "seed": trace.rng_seed,
        "pop_size": trace.pop_size,
        "budget": trace.budget,
        "n_evals": trace.n_evals,
        "best_f": format_rational(trace.best_f),
        "best_genome": str(trace.final_best.genome),
        "first_hits": {
            format_rational(t): hit for t, hit in trace.first_hits
        },
        "improvements": [
            {"eval_count": at, "best_f": format_rational(v)}
            for at, v in trace.improvement_points
        ],
    }
    print(json.dumps(summary, indent=2, sort_keys=True))
    return 0


def _cmd_experiment(args) -> int:
    config = ExperimentConfig.from_file(args.config)
    report = run_experiment(config)
    if args.report:
        with open(args.report, "w") as fh:
            fh.write(report.to_json())
    if not args.quiet:
        sys.stdout.write(report.to_text_table())
    return 0 if report.overall_pass else 1


def _bench_workload(scale: int) -> dict:
    """Fixed seeded workload; returns timings plus a result digest.

    The digest covers every improvement point and final genome, so two
    backends can be checked for bit-identical behavior, not just speed.
    """
    jobs = []
    inst_trap = gen_prop3(21, as_rational("1/2"))
    from .generators import prop3_local_optimum

    jobs.append(
        (
            "pure-profit/prop3(21)",
            inst_trap,
            AlgorithmConfig(
                family="pure",
                repair=RepairMixture.singleton(PROFIT_GREEDY),
                pop_size=10,
                seed=99991,
                budget=50_000 * scale,
                init=InitMode.from_bitstrings([prop3_local_optimum(21)]),
            ),
        )
    )
    inst_rand = gen_random(10, 100, 100, as_rational("1/2"), seed=4242)
    jobs.append(
        (
            "moea/random(n=10,N=30)",
            inst_rand,
            AlgorithmConfig(
                family="moea",
                repair=RepairMixture.uniform((RATIO_GREEDY, PROFIT_GREEDY)),
                pop_size=30,
                seed=99992,
                budget=6_000 * scale,
            ),
        )
    )

    digest = hashlib.sha256()
    timings = {}
    for name, inst, cfg in jobs:
        # warm-up run compiles the kernels so the timing is steady-state
        run(inst, AlgorithmConfig(
            family=cfg.family,
            repair=cfg.repair,
            pop_size=cfg.pop_size,
            seed=cfg.seed,
            budget=cfg.pop_size + 10,
            init=cfg.init,
        ))
        t0 = time.perf_counter()
        trace = run(inst, cfg)
        timings[name] = time.perf_counter() - t0
        digest.update(name.encode())
        digest.update(str(trace.n_evals).encode())
        for at, v in trace.improvement_points:
            digest.update(f"{at}:{v}".encode())
        digest.update(str(trace.final_best.genome).encode())
    return {
        "backend": ACTIVE_BACKEND,
        "timings": timings,
        "digest": digest.hexdigest(),
    }


def _cmd_bench(args) -> int:
    result = _bench_workload(args.scale)
    if args.json:
        print(json.dumps(result, indent=2, sort_keys=True))
        return 0
    print(f"backend: {result['backend']}")
    for name, seconds in result["timings"].items():
        print(f"  {name:<28} {seconds:8.3f} s")
    print(f"result digest: {result['digest']}")
    if not args.compare:
        return 0

    other = "python" if ACTIVE_BACKEND == "numba" else "numba"
    env = dict(os.environ)
    env[BACKEND_ENV_VAR] = other
    proc = subprocess.run(
        [sys.executable, "-m", "knapea", "bench", "--scale", str(args.scale), "--json"],
        capture_output=True,
        text=True,
        env=env,
    )
    if proc.returncode != 0:
        sys.stderr.write(proc.stderr)
        return 1
    theirs = json.loads(proc.stdout)
    print(f"backend: {theirs['backend']}")
    for name, seconds in theirs["timings"].items():
        mine = result["timings"][name]
        speedup = seconds / mine if mine > 0 else float("inf")
        print(f"  {name:<28} {seconds:8.3f} s   ({speedup:5.1f}x vs {ACTIVE_BACKEND})")
    if theirs["digest"] == result["digest"]:
        print("result digests match: backends are bit-identical on this workload")
        return 0
    print("DIGEST MISMATCH: backends disagree", file=sys.stderr)
    return 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="knapea",
        description="Exact-arithmetic laboratory for (N+1) evolutionary "
        "algorithms on the 0-1 knapsack problem",
    )
    parser.add_argument("--version", action="version", version=f"knapea {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate an instance file")
    p.add_argument(
        "--family",
        required=True,
        choices=["prop1", "prop3", "section5", "random"],
    )
    p.add_argument("--n", type=int, default=8)
    p.add_argument("--alpha", default="1/2", help="rational like 1/2")
    p.add_argument("--which", default="A", help="section5 instance: A, B, or C")
    p.add_argument("--profit-max", type=int, default=100)
    p.add_argument("--weight-max", type=int, default=100)
    p.add_argument("--cap-fraction", default="1/2")
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--out", help="output path (default: stdout)")
    p.set_defaults(func=_cmd_gen)

    p = sub.add_parser("solve", help="exact optimum and greedy baseline")
    p.add_argument("instance")
    p.add_argument("--method", choices=["auto", "brute", "dp"], default="auto")
    p.set_defaults(func=_cmd_solve)

    p = sub.add_parser("run", help="one seeded EA run")
    p.add_argument("--instance", required=True)
    p.add_argument("--algo", required=True, choices=sorted(ALGO_PRESETS))
    p.add_argument("--pop-size", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--budget", type=int, required=True)
    p.add_argument("--init", default="random", help="random, zero, or file:PATH")
    p.add_argument("--trace", help="write per-generation JSON lines here")
    p.add_argument("--stop-value", help="stop early once best fitness reaches this")
    p.add_argument(
        "--threshold",
        action="append",
        default=[],
        help="record the first evaluation whose best fitness reaches this "
        "(repeatable)",
    )
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("experiment", help="batch trials from a JSON config")
    p.add_argument("--config", required=True)
    p.add_argument("--report", help="write the JSON report here")
    p.add_argument("--quiet", action="store_true")
    p.set_defaults(func=_cmd_experiment)

    p = sub.add_parser("bench", help="time the kernels under the active backend")
    p.add_argument("--scale", type=int, default=1, help="workload multiplier")
    p.add_argument("--json", action="store_true", help="machine-readable output")
    p.add_argument(
        "--compare",
        action="store_true",
        help="also run the other backend in a subprocess and compare",
    )
    p.set_defaults(func=_cmd_bench)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (KnapeaError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
