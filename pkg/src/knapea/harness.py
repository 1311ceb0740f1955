"""Batch experiment runner.

An experiment is described declaratively (usually as a JSON file): an
instance source, an algorithm template, a trial count, a master seed,
and a success predicate.  Per-trial seeds are derived from the master
seed with the documented splitting function, so a report is a pure
function of its config.  The optimum is computed once per experiment by
an exact oracle; every trial is scored against it.

Success predicates have two layers: a per-trial test (on final fitness
or final approximation ratio, against an absolute value, a multiple of
OPT, or the greedy baseline) and an aggregate test on the fraction of
successful trials.  The report records both; run_experiment never
raises just because a predicate fails; that is the caller's decision
(the CLI turns it into the exit code).
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

from .core import (
    Bitstring,
    KnapsackInstance,
    Rational,
    as_rational,
    format_rational,
    load_instance,
)
from .engines import FAMILIES, AlgorithmConfig, InitMode, run
from .errors import ConfigError, OracleLimitError
from .generators import gen_prop1, gen_prop3, gen_random, gen_section5
from .operators import RepairMixture
from .oracles import GreedyBaseline, OptimumCertificate, greedy_baseline, solve
from .rng import derive_seed

_OPS = {
    ">=": lambda a, b: a >= b,
    ">": lambda a, b: a > b,
    "<=": lambda a, b: a <= b,
    "<": lambda a, b: a < b,
}

METRIC_FITNESS = "final_fitness"
METRIC_RATIO = "final_ratio"


@dataclass(frozen=True)
class SuccessSpec:
    """Per-trial predicate plus an aggregate bound on the success fraction."""

    metric: str
    op: str
    value: object  # Fraction | ("opt_times", Fraction) | "greedy_max"
    aggregate_op: str
    aggregate_fraction: Fraction

    def __post_init__(self):
        if self.metric not in (METRIC_FITNESS, METRIC_RATIO):
            raise ConfigError(f"unknown success metric {self.metric!r}")
        if self.op not in _OPS or self.aggregate_op not in _OPS:
            raise ConfigError("success ops must be one of >=, >, <=, <")

    def needs_opt(self) -> bool:
        return self.metric == METRIC_RATIO or isinstance(self.value, tuple)

    def resolve_value(
        self, opt: Optional[OptimumCertificate], greedy: GreedyBaseline
    ) -> Rational:
        if isinstance(self.value, tuple):
            return opt.value * self.value[1]
        if self.value == "greedy_max":
            return greedy.value
        return self.value

    @classmethod
    def from_json_dict(cls, d: dict) -> "SuccessSpec":
        value = d["value"]
        if isinstance(value, dict):
            value = ("opt_times", as_rational(value["opt_times"]))
        elif value != "greedy_max":
            value = as_rational(value)
        return cls(
            metric=d.get("metric", METRIC_FITNESS),
            op=d.get("op", ">="),
            value=value,
            aggregate_op=d.get("aggregate_op", ">="),
            aggregate_fraction=as_rational(d.get("aggregate_fraction", 1)),
        )


@dataclass(frozen=True)
class ExperimentConfig:
    name: str
    instance_spec: dict
    algorithm_spec: dict
    trials: int
    master_seed: int
    success: Optional[SuccessSpec] = None
    stop_at_opt: bool = True

    def __post_init__(self):
        if self.trials < 0:
            raise ConfigError("trials must be >= 0")

    @classmethod
    def from_json_dict(cls, d: dict) -> "ExperimentConfig":
        try:
            return cls(
                name=d.get("name", "experiment"),
                instance_spec=dict(d["instance"]),
                algorithm_spec=dict(d["algorithm"]),
                trials=int(d["trials"]),
                master_seed=int(d["master_seed"]),
                success=(
                    SuccessSpec.from_json_dict(d["success"])
                    if d.get("success")
                    else None
                ),
                stop_at_opt=bool(d.get("stop_at_opt", True)),
            )
        except KeyError as exc:
            raise ConfigError(f"experiment config is missing key {exc}") from exc

    @classmethod
    def from_file(cls, path) -> "ExperimentConfig":
        with open(path) as fh:
            return cls.from_json_dict(json.load(fh))


def build_instance(spec: dict) -> KnapsackInstance:
    """Materialize the instance named by an experiment's instance block."""
    if "file" in spec:
        return load_instance(spec["file"])
    family = spec.get("family")
    if family == "prop1":
        return gen_prop1(int(spec["n"]), as_rational(spec["alpha"]))
    if family == "prop3":
        return gen_prop3(int(spec["n"]), as_rational(spec["alpha"]))
    if family == "section5":
        return gen_section5(spec["which"])
    if family == "random":
        return gen_random(
            int(spec["n"]),
            int(spec.get("profit_max", 100)),
            int(spec.get("weight_max", 100)),
            as_rational(spec.get("cap_fraction", Fraction(1, 2))),
            int(spec["seed"]),
        )
    raise ConfigError(f"unknown instance spec: {spec!r}")


def _parse_mixture(repair) -> RepairMixture:
    if isinstance(repair, str):
        return RepairMixture.singleton(repair)
    if isinstance(repair, (list, tuple)):
        if all(isinstance(m, str) for m in repair):
            return RepairMixture.uniform(tuple(repair))
        return RepairMixture(
            tuple((m, as_rational(prob)) for m, prob in repair)
        )
    raise ConfigError(f"cannot parse repair mixture from {repair!r}")


def _parse_init(init) -> InitMode:
    if init is None or init == "random":
        return InitMode.random()
    if init == "zero":
        return InitMode.zero()
    if isinstance(init, dict):
        if "file" in init:
            return InitMode.from_file(init["file"])
        if "bits" in init:
            return InitMode.from_bitstrings(
                tuple(Bitstring.from_text(b) for b in init["bits"])
            )
    raise ConfigError(f"cannot parse init mode from {init!r}")


def build_algorithm(
    spec: dict,
    seed: int,
    stop_value: Optional[Rational] = None,
    first_hit_thresholds: tuple = (),
) -> AlgorithmConfig:
    family = spec.get("family")
    if family not in FAMILIES:
        raise ConfigError(f"unknown algorithm family {family!r}")
    return AlgorithmConfig(
        family=family,
        repair=_parse_mixture(spec["repair"]),
        pop_size=int(spec["pop_size"]),
        seed=seed,
        budget=int(spec["budget"]),
        init=_parse_init(spec.get("init")),
        stop_value=stop_value,
        first_hit_thresholds=first_hit_thresholds,
    )


@dataclass(frozen=True)
class TrialRecord:
    index: int
    seed: int
    n_evals: int
    final_f: Rational
    final_ratio: Optional[Rational]
    first_hit_half: Optional[int]
    first_hit_opt: Optional[int]
    success: Optional[bool]


@dataclass(frozen=True)
class ExperimentReport:
    name: str
    status: str  # "ok" or "oracle_unavailable"
    master_seed: int
    instance_spec: dict
    algorithm_spec: dict
    n_items: int
    opt_value: Optional[Rational]
    opt_witness: Optional[Bitstring]
    greedy_value: Rational
    a_star: Bitstring
    b_star: Bitstring
    success_threshold: Optional[Rational]
    trials: tuple[TrialRecord, ...]
    success_count: Optional[int]
    success_fraction: Optional[Rational]
    min_ratio: Optional[Rational]
    max_ratio: Optional[Rational]
    hit_opt_count: Optional[int]
    median_evals_to_opt: Optional[int]
    overall_pass: bool

    def to_json_dict(self) -> dict:
        def frac(x):
            return None if x is None else format_rational(x)

        return {
            "name": self.name,
            "status": self.status,
            "master_seed": self.master_seed,
            "instance": self.instance_spec,
            "algorithm": self.algorithm_spec,
            "n_items": self.n_items,
            "opt_value": frac(self.opt_value),
            "opt_witness": None if self.opt_witness is None else str(self.opt_witness),
            "greedy_value": frac(self.greedy_value),
            "a_star": str(self.a_star),
            "b_star": str(self.b_star),
            "success_threshold": frac(self.success_threshold),
            "trials": [
                {
                    "index": t.index,
                    "seed": t.seed,
                    "n_evals": t.n_evals,
                    "final_f": frac(t.final_f),
                    "final_ratio": frac(t.final_ratio),
                    "first_hit_half": t.first_hit_half,
                    "first_hit_opt": t.first_hit_opt,
                    "success": t.success,
                }
                for t in self.trials
            ],
            "aggregates": {
                "success_count": self.success_count,
                "success_fraction": frac(self.success_fraction),
                "min_ratio": frac(self.min_ratio),
                "max_ratio": frac(self.max_ratio),
                "hit_opt_count": self.hit_opt_count,
                "median_evals_to_opt": self.median_evals_to_opt,
            },
            "overall_pass": self.overall_pass,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), indent=2, sort_keys=True) + "\n"

    def to_text_table(self) -> str:
        lines = []
        lines.append(f"experiment: {self.name}")
        lines.append(f"status: {self.status}")
        lines.append(
            f"opt = {format_rational(self.opt_value) if self.opt_value is not None else 'n/a'}"
            f"  greedy = {format_rational(self.greedy_value)}"
            f"  threshold = "
            f"{format_rational(self.success_threshold) if self.success_threshold is not None else 'n/a'}"
        )
        if self.success_fraction is not None:
            lines.append(
                f"success: {self.success_count}/{len(self.trials)}"
                f" = {format_rational(self.success_fraction)}"
                f"  overall_pass = {self.overall_pass}"
            )
        header = f"{'trial':>5} {'seed':>20} {'evals':>9} {'final_f':>12} {'ratio':>10} {'hit@half':>9} {'hit@opt':>9} {'ok':>3}"
        lines.append(header)
        lines.append("-" * len(header))
        for t in self.trials:
            lines.append(
                f"{t.index:>5} {t.seed:>20} {t.n_evals:>9}"
                f" {format_rational(t.final_f):>12}"
                f" {format_rational(t.final_ratio) if t.final_ratio is not None else 'n/a':>10}"
                f" {t.first_hit_half if t.first_hit_half is not None else '-':>9}"
                f" {t.first_hit_opt if t.first_hit_opt is not None else '-':>9}"
                f" {'y' if t.success else ('n' if t.success is not None else '-'):>3}"
            )
        return "\n".join(lines) + "\n"


def _lower_median(values: list[int]) -> Optional[int]:
    if not values:
        return None
    values = sorted(values)
    return values[(len(values) - 1) // 2]


def run_experiment(config: ExperimentConfig) -> ExperimentReport:
    inst = build_instance(config.instance_spec)
    greedy = greedy_baseline(inst)

    opt: Optional[OptimumCertificate]
    try:
        opt = solve(inst)
    except OracleLimitError:
        opt = None

    # stop_at_opt is only an optimization; a missing oracle disables it.
    # The trials are skipped only when the success predicate itself
    # cannot be evaluated without the optimum.
    needs_opt = config.success is not None and config.success.needs_opt()
    if opt is None and needs_opt:
        return ExperimentReport(
            name=config.name,
            status="oracle_unavailable",
            master_seed=config.master_seed,
            instance_spec=config.instance_spec,
            algorithm_spec=config.algorithm_spec,
            n_items=inst.n,
            opt_value=None,
            opt_witness=None,
            greedy_value=greedy.value,
            a_star=greedy.a_star,
            b_star=greedy.b_star,
            success_threshold=None,
            trials=(),
            success_count=None,
            success_fraction=None,
            min_ratio=None,
            max_ratio=None,
            hit_opt_count=None,
            median_evals_to_opt=None,
            overall_pass=False,
        )

    threshold = (
        config.success.resolve_value(opt, greedy) if config.success else None
    )
    thresholds = (
        (opt.value / 2, opt.value) if opt is not None else ()
    )
    stop_value = opt.value if (config.stop_at_opt and opt is not None) else None

    records = []
    for trial in range(config.trials):
        seed = derive_seed(config.master_seed, trial)
        cfg = build_algorithm(
            config.algorithm_spec,
            seed=seed,
            stop_value=stop_value,
            first_hit_thresholds=thresholds,
        )
        trace = run(inst, cfg)
        final_f = trace.best_f
        ratio = final_f / opt.value if opt is not None else None
        if config.success is not None:
            observed = final_f if config.success.metric == METRIC_FITNESS else ratio
            success = _OPS[config.success.op](observed, threshold)
        else:
            success = None
        records.append(
            TrialRecord(
                index=trial,
                seed=seed,
                n_evals=trace.n_evals,
                final_f=final_f,
                final_ratio=ratio,
                first_hit_half=trace.first_hit(thresholds[0]) if thresholds else None,
                first_hit_opt=trace.first_hit(thresholds[1]) if thresholds else None,
                success=success,
            )
        )

    ratios = [r.final_ratio for r in records if r.final_ratio is not None]
    hits = [r.first_hit_opt for r in records if r.first_hit_opt is not None]
    if config.success is not None:
        success_count = sum(1 for r in records if r.success)
        if config.trials > 0:
            success_fraction = Fraction(success_count, config.trials)
            overall_pass = _OPS[config.success.aggregate_op](
                success_fraction, config.success.aggregate_fraction
            )
        else:
            success_fraction = None
            overall_pass = True
    else:
        success_count = None
        success_fraction = None
        overall_pass = True

    return ExperimentReport(
        name=config.name,
        status="ok",
        master_seed=config.master_seed,
        instance_spec=config.instance_spec,
        algorithm_spec=config.algorithm_spec,
        n_items=inst.n,
        opt_value=opt.value if opt is not None else None,
        opt_witness=opt.witness if opt is not None else None,
        greedy_value=greedy.value,
        a_star=greedy.a_star,
        b_star=greedy.b_star,
        success_threshold=threshold,
        trials=tuple(records),
        success_count=success_count,
        success_fraction=success_fraction,
        min_ratio=min(ratios) if ratios else None,
        max_ratio=max(ratios) if ratios else None,
        hit_opt_count=len(hits) if thresholds else None,
        median_evals_to_opt=_lower_median(hits),
        overall_pass=overall_pass,
    )
