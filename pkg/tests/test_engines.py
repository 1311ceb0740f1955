"""The generational engines: stream-exact equivalence with the operator
layer, init modes, early stopping, tracing, and backend agreement.
"""

import json
import os
import subprocess
import sys
from fractions import Fraction

import pytest

import knapea.engines as engines
from knapea.core import Bitstring, KnapsackInstance, is_feasible
from knapea.errors import ConfigError, ShapeError
from knapea.generators import (
    gen_prop1,
    gen_prop3,
    gen_random,
    gen_section5,
    prop3_local_optimum,
)
from knapea.engines import AlgorithmConfig, InitMode, RunTrace, drift_distance, run
from knapea.operators import (
    RepairMixture,
    bitwise_mutation,
    make_individual,
    multi_criteria_select,
    repair,
    truncation_select,
)
from knapea.rng import SplitMix64


def reference_run(inst, cfg):
    """The engine loop, recomposed from the operator layer.

    Used as the ground truth for the compiled kernels: every random draw
    must happen in the same order, so improvement points, final
    populations, and final bests must match exactly.
    """
    rng = SplitMix64(cfg.seed)
    n = inst.n
    pop = []
    for j in range(cfg.pop_size):
        if cfg.init.kind == "random":
            genome = Bitstring(tuple(rng.randrange(2) for _ in range(n)))
        elif cfg.init.kind == "zero":
            genome = Bitstring.zeros(n)
        else:
            genome = cfg.init.bits[0] if len(cfg.init.bits) == 1 else cfg.init.bits[j]
        if not is_feasible(inst, genome):
            method = cfg.repair.draw(rng)
            genome = repair(inst, genome, method, rng)
        pop.append(make_individual(inst, genome))
    best = max(ind.f for ind in pop)
    evals = cfg.pop_size
    points = [(evals, best)]
    for _ in range(cfg.budget - cfg.pop_size):
        parent = pop[rng.randrange(cfg.pop_size)]
        child_genome = bitwise_mutation(parent.genome, rng)
        if not is_feasible(inst, child_genome):
            method = cfg.repair.draw(rng)
            child_genome = repair(inst, child_genome, method, rng)
        child = make_individual(inst, child_genome)
        evals += 1
        if cfg.family == "moea":
            pop = multi_criteria_select(pop, child, rng)
        else:
            pop = truncation_select(pop, child, rng)
        if child.f > best:
            best = child.f
            points.append((evals, best))
    return points, pop


CONFIG_GRID = [
    ("pure", RepairMixture.singleton("profit"), 1),
    ("pure", RepairMixture.singleton("ratio"), 4),
    ("pure", RepairMixture.singleton("random"), 3),
    ("mixed", RepairMixture.uniform(("ratio", "profit")), 5),
    ("mixed", RepairMixture.uniform(("ratio", "profit", "random")), 2),
    ("moea", RepairMixture.uniform(("ratio", "profit")), 6),
    ("moea", RepairMixture.uniform(("ratio", "profit")), 7),
]


@pytest.mark.parametrize("family,mixture,pop_size", CONFIG_GRID)
def test_engine_matches_the_operator_loop(family, mixture, pop_size):
    instances = [
        gen_random(9, 50, 50, Fraction(2, 3), seed=7),
        gen_prop3(11, Fraction(1, 2)),
        gen_section5("C"),
    ]
    for inst in instances:
        for seed in (1, 123456789):
            cfg = AlgorithmConfig(
                family=family,
                repair=mixture,
                pop_size=pop_size,
                seed=seed,
                budget=pop_size + 220,
            )
            want_points, want_pop = reference_run(inst, cfg)
            trace = run(inst, cfg)
            assert trace.improvement_points == tuple(want_points)
            assert trace.best_f == max(ind.f for ind in want_pop)
            assert trace.n_evals == cfg.budget


def test_engine_matches_on_prop1_with_fractional_weights():
    inst = gen_prop1(8, Fraction(1, 2))
    cfg = AlgorithmConfig(
        family="mixed",
        repair=RepairMixture.uniform(("ratio", "profit", "random")),
        pop_size=4,
        seed=99,
        budget=300,
    )
    want_points, want_pop = reference_run(inst, cfg)
    trace = run(inst, cfg)
    assert trace.improvement_points == tuple(want_points)
    assert trace.best_f == max(ind.f for ind in want_pop)


class TestInitModes:
    def setup_method(self):
        self.inst = gen_prop3(11, Fraction(1, 2))
        self.mixture = RepairMixture.singleton("profit")

    def _cfg(self, init, pop_size=3, seed=5, budget=400):
        return AlgorithmConfig(
            family="pure",
            repair=self.mixture,
            pop_size=pop_size,
            seed=seed,
            budget=budget,
            init=init,
        )

    def test_zero_init_starts_at_fitness_zero(self):
        trace = run(self.inst, self._cfg(InitMode.zero()))
        assert trace.improvement_points[0] == (3, Fraction(0))

    def test_zero_init_matches_reference(self):
        cfg = self._cfg(InitMode.zero())
        want_points, _ = reference_run(self.inst, cfg)
        assert run(self.inst, cfg).improvement_points == tuple(want_points)

    def test_single_seeded_bitstring_fills_the_population(self):
        x = prop3_local_optimum(11)
        cfg = self._cfg(InitMode.from_bitstrings([x]))
        trace = run(self.inst, cfg)
        assert trace.improvement_points[0] == (3, Fraction(5))
        want_points, _ = reference_run(self.inst, cfg)
        assert trace.improvement_points == tuple(want_points)

    def test_seeded_infeasible_bitstrings_are_repaired(self):
        cfg = self._cfg(InitMode.from_bitstrings([Bitstring.ones(11)]), pop_size=1)
        trace = run(self.inst, cfg)
        # profit-greedy repair of the full knapsack keeps only item 1
        assert trace.improvement_points[0] == (1, Fraction(5))

    def test_file_init(self, tmp_path):
        path = tmp_path / "seeds.txt"
        path.write_text("# seeded population\n10000000000\n\n01111111111\n00000000000\n")
        cfg = self._cfg(InitMode.from_file(path))
        trace = run(self.inst, cfg)
        assert trace.improvement_points[0] == (3, Fraction(10))

    def test_wrong_seed_count_rejected(self):
        init = InitMode.from_bitstrings([prop3_local_optimum(11)] * 2)
        with pytest.raises(ShapeError):
            run(self.inst, self._cfg(init))

    def test_wrong_length_rejected(self):
        init = InitMode.from_bitstrings([Bitstring.zeros(5)])
        with pytest.raises(ShapeError):
            run(self.inst, self._cfg(init))


class TestConfigValidation:
    def test_bad_values(self):
        mix = RepairMixture.singleton("profit")
        pair = RepairMixture.uniform(("ratio", "profit"))
        with pytest.raises(ConfigError):
            AlgorithmConfig(family="elitist", repair=mix, pop_size=1, seed=0, budget=10)
        with pytest.raises(ConfigError):
            AlgorithmConfig(family="pure", repair=mix, pop_size=0, seed=0, budget=10)
        with pytest.raises(ConfigError):
            AlgorithmConfig(family="moea", repair=pair, pop_size=2, seed=0, budget=10)
        with pytest.raises(ConfigError):
            AlgorithmConfig(family="pure", repair=mix, pop_size=5, seed=0, budget=4)
        with pytest.raises(ConfigError):
            AlgorithmConfig(family="pure", repair=pair, pop_size=1, seed=0, budget=10)
        with pytest.raises(ConfigError):
            AlgorithmConfig(family="mixed", repair=mix, pop_size=1, seed=0, budget=10)

    def test_seed_is_reduced_to_64_bits(self):
        mix = RepairMixture.singleton("profit")
        cfg = AlgorithmConfig(
            family="pure", repair=mix, pop_size=1, seed=(1 << 64) + 3, budget=10
        )
        assert cfg.seed == 3


class TestEarlyStop:
    def test_run_stops_once_the_target_is_reached(self):
        inst = gen_section5("A")
        cfg = AlgorithmConfig(
            family="pure",
            repair=RepairMixture.singleton("profit"),
            pop_size=1,
            seed=11,
            budget=50_000,
            stop_value=Fraction(24),
        )
        trace = run(inst, cfg)
        assert trace.best_f == 24
        assert trace.n_evals < 50_000
        assert trace.n_evals == trace.improvement_points[-1][0]

    def test_without_stop_the_budget_is_spent(self):
        inst = gen_section5("A")
        cfg = AlgorithmConfig(
            family="pure",
            repair=RepairMixture.singleton("profit"),
            pop_size=1,
            seed=11,
            budget=3000,
        )
        assert run(inst, cfg).n_evals == 3000

    def test_fractional_stop_value_uses_exact_comparison(self):
        # profits are multiples of 1/2; the first best >= 5/4 is 3/2
        inst = KnapsackInstance.of(["1/2", "3/2"], [1, 2], 3)
        cfg = AlgorithmConfig(
            family="pure",
            repair=RepairMixture.singleton("profit"),
            pop_size=1,
            seed=3,
            budget=10_000,
            init=InitMode.zero(),
            stop_value=Fraction(5, 4),
        )
        trace = run(inst, cfg)
        assert trace.best_f >= Fraction(3, 2)
        assert trace.n_evals < 10_000

    def test_stop_value_already_met_at_init(self):
        inst = gen_prop3(11, Fraction(1, 2))
        cfg = AlgorithmConfig(
            family="pure",
            repair=RepairMixture.singleton("profit"),
            pop_size=2,
            seed=1,
            budget=1000,
            init=InitMode.from_bitstrings([prop3_local_optimum(11)]),
            stop_value=Fraction(5),
        )
        trace = run(inst, cfg)
        assert trace.n_evals == 2  # nothing after initialization


class TestTrace:
    def make_trace(self, **overrides) -> RunTrace:
        inst = gen_random(10, 60, 60, Fraction(1, 2), seed=21)
        base = dict(
            family="mixed",
            repair=RepairMixture.uniform(("ratio", "profit")),
            pop_size=4,
            seed=77,
            budget=2500,
        )
        base.update(overrides)
        return run(inst, AlgorithmConfig(**base))

    def test_improvement_points_are_strictly_monotone(self):
        trace = self.make_trace()
        points = trace.improvement_points
        assert points[0][0] == trace.pop_size
        for (e0, f0), (e1, f1) in zip(points, points[1:]):
            assert e0 < e1
            assert f0 < f1

    def test_best_f_at_steps_between_points(self):
        trace = self.make_trace()
        for at, value in trace.improvement_points:
            assert trace.best_f_at(at) == value
            if at > trace.pop_size:
                assert trace.best_f_at(at - 1) < value
        assert trace.best_f_at(trace.n_evals) == trace.best_f
        with pytest.raises(ShapeError):
            trace.best_f_at(trace.pop_size - 1)

    def test_generations_expand_the_curve(self):
        trace = self.make_trace(budget=300)
        rows = list(trace.generations())
        assert rows[0][0] == trace.pop_size
        assert rows[-1][0] == trace.n_evals
        assert len(rows) == trace.n_evals - trace.pop_size + 1
        for eval_count, best in rows:
            assert best == trace.best_f_at(eval_count)

    def test_first_hits_recorded(self):
        inst = gen_section5("A")
        cfg = AlgorithmConfig(
            family="pure",
            repair=RepairMixture.singleton("profit"),
            pop_size=1,
            seed=11,
            budget=50_000,
            stop_value=Fraction(24),
            first_hit_thresholds=(Fraction(12), Fraction(24)),
        )
        trace = run(inst, cfg)
        assert trace.first_hit(Fraction(24)) == trace.n_evals
        hit_half = trace.first_hit(Fraction(12))
        assert hit_half is not None
        assert hit_half <= trace.n_evals
        with pytest.raises(KeyError):
            trace.first_hit(Fraction(23))

    def test_unreached_threshold_is_none(self):
        trace = self.make_trace(budget=5, first_hit_thresholds=(Fraction(10**9),))
        assert trace.first_hit(Fraction(10**9)) is None

    def test_same_config_reruns_identically(self):
        assert self.make_trace() == self.make_trace()


def test_improvement_log_growth_is_invisible(monkeypatch):
    inst = gen_random(12, 100, 100, Fraction(1, 2), seed=13)
    cfg = AlgorithmConfig(
        family="pure",
        repair=RepairMixture.singleton("ratio"),
        pop_size=1,
        seed=4,
        budget=4000,
        init=InitMode.zero(),
    )
    want = run(inst, cfg)
    assert len(want.improvement_points) >= 3
    monkeypatch.setattr(engines, "IMPROVEMENT_LOG_START", 2)
    assert run(inst, cfg) == want


def test_moea_run_on_a_worked_instance():
    inst = gen_section5("A")
    cfg = AlgorithmConfig(
        family="moea",
        repair=RepairMixture.uniform(("ratio", "profit")),
        pop_size=15,
        seed=2024,
        budget=100_000,
        stop_value=Fraction(24),
    )
    trace = run(inst, cfg)
    assert trace.final_best.f == 24


def test_final_best_is_consistent_with_the_curve():
    for seed in range(5):
        inst = gen_random(8, 40, 40, Fraction(1, 2), seed=seed)
        cfg = AlgorithmConfig(
            family="moea",
            repair=RepairMixture.uniform(("ratio", "profit")),
            pop_size=6,
            seed=seed,
            budget=600,
        )
        trace = run(inst, cfg)
        assert trace.final_best.f == trace.best_f
        assert is_feasible(inst, trace.final_best.genome)


class TestDriftDistance:
    def test_worked_value(self):
        inst = gen_section5("B")  # ratio ranks (2,2,1,1,1)
        pop = [
            make_individual(inst, Bitstring.from_text("10000")),  # h2 = 2
            make_individual(inst, Bitstring.from_text("00100")),  # h2 = 1
        ]
        assert drift_distance(inst, pop) == 0
        assert drift_distance(inst, pop[1:]) == 1

    def test_empty_population_rejected(self):
        with pytest.raises(ShapeError):
            drift_distance(gen_section5("B"), [])


def _trace_fingerprint_script() -> str:
    return (
        "import json\n"
        "from fractions import Fraction\n"
        "import knapea as K\n"
        "from knapea.engines import AlgorithmConfig, run\n"
        "from knapea.backend import ACTIVE_BACKEND\n"
        "rows = []\n"
        "inst = K.gen_random(12, 80, 80, Fraction(3, 5), seed=11)\n"
        "for family, methods, pop in [\n"
        "    ('pure', ('random',), 2),\n"
        "    ('mixed', ('ratio', 'profit', 'random'), 4),\n"
        "    ('moea', ('ratio', 'profit'), 9),\n"
        "]:\n"
        "    mix = (K.RepairMixture.singleton(methods[0]) if len(methods) == 1\n"
        "           else K.RepairMixture.uniform(methods))\n"
        "    cfg = AlgorithmConfig(family=family, repair=mix, pop_size=pop,\n"
        "                          seed=2024, budget=pop + 2500)\n"
        "    t = run(inst, cfg)\n"
        "    rows.append([family, t.n_evals,\n"
        "                 [[a, str(b)] for a, b in t.improvement_points],\n"
        "                 str(t.final_best.genome)])\n"
        "print(json.dumps({'backend': ACTIVE_BACKEND, 'rows': rows}))\n"
    )


def test_backends_produce_identical_traces():
    results = {}
    for backend in ("numba", "python"):
        env = dict(os.environ)
        env["KNAPEA_BACKEND"] = backend
        proc = subprocess.run(
            [sys.executable, "-c", _trace_fingerprint_script()],
            capture_output=True,
            text=True,
            env=env,
        )
        assert proc.returncode == 0, proc.stderr[-2000:]
        payload = json.loads(proc.stdout)
        results[backend] = payload["rows"]
        if backend == "numba" and payload["backend"] != "numba":
            pytest.skip("numba is not importable here")
    assert results["numba"] == results["python"]
