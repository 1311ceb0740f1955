"""knapea: an exact-arithmetic laboratory for (N+1) evolutionary
algorithms on the 0-1 knapsack problem.

The package provides exact oracles (brute force, dynamic programming,
and the two-candidate greedy 1/2-approximation), the pure-strategy,
mixed-strategy, and helper-objective (N+1) EA families with seeded
deterministic traces, adversarial trap-instance generators, and a batch
experiment harness behind the `knapea` CLI.
"""

__version__ = "0.1.0"

from .backend import ACTIVE_BACKEND, BACKEND_ENV_VAR
from .core import (
    Bitstring,
    KnapsackInstance,
    Rational,
    as_rational,
    dense_ranks,
    dumps_instance,
    fitness,
    format_rational,
    is_feasible,
    load_instance,
    loads_instance,
    profit_ranks,
    ratio_ranks,
    save_instance,
    total_weight,
)
from .engines import (
    AlgorithmConfig,
    InitMode,
    RunTrace,
    drift_distance,
    run,
)
from .errors import (
    ConfigError,
    FeasibilityError,
    KnapeaError,
    OracleLimitError,
    ShapeError,
)
from .generators import (
    gen_prop1,
    gen_prop3,
    gen_random,
    gen_section5,
    prop1_local_optimum,
    prop3_local_optimum,
)
from .harness import (
    ExperimentConfig,
    ExperimentReport,
    SuccessSpec,
    TrialRecord,
    build_instance,
    run_experiment,
)
from .operators import (
    PROFIT_GREEDY,
    RANDOM_REPAIR,
    RATIO_GREEDY,
    REPAIR_METHODS,
    Individual,
    RepairMixture,
    bitwise_mutation,
    helper_values,
    make_individual,
    multi_criteria_select,
    repair,
    truncation_select,
)
from .oracles import (
    GreedyBaseline,
    OptimumCertificate,
    approximation_ratio,
    brute_force_opt,
    dp_opt,
    greedy_baseline,
    solve,
)
from .rng import GENERATOR_NAME, SplitMix64, derive_seed
