"""Round-robin allocation computed through counted comparison and value queries."""

from .allocators import (
    ALLOCATORS,
    AgentCursorState,
    SortedPrefixState,
    get_allocator,
    rr_fullsort_baseline,
    rr_noisy_comparison,
    rr_noisy_value,
    rr_random,
    rr_reference,
    rr_repeatedmax_baseline,
    rr_worstcase,
    run_allocator,
)
from .analysis import (
    PairReversalSpec,
    SuccessEstimate,
    UnpickedSets,
    check_ef1,
    gen_identical,
    gen_identical_from,
    gen_pair_reversal,
    gen_uniform,
    mc_success_rate,
    scaling_sweep,
    unpicked_sets,
)
from .core import Allocation, Instance, RunReport, bundle_sizes, round_robin_reference, validate_instance
from .errors import *  # noqa: F401,F403
from .oracle import NoiseConfig, QueryOracle, QueryTranscript
from .subroutines import (
    BoostPlan,
    QuantilePartition,
    boost_count,
    boosted_compare,
    find_best,
    majority_value,
    noisy_sort,
    quantiles,
    select_top,
    sort_items,
)

__version__ = "0.1.0"
