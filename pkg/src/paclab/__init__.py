"""Simulation and verification laboratory for learning over finite domains.

Everything is built around exact arithmetic on small discrete
distributions: hypothesis classes are label matrices, errors are inner
products, and conditioning renormalizes mass on an agreement region. On top
of that sit the minimization engine, the disagreeing-pair training loop
with its diagnostics, a hard-instance adversary for proper learners, and a
config-driven experiment runner with reproducible seeded trials.
"""

__version__ = "0.1.0"

from .adversary import (
    AdversaryInstance,
    balls_low_count_rate,
    build_distribution,
    choose_parameters,
    estimate_failure_probability,
    is_failure,
    least_frequent_learner,
    low_count_threshold,
    run_adversary_trials,
    skew_for_domain,
)
from .core import (
    Dataset,
    DiscreteDistribution,
    Hypothesis,
    HypothesisClass,
    RngStream,
    enumerate_class,
    sample_dataset,
    subset_rank,
    subset_unrank,
    vc_dimension_bruteforce,
)
from .engine import (
    DEFAULT_CONSTANTS,
    Schedule,
    TheoryConstants,
    deviation_bound,
    erm,
    erm_reference_rate,
    find_disagreeing_pair,
    find_disagreeing_pair_sampled,
    make_schedule,
    near_optimal_set,
)
from .experts import (
    BREAK_REASONS,
    REASON_COMPLETED,
    REASON_EARLY_EXIT,
    REASON_EMPTY_BLOCK,
    REASON_NO_PAIR,
    CompositeClassifier,
    CoreTrace,
    FailureEventReport,
    IterationEvents,
    IterationRecord,
    ProgressRecord,
    ProgressReport,
    TrainResult,
    core_train,
    diagnose_failure_events,
    exact_progress_report,
    predict,
    train,
)
from .fixtures import (
    Fixture,
    available_fixtures,
    dsubset_adversary,
    make_fixture,
    realizable_uniform,
    two_experts,
)
from .identities import CHECKS, run_identity_chunk
from .measures import (
    ConditioningResult,
    condition_on_agreement,
    condition_on_disagreement,
    determinize,
    empirical_disagreement,
    empirical_error,
    fraction_predicting_positive,
    mass_predicting_positive,
    split_class,
    true_disagreement,
    true_error,
)

__all__ = [
    "__version__",
    "AdversaryInstance",
    "balls_low_count_rate",
    "build_distribution",
    "choose_parameters",
    "estimate_failure_probability",
    "is_failure",
    "least_frequent_learner",
    "low_count_threshold",
    "run_adversary_trials",
    "skew_for_domain",
    "Dataset",
    "DiscreteDistribution",
    "Hypothesis",
    "HypothesisClass",
    "RngStream",
    "enumerate_class",
    "sample_dataset",
    "subset_rank",
    "subset_unrank",
    "vc_dimension_bruteforce",
    "DEFAULT_CONSTANTS",
    "Schedule",
    "TheoryConstants",
    "deviation_bound",
    "erm",
    "erm_reference_rate",
    "find_disagreeing_pair",
    "find_disagreeing_pair_sampled",
    "make_schedule",
    "near_optimal_set",
    "BREAK_REASONS",
    "REASON_COMPLETED",
    "REASON_EARLY_EXIT",
    "REASON_EMPTY_BLOCK",
    "REASON_NO_PAIR",
    "CompositeClassifier",
    "CoreTrace",
    "FailureEventReport",
    "IterationEvents",
    "IterationRecord",
    "ProgressRecord",
    "ProgressReport",
    "TrainResult",
    "core_train",
    "diagnose_failure_events",
    "exact_progress_report",
    "predict",
    "train",
    "Fixture",
    "available_fixtures",
    "dsubset_adversary",
    "make_fixture",
    "realizable_uniform",
    "two_experts",
    "CHECKS",
    "run_identity_chunk",
    "ConditioningResult",
    "condition_on_agreement",
    "condition_on_disagreement",
    "determinize",
    "empirical_disagreement",
    "empirical_error",
    "fraction_predicting_positive",
    "mass_predicting_positive",
    "split_class",
    "true_disagreement",
    "true_error",
]
