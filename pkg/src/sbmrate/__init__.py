"""Stochastic block model toolkit: sampling, penalized likelihood
community detection, mis-match losses, exact risk bounds, and a
reproducible Monte Carlo harness."""

from .core import (
    Assignment,
    Graph,
    MembershipReport,
    ModelParams,
    SpaceKind,
    SpaceVariant,
    check_membership,
    renyi_divergence,
)
from .loss import (
    Confusion,
    alpha_gamma,
    class_distance,
    hamming,
    local_loss,
    mismatch_ratio,
)
from .estimator import (
    EnumerationCapError,
    ExhaustiveResult,
    Penalty,
    count_classes,
    enumerate_classes,
    lambda_unified,
    lambda_weighted,
    objective,
    solve_exhaustive,
    solve_greedy,
    t_star,
)
from .bounds import (
    BoundReport,
    LeastFavorable,
    LocalTestDecision,
    binomial_tail_exact,
    binomial_tail_log,
    bound_report,
    cardinality_bound,
    chernoff_bound,
    chernoff_bound_log,
    construct_least_favorable,
    exact_flip_probability,
    local_bayes_test,
    mgf,
    min_alpha_gamma_bound,
    min_eta_to_repair,
)
from .sampler import InfeasibleSpaceError, sample_assignment, sample_graph
from .fileio import read_assignment, read_graph, write_assignment, write_graph
from .harness import (
    CSV_COLUMNS,
    ExperimentConfig,
    GridPoint,
    RiskRecord,
    SweepResult,
    replicate_seed,
    run_replicate,
    sweep,
)

__version__ = "0.1.0"
