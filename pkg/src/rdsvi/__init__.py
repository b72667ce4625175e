"""Reconstruction of hidden social networks from chain-referral samples.

The package simulates coupon-driven recruitment over a known graph, scores
candidate hidden subgraphs with a survival-time likelihood plus a degree
penalty, bounds the resulting discrete posterior with modular surrogates
found by greedy chains and min-norm-point search, and sweeps the surrogate
weights into ROC-style reconstruction curves.
"""

__version__ = "0.1.0"

from .graph_core import (
    AdjacencyMatrix,
    Graph,
    GraphFormatError,
    induced_subgraph,
    load_edge_list,
    to_adjacency,
    write_edge_list,
)
from .synth import preferential_attachment_graph
from .timing import (
    Exponential,
    SupportExhaustedError,
    TimingModel,
    Weibull,
    conditional_hazard,
    conditional_survival,
    log_conditional_survival,
    sample_waiting_time,
    survival,
)
from .rds import (
    ObservedData,
    RdsConfig,
    RdsRun,
    RdsTruth,
    read_observed,
    read_truth,
    simulate,
    split_seed,
    validate,
    write_observed,
    write_truth,
)
from .likelihood import (
    DataInconsistencyError,
    EventMatrices,
    InsufficientDataError,
    PenaltyConfig,
    PosteriorObjective,
    SubgraphCodec,
    ThetaStepResult,
    build_matrices,
    degree_excess,
    hazard_mass,
    log_likelihood_direct,
    log_likelihood_matrix,
    log_prior,
    theta_step,
)
from .submodular import (
    MinNormResult,
    ModularBound,
    OracleBudgetExceeded,
    RestrictedOracle,
    SetFunctionOracle,
    ShiftedOracle,
    anchor_search_weights,
    greedy_lower_bound,
    lazy_greedy_weights,
    log_partition,
    marginal_probability_interval,
    marginals,
    minimize_submodular,
    naive_greedy_weights,
    supergradient,
    upper_bound,
)
from .inference import (
    AlternationResult,
    InferenceResult,
    ObservedDataInvalid,
    alternate,
    build_objective,
    infer,
    read_inference,
    select_threshold,
    threshold,
    write_inference,
)
from .baselines import AnnealResult, AnnealSchedule, calibrate_t0, simanneal
from .evaluation import (
    ConfusionCounts,
    RateResult,
    RocResult,
    confusion,
    corner_distance,
    forest_baseline,
    read_roc_csv,
    roc,
    tpr_fpr,
    write_roc_csv,
    write_roc_svg,
)

__all__ = [name for name in dir() if not name.startswith("_")]
