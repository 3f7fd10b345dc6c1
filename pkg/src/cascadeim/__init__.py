"""cascadeim: influence cascades end to end.

Simulate IC/LT diffusion cascades from a product seed distribution, infer
the hidden network's edge parameters and structure from passively observed
cascades via closed-form one-step estimators, and run influence
maximization directly from samples.  A brute-force exact oracle backs
every closed form and guarantee at desk scale.
"""

from .graphs import (
    AssumptionParams,
    Graph,
    Model,
    SeedDistribution,
    max_in_degree,
    random_graph,
    validate,
)
from .inference import (
    AssumptionKind,
    AssumptionReport,
    EstimateFlag,
    EstimationReport,
    OneStepStats,
    RescaledWeights,
    SampleSizePlan,
    SampleSizeTask,
    check_assumptions,
    collect_stats,
    estimate_edge_probabilities_ic,
    estimate_edge_weights_lt,
    recover_structure,
    rescale_lt,
    sample_size,
)
from .maximize import (
    GreedySelection,
    SeedSet,
    SpreadEstimate,
    Worlds,
    estimate_sigma,
    greedy_im,
    lazy_greedy,
    sample_worlds,
)
from .oracle import (
    InstanceTooLargeError,
    LiveEdgeGraph,
    exact_ap,
    exact_ap_given,
    exact_one_step_probabilities,
    exact_optimal_seeds,
    exact_sigma,
    exact_sigma_with_forced_in_edges,
)
from .pipelines import (
    EstimatorDegeneracyError,
    ImsResult,
    NormalizationError,
    Pipeline,
    PipelineError,
    ims_ic_a1,
    ims_ic_a2,
    ims_ic_a2_eps,
    ims_lt,
)
from .simulate import (
    Cascade,
    CascadeDataset,
    ModelMismatchError,
    cascade_violations,
    generate_dataset,
    sample_seed_set,
    simulate_ic,
    simulate_lt,
)

__version__ = "0.1.0"

__all__ = [
    "AssumptionKind",
    "AssumptionParams",
    "AssumptionReport",
    "Cascade",
    "CascadeDataset",
    "EstimateFlag",
    "EstimationReport",
    "EstimatorDegeneracyError",
    "Graph",
    "GreedySelection",
    "ImsResult",
    "InstanceTooLargeError",
    "LiveEdgeGraph",
    "Model",
    "ModelMismatchError",
    "NormalizationError",
    "OneStepStats",
    "Pipeline",
    "PipelineError",
    "RescaledWeights",
    "SampleSizePlan",
    "SampleSizeTask",
    "SeedDistribution",
    "SeedSet",
    "SpreadEstimate",
    "Worlds",
    "cascade_violations",
    "check_assumptions",
    "collect_stats",
    "estimate_edge_probabilities_ic",
    "estimate_edge_weights_lt",
    "estimate_sigma",
    "exact_ap",
    "exact_ap_given",
    "exact_one_step_probabilities",
    "exact_optimal_seeds",
    "exact_sigma",
    "exact_sigma_with_forced_in_edges",
    "generate_dataset",
    "greedy_im",
    "ims_ic_a1",
    "ims_ic_a2",
    "ims_ic_a2_eps",
    "ims_lt",
    "lazy_greedy",
    "max_in_degree",
    "random_graph",
    "recover_structure",
    "rescale_lt",
    "sample_seed_set",
    "sample_size",
    "sample_worlds",
    "simulate_ic",
    "simulate_lt",
    "validate",
]
