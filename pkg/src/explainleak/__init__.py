"""Privacy auditing for feature-based model explanations.

Tools to measure what model explanations leak about training data:
membership inference from explanation variance, influence-based training
point reveals, training-set reconstruction against influence oracles, and
the experiment harness tying them together.
"""
from .attacks import (
    AttackNetResult,
    AttackResult,
    AttackStatistic,
    ThresholdRule,
    aggregate_shadow_taus,
    combine_sources,
    compute_statistic,
    evaluate_attack,
    optimal_threshold,
    shadow_threshold,
    statistic_values,
    train_attack_network,
    variance,
)
from .data import Dataset, load_csv_dataset, write_csv_dataset
from .explain import (
    EXPLANATION_METHODS,
    Explanation,
    IgConfig,
    SmoothGradConfig,
    SurrogateConfig,
    explain,
    explain_grad_times_input,
    explain_gradient,
    explain_guided_backprop,
    explain_integrated_gradients,
    explain_local_surrogate,
    explain_lrp,
    explain_smoothgrad,
    ig_completeness_gap,
)
from .graph import (
    GraphMetrics,
    InfluenceGraph,
    build_influence_graph,
    greedy_omniscient_baseline,
    scc_metrics,
    strongly_connected_components,
    traverse_attack,
)
from .harness import (
    CampaignConfig,
    ConfigError,
    ExperimentConfig,
    ExperimentResult,
    RunRecord,
    child_seed,
    run_overfit_sweep,
    run_perturbation_experiment,
    run_reconstruction_campaign,
    run_threshold_experiment,
    sampling_protocol,
    validate_protocol,
)
from .influence import (
    InfluenceExplainer,
    RevealResult,
    build_loo_cache,
    group_reveal_rates,
    self_reveal_rate,
    topk_explain,
)
from .models import (
    LayerSpec,
    LogisticModel,
    MlpModel,
    TrainConfig,
    TrainingDivergedError,
    init_model,
    train,
    train_logistic,
)
from .reconstruct import (
    InfluenceOracle,
    MarginalSampler,
    OracleAnswer,
    ReconstructionResult,
    SamplerExhaustedError,
    TrueDistributionSampler,
    UniformSampler,
    algorithm1_reconstruct,
    baseline_attack,
    reconstruction_query_budget,
    same_direction_fixture,
    tangent_fixture,
)
from .synth import (
    ARCHS,
    CorrelationResult,
    SynthConfig,
    dimension_sweep,
    generate_synthetic,
    grad_norm_l1,
    grad_norm_l1_batch,
    membership_correlation,
)

__version__ = "0.1.0"

__all__ = [
    "ARCHS",
    "AttackNetResult",
    "AttackResult",
    "AttackStatistic",
    "CampaignConfig",
    "ConfigError",
    "CorrelationResult",
    "Dataset",
    "EXPLANATION_METHODS",
    "ExperimentConfig",
    "ExperimentResult",
    "Explanation",
    "GraphMetrics",
    "IgConfig",
    "InfluenceExplainer",
    "InfluenceGraph",
    "InfluenceOracle",
    "LayerSpec",
    "LogisticModel",
    "MarginalSampler",
    "MlpModel",
    "OracleAnswer",
    "ReconstructionResult",
    "RevealResult",
    "RunRecord",
    "SamplerExhaustedError",
    "SmoothGradConfig",
    "SurrogateConfig",
    "SynthConfig",
    "ThresholdRule",
    "TrainConfig",
    "TrainingDivergedError",
    "TrueDistributionSampler",
    "UniformSampler",
    "aggregate_shadow_taus",
    "algorithm1_reconstruct",
    "baseline_attack",
    "build_influence_graph",
    "build_loo_cache",
    "child_seed",
    "combine_sources",
    "compute_statistic",
    "dimension_sweep",
    "evaluate_attack",
    "explain",
    "explain_grad_times_input",
    "explain_gradient",
    "explain_guided_backprop",
    "explain_integrated_gradients",
    "explain_local_surrogate",
    "explain_lrp",
    "explain_smoothgrad",
    "generate_synthetic",
    "grad_norm_l1",
    "grad_norm_l1_batch",
    "greedy_omniscient_baseline",
    "group_reveal_rates",
    "ig_completeness_gap",
    "init_model",
    "load_csv_dataset",
    "membership_correlation",
    "optimal_threshold",
    "reconstruction_query_budget",
    "run_overfit_sweep",
    "run_perturbation_experiment",
    "run_reconstruction_campaign",
    "run_threshold_experiment",
    "same_direction_fixture",
    "sampling_protocol",
    "scc_metrics",
    "self_reveal_rate",
    "shadow_threshold",
    "statistic_values",
    "strongly_connected_components",
    "tangent_fixture",
    "topk_explain",
    "train",
    "train_attack_network",
    "train_logistic",
    "traverse_attack",
    "validate_protocol",
    "write_csv_dataset",
]
