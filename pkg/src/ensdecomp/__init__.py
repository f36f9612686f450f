"""Exact bias-variance-diversity decompositions of ensemble losses.

The package splits into a numeric core (``bregman``, ``combiners``,
``decomp``, ``theory``), an estimation layer that builds prediction
tensors from trainable members (``estimators``, ``learners``), and a CLI
harness (``cli``) for reproducible experiment runs.
"""

from .bregman import (
    DualPoint,
    ItakuraSaito,
    KLMinimal,
    Poisson,
    Prediction,
    Squared,
    divergence,
    extend_simplex,
    generator_for,
    grad,
    grad_inverse,
    left_centroid,
    phi,
)
from .combiners import (
    VoteOutcome,
    arithmetic_combine,
    centroid_combine,
    plurality_vote,
    weighted_plurality_vote,
)
from .decomp import (
    DecompositionReport,
    EffectReport,
    LabelDistribution,
    MemberGrid,
    ambiguity_decomposition,
    ambiguity_effect,
    arithmetic_ce_ambiguity,
    bvd_effect_01,
    bvd_terms,
    cross_entropy_decomp,
    dependency_decomp,
    effect_bv_01,
    ensemble_bias_variance,
    good_bad_diversity,
    pairwise_diversity,
    squared_bvc,
)
from .estimators import (
    PredictionTensor,
    TrialPlan,
    collect_predictions,
    estimate_bvd,
    estimate_effects_01,
    estimate_member_centroids,
    load_tensor_csv,
    save_tensor_csv,
    sweep_ensemble_size,
)
from .learners import (
    BoostedEnsemble,
    Dataset,
    TreeParams,
    bagging_member_factory,
    fit_adaboost,
    fit_classification_tree,
    fit_logitboost,
    fit_regression_tree,
    fit_stump,
    load_csv,
    make_synthetic,
    random_forest_member_factory,
)
from .theory import (
    diversity_effect_independent,
    majority_error_independent,
    nonexistence_counterexample,
    simulate_diversity_effect,
)

__version__ = "0.1.0"
