"""Exact finite-sample decompositions of ensemble losses.

Each operation evaluates a loss-decomposition identity on concrete
prediction sets and returns the named terms together with the identity
residual (left-hand side minus the recombined right-hand side).  All
expectations over training conditions are uniform averages over the
trial axis, and member centroids are the finite-average duals; under
that convention every identity here is exact up to float rounding.

Grids are D trials x M members of predictions at one test point.  The
private ``*_core`` helpers broadcast over arbitrary leading batch axes
(the last three axes of a Bregman grid are trials, members, components),
which is what makes the randomized identity suites and the per-test-point
estimators cheap.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .bregman import Generator, KLMinimal, Prediction, Squared, divergence_values, extend_probs
from .combiners import tally_winner
from .errors import DomainError, EmptyGridError, SizeError, ZeroWeightError

__all__ = [
    "MemberGrid",
    "DecompositionReport",
    "EffectReport",
    "LabelDistribution",
    "ambiguity_decomposition",
    "bvd_terms",
    "squared_bvc",
    "ensemble_bias_variance",
    "cross_entropy_decomp",
    "arithmetic_ce_ambiguity",
    "dependency_decomp",
    "effect_bv_01",
    "ambiguity_effect",
    "bvd_effect_01",
    "good_bad_diversity",
    "pairwise_diversity",
]


# ---------------------------------------------------------------------------
# domain types


@dataclass(frozen=True)
class MemberGrid:
    """A D x M grid of predictions at one test point.

    ``values`` is (D, M, dim) float for Bregman losses or (D, M) int for
    label grids; ``weights`` (optional, nonnegative) is (D, M).
    """

    values: np.ndarray
    weights: np.ndarray | None = None

    def __post_init__(self):
        values = np.asarray(self.values)
        if values.ndim not in (2, 3) or values.shape[0] < 1 or values.shape[1] < 1:
            raise EmptyGridError("grid must be (D, M[, dim]) with D, M >= 1")
        values = values.copy()
        values.flags.writeable = False
        object.__setattr__(self, "values", values)
        if self.weights is not None:
            w = np.asarray(self.weights, dtype=float).copy()
            if w.shape != values.shape[:2]:
                raise DomainError("weights must be shaped (D, M)")
            if np.any(w < 0.0):
                raise DomainError("weights must be nonnegative")
            w.flags.writeable = False
            object.__setattr__(self, "weights", w)

    @classmethod
    def from_predictions(cls, rows, weights=None) -> "MemberGrid":
        """Build a grid from nested [trial][member] Prediction lists."""
        tags = {p.tag for row in rows for p in row}
        if len(tags) != 1:
            raise DomainError("all grid predictions must share one domain tag")
        values = np.stack([np.stack([p.array for p in row]) for row in rows])
        return cls(values, weights)

    @property
    def n_trials(self) -> int:
        return self.values.shape[0]

    @property
    def n_members(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True)
class DecompositionReport:
    """Named terms of a bias-variance-diversity decomposition."""

    expected_loss: float
    noise: float
    average_bias: float
    average_variance: float
    diversity: float

    @property
    def residual(self) -> float:
        return self.expected_loss - (
            self.noise + self.average_bias + self.average_variance - self.diversity
        )


@dataclass(frozen=True)
class EffectReport:
    """Named terms of a 0-1 loss effect decomposition."""

    expected_loss: float
    noise: float
    bias_effect: float
    variance_effect: float
    diversity_effect: float

    @property
    def residual(self) -> float:
        return self.expected_loss - (
            self.noise + self.bias_effect + self.variance_effect - self.diversity_effect
        )


@dataclass(frozen=True)
class LabelDistribution:
    """Distribution of the label Y at a test point."""

    probs: tuple

    def __post_init__(self):
        probs = np.asarray(self.probs, dtype=float)
        if probs.ndim != 1 or probs.size < 2:
            raise DomainError("label distribution needs at least two classes")
        if np.any(probs < 0.0) or abs(float(np.sum(probs)) - 1.0) > 1e-12:
            raise DomainError("label probabilities must be nonnegative and sum to 1")
        object.__setattr__(self, "probs", tuple(float(p) for p in probs))

    @classmethod
    def point_mass(cls, label: int, k: int) -> "LabelDistribution":
        probs = np.zeros(k)
        probs[label] = 1.0
        return cls(tuple(probs))

    @property
    def k(self) -> int:
        return len(self.probs)

    @property
    def array(self) -> np.ndarray:
        return np.asarray(self.probs)

    @property
    def modal(self) -> int:
        """Most probable class; ties resolved to the lowest index."""
        return int(np.argmax(self.probs))


# ---------------------------------------------------------------------------
# shared helpers


def _as_target_array(gen: Generator, targets) -> np.ndarray:
    """Coerce a target (or list of targets) to an (T, dim) array."""
    if isinstance(targets, Prediction):
        arrs = targets.array[None, :]
    elif isinstance(targets, (list, tuple)) and targets and isinstance(targets[0], Prediction):
        arrs = np.stack([t.array for t in targets])
    else:
        arrs = np.asarray(targets, dtype=float)
        if arrs.ndim == 0:
            arrs = arrs.reshape(1, 1)
        elif arrs.ndim == 1:
            # a list of scalar targets, or a single vector target
            arrs = arrs[:, None] if gen.dim == 1 else arrs[None, :]
    return gen.validate(arrs)


def _grid_values(gen: Generator, grid) -> np.ndarray:
    values = grid.values if isinstance(grid, MemberGrid) else np.asarray(grid, dtype=float)
    if values.ndim == 2 and gen.dim == 1:
        values = values[..., None]
    return gen.validate(values)


def _grid_duals(gen: Generator, values: np.ndarray):
    # single-trial / single-member centroids are the points themselves;
    # bypassing the dual round trip keeps the degenerate terms exactly zero
    duals = gen.grad(values)
    if values.shape[-3] == 1:
        member_centroids = values[..., 0, :, :]
    else:
        member_centroids = gen.grad_inverse(np.mean(duals, axis=-3))  # (..., M, dim)
    if values.shape[-2] == 1:
        trial_combined = values[..., :, 0, :]
    else:
        trial_combined = gen.grad_inverse(np.mean(duals, axis=-2))  # (..., D, dim)
    return member_centroids, trial_combined


# ---------------------------------------------------------------------------
# Bregman decompositions


def ambiguity_core(gen: Generator, targets: np.ndarray, values: np.ndarray) -> dict:
    """Batched ambiguity terms: ``targets`` (..., dim), ``values``
    (..., M, dim) combined by the centroid rule."""
    if values.shape[-2] == 1:
        combined = values[..., 0, :]
    else:
        combined = gen.grad_inverse(np.mean(gen.grad(values), axis=-2))
    ensemble_loss = divergence_values(gen, targets, combined)
    average_loss = np.mean(divergence_values(gen, targets[..., None, :], values), axis=-1)
    ambiguity = np.mean(divergence_values(gen, combined[..., None, :], values), axis=-1)
    return {
        "ensemble_loss": ensemble_loss,
        "average_loss": average_loss,
        "ambiguity": ambiguity,
        "residual": ensemble_loss - (average_loss - ambiguity),
    }


def ambiguity_decomposition(gen: Generator, y, preds) -> dict:
    """Split the centroid-combined ensemble loss at target ``y`` into the
    average member loss minus the (nonnegative) ambiguity."""
    yv = _as_target_array(gen, y)[0]
    if len(preds) == 0:
        raise EmptyGridError("ambiguity of an empty ensemble is undefined")
    values = np.stack([gen.validate(p.array if isinstance(p, Prediction) else p) for p in preds])
    terms = ambiguity_core(gen, yv, values)
    return {name: float(term) for name, term in terms.items()}


def bvd_core(gen: Generator, targets: np.ndarray, values: np.ndarray) -> dict:
    """Batched bias-variance-diversity terms.

    ``targets`` is (..., T, dim), an empirical sample of Y (T = 1 for the
    noise-free convention); ``values`` is (..., D, M, dim).  Returns a
    dict of (...)-shaped term arrays.
    """
    ybar = np.mean(targets, axis=-2)
    noise = np.mean(divergence_values(gen, targets, ybar[..., None, :]), axis=-1)
    member_centroids, trial_combined = _grid_duals(gen, values)
    expected_loss = np.mean(
        divergence_values(
            gen, targets[..., :, None, :], trial_combined[..., None, :, :]
        ),
        axis=(-2, -1),
    )
    average_bias = np.mean(divergence_values(gen, ybar[..., None, :], member_centroids), axis=-1)
    average_variance = np.mean(
        divergence_values(gen, member_centroids[..., None, :, :], values), axis=(-2, -1)
    )
    diversity = np.mean(
        divergence_values(gen, trial_combined[..., :, None, :], values), axis=(-2, -1)
    )
    return {
        "expected_loss": expected_loss,
        "noise": noise,
        "average_bias": average_bias,
        "average_variance": average_variance,
        "diversity": diversity,
    }


def bvd_terms(gen: Generator, targets, grid) -> DecompositionReport:
    """Bias-variance-diversity decomposition on a D x M grid.

    With a single observed target the noise term is zero and the target
    plays the role of the conditional mean; a list of targets is treated
    as an empirical sample of Y, in which case the noise term is the
    average divergence from their arithmetic mean.
    """
    values = _grid_values(gen, grid)
    tarr = _as_target_array(gen, targets)
    terms = bvd_core(gen, tarr, values)
    return DecompositionReport(
        expected_loss=float(terms["expected_loss"]),
        noise=float(terms["noise"]),
        average_bias=float(terms["average_bias"]),
        average_variance=float(terms["average_variance"]),
        diversity=float(terms["diversity"]),
    )


def squared_bvc(y: float, grid) -> dict:
    """Bias-variance-covariance split of an arithmetic-mean ensemble
    under squared loss (population moments over the trial axis)."""
    gen = Squared()
    values = _grid_values(gen, grid)[..., 0]  # (D, M)
    n_trials, n_members = values.shape
    yv = float(np.asarray(y, dtype=float).reshape(-1)[0])
    member_means = np.mean(values, axis=0)  # (M,)
    combined = np.mean(values, axis=1)  # per-trial ensemble
    expected_loss = float(np.mean((combined - yv) ** 2))
    ensemble_bias = float((np.mean(member_means) - yv) ** 2)
    dev = values - member_means
    variance = float(np.mean(dev**2))
    if n_members > 1:
        cov = dev.T @ dev / n_trials  # (M, M)
        covariance = float((np.sum(cov) - np.trace(cov)) / (n_members * (n_members - 1)))
    else:
        covariance = 0.0
    recombined = (
        ensemble_bias + variance / n_members + (1.0 - 1.0 / n_members) * covariance
    )
    return {
        "expected_loss": expected_loss,
        "ensemble_bias": ensemble_bias,
        "average_variance": variance,
        "average_covariance": covariance,
        "residual": expected_loss - recombined,
    }


def ensemble_bv_core(gen: Generator, targets: np.ndarray, values: np.ndarray) -> dict:
    """Batched ensemble-bias/variance terms; ``values`` (..., D, M, dim)."""
    member_centroids, trial_combined = _grid_duals(gen, values)
    if values.shape[-2] == 1:
        pooled = member_centroids[..., 0, :]
    else:
        pooled = gen.grad_inverse(np.mean(gen.grad(member_centroids), axis=-2))
    ensemble_bias = divergence_values(gen, targets, pooled)
    ensemble_variance = np.mean(
        divergence_values(gen, pooled[..., None, :], trial_combined), axis=-1
    )
    average_bias = np.mean(
        divergence_values(gen, targets[..., None, :], member_centroids), axis=-1
    )
    average_variance = np.mean(
        divergence_values(gen, member_centroids[..., None, :, :], values), axis=(-2, -1)
    )
    diversity = np.mean(
        divergence_values(gen, trial_combined[..., :, None, :], values), axis=(-2, -1)
    )
    disparity = np.mean(
        divergence_values(gen, pooled[..., None, :], member_centroids), axis=-1
    )
    return {
        "ensemble_bias": ensemble_bias,
        "ensemble_variance": ensemble_variance,
        "average_bias": average_bias,
        "average_variance": average_variance,
        "diversity": diversity,
        "disparity": disparity,
        "residual_bias": ensemble_bias - (average_bias - disparity),
        "residual_variance": ensemble_variance
        - (disparity + average_variance - diversity),
    }


def ensemble_bias_variance(gen: Generator, y, grid) -> dict:
    """Relate ensemble bias/variance to member terms via the disparity.

    ensemble_bias = average_bias - disparity, and
    ensemble_variance = disparity + average_variance - diversity, where
    the disparity is the average divergence of the member centroids from
    their own centroid (zero for homogeneous ensembles).
    """
    values = _grid_values(gen, grid)
    yv = _as_target_array(gen, y)[0]
    terms = ensemble_bv_core(gen, yv, values)
    return {name: float(term) for name, term in terms.items()}


# ---------------------------------------------------------------------------
# cross-entropy decompositions (one-hot targets, KL-minimal predictions)


def ce_core(y: np.ndarray, values: np.ndarray) -> dict:
    """Batched cross-entropy decomposition terms.

    ``y`` is (...,) int class indices; ``values`` is (..., D, M, k-1)
    minimally parameterised predictions combined per trial by the
    normalised geometric mean.
    """
    gen = KLMinimal(values.shape[-1] + 1)
    member_centroids, trial_combined = _grid_duals(gen, values)
    y_idx = y[..., None]
    expected_ce = np.mean(
        -np.log(np.take_along_axis(extend_probs(trial_combined), y_idx[..., None, :], -1))[
            ..., 0
        ],
        axis=-1,
    )
    average_bias = np.mean(
        -np.log(np.take_along_axis(extend_probs(member_centroids), y_idx[..., None, :], -1))[
            ..., 0
        ],
        axis=-1,
    )
    average_variance = np.mean(
        _kl_rows(member_centroids[..., None, :, :], values), axis=(-2, -1)
    )
    diversity = np.mean(_kl_rows(trial_combined[..., :, None, :], values), axis=(-2, -1))
    return {
        "expected_loss": expected_ce,
        "average_bias": average_bias,
        "average_variance": average_variance,
        "diversity": diversity,
    }


def _kl_rows(p: np.ndarray, q: np.ndarray) -> np.ndarray:
    """KL divergence of extended distributions, broadcasting leading axes."""
    pf = extend_probs(p)
    qf = extend_probs(q)
    return np.sum(pf * (np.log(pf) - np.log(qf)), axis=-1)


def cross_entropy_decomp(y: int, grid) -> DecompositionReport:
    """Cross-entropy of the normalised-geometric-mean ensemble against a
    one-hot target, split into bias, variance, and diversity KL terms."""
    values = np.asarray(grid.values if isinstance(grid, MemberGrid) else grid, dtype=float)
    gen = KLMinimal(values.shape[-1] + 1)
    values = gen.validate(values)
    y = int(y)
    if not 0 <= y < gen.k:
        raise DomainError(f"target class {y} outside 0..{gen.k - 1}")
    terms = ce_core(np.asarray(y), values)
    return DecompositionReport(
        expected_loss=float(terms["expected_loss"]),
        noise=0.0,
        average_bias=float(terms["average_bias"]),
        average_variance=float(terms["average_variance"]),
        diversity=float(terms["diversity"]),
    )


def arithmetic_ambiguity_core(y: np.ndarray, values: np.ndarray) -> dict:
    """Batched arithmetic-mean CE ambiguity; ``values`` (..., M, k-1)."""
    full = extend_probs(values)
    at_y = np.take_along_axis(full, y[..., None, None], -1)[..., 0]  # (..., M)
    arith = np.mean(at_y, axis=-1)
    geo = np.exp(np.mean(np.log(at_y), axis=-1))
    ensemble_ce = -np.log(arith)
    average_ce = np.mean(-np.log(at_y), axis=-1)
    ambiguity_term = np.log(arith / geo)
    return {
        "ensemble_ce": ensemble_ce,
        "average_ce": average_ce,
        "ambiguity_term": ambiguity_term,
        "residual": ensemble_ce - (average_ce - ambiguity_term),
    }


def arithmetic_ce_ambiguity(y: int, preds) -> dict:
    """Ambiguity of an arithmetic-mean probability ensemble.

    The gap between the average member cross-entropy and the ensemble
    cross-entropy is the log of the ratio of the arithmetic to the
    geometric mean of the member probabilities at the target class:
    nonnegative, but dependent on the target.
    """
    if len(preds) == 0:
        raise EmptyGridError("cannot combine an empty prediction list")
    rows = np.stack([p.array if isinstance(p, Prediction) else np.asarray(p, float) for p in preds])
    gen = KLMinimal(rows.shape[-1] + 1)
    rows = gen.validate(rows)
    y = int(y)
    if not 0 <= y < gen.k:
        raise DomainError(f"target class {y} outside 0..{gen.k - 1}")
    terms = arithmetic_ambiguity_core(np.asarray(y), rows)
    return {name: float(term) for name, term in terms.items()}


def dependency_core(y: np.ndarray, values: np.ndarray) -> dict:
    """Batched decomposition for arithmetic-mean probability ensembles:
    bias and variance against the KL member centroids plus a
    target-dependent dependency term."""
    gen = KLMinimal(values.shape[-1] + 1)
    if values.shape[-3] == 1:
        member_centroids = values[..., 0, :, :]
    else:
        member_centroids = gen.grad_inverse(np.mean(gen.grad(values), axis=-3))
    full = extend_probs(values)  # (..., D, M, k)
    y_idx = y[..., None]
    at_y = np.take_along_axis(full, y_idx[..., None, None, :], -1)[..., 0]  # (..., D, M)
    arith = np.mean(at_y, axis=-1)  # (..., D)
    geo = np.exp(np.mean(np.log(at_y), axis=-1))
    expected_ce = np.mean(-np.log(arith), axis=-1)
    average_bias = np.mean(
        -np.log(np.take_along_axis(extend_probs(member_centroids), y_idx[..., None, :], -1))[
            ..., 0
        ],
        axis=-1,
    )
    average_variance = np.mean(
        _kl_rows(member_centroids[..., None, :, :], values), axis=(-2, -1)
    )
    dependency = np.mean(np.log(arith / geo), axis=-1)
    return {
        "expected_loss": expected_ce,
        "average_bias": average_bias,
        "average_variance": average_variance,
        "dependency": dependency,
    }


def dependency_decomp(y: int, grid) -> dict:
    """Expected cross-entropy of an arithmetic-mean probability ensemble,
    decomposed with KL member centroids and a target-carrying term."""
    values = np.asarray(grid.values if isinstance(grid, MemberGrid) else grid, dtype=float)
    gen = KLMinimal(values.shape[-1] + 1)
    values = gen.validate(values)
    y = int(y)
    if not 0 <= y < gen.k:
        raise DomainError(f"target class {y} outside 0..{gen.k - 1}")
    terms = dependency_core(np.asarray(y), values)
    expected_ce = float(terms["expected_loss"])
    average_bias = float(terms["average_bias"])
    average_variance = float(terms["average_variance"])
    dependency = float(terms["dependency"])
    return {
        "expected_ce": expected_ce,
        "average_bias": average_bias,
        "average_variance": average_variance,
        "dependency": dependency,
        "residual": expected_ce - (average_bias + average_variance - dependency),
    }


# ---------------------------------------------------------------------------
# 0-1 loss effect decompositions


def _as_label_distribution(y_dist, k: int | None = None) -> LabelDistribution:
    if isinstance(y_dist, LabelDistribution):
        return y_dist
    if isinstance(y_dist, (int, np.integer)):
        if k is None:
            raise DomainError("a deterministic label needs an explicit class count")
        return LabelDistribution.point_mass(int(y_dist), k)
    return LabelDistribution(tuple(np.asarray(y_dist, dtype=float)))


def effect_bv_01(y_dist, member_dist) -> dict:
    """Analytic bias/variance effects of a single model under 0-1 loss.

    Both arguments are distributions over the k classes: of the label Y,
    and of the model's prediction over training conditions.  The modal
    classes (lowest index on ties) play the role of the Bayes prediction
    and the model centroid.
    """
    ydist = _as_label_distribution(y_dist)
    mdist = _as_label_distribution(member_dist)
    if ydist.k != mdist.k:
        raise DomainError("label and member distributions must share a class count")
    yp = ydist.array
    mp = mdist.array
    y_star = ydist.modal
    q_star = mdist.modal
    expected_loss = float(1.0 - np.sum(yp * mp))
    noise = float(1.0 - yp[y_star])
    bias_effect = float(yp[y_star] - yp[q_star])
    variance_effect = float(expected_loss - (1.0 - yp[q_star]))
    return {
        "expected_loss": expected_loss,
        "noise": noise,
        "bias_effect": bias_effect,
        "variance_effect": variance_effect,
        "q_star": q_star,
        "y_star": y_star,
        "residual": expected_loss - (noise + bias_effect + variance_effect),
    }


def ambiguity_effect(y: int, member_labels, combiner_winner: int) -> dict:
    """Average member 0-1 loss minus the ensemble 0-1 loss; may be negative."""
    labels = np.asarray(member_labels, dtype=int)
    ensemble_loss = float(int(combiner_winner) != int(y))
    average_loss = float(np.mean(labels != int(y)))
    effect = average_loss - ensemble_loss
    return {
        "ensemble_loss": ensemble_loss,
        "average_loss": average_loss,
        "ambiguity_effect": effect,
        "residual": ensemble_loss - (average_loss - effect),
    }


def _vote_winners(labels: np.ndarray, k: int, weights, rng: np.random.Generator) -> np.ndarray:
    """Per-trial (weighted) plurality winners with seeded tie-breaking.

    ``labels`` is (D, M); ties are resolved in trial order so results are
    reproducible for a fixed RNG state.
    """
    n_trials, n_members = labels.shape
    onehot = labels[..., None] == np.arange(k)
    if weights is None:
        tallies = onehot.sum(axis=1).astype(float)
    else:
        w = np.asarray(weights, dtype=float)
        totals = w.sum(axis=1)
        if np.any(totals <= 0.0):
            raise ZeroWeightError("a trial has zero total vote weight")
        tallies = (onehot * w[..., None]).sum(axis=1)
    winners = np.argmax(tallies, axis=1)
    top = np.take_along_axis(tallies, winners[:, None], 1)[:, 0]
    tie_rows = np.flatnonzero((tallies == top[:, None]).sum(axis=1) > 1)
    for row in tie_rows:
        winners[row], _ = tally_winner(tallies[row], rng)
    return winners


def bvd_effect_01(y_dist, label_grid, weights=None, rng=None, k=None) -> EffectReport:
    """Bias/variance/diversity effect decomposition for (weighted) voting.

    ``label_grid`` is (D, M) class labels; optional ``weights`` (D, M)
    switch the combiner to a weighted plurality vote and the terms to
    their weighted forms.  Member centroids are the (weighted) modal
    labels over trials, with deterministic lowest-index tie-breaking;
    vote ties are broken at random from ``rng``.
    """
    if isinstance(label_grid, MemberGrid):
        labels = np.asarray(label_grid.values, dtype=int)
        weights = label_grid.weights if weights is None else weights
    else:
        labels = np.asarray(label_grid, dtype=int)
    if labels.ndim != 2 or labels.size == 0:
        raise EmptyGridError("label grid must be (D, M) with D, M >= 1")
    if k is None:
        k = int(labels.max()) + 1
        if isinstance(y_dist, (int, np.integer)):
            k = max(k, int(y_dist) + 1)
    ydist = _as_label_distribution(y_dist, k)
    k = max(k, ydist.k)
    if labels.min() < 0 or labels.max() >= k:
        raise DomainError(f"labels must lie in 0..{k - 1}")
    if rng is None:
        rng = np.random.default_rng(0)
    n_trials, n_members = labels.shape
    if weights is not None:
        weights = np.asarray(weights, dtype=float)
        if weights.shape != labels.shape:
            raise DomainError("weights must be shaped like the label grid")
        if np.any(weights < 0.0):
            raise DomainError("weights must be nonnegative")
        totals = weights.sum(axis=1, keepdims=True)
        if np.any(totals <= 0.0):
            raise ZeroWeightError("a trial has zero total vote weight")
        norm_w = weights / totals  # a_i(d), rows sum to 1
    else:
        norm_w = np.full(labels.shape, 1.0 / n_members)

    winners = _vote_winners(labels, k, weights, rng)

    # member centroids: (weighted) modal label over trials, lowest index on ties
    member_tallies = np.zeros((n_members, k))
    raw_w = weights if weights is not None else np.ones(labels.shape)
    for c in range(k):
        member_tallies[:, c] = np.sum(raw_w * (labels == c), axis=0)
    centroids = np.argmax(member_tallies, axis=1)  # (M,)

    err = 1.0 - ydist.array  # expected 0-1 loss of each fixed prediction
    y_star = ydist.modal
    noise = float(err[y_star])
    mean_a = np.mean(norm_w, axis=0)  # (M,) expected normalised weight
    bias_effect = float(np.sum(mean_a * (err[centroids] - err[y_star])))
    variance_effect = float(np.mean(np.sum(norm_w * (err[labels] - err[centroids]), axis=1)))
    diversity_effect = float(
        np.mean(np.sum(norm_w * err[labels], axis=1) - err[winners])
    )
    expected_loss = float(np.mean(err[winners]))
    return EffectReport(
        expected_loss=expected_loss,
        noise=noise,
        bias_effect=bias_effect,
        variance_effect=variance_effect,
        diversity_effect=diversity_effect,
    )


def good_bad_diversity(y: int, member_labels, winner: int) -> dict:
    """Signed disagreement term for binary majority voting on +/-1 labels.

    The disagreement of members with the vote subtracts from the average
    loss when the vote is correct and adds to it otherwise.
    """
    labels = np.asarray(member_labels, dtype=int)
    if not set(np.unique(labels)) <= {-1, 1} or int(y) not in (-1, 1) or int(winner) not in (-1, 1):
        raise DomainError("good/bad diversity is defined for +/-1 labels")
    ensemble_loss = float(int(winner) != int(y))
    average_loss = float(np.mean(labels != int(y)))
    disagreement = float(np.mean(labels != int(winner)))
    signed_diversity = float(int(y) * int(winner)) * disagreement
    return {
        "ensemble_loss": ensemble_loss,
        "average_loss": average_loss,
        "signed_diversity": signed_diversity,
        "residual": ensemble_loss - (average_loss - signed_diversity),
    }


def pairwise_diversity(delta, preds) -> float:
    """Average of a discrepancy function over all ordered member pairs."""
    n = len(preds)
    if n < 2:
        raise SizeError("pairwise diversity needs at least two members")
    total = 0.0
    for i in range(n):
        for j in range(n):
            if i != j:
                total += float(delta(preds[i], preds[j]))
    return total / (n * (n - 1))
