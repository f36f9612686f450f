"""Ensemble combination rules.

Centroid combiners (dual-space averaging) for the Bregman losses,
plain arithmetic averaging of predictions, and (weighted) plurality
voting over class labels.  Vote ties are broken uniformly at random
using a caller-supplied RNG so that full runs are reproducible from a
single master seed; the tie-break draw is part of the caller's stream.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .bregman import Generator, Prediction, left_centroid
from .errors import DomainError, ZeroWeightError

__all__ = [
    "VoteOutcome",
    "centroid_combine",
    "arithmetic_combine",
    "plurality_vote",
    "weighted_plurality_vote",
    "tally_winner",
]


@dataclass(frozen=True)
class VoteOutcome:
    """Result of a (weighted) plurality vote.

    ``winner`` attains the maximum of ``tally``; ``tie`` records whether
    more than one class did.
    """

    winner: int
    tally: tuple
    tie: bool

    def __post_init__(self):
        tally = np.asarray(self.tally, dtype=float)
        object.__setattr__(self, "tally", tuple(float(t) for t in tally))


def centroid_combine(gen: Generator, preds) -> Prediction:
    """Combine predictions with the loss's centroid rule (uniform weights).

    Arithmetic mean for squared loss, geometric mean for Poisson,
    harmonic mean for Itakura-Saito, normalised geometric mean for KL.
    """
    return left_centroid(gen, preds)


def arithmetic_combine(preds) -> Prediction:
    """Componentwise arithmetic mean of same-domain predictions."""
    if len(preds) == 0:
        raise DomainError("cannot combine an empty prediction list")
    tags = {p.tag for p in preds}
    if len(tags) != 1:
        raise DomainError("predictions must share one domain tag")
    mean = np.mean(np.stack([p.array for p in preds]), axis=0)
    return Prediction(tuple(mean), preds[0].tag)


def tally_winner(tally: np.ndarray, rng: np.random.Generator) -> tuple[int, bool]:
    """Argmax of a tally with uniform random tie-breaking.

    Shared by every voting path (including simulations) so that one
    seeded rule governs all tie behaviour.
    """
    tally = np.asarray(tally, dtype=float)
    top = np.max(tally)
    tied = np.flatnonzero(tally == top)
    if len(tied) == 1:
        return int(tied[0]), False
    return int(rng.choice(tied)), True


def _check_labels(labels: np.ndarray, k: int) -> None:
    if labels.size == 0:
        raise DomainError("vote requires at least one label")
    if labels.min() < 0 or labels.max() >= k:
        raise DomainError(f"labels must lie in 0..{k - 1}")


def plurality_vote(labels, k: int, tiebreak: np.random.Generator) -> VoteOutcome:
    """Unweighted plurality vote over class labels in 0..k-1."""
    labels = np.asarray(labels, dtype=int)
    _check_labels(labels, k)
    tally = np.bincount(labels, minlength=k).astype(float)
    winner, tie = tally_winner(tally, tiebreak)
    return VoteOutcome(winner, tuple(tally), tie)


def weighted_plurality_vote(labels, weights, k: int, tiebreak: np.random.Generator) -> VoteOutcome:
    """Plurality vote where voter i contributes ``weights[i]`` to its label.

    Reduces to ``plurality_vote`` under uniform weights; the winner is
    invariant to rescaling all weights by a positive constant.
    """
    labels = np.asarray(labels, dtype=int)
    weights = np.asarray(weights, dtype=float)
    _check_labels(labels, k)
    if weights.shape != labels.shape:
        raise DomainError("weights must match labels in length")
    if np.any(weights < 0.0):
        raise DomainError("vote weights must be nonnegative")
    total = float(np.sum(weights))
    if total == 0.0:
        raise ZeroWeightError("all vote weights are zero")
    tally = np.bincount(labels, weights=weights, minlength=k)
    winner, tie = tally_winner(tally, tiebreak)
    return VoteOutcome(winner, tuple(tally), tie)
