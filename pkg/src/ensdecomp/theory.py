"""Closed-form and Monte-Carlo models of voting ensembles.

Includes the majority-vote error of independent binary voters, the
induced diversity-effect curve, a plurality-vote simulation for k
classes, and the counterexample table showing that no label-independent
variance term can exist for the 0-1 loss.
"""

from __future__ import annotations

import math

import numpy as np

from .combiners import tally_winner
from .decomp import _as_label_distribution
from .errors import DomainError, ParityError

__all__ = [
    "majority_error_independent",
    "diversity_effect_independent",
    "simulate_diversity_effect",
    "nonexistence_counterexample",
]


def _check_odd(m: int) -> None:
    if m < 1 or m % 2 == 0:
        raise ParityError(f"ensemble size must be a positive odd integer, got {m}")


def majority_error_independent(epsilon: float, m: int) -> float:
    """Probability that a majority of m independent voters errs, when each
    errs with probability epsilon.

    Computed as sum_{i=0}^{(m-1)/2} C(m, i) eps^(m-i) (1-eps)^i with
    log-space binomial coefficients, stable up to m ~ 10^3.
    """
    _check_odd(m)
    if not 0.0 <= epsilon <= 1.0:
        raise DomainError("error probability must lie in [0, 1]")
    if epsilon == 0.0:
        return 0.0
    if epsilon == 1.0:
        return 1.0
    log_eps = math.log(epsilon)
    log_one_minus = math.log1p(-epsilon)
    terms = []
    for i in range((m - 1) // 2 + 1):
        log_binom = math.lgamma(m + 1) - math.lgamma(i + 1) - math.lgamma(m - i + 1)
        terms.append(math.exp(log_binom + (m - i) * log_eps + i * log_one_minus))
    return math.fsum(terms)


def diversity_effect_independent(epsilon: float, m: int) -> float:
    """Individual error rate minus the majority-vote error rate.

    Positive iff epsilon < 0.5, zero at epsilon in {0, 0.5, 1}, and
    antisymmetric about epsilon = 0.5 for odd m.
    """
    return epsilon - majority_error_independent(epsilon, m)


def simulate_diversity_effect(
    k: int, p_correct: float, m: int, replicates: int, seed: int
) -> dict:
    """Monte-Carlo diversity-effect of m independent k-class voters.

    Each voter is correct with probability ``p_correct``; otherwise its
    vote is uniform over the k-1 wrong classes.  The ensemble is a
    plurality vote with seeded random tie-breaking.  Returns the sample
    mean of (average member loss - ensemble loss) and its standard error
    (sample standard deviation / sqrt(replicates)).
    """
    if not 0.0 < p_correct < 1.0:
        raise DomainError("p_correct must lie in (0, 1)")
    if k < 2 or m < 1 or replicates < 2:
        raise DomainError("need k >= 2, m >= 1, replicates >= 2")
    rng = np.random.default_rng(seed)
    correct = rng.random((replicates, m)) < p_correct
    wrong = rng.integers(1, k, size=(replicates, m))
    labels = np.where(correct, 0, wrong)  # true class is 0
    offsets = labels + np.arange(replicates)[:, None] * k
    tallies = np.bincount(offsets.ravel(), minlength=replicates * k).reshape(replicates, k)
    winners = np.argmax(tallies, axis=1)
    top = np.take_along_axis(tallies, winners[:, None], 1)[:, 0]
    tie_rows = np.flatnonzero((tallies == top[:, None]).sum(axis=1) > 1)
    for row in tie_rows:
        winners[row], _ = tally_winner(tallies[row].astype(float), rng)
    samples = np.mean(labels != 0, axis=1) - (winners != 0)
    mean = float(np.mean(samples))
    se = float(np.std(samples, ddof=1) / math.sqrt(replicates))
    return {"mean": mean, "se": se}


def nonexistence_counterexample(member_dist) -> np.ndarray:
    """Residual table E[loss] - loss(y, q*) for every candidate centroid.

    Row ``q_star``, column ``y`` holds the value a label-independent
    variance term would have to take; no row is constant across y for a
    non-degenerate member distribution, so no such term exists.
    """
    dist = _as_label_distribution(member_dist)
    probs = dist.array
    k = dist.k
    expected_loss = 1.0 - probs  # indexed by y
    zero_one = 1.0 - np.eye(k)  # loss(y, q_star)
    return expected_loss[None, :] - zero_one  # [q_star, y]
