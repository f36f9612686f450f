"""Randomized identity verification suites.

Every decomposition in the package is an algebraic identity; these
suites evaluate each one on randomized valid inputs and report the worst
scaled residual.  Bregman identities are checked at a relative tolerance
of 1e-9 (scaled by 1 + |lhs|), 0-1 effect identities at an absolute
1e-12.  The suites drive the same batched cores the public operations
wrap, grouped by grid shape so large counts stay fast.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import decomp
from .bregman import Generator, ItakuraSaito, KLMinimal, Poisson, Squared

__all__ = ["IdentityResult", "run_identity_suite", "BREGMAN_TOL", "EFFECT_TOL"]

BREGMAN_TOL = 1e-9
EFFECT_TOL = 1e-12

_GENERATORS: list[tuple[str, Generator]] = [
    ("squared", Squared()),
    ("poisson", Poisson()),
    ("itakura_saito", ItakuraSaito()),
    ("kl_k2", KLMinimal(2)),
    ("kl_k3", KLMinimal(3)),
    ("kl_k5", KLMinimal(5)),
]


@dataclass(frozen=True)
class IdentityResult:
    identity: str
    loss: str
    max_residual: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return self.max_residual <= self.tolerance

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return (
            f"{status}  {self.identity:<22} {self.loss:<14} "
            f"max residual {self.max_residual:.3e} (tol {self.tolerance:.0e})"
        )


def _shape_groups(rng: np.random.Generator, count: int, max_d: int, max_m: int):
    """Random (D, M) per instance, grouped so each group batches one core call."""
    ds = rng.integers(1, max_d + 1, size=count)
    ms = rng.integers(1, max_m + 1, size=count)
    groups: dict[tuple[int, int], int] = {}
    for d, m in zip(ds, ms):
        groups[(int(d), int(m))] = groups.get((int(d), int(m)), 0) + 1
    return groups


def _scaled(residual: np.ndarray, lhs: np.ndarray) -> float:
    return float(np.max(np.abs(residual) / (1.0 + np.abs(lhs))))


def _bregman_suite(gen: Generator, name: str, rng, count: int, fault: bool) -> list[IdentityResult]:
    results = []
    worst = {"ambiguity": 0.0, "bvd": 0.0, "ensemble_bv": 0.0}
    if isinstance(gen, KLMinimal):
        worst["cross_entropy"] = 0.0
        worst["dependency"] = 0.0
    for (d, m), batch in _shape_groups(rng, count, 5, 7).items():
        values = gen.sample(rng, batch * d * m).reshape(batch, d, m, gen.dim)
        targets = gen.sample(rng, batch)

        amb = decomp.ambiguity_core(gen, targets, values[:, 0])
        resid = amb["residual"] + (2.0 * amb["ambiguity"] if fault else 0.0)
        worst["ambiguity"] = max(worst["ambiguity"], _scaled(resid, amb["ensemble_loss"]))

        bvd = decomp.bvd_core(gen, targets[:, None, :], values)
        worst["bvd"] = max(worst["bvd"], _scaled(bvd_residual(bvd), bvd["expected_loss"]))

        ebv = decomp.ensemble_bv_core(gen, targets, values)
        scale = max(
            _scaled(ebv["residual_bias"], ebv["ensemble_bias"]),
            _scaled(ebv["residual_variance"], ebv["ensemble_variance"]),
        )
        worst["ensemble_bv"] = max(worst["ensemble_bv"], scale)

        if isinstance(gen, KLMinimal):
            labels = rng.integers(0, gen.k, size=batch)
            ce = decomp.ce_core(labels, values)
            ce_resid = ce["expected_loss"] - (
                ce["average_bias"] + ce["average_variance"] - ce["diversity"]
            )
            worst["cross_entropy"] = max(
                worst["cross_entropy"], _scaled(ce_resid, ce["expected_loss"])
            )
            dep = decomp.dependency_core(labels, values)
            dep_resid = dep["expected_loss"] - (
                dep["average_bias"] + dep["average_variance"] - dep["dependency"]
            )
            worst["dependency"] = max(worst["dependency"], _scaled(dep_resid, dep["expected_loss"]))
    for identity, value in worst.items():
        results.append(IdentityResult(identity, name, value, BREGMAN_TOL))
    return results


def bvd_residual(terms: dict) -> np.ndarray:
    return terms["expected_loss"] - (
        terms["noise"] + terms["average_bias"] + terms["average_variance"] - terms["diversity"]
    )


def _effects_suite(rng, count: int) -> list[IdentityResult]:
    worst = {
        "effect_bvd": 0.0,
        "effect_bvd_weighted": 0.0,
        "ambiguity_effect": 0.0,
        "good_bad": 0.0,
    }
    for _ in range(count):
        k = int(rng.integers(2, 6))
        d = int(rng.integers(1, 6))
        m = int(rng.integers(1, 8))
        labels = rng.integers(0, k, size=(d, m))
        probs = rng.dirichlet(np.ones(k))
        y_dist = decomp.LabelDistribution(tuple(probs))

        rep = decomp.bvd_effect_01(y_dist, labels, rng=rng, k=k)
        worst["effect_bvd"] = max(worst["effect_bvd"], abs(rep.residual))

        weights = rng.random((d, m)) + 1e-3
        repw = decomp.bvd_effect_01(y_dist, labels, weights=weights, rng=rng, k=k)
        worst["effect_bvd_weighted"] = max(worst["effect_bvd_weighted"], abs(repw.residual))

        y = int(rng.integers(0, k))
        winner = int(rng.integers(0, k))
        amb = decomp.ambiguity_effect(y, labels[0], winner)
        worst["ambiguity_effect"] = max(worst["ambiguity_effect"], abs(amb["residual"]))

        pm1 = 2 * rng.integers(0, 2, size=m) - 1
        vote = 1 if pm1.sum() > 0 else (-1 if pm1.sum() < 0 else int(2 * rng.integers(0, 2) - 1))
        gb = decomp.good_bad_diversity(int(2 * rng.integers(0, 2) - 1), pm1, vote)
        worst["good_bad"] = max(worst["good_bad"], abs(gb["residual"]))
    return [IdentityResult(name, "zero_one", value, EFFECT_TOL) for name, value in worst.items()]


def run_identity_suite(seed: int = 0, count: int = 1000, inject_fault: bool = False):
    """Run every identity check on ``count`` random instances each.

    ``inject_fault`` flips the sign of the ambiguity term in the squared
    suite, a negative control that must make the run fail.
    """
    rng = np.random.default_rng(seed)
    results: list[IdentityResult] = []
    for name, gen in _GENERATORS:
        fault = inject_fault and name == "squared"
        results.extend(_bregman_suite(gen, name, rng, count, fault))
    results.extend(_effects_suite(rng, count))
    return results
