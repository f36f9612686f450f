"""Prediction-tensor collection and decomposition estimators.

The estimation protocol trains, for each of D trials, M ensemble members
on (by default bootstrapped) samples of a 90% without-replacement
sub-sample of the training data, then records every member's prediction
at every test point.  The resulting D x M x N tensor feeds the
decomposition estimators, which are exactly the per-test-point
decompositions averaged over points, and an ensemble-size sweep that
reuses members (the size-m ensemble is the first m members of the
size-M one, never a fresh training run).

Everything is bit-reproducible from ``TrialPlan.master_seed``: the seed
of trial d is ``derive_seed(master, d)`` and of member i within it
``derive_seed(master, d, i)``, so extending a plan never perturbs
earlier trials.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .bregman import Generator, KLMinimal
from .decomp import (
    DecompositionReport,
    EffectReport,
    bvd_core,
    bvd_effect_01,
    ce_core,
    _as_label_distribution,
)
from .errors import DomainError, LearnerError, SizeError
from .learners import Dataset, take
from .seeding import derive_seed

__all__ = [
    "TrialPlan",
    "PredictionTensor",
    "SweepEntry",
    "collect_predictions",
    "estimate_member_centroids",
    "estimate_bvd",
    "estimate_effects_01",
    "sweep_ensemble_size",
    "save_tensor_csv",
    "load_tensor_csv",
]


@dataclass(frozen=True)
class TrialPlan:
    """How to build a prediction tensor: D trials of M members each."""

    n_trials: int
    ensemble_size: int
    subsample_fraction: float = 0.9
    bootstrap: bool = True
    master_seed: int = 0

    def __post_init__(self):
        if self.n_trials < 1 or self.ensemble_size < 1:
            raise DomainError("need at least one trial and one member")
        if not 0.0 < self.subsample_fraction <= 1.0:
            raise DomainError("subsample fraction must lie in (0, 1]")


@dataclass(frozen=True)
class PredictionTensor:
    """D x M x N member predictions plus optional vote weights.

    ``values`` is float (D, M, N) for regression, float (D, M, N, k-1)
    for probabilistic predictions, or int (D, M, N) class labels.
    ``weights`` is (D, M) or (D, M, N).
    """

    values: np.ndarray
    kind: str  # "regression" | "proba" | "label"
    k: int | None = None
    weights: np.ndarray | None = None

    def __post_init__(self):
        values = np.asarray(self.values)
        expected_ndim = 4 if self.kind == "proba" else 3
        if values.ndim != expected_ndim or min(values.shape[:3]) < 1:
            raise DomainError(f"tensor for kind {self.kind!r} must have {expected_ndim} axes")
        if self.kind not in ("regression", "proba", "label"):
            raise DomainError(f"unknown tensor kind {self.kind!r}")
        if self.kind in ("proba", "label") and (self.k is None or self.k < 2):
            raise DomainError("classification tensors need a class count k >= 2")
        values = values.copy()
        values.flags.writeable = False
        object.__setattr__(self, "values", values)
        if self.weights is not None:
            w = np.asarray(self.weights, dtype=float).copy()
            if w.shape not in (values.shape[:2], values.shape[:3]):
                raise DomainError("weights must be shaped (D, M) or (D, M, N)")
            w.flags.writeable = False
            object.__setattr__(self, "weights", w)

    @property
    def shape(self):
        return self.values.shape[:3]

    def point_weights(self, j: int):
        """The (D, M) weight slice at test point j, or None."""
        if self.weights is None:
            return None
        return self.weights if self.weights.ndim == 2 else self.weights[:, :, j]


def _env_threads() -> int:
    import os

    raw = os.environ.get("ENSDECOMP_THREADS", "")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def collect_predictions(
    learner_factory,
    train_data: Dataset,
    test_data: Dataset,
    plan: TrialPlan,
    kind: str,
    threads: int | None = None,
) -> PredictionTensor:
    """Build the prediction tensor for a factory of trainable members.

    ``learner_factory`` must provide ``run_trial(trial_data,
    test_features, ensemble_size, member_seed, bootstrap)`` returning
    member outputs stacked on the first axis plus optional vote weights.
    Trials are independent and may run on several threads; assembly is
    by index, so the result does not depend on the parallelism degree.
    """
    if len(train_data) == 0 or len(test_data) == 0:
        raise DomainError("train and test data must be nonempty")
    n_train = len(train_data)
    size = max(1, int(round(plan.subsample_fraction * n_train)))
    threads = _env_threads() if threads is None else max(1, threads)

    def one_trial(d: int):
        try:
            rng = np.random.default_rng(derive_seed(plan.master_seed, d))
            idx = np.sort(rng.choice(n_train, size=size, replace=False))
            trial_data = take(train_data, idx)
            return learner_factory.run_trial(
                trial_data,
                test_data.features,
                plan.ensemble_size,
                lambda i: derive_seed(plan.master_seed, d, i),
                plan.bootstrap,
            )
        except Exception as exc:  # noqa: BLE001 - re-raise with trial context
            raise LearnerError(f"trial {d}: {exc}") from exc

    if threads > 1 and plan.n_trials > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(one_trial, range(plan.n_trials)))
    else:
        results = [one_trial(d) for d in range(plan.n_trials)]

    values = np.stack([r[0] for r in results])
    weights = None
    if results[0][1] is not None:
        weights = np.stack([r[1] for r in results])
    if kind == "label":
        values = values.astype(int)
        k = train_data.n_classes or int(train_data.targets.max()) + 1
    elif kind == "proba":
        k = values.shape[-1] + 1
    else:
        values = values.astype(float)
        k = None
    return PredictionTensor(values, kind, k=k, weights=weights)


def estimate_member_centroids(tensor: PredictionTensor, gen: Generator) -> np.ndarray:
    """Per-(member, test point) centroids: the inverse gradient of the
    trial-averaged dual coordinates.  Shape (M, N, dim)."""
    values = _bregman_values(tensor, gen)
    if values.shape[0] == 1:
        return values[0]
    return gen.grad_inverse(np.mean(gen.grad(values), axis=0))


def _bregman_values(tensor: PredictionTensor, gen: Generator) -> np.ndarray:
    if tensor.kind == "proba":
        if not isinstance(gen, KLMinimal) or gen.k != tensor.k:
            raise DomainError("probability tensors require the matching KL loss")
        return gen.validate(tensor.values)
    if tensor.kind == "regression":
        if gen.dim != 1:
            raise DomainError("regression tensors require a scalar loss")
        return gen.validate(tensor.values[..., None])
    raise DomainError("label tensors have no Bregman decomposition; use the 0-1 effects")


def _bregman_pointwise(values: np.ndarray, gen: Generator, targets) -> dict:
    """Per-test-point decomposition terms; values is (D, M, N, dim)."""
    per_point = np.moveaxis(values, 2, 0)  # (N, D, M, dim)
    n_points = per_point.shape[0]
    if isinstance(gen, KLMinimal):
        labels = np.asarray(targets)
        if labels.shape != (n_points,) or not np.all(labels == labels.astype(int)):
            raise DomainError("probabilistic estimation expects one class label per test point")
        labels = labels.astype(int)
        if labels.min() < 0 or labels.max() >= gen.k:
            raise DomainError(f"labels must lie in 0..{gen.k - 1}")
        terms = ce_core(labels, per_point)
        terms["noise"] = np.zeros(n_points)
        return terms
    tarr = np.asarray(targets, dtype=float)
    if tarr.shape != (n_points,):
        raise DomainError("expected one target per test point")
    gen.validate(tarr[:, None])
    return bvd_core(gen, tarr[:, None, None], per_point)


def _report_from_terms(terms: dict) -> tuple[DecompositionReport, dict]:
    report = DecompositionReport(
        expected_loss=float(np.mean(terms["expected_loss"])),
        noise=float(np.mean(terms["noise"])),
        average_bias=float(np.mean(terms["average_bias"])),
        average_variance=float(np.mean(terms["average_variance"])),
        diversity=float(np.mean(terms["diversity"])),
    )
    ses = {name: _std_error(arr) for name, arr in terms.items()}
    return report, ses


def _std_error(arr: np.ndarray) -> float:
    n = arr.size
    if n < 2:
        return 0.0
    return float(np.std(arr, ddof=1) / math.sqrt(n))


def estimate_bvd(tensor: PredictionTensor, gen: Generator, targets) -> DecompositionReport:
    """Triple-averaged decomposition terms over trials, members, points.

    Definitionally the average over test points of the per-point
    decomposition, with the expected loss computed independently from
    the per-trial combined predictions.
    """
    values = _bregman_values(tensor, gen)
    report, _ = _report_from_terms(_bregman_pointwise(values, gen, targets))
    return report


def _effects_pointwise(tensor: PredictionTensor, targets, rng: np.random.Generator, m=None) -> dict:
    labels = tensor.values if m is None else tensor.values[:, :m]
    n_points = labels.shape[2]
    k = tensor.k
    names = ("expected_loss", "noise", "bias_effect", "variance_effect", "diversity_effect")
    out = {name: np.empty(n_points) for name in names}
    for j in range(n_points):
        y_dist = _point_distribution(targets, j, k)
        w = tensor.point_weights(j)
        if w is not None and m is not None:
            w = w[:, :m]
        rep = bvd_effect_01(y_dist, labels[:, :, j], weights=w, rng=rng, k=k)
        for name in names:
            out[name][j] = getattr(rep, name)
    return out


def _point_distribution(targets, j: int, k: int):
    targets = np.asarray(targets)
    if targets.ndim == 2:
        return _as_label_distribution(targets[j], k)
    return _as_label_distribution(int(targets[j]), k)


def estimate_effects_01(
    tensor: PredictionTensor, targets, rng: np.random.Generator | None = None
) -> EffectReport:
    """Triple-averaged 0-1 effect terms over trials, members, points.

    ``targets`` is (N,) observed labels (noise-free convention) or
    (N, k) label distributions for the analytic noise path.  Weighted
    tensors use the weighted vote and weighted effect terms.
    """
    if tensor.kind != "label":
        raise DomainError("0-1 effects require a label tensor")
    rng = np.random.default_rng(0) if rng is None else rng
    terms = _effects_pointwise(tensor, targets, rng)
    return EffectReport(*(float(np.mean(terms[n])) for n in (
        "expected_loss", "noise", "bias_effect", "variance_effect", "diversity_effect"
    )))


@dataclass(frozen=True)
class SweepEntry:
    """One ensemble size of a nested sweep: the report at that size plus
    per-term standard errors over test points."""

    m: int
    report: DecompositionReport | EffectReport
    std_errors: dict


def sweep_ensemble_size(
    tensor: PredictionTensor,
    gen: Generator | None,
    targets,
    m_values,
    rng: np.random.Generator | None = None,
) -> list[SweepEntry]:
    """Reports for ascending ensemble sizes, reusing members.

    The report at size m is computed from members 0..m-1 of the same
    tensor, so the whole sweep costs no additional model training.
    """
    m_values = [int(m) for m in m_values]
    if any(m < 1 for m in m_values) or any(b >= a for a, b in zip(m_values[1:], m_values)):
        raise SizeError("ensemble sizes must be positive and strictly ascending")
    if m_values[-1] > tensor.values.shape[1]:
        raise SizeError(
            f"sweep needs {m_values[-1]} members but the tensor holds {tensor.values.shape[1]}"
        )
    entries = []
    if tensor.kind == "label":
        rng = np.random.default_rng(0) if rng is None else rng
        for m in m_values:
            terms = _effects_pointwise(tensor, targets, rng, m=m)
            report = EffectReport(*(float(np.mean(terms[n])) for n in (
                "expected_loss", "noise", "bias_effect", "variance_effect", "diversity_effect"
            )))
            entries.append(SweepEntry(m, report, {k: _std_error(v) for k, v in terms.items()}))
        return entries
    if gen is None:
        raise DomainError("Bregman sweeps need a generator")
    values = _bregman_values(tensor, gen)
    for m in m_values:
        report, ses = _report_from_terms(_bregman_pointwise(values[:, :m], gen, targets))
        entries.append(SweepEntry(m, report, ses))
    return entries


# ---------------------------------------------------------------------------
# serialization

_KIND_ORDER = ("d", "i", "j")


def save_tensor_csv(tensor: PredictionTensor, path) -> None:
    """Write a tensor as CSV: a metadata comment line, then one row per
    (trial d, member i, test point j) with the value columns (label, or
    v0..v_{dim-1}) and, when present, the vote weight w."""
    d, m, n = tensor.shape
    dim = tensor.values.shape[3] if tensor.kind == "proba" else 1
    k = tensor.k if tensor.k is not None else ""
    has_w = tensor.weights is not None
    with open(path, "w", newline="") as fh:
        fh.write(f"# D={d} M={m} N={n} k={k} kind={tensor.kind} weights={int(has_w)}\n")
        if tensor.kind == "label":
            cols = ["label"]
        elif tensor.kind == "regression":
            cols = ["v0"]
        else:
            cols = [f"v{c}" for c in range(dim)]
        header = list(_KIND_ORDER) + cols + (["w"] if has_w else [])
        fh.write(",".join(header) + "\n")
        for di in range(d):
            for mi in range(m):
                for ji in range(n):
                    cell = tensor.values[di, mi, ji]
                    if tensor.kind == "label":
                        body = [str(int(cell))]
                    elif tensor.kind == "regression":
                        body = [repr(float(cell))]
                    else:
                        body = [repr(float(v)) for v in cell]
                    row = [str(di), str(mi), str(ji)] + body
                    if has_w:
                        w = tensor.weights
                        row.append(repr(float(w[di, mi] if w.ndim == 2 else w[di, mi, ji])))
                    fh.write(",".join(row) + "\n")


def load_tensor_csv(path) -> PredictionTensor:
    """Read a tensor written by ``save_tensor_csv``."""
    with open(path) as fh:
        meta_line = fh.readline().strip()
        if not meta_line.startswith("# "):
            raise DomainError("missing tensor metadata line")
        meta = dict(part.split("=", 1) for part in meta_line[2:].split())
        d, m, n = int(meta["D"]), int(meta["M"]), int(meta["N"])
        kind = meta["kind"]
        k = int(meta["k"]) if meta.get("k") else None
        has_w = meta.get("weights") == "1"
        header = fh.readline().strip().split(",")
        value_cols = len(header) - 3 - (1 if has_w else 0)
        if kind == "proba":
            values = np.empty((d, m, n, value_cols))
        elif kind == "label":
            values = np.empty((d, m, n), dtype=int)
        else:
            values = np.empty((d, m, n))
        weights = np.empty((d, m, n)) if has_w else None
        for line in fh:
            parts = line.strip().split(",")
            di, mi, ji = int(parts[0]), int(parts[1]), int(parts[2])
            body = parts[3 : 3 + value_cols]
            if kind == "label":
                values[di, mi, ji] = int(body[0])
            elif kind == "regression":
                values[di, mi, ji] = float(body[0])
            else:
                values[di, mi, ji] = [float(v) for v in body]
            if has_w:
                weights[di, mi, ji] = float(parts[3 + value_cols])
    return PredictionTensor(values, kind, k=k, weights=weights)
