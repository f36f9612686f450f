"""Base learners, ensemble constructors, and data sources.

Self-contained CART trees (regression and classification with
leaf-frequency probabilities), decision stumps, Bagging / Random Forest
member factories, AdaBoost and LogitBoost, synthetic data generators,
and a CSV loader.  Everything is deterministic given its seed: split
searches are exhaustive over midpoints of sorted distinct feature
values, with ties broken by lowest feature index then lowest threshold.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import DomainError, EmptyDataError, ParseError, SchemaError
from .seeding import derive_seed

__all__ = [
    "Dataset",
    "TreeParams",
    "RegressionTree",
    "ClassificationTree",
    "BoostedEnsemble",
    "fit_regression_tree",
    "fit_classification_tree",
    "fit_stump",
    "fit_adaboost",
    "fit_logitboost",
    "TreeMemberFactory",
    "BoostMemberFactory",
    "bagging_member_factory",
    "random_forest_member_factory",
    "adaboost_member_factory",
    "logitboost_member_factory",
    "make_synthetic",
    "load_csv",
    "take",
]

LEAF_PROB_EPS = 1e-9
ALPHA_CAP = 0.5 * math.log(1e8)  # AdaBoost weight cap for zero-error rounds
_SPLIT_TOL = 1e-12


@dataclass(frozen=True)
class Dataset:
    """Feature matrix plus targets (reals or class labels 0..k-1).

    ``label_probs`` is only set by synthetic generators that know the
    conditional label distribution at each point.
    """

    features: np.ndarray
    targets: np.ndarray
    n_classes: int | None = None
    label_probs: np.ndarray | None = None

    def __post_init__(self):
        features = np.atleast_2d(np.asarray(self.features, dtype=float))
        targets = np.asarray(self.targets)
        if features.shape[0] == 0 or features.shape[1] == 0:
            raise EmptyDataError("dataset needs at least one row and one feature")
        if targets.shape != (features.shape[0],):
            raise DomainError("targets must be one value per row")
        if not np.all(np.isfinite(features)) or not np.all(np.isfinite(targets.astype(float))):
            raise DomainError("dataset contains non-finite values")
        object.__setattr__(self, "features", features)
        object.__setattr__(self, "targets", targets)

    def __len__(self) -> int:
        return self.features.shape[0]

    @property
    def n_features(self) -> int:
        return self.features.shape[1]


def take(data: Dataset, indices) -> Dataset:
    """Row subset of a dataset, preserving metadata."""
    indices = np.asarray(indices, dtype=int)
    return Dataset(
        data.features[indices],
        data.targets[indices],
        n_classes=data.n_classes,
        label_probs=None if data.label_probs is None else data.label_probs[indices],
    )


@dataclass(frozen=True)
class TreeParams:
    """CART hyperparameters.

    ``max_depth`` of None means unconstrained; ``feature_subsample``
    limits the candidate features drawn per split (Random Forests);
    ``laplace_alpha`` smooths leaf label frequencies.
    """

    max_depth: int | None = None
    min_samples_split: int = 2
    feature_subsample: int | None = None
    laplace_alpha: float = 1.0
    seed: int = 0


class _Node:
    __slots__ = ("feature", "threshold", "left", "right", "value")

    def __init__(self, value=None):
        self.feature = -1
        self.threshold = 0.0
        self.left = None
        self.right = None
        self.value = value

    @property
    def is_leaf(self):
        return self.left is None


def _best_split_regression(X, y, w, feature_ids):
    """Minimise weighted SSE over all (feature, midpoint) candidates.

    Returns (gain, feature, threshold) or None.  Features are scanned in
    ascending index order and only strictly better scores replace the
    incumbent, so ties resolve to the lowest feature; within a feature,
    argmin picks the lowest threshold.
    """
    wy = w * y
    total_w = w.sum()
    total_s = wy.sum()
    total_q = (wy * y).sum()
    parent = total_q - total_s * total_s / total_w if total_w > 0 else 0.0
    best = None
    for f in feature_ids:
        order = np.argsort(X[:, f], kind="stable")
        xv = X[order, f]
        cuts = np.flatnonzero(xv[1:] > xv[:-1]) + 1
        if cuts.size == 0:
            continue
        cw = np.cumsum(w[order])[cuts - 1]
        cs = np.cumsum(wy[order])[cuts - 1]
        cq = np.cumsum(wy[order] * y[order])[cuts - 1]
        with np.errstate(divide="ignore", invalid="ignore"):
            sse_left = np.where(cw > 0, cq - cs * cs / cw, 0.0)
            rw = total_w - cw
            rs = total_s - cs
            sse_right = np.where(rw > 0, (total_q - cq) - rs * rs / rw, 0.0)
        scores = sse_left + sse_right
        pos = int(np.argmin(scores))
        gain = parent - float(scores[pos])
        if gain > _SPLIT_TOL * (1.0 + abs(parent)) and (best is None or gain > best[0]):
            cut = cuts[pos]
            best = (gain, int(f), float(0.5 * (xv[cut - 1] + xv[cut])))
    return best


def _best_split_gini(X, y, w, feature_ids, k):
    """Minimise weighted Gini impurity; same tie conventions as above."""
    onehot_w = np.zeros((len(y), k))
    onehot_w[np.arange(len(y)), y] = w
    totals = onehot_w.sum(axis=0)
    total_w = totals.sum()
    parent = total_w - (totals @ totals) / total_w if total_w > 0 else 0.0
    best = None
    for f in feature_ids:
        order = np.argsort(X[:, f], kind="stable")
        xv = X[order, f]
        cuts = np.flatnonzero(xv[1:] > xv[:-1]) + 1
        if cuts.size == 0:
            continue
        ccounts = np.cumsum(onehot_w[order], axis=0)[cuts - 1]  # (n_cuts, k)
        lw = ccounts.sum(axis=1)
        rcounts = totals - ccounts
        rw = total_w - lw
        with np.errstate(divide="ignore", invalid="ignore"):
            gini_left = np.where(lw > 0, lw - np.sum(ccounts * ccounts, axis=1) / lw, 0.0)
            gini_right = np.where(rw > 0, rw - np.sum(rcounts * rcounts, axis=1) / rw, 0.0)
        scores = gini_left + gini_right
        pos = int(np.argmin(scores))
        gain = parent - float(scores[pos])
        if gain > _SPLIT_TOL * (1.0 + abs(parent)) and (best is None or gain > best[0]):
            cut = cuts[pos]
            best = (gain, int(f), float(0.5 * (xv[cut - 1] + xv[cut])))
    return best


def _grow_tree(X, y, w, params: TreeParams, leaf_value, split_fn):
    """Iterative CART builder; the per-split feature draw consumes the
    tree RNG in a fixed (stack) order, so growth is seed-deterministic."""
    n, n_features = X.shape
    rng = np.random.default_rng(params.seed)
    root = _Node()
    stack = [(root, np.arange(n), 0)]
    while stack:
        node, idx, depth = stack.pop()
        node.value = leaf_value(idx)
        if params.max_depth is not None and depth >= params.max_depth:
            continue
        if idx.size < params.min_samples_split:
            continue
        if params.feature_subsample is not None and params.feature_subsample < n_features:
            feats = np.sort(rng.choice(n_features, params.feature_subsample, replace=False))
        else:
            feats = np.arange(n_features)
        found = split_fn(X[idx], y[idx], w[idx], feats)
        if found is None:
            continue
        _, node.feature, node.threshold = found
        mask = X[idx, node.feature] <= node.threshold
        node.left = _Node()
        node.right = _Node()
        stack.append((node.right, idx[~mask], depth + 1))
        stack.append((node.left, idx[mask], depth + 1))
    return root


def _leaf_values(root: _Node, X: np.ndarray) -> list:
    """Leaf payload for each row of X."""
    n = X.shape[0]
    out = [None] * n
    stack = [(root, np.arange(n))]
    while stack:
        node, idx = stack.pop()
        if idx.size == 0:
            continue
        if node.is_leaf:
            for i in idx:
                out[i] = node.value
            continue
        mask = X[idx, node.feature] <= node.threshold
        stack.append((node.left, idx[mask]))
        stack.append((node.right, idx[~mask]))
    return out


@dataclass
class RegressionTree:
    root: _Node
    params: TreeParams

    def predict(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        return np.array(_leaf_values(self.root, X), dtype=float)


@dataclass
class ClassificationTree:
    root: _Node  # leaf payload: weighted class counts, shape (k,)
    params: TreeParams
    k: int

    def _leaf_probs(self, counts: np.ndarray) -> np.ndarray:
        a = self.params.laplace_alpha
        probs = (counts + a) / (counts.sum() + self.k * a)
        probs = np.clip(probs, LEAF_PROB_EPS, 1.0 - LEAF_PROB_EPS)
        return probs / probs.sum()

    def predict_proba(self, X) -> np.ndarray:
        """Leaf label frequencies, minimally parameterised: (n, k-1)."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        counts = np.stack(_leaf_values(self.root, X))
        probs = np.apply_along_axis(self._leaf_probs, 1, counts)
        return probs[:, : self.k - 1]

    def predict_label(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        counts = np.stack(_leaf_values(self.root, X))
        probs = np.apply_along_axis(self._leaf_probs, 1, counts)
        return np.argmax(probs, axis=1)


def _check_fit_inputs(data: Dataset, sample_weight):
    if len(data) == 0:
        raise EmptyDataError("cannot fit on an empty dataset")
    if sample_weight is None:
        w = np.ones(len(data))
    else:
        w = np.asarray(sample_weight, dtype=float)
        if w.shape != (len(data),) or np.any(w < 0):
            raise DomainError("sample weights must be one nonnegative value per row")
    return w


def fit_regression_tree(data: Dataset, params: TreeParams, sample_weight=None) -> RegressionTree:
    """Greedy CART with variance-reduction splits; leaves predict the
    (weighted) mean of their samples."""
    w = _check_fit_inputs(data, sample_weight)
    y = np.asarray(data.targets, dtype=float)

    def leaf_value(idx):
        ws = w[idx].sum()
        return float(np.dot(w[idx], y[idx]) / ws) if ws > 0 else float(np.mean(y[idx]))

    root = _grow_tree(data.features, y, w, params, leaf_value, _best_split_regression)
    return RegressionTree(root, params)


def fit_classification_tree(
    data: Dataset, params: TreeParams, sample_weight=None
) -> ClassificationTree:
    """Greedy CART with Gini splits; leaves hold (weighted) label counts,
    turned into Laplace-smoothed probabilities at prediction time."""
    w = _check_fit_inputs(data, sample_weight)
    y = np.asarray(data.targets)
    if not np.all(y == y.astype(int)):
        raise DomainError("classification targets must be integer labels")
    y = y.astype(int)
    if y.min() < 0:
        raise DomainError("class labels must be nonnegative")
    k = data.n_classes if data.n_classes is not None else int(y.max()) + 1

    def leaf_value(idx):
        counts = np.zeros(k)
        np.add.at(counts, y[idx], w[idx])
        return counts

    def split_fn(X, yy, ww, feats):
        return _best_split_gini(X, yy, ww, feats, k)

    root = _grow_tree(data.features, y, w, params, leaf_value, split_fn)
    return ClassificationTree(root, params, k)


def fit_stump(data: Dataset, params: TreeParams, sample_weight=None) -> ClassificationTree:
    """Depth-1 classification tree."""
    return fit_classification_tree(data, replace(params, max_depth=1), sample_weight)


# ---------------------------------------------------------------------------
# boosting


def _binary_pm1(targets) -> tuple[np.ndarray, np.ndarray]:
    """Map {0,1} or {-1,+1} targets to +/-1; returns (pm1, classes).

    ``classes[0]`` maps to -1 and ``classes[1]`` to +1, so label indices
    are recovered as (pm1 + 1) // 2.
    """
    y = np.asarray(targets)
    uniq = set(np.unique(y).tolist())
    if uniq <= {0, 1}:
        return np.where(y == 1, 1, -1).astype(int), np.array([0, 1])
    if uniq <= {-1, 1}:
        return y.astype(int), np.array([-1, 1])
    raise DomainError("boosting requires binary targets in {0,1} or {-1,+1}")


@dataclass
class BoostedEnsemble:
    """A sequentially fitted ensemble usable as weighted voters.

    AdaBoost members are (stump, alpha) pairs with constant weights;
    LogitBoost members are regression models whose per-point sign gives
    the vote and magnitude the weight.  ``train_errors`` holds the
    weighted training error of each accepted AdaBoost round.
    """

    kind: str  # "adaboost" | "logitboost"
    members: list
    classes: np.ndarray
    train_errors: list | None = None

    @property
    def size(self) -> int:
        return len(self.members)

    def member_votes(self, X) -> tuple[np.ndarray, np.ndarray]:
        """Per-member label indices (M, n) and weights (M,) or (M, n)."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if self.kind == "adaboost":
            labels = np.stack([stump.predict_label(X) for stump, _ in self.members])
            weights = np.array([alpha for _, alpha in self.members])
            return labels, weights
        margins = np.stack([0.5 * tree.predict(X) for tree in self.members])
        labels = (margins >= 0).astype(int)
        return labels, np.abs(margins)

    def predict_label(self, X) -> np.ndarray:
        """Weighted-vote prediction, as labels from ``classes``."""
        labels, weights = self.member_votes(X)
        signs = 2 * labels - 1
        if weights.ndim == 1:
            score = np.tensordot(weights, signs, axes=(0, 0))
        else:
            score = np.sum(weights * signs, axis=0)
        return self.classes[(score >= 0).astype(int)]


def fit_adaboost(data: Dataset, m: int, stump_params: TreeParams) -> BoostedEnsemble:
    """Discrete AdaBoost with decision stumps.

    Stops early when a round's weighted error reaches 0.5; a round with
    zero weighted error keeps its member but with the weight capped at
    0.5*ln(1e8) to avoid infinities.
    """
    y_pm1, classes = _binary_pm1(data.targets)
    y01 = (y_pm1 + 1) // 2
    base = Dataset(data.features, y01, n_classes=2)
    n = len(data)
    w = np.full(n, 1.0 / n)
    members = []
    train_errors = []
    for t in range(m):
        stump = fit_stump(base, replace(stump_params, seed=derive_seed(stump_params.seed, t)), w)
        pred = 2 * stump.predict_label(data.features) - 1
        eps = float(np.sum(w * (pred != y_pm1)))
        if eps >= 0.5:
            break
        alpha = ALPHA_CAP if eps <= 0.0 else min(0.5 * math.log((1 - eps) / eps), ALPHA_CAP)
        members.append((stump, alpha))
        train_errors.append(eps)
        w = w * np.exp(-alpha * y_pm1 * pred)
        w = w / w.sum()
    return BoostedEnsemble("adaboost", members, classes, train_errors)


def fit_logitboost(data: Dataset, m: int, stump_params: TreeParams) -> BoostedEnsemble:
    """LogitBoost with depth-1 regression stumps on working responses.

    Working weights are floored at 1e-8 and responses clipped at +/-4 to
    keep the Newton steps bounded near saturation.
    """
    y_pm1, classes = _binary_pm1(data.targets)
    y01 = ((y_pm1 + 1) // 2).astype(float)
    reg_params = replace(stump_params, max_depth=1)
    score = np.zeros(len(data))
    prob = np.full(len(data), 0.5)
    members = []
    for t in range(m):
        w = np.maximum(prob * (1.0 - prob), 1e-8)
        z = np.clip((y01 - prob) / w, -4.0, 4.0)
        stump = fit_regression_tree(
            Dataset(data.features, z),
            replace(reg_params, seed=derive_seed(reg_params.seed, t)),
            sample_weight=w,
        )
        members.append(stump)
        score = score + 0.5 * stump.predict(data.features)
        prob = 1.0 / (1.0 + np.exp(-2.0 * score))
    return BoostedEnsemble("logitboost", members, classes)


# ---------------------------------------------------------------------------
# member factories for prediction-tensor collection


def _bootstrap_indices(n: int, rng: np.random.Generator) -> np.ndarray:
    return rng.integers(0, n, size=n)


@dataclass
class TreeMemberFactory:
    """Independently trained tree members (Bagging / Random Forests).

    ``sqrt_features=True`` draws ceil(sqrt(F)) candidate features per
    split, resolved against the data at fit time.
    """

    params: TreeParams
    task: str  # "regression" | "classification"
    sqrt_features: bool = False

    def run_trial(self, trial_data: Dataset, test_features, ensemble_size, member_seed, bootstrap):
        params = self.params
        if self.sqrt_features:
            params = replace(params, feature_subsample=math.ceil(math.sqrt(trial_data.n_features)))
        outputs = []
        for i in range(ensemble_size):
            seed = member_seed(i)
            if bootstrap:
                rng = np.random.default_rng(derive_seed(seed, 0))
                fit_data = take(trial_data, _bootstrap_indices(len(trial_data), rng))
            else:
                fit_data = trial_data
            model_params = replace(params, seed=derive_seed(seed, 1))
            if self.task == "regression":
                model = fit_regression_tree(fit_data, model_params)
                outputs.append(model.predict(test_features))
            elif self.task == "proba":
                model = fit_classification_tree(fit_data, model_params)
                outputs.append(model.predict_proba(test_features))
            else:
                model = fit_classification_tree(fit_data, model_params)
                outputs.append(model.predict_label(test_features))
        return np.stack(outputs), None


@dataclass
class BoostMemberFactory:
    """Sequentially boosted members; the tensor's member axis follows the
    boosting rounds, and weights come from the boosted ensemble.

    Early-stopped rounds are padded with zero-weight votes so tensors
    stay rectangular.
    """

    stump_params: TreeParams
    algorithm: str  # "adaboost" | "logitboost"

    def run_trial(self, trial_data: Dataset, test_features, ensemble_size, member_seed, bootstrap):
        params = replace(self.stump_params, seed=member_seed(0))
        fit = fit_adaboost if self.algorithm == "adaboost" else fit_logitboost
        ensemble = fit(trial_data, ensemble_size, params)
        n_test = np.atleast_2d(np.asarray(test_features)).shape[0]
        if ensemble.size == 0:
            return np.zeros((ensemble_size, n_test), dtype=int), np.zeros((ensemble_size, n_test))
        labels, weights = ensemble.member_votes(test_features)
        if weights.ndim == 1:
            weights = np.broadcast_to(weights[:, None], labels.shape).copy()
        if ensemble.size < ensemble_size:
            pad = ensemble_size - ensemble.size
            labels = np.concatenate([labels, np.zeros((pad, n_test), dtype=int)])
            weights = np.concatenate([weights, np.zeros((pad, n_test))])
        return labels, weights


def bagging_member_factory(params: TreeParams, task: str = "regression") -> TreeMemberFactory:
    """Members for Bagging: bootstrapped trees on the full feature set."""
    return TreeMemberFactory(params, task)


def random_forest_member_factory(params: TreeParams, task: str = "label") -> TreeMemberFactory:
    """Bagging plus per-split subsampling of ceil(sqrt(F)) features."""
    return TreeMemberFactory(params, task, sqrt_features=True)


def adaboost_member_factory(stump_params: TreeParams) -> BoostMemberFactory:
    return BoostMemberFactory(stump_params, "adaboost")


def logitboost_member_factory(stump_params: TreeParams) -> BoostMemberFactory:
    return BoostMemberFactory(stump_params, "logitboost")


# ---------------------------------------------------------------------------
# data sources


def make_synthetic(kind: str, n: int, seed: int, **kwargs) -> Dataset:
    """Deterministic synthetic datasets.

    kinds:

    * ``friedman_regression``: ten uniform features, target
      10 sin(pi x1 x2) + 20 (x3 - 0.5)^2 + 10 x4 + 5 x5 + noise.
    * ``mease_binary``: ten uniform features; the base label is whether
      the first ``active_features`` sum past half their count, flipped
      with probability ``p_noise``.  The conditional P(Y|x) is exposed
      via ``label_probs`` so analytic noise/effect paths can be tested;
      the Bayes error equals ``p_noise``.
    * ``gaussian_blobs`` (accepts a ``_k`` suffix): ``k`` unit-variance
      Gaussian clusters spaced ``separation`` apart along the first axis.
    """
    if n < 1:
        raise DomainError("need at least one sample")
    rng = np.random.default_rng(seed)
    if kind == "friedman_regression":
        noise_sd = float(kwargs.pop("noise_sd", 1.0))
        _reject_kwargs(kind, kwargs)
        X = rng.random((n, 10))
        y = (
            10.0 * np.sin(np.pi * X[:, 0] * X[:, 1])
            + 20.0 * (X[:, 2] - 0.5) ** 2
            + 10.0 * X[:, 3]
            + 5.0 * X[:, 4]
            + noise_sd * rng.normal(size=n)
        )
        return Dataset(X, y)
    if kind == "mease_binary":
        p_noise = float(kwargs.pop("p_noise", 0.1))
        active = int(kwargs.pop("active_features", 5))
        n_features = int(kwargs.pop("n_features", 10))
        _reject_kwargs(kind, kwargs)
        if not 0.0 <= p_noise < 0.5:
            raise DomainError("p_noise must lie in [0, 0.5)")
        X = rng.random((n, n_features))
        base = (np.sum(X[:, :active], axis=1) > active / 2.0).astype(int)
        p_one = np.where(base == 1, 1.0 - p_noise, p_noise)
        y = (rng.random(n) < p_one).astype(int)
        label_probs = np.stack([1.0 - p_one, p_one], axis=1)
        return Dataset(X, y, n_classes=2, label_probs=label_probs)
    if kind.startswith("gaussian_blobs"):
        k = int(kwargs.pop("k", 3))
        separation = float(kwargs.pop("separation", 6.0))
        n_features = int(kwargs.pop("n_features", 2))
        _reject_kwargs(kind, kwargs)
        labels = rng.integers(0, k, size=n)
        X = rng.normal(size=(n, n_features))
        X[:, 0] += separation * labels
        return Dataset(X, labels.astype(int), n_classes=k)
    raise DomainError(f"unknown synthetic dataset kind {kind!r}")


def _reject_kwargs(kind, kwargs):
    if kwargs:
        raise DomainError(f"unknown options for {kind!r}: {sorted(kwargs)}")


def load_csv(path, target_column: str, task: str) -> Dataset:
    """Load a numeric-feature CSV with a header row.

    Feature parsing failures raise ``ParseError`` naming the row and
    column; target-column problems (missing column, non-numeric or, for
    classification, non-integer labels) raise ``SchemaError``.
    """
    if task not in ("regression", "classification"):
        raise SchemaError(f"unknown task kind {task!r}")
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError("empty CSV file") from None
        header = [h.strip() for h in header]
        if target_column not in header:
            raise SchemaError(f"target column {target_column!r} not in header {header}")
        target_idx = header.index(target_column)
        features, targets = [], []
        for row_no, row in enumerate(reader, start=2):
            if len(row) != len(header):
                raise ParseError(f"row {row_no}: expected {len(header)} cells, got {len(row)}")
            feat = []
            for col_no, (name, cell) in enumerate(zip(header, row)):
                cell = cell.strip()
                if col_no == target_idx:
                    continue
                if cell == "":
                    raise ParseError(f"row {row_no}, column {name!r}: missing value")
                try:
                    value = float(cell)
                except ValueError:
                    raise ParseError(
                        f"row {row_no}, column {name!r}: non-numeric value {cell!r}"
                    ) from None
                if not math.isfinite(value):
                    raise ParseError(f"row {row_no}, column {name!r}: non-finite value")
                feat.append(value)
            raw_target = row[target_idx].strip()
            if raw_target == "":
                raise ParseError(f"row {row_no}, column {target_column!r}: missing value")
            try:
                target = float(raw_target)
            except ValueError:
                raise SchemaError(
                    f"row {row_no}: non-numeric target {raw_target!r}"
                ) from None
            features.append(feat)
            targets.append(target)
    if not features:
        raise ParseError("CSV contains no data rows")
    features = np.asarray(features, dtype=float)
    targets = np.asarray(targets, dtype=float)
    if task == "classification":
        if not np.all(targets == targets.astype(int)):
            raise SchemaError("classification labels must be integers")
        labels = targets.astype(int)
        if labels.min() < 0:
            raise SchemaError("class labels must be nonnegative")
        return Dataset(features, labels, n_classes=int(labels.max()) + 1)
    return Dataset(features, targets)
