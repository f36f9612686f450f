"""Bregman generators, divergences, dual maps, and left centroids.

Four strictly convex generators cover the losses used throughout the
package:

* squared error on the reals (``Squared``),
* Itakura-Saito and Poisson losses on the strictly positive reals,
* the KL generator on minimally parameterised probability vectors
  (``KLMinimal``): a k-class distribution is represented by its first
  k-1 probabilities, constrained to the open sub-simplex so that the
  gradient map exists everywhere.

The divergence induced by a generator phi is

    B(p, q) = phi(p) - phi(q) - <grad phi(q), p - q>,

nonnegative, and zero iff p == q.  The left centroid of a set of points
is the dual-space arithmetic mean, ``grad_inverse(mean(grad(q_i)))``:
arithmetic mean for squared loss, geometric mean for Poisson, harmonic
mean for Itakura-Saito, normalised geometric mean for KL.

Generator methods operate on plain float64 arrays whose trailing axis is
the component axis (length 1 for scalar losses, k-1 for KL) and
broadcast over any leading axes.  The module-level operations wrap them
for single, validated ``Prediction`` values.  Inputs on the domain
boundary are rejected, never clamped; clamping is the responsibility of
whatever produced the values.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError

__all__ = [
    "Prediction",
    "DualPoint",
    "Squared",
    "ItakuraSaito",
    "Poisson",
    "KLMinimal",
    "generator_for",
    "phi",
    "grad",
    "grad_inverse",
    "divergence",
    "left_centroid",
    "extend_simplex",
    "extend_probs",
    "divergence_values",
    "centroid_values",
]

TAG_REAL = "real"
TAG_POSITIVE = "positive"
TAG_SIMPLEX = "simplex"


def _as_values(x) -> np.ndarray:
    arr = np.asarray(x, dtype=float)
    if arr.ndim == 0:
        arr = arr.reshape(1)
    return arr


@dataclass(frozen=True)
class Prediction:
    """A domain-tagged prediction vector.

    Scalar losses use a length-1 vector; ``KLMinimal`` uses length k-1
    with entries in (0, 1) summing to strictly less than 1.
    """

    values: tuple
    tag: str

    def __post_init__(self):
        arr = _as_values(self.values)
        object.__setattr__(self, "values", tuple(float(v) for v in arr))
        _check_domain(self.tag, arr)

    @property
    def array(self) -> np.ndarray:
        return np.asarray(self.values, dtype=float)


@dataclass(frozen=True)
class DualPoint:
    """Image of a prediction under the gradient map; finite entries."""

    values: tuple

    def __post_init__(self):
        arr = _as_values(self.values)
        if not np.all(np.isfinite(arr)):
            raise DomainError("dual coordinates must be finite")
        object.__setattr__(self, "values", tuple(float(v) for v in arr))

    @property
    def array(self) -> np.ndarray:
        return np.asarray(self.values, dtype=float)


def _check_domain(tag: str, arr: np.ndarray) -> None:
    if not np.all(np.isfinite(arr)):
        raise DomainError("prediction values must be finite")
    if tag == TAG_REAL:
        return
    if tag == TAG_POSITIVE:
        if not np.all(arr > 0.0):
            raise DomainError("positive-domain prediction must be > 0")
        return
    if tag == TAG_SIMPLEX:
        if not (np.all(arr > 0.0) and np.all(arr < 1.0)):
            raise DomainError("simplex entries must lie in (0, 1)")
        if not np.sum(arr, axis=-1) < 1.0:
            raise DomainError("simplex entries must sum to < 1")
        return
    raise DomainError(f"unknown domain tag {tag!r}")


class _GeneratorBase:
    """Shared validation and sampling behaviour for all generators."""

    tag: str
    dim: int

    def validate(self, values: np.ndarray) -> np.ndarray:
        """Check an array of points against the domain; returns float64 view."""
        arr = np.asarray(values, dtype=float)
        if arr.shape[-1:] != (self.dim,):
            raise DomainError(
                f"expected trailing axis of length {self.dim}, got shape {arr.shape}"
            )
        if not np.all(np.isfinite(arr)):
            raise DomainError("values must be finite")
        self._check(arr)
        return arr

    def _check(self, arr: np.ndarray) -> None:
        raise NotImplementedError

    def contains(self, values) -> bool:
        try:
            self.validate(values)
        except DomainError:
            return False
        return True


@dataclass(frozen=True)
class Squared(_GeneratorBase):
    """phi(q) = q^2 on the reals; divergence is the squared error."""

    tag = TAG_REAL
    dim = 1

    def _check(self, arr):
        pass

    def phi(self, q):
        q = np.asarray(q, dtype=float)
        return np.sum(q * q, axis=-1)

    def grad(self, q):
        return 2.0 * np.asarray(q, dtype=float)

    def grad_inverse(self, eta):
        return 0.5 * np.asarray(eta, dtype=float)

    def sample(self, rng, n):
        return rng.normal(0.0, 2.0, size=(n, 1))


@dataclass(frozen=True)
class ItakuraSaito(_GeneratorBase):
    """phi(q) = -ln q on the positive reals; harmonic-mean centroid."""

    tag = TAG_POSITIVE
    dim = 1

    def _check(self, arr):
        if not np.all(arr > 0.0):
            raise DomainError("Itakura-Saito domain is q > 0")

    def phi(self, q):
        q = np.asarray(q, dtype=float)
        return -np.sum(np.log(q), axis=-1)

    def grad(self, q):
        return -1.0 / np.asarray(q, dtype=float)

    def grad_inverse(self, eta):
        eta = np.asarray(eta, dtype=float)
        if not np.all(eta < 0.0):
            raise DomainError("Itakura-Saito dual coordinates must be < 0")
        return -1.0 / eta

    def sample(self, rng, n):
        return np.exp(rng.uniform(np.log(0.05), np.log(5.0), size=(n, 1)))


@dataclass(frozen=True)
class Poisson(_GeneratorBase):
    """phi(q) = q ln q - q on the positive reals; geometric-mean centroid."""

    tag = TAG_POSITIVE
    dim = 1

    def _check(self, arr):
        if not np.all(arr > 0.0):
            raise DomainError("Poisson domain is q > 0")

    def phi(self, q):
        q = np.asarray(q, dtype=float)
        return np.sum(q * np.log(q) - q, axis=-1)

    def grad(self, q):
        return np.log(np.asarray(q, dtype=float))

    def grad_inverse(self, eta):
        return np.exp(np.asarray(eta, dtype=float))

    def sample(self, rng, n):
        return np.exp(rng.uniform(np.log(0.05), np.log(5.0), size=(n, 1)))


@dataclass(frozen=True)
class KLMinimal(_GeneratorBase):
    """Negative entropy on minimally parameterised k-class distributions.

    phi(q) = sum_c q_c ln q_c + r ln r with r = 1 - sum_c q_c, over the
    first k-1 probabilities.  The induced divergence equals the k-term
    KL divergence of the extended vectors, and the left centroid is the
    normalised geometric mean.
    """

    k: int

    tag = TAG_SIMPLEX

    def __post_init__(self):
        if self.k < 2:
            raise DomainError("KLMinimal requires at least 2 classes")

    @property
    def dim(self):
        return self.k - 1

    def _check(self, arr):
        if not (np.all(arr > 0.0) and np.all(arr < 1.0)):
            raise DomainError("simplex entries must lie in (0, 1)")
        if not np.all(np.sum(arr, axis=-1) < 1.0):
            raise DomainError("simplex entries must sum to < 1")

    def phi(self, q):
        q = np.asarray(q, dtype=float)
        rest = 1.0 - np.sum(q, axis=-1)
        return np.sum(q * np.log(q), axis=-1) + rest * np.log(rest)

    def grad(self, q):
        q = np.asarray(q, dtype=float)
        rest = 1.0 - np.sum(q, axis=-1, keepdims=True)
        return np.log(q) - np.log(rest)

    def grad_inverse(self, eta):
        eta = np.asarray(eta, dtype=float)
        # softmax against an implicit zero logit for the k-th class
        top = np.maximum(np.max(eta, axis=-1, keepdims=True), 0.0)
        expd = np.exp(eta - top)
        denom = np.exp(-top) + np.sum(expd, axis=-1, keepdims=True)
        return expd / denom

    def sample(self, rng, n):
        full = rng.dirichlet(np.ones(self.k), size=n)
        full = 0.98 * full + 0.02 / self.k  # keep away from the boundary
        return full[:, : self.k - 1]


Generator = Squared | ItakuraSaito | Poisson | KLMinimal


def generator_for(name: str, k: int | None = None) -> Generator:
    """Resolve a loss name used in configs to its generator."""
    name = name.lower()
    if name == "squared":
        return Squared()
    if name in ("itakura_saito", "itakura-saito"):
        return ItakuraSaito()
    if name == "poisson":
        return Poisson()
    if name == "kl":
        if k is None:
            raise DomainError("KL loss requires a class count k")
        return KLMinimal(k)
    raise DomainError(f"unknown loss {name!r}")


def _unwrap(gen: Generator, q: Prediction) -> np.ndarray:
    if not isinstance(q, Prediction):
        raise DomainError("expected a Prediction")
    if q.tag != gen.tag:
        raise DomainError(f"prediction tag {q.tag!r} does not match loss domain {gen.tag!r}")
    return gen.validate(q.array)


def phi(gen: Generator, q: Prediction) -> float:
    """Generator value at a single in-domain prediction."""
    return float(gen.phi(_unwrap(gen, q)))


def grad(gen: Generator, q: Prediction) -> DualPoint:
    """Map a prediction to the dual coordinate system."""
    return DualPoint(tuple(gen.grad(_unwrap(gen, q))))


def grad_inverse(gen: Generator, eta) -> Prediction:
    """Map dual coordinates back to a prediction."""
    arr = eta.array if isinstance(eta, DualPoint) else _as_values(eta)
    if arr.shape != (gen.dim,):
        raise DomainError(f"expected {gen.dim} dual coordinates, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise DomainError("dual coordinates must be finite")
    return Prediction(tuple(gen.grad_inverse(arr)), gen.tag)


def divergence_values(gen: Generator, p, q) -> np.ndarray:
    """B(p, q) on raw arrays; broadcasts over leading axes."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    return gen.phi(p) - gen.phi(q) - np.sum(gen.grad(q) * (p - q), axis=-1)


def divergence(gen: Generator, p: Prediction, q: Prediction) -> float:
    """Bregman divergence between two in-domain predictions."""
    return float(divergence_values(gen, _unwrap(gen, p), _unwrap(gen, q)))


def centroid_values(gen: Generator, values, axis: int = -2, weights=None) -> np.ndarray:
    """Left centroid along ``axis`` of an array of in-domain points.

    ``weights``, when given, must already sum to 1 along the reduction
    axis; the operation does not renormalise.
    """
    values = np.asarray(values, dtype=float)
    duals = gen.grad(values)
    if weights is None:
        mean_dual = np.mean(duals, axis=axis)
    else:
        w = np.asarray(weights, dtype=float)
        mean_dual = np.sum(np.moveaxis(duals, axis, -2) * w[..., None], axis=-2)
    return gen.grad_inverse(mean_dual)


def left_centroid(gen: Generator, points, weights=None) -> Prediction:
    """Left centroid of a nonempty list of predictions.

    With weights w_i (nonnegative, summing to 1) this is
    ``grad_inverse(sum_i w_i grad(q_i))``, the minimiser of the average
    divergence ``sum_i w_i B(z, q_i)`` over z.
    """
    if len(points) == 0:
        raise DomainError("centroid of an empty set is undefined")
    arrs = np.stack([_unwrap(gen, p) for p in points])
    if len(points) == 1 and weights is None:
        return Prediction(tuple(arrs[0]), gen.tag)
    if weights is not None:
        w = np.asarray(weights, dtype=float)
        if w.shape != (len(points),):
            raise DomainError("weights must match the number of points")
        if np.any(w < 0.0) or abs(float(np.sum(w)) - 1.0) > 1e-9:
            raise DomainError("weights must be nonnegative and pre-normalised to sum to 1")
        mean_dual = np.sum(gen.grad(arrs) * w[:, None], axis=0)
    else:
        mean_dual = np.mean(gen.grad(arrs), axis=0)
    return Prediction(tuple(gen.grad_inverse(mean_dual)), gen.tag)


def extend_probs(values) -> np.ndarray:
    """Append the implicit k-th probability; trailing axis grows by one."""
    values = np.asarray(values, dtype=float)
    rest = 1.0 - np.sum(values, axis=-1, keepdims=True)
    return np.concatenate([values, rest], axis=-1)


def extend_simplex(q: Prediction) -> np.ndarray:
    """Full length-k probability vector of a minimally parameterised prediction."""
    if q.tag != TAG_SIMPLEX:
        raise DomainError("extend_simplex requires a simplex-tagged prediction")
    _check_domain(TAG_SIMPLEX, q.array)
    return extend_probs(q.array)
