"""Soft-margin RBF support vector machines trained by SMO, with
one-vs-one voting for more than two classes.

The dual is solved on a dense per-run Gram matrix with second-order
working-set selection; training stops when the maximal KKT violation
drops below ``tol``.
"""
from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from ._backend import rbf_gram, smo_solve
from .errors import BadSigma, DimensionMismatch, SingleClass, ValidationError

SV_THRESHOLD = 1e-8
MODEL_FORMAT = "cartpso-svm-1"


class ConvergenceWarning(UserWarning):
    pass


def rbf_kernel(x, y, sigma):
    """exp(-||x - y||^2 / (2 sigma^2))."""
    if not sigma > 0:
        raise BadSigma(f"sigma must be > 0, got {sigma}")
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape:
        raise DimensionMismatch(f"{x.shape} vs {y.shape}")
    d = x - y
    return math.exp(-float(d @ d) / (2.0 * sigma * sigma))


def kernel_matrix(X, Z, sigma):
    if not sigma > 0:
        raise BadSigma(f"sigma must be > 0, got {sigma}")
    same = X is Z
    X = np.ascontiguousarray(np.atleast_2d(X), dtype=np.float64)
    Z = X if same else np.ascontiguousarray(np.atleast_2d(Z), dtype=np.float64)
    if X.shape[1] != Z.shape[1]:
        raise DimensionMismatch(f"{X.shape[1]} vs {Z.shape[1]} columns")
    return rbf_gram(X, Z, float(sigma))


@dataclass
class SvmBinaryModel:
    support_vectors: np.ndarray
    dual_coeffs: np.ndarray  # alpha_i * y_i
    bias: float
    sigma: float
    penalty: float
    converged: bool = True
    n_iter: int = 0

    @property
    def n_features(self):
        return self.support_vectors.shape[1]

    def decision_function(self, X):
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        if X.shape[1] != self.n_features:
            raise DimensionMismatch(f"model has {self.n_features} features, got {X.shape[1]}")
        return kernel_matrix(X, self.support_vectors, self.sigma) @ self.dual_coeffs + self.bias

    def to_dict(self):
        return {
            "support_vectors": self.support_vectors.tolist(),
            "dual_coeffs": self.dual_coeffs.tolist(),
            "bias": self.bias,
            "sigma": self.sigma,
            "penalty": self.penalty,
            "converged": self.converged,
        }

    @classmethod
    def from_dict(cls, d):
        return cls(
            np.asarray(d["support_vectors"], dtype=np.float64).reshape(len(d["dual_coeffs"]), -1),
            np.asarray(d["dual_coeffs"], dtype=np.float64),
            float(d["bias"]),
            float(d["sigma"]),
            float(d["penalty"]),
            bool(d.get("converged", True)),
        )


def train_binary(X, y, c=1.0, sigma=1.0, tol=1e-3, max_passes=200, seed=0):
    """Train on labels in {-1, +1}.

    ``max_passes`` caps the solver at ``max_passes * n`` pair updates; on
    hitting the cap the best-so-far model is returned with
    ``converged=False`` and a :class:`ConvergenceWarning`.  The solver is
    deterministic, so ``seed`` has no effect and is kept for interface
    stability.
    """
    X = np.ascontiguousarray(np.atleast_2d(X), dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if len(X) != len(y):
        raise DimensionMismatch("X and y lengths differ")
    if not set(np.unique(y)) <= {-1.0, 1.0}:
        raise ValidationError("binary labels must be -1 or +1")
    if not ((y > 0).any() and (y < 0).any()):
        raise SingleClass("both classes must be present")
    if not c > 0:
        raise ValidationError(f"penalty must be > 0, got {c}")
    K = kernel_matrix(X, X, sigma)
    alpha, b, n_iter, converged = smo_solve(
        K, np.ascontiguousarray(y), float(c), float(tol), int(max_passes) * len(X)
    )
    if not converged:
        warnings.warn(
            f"SMO hit the iteration cap ({n_iter}) before meeting tol={tol}",
            ConvergenceWarning,
            stacklevel=2,
        )
    keep = alpha > SV_THRESHOLD
    return SvmBinaryModel(
        X[keep].copy(), alpha[keep] * y[keep], float(b), float(sigma), float(c),
        bool(converged), int(n_iter),
    )


def decision_value(model, x):
    """Pre-sign decision sum for a single sample."""
    return float(model.decision_function(np.asarray(x, dtype=np.float64).reshape(1, -1))[0])


def predict_binary(model, x):
    """+1 or -1; a decision value of exactly zero maps to +1."""
    return 1 if decision_value(model, x) >= 0 else -1


def dual_objective(alpha, y, K):
    """sum(alpha) - 1/2 sum_ij alpha_i alpha_j y_i y_j K_ij (to be maximized)."""
    ay = alpha * y
    return float(alpha.sum() - 0.5 * ay @ K @ ay)


@dataclass
class Standardizer:
    mean: np.ndarray
    scale: np.ndarray

    @classmethod
    def fit(cls, X):
        X = np.asarray(X, dtype=np.float64)
        sd = X.std(axis=0)
        return cls(X.mean(axis=0), np.where(sd > 0, sd, 1.0))

    def transform(self, X):
        return (np.asarray(X, dtype=np.float64) - self.mean) / self.scale

    def to_dict(self):
        return {"mean": self.mean.tolist(), "scale": self.scale.tolist()}

    @classmethod
    def from_dict(cls, d):
        return cls(np.asarray(d["mean"], dtype=np.float64), np.asarray(d["scale"], dtype=np.float64))


@dataclass
class SvmMulticlassModel:
    """One binary model per class pair; in each pair the first class is +1."""

    classes: list
    binary_models: list
    pairs: list
    standardizer: Standardizer | None = None
    feature_indices: list | None = None  # 1-based catalog indices, if selected
    metadata: dict = field(default_factory=dict)

    @property
    def converged(self):
        return all(m.converged for m in self.binary_models)

    @property
    def n_features(self):
        return self.binary_models[0].n_features

    def _prepare(self, X):
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        if self.standardizer is not None:
            if X.shape[1] != len(self.standardizer.mean):
                raise DimensionMismatch(
                    f"model expects {len(self.standardizer.mean)} features, got {X.shape[1]}"
                )
            X = self.standardizer.transform(X)
        return X

    def predict(self, X):
        X = self._prepare(X)
        K = len(self.classes)
        votes = np.zeros((len(X), K), dtype=np.int64)
        strength = np.zeros((len(X), K))
        for (a, b), m in zip(self.pairs, self.binary_models):
            dv = m.decision_function(X)
            win = np.where(dv >= 0, a, b)
            votes[np.arange(len(X)), win] += 1
            strength[np.arange(len(X)), win] += np.abs(dv)
        out = []
        for v, s in zip(votes, strength):
            tied = np.flatnonzero(v == v.max())
            # first index wins among equal strengths: lowest label position
            best = tied[int(np.argmax(s[tied]))]
            out.append(self.classes[best])
        return out

    def to_dict(self):
        return {
            "format": MODEL_FORMAT,
            "classes": [getattr(c, "item", lambda c=c: c)() for c in self.classes],
            "pairs": [list(p) for p in self.pairs],
            "binary_models": [m.to_dict() for m in self.binary_models],
            "standardizer": None if self.standardizer is None else self.standardizer.to_dict(),
            "feature_indices": self.feature_indices,
            "metadata": self.metadata,
        }

    def to_json(self):
        return json.dumps(self.to_dict(), indent=1)

    @classmethod
    def from_dict(cls, d):
        if d.get("format") != MODEL_FORMAT:
            raise ValidationError(f"unsupported model format {d.get('format')!r}")
        std = d.get("standardizer")
        return cls(
            list(d["classes"]),
            [SvmBinaryModel.from_dict(m) for m in d["binary_models"]],
            [tuple(p) for p in d["pairs"]],
            None if std is None else Standardizer.from_dict(std),
            d.get("feature_indices"),
            dict(d.get("metadata", {})),
        )

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))


def train_multiclass(X, y, c=1.0, sigma=1.0, tol=1e-3, seed=0, max_passes=200,
                     classes=None, standardize=True):
    """One-vs-one ensemble over the classes present in ``y``.

    With ``standardize`` the features are z-scored on ``X``'s statistics and
    the fitted standardizer is stored with the model.
    """
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    y = np.asarray(y)
    if classes is None:
        classes = sorted(set(y.tolist()))
    classes = list(classes)
    if len(classes) < 2:
        raise SingleClass("need at least two classes")
    for cl in classes:
        if not np.any(y == cl):
            raise SingleClass(f"class {cl!r} has no samples")
    std = Standardizer.fit(X) if standardize else None
    Xs = std.transform(X) if std is not None else X
    pairs, models = [], []
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", ConvergenceWarning)
        for a, b in combinations(range(len(classes)), 2):
            sel = (y == classes[a]) | (y == classes[b])
            yb = np.where(y[sel] == classes[a], 1.0, -1.0)
            models.append(train_binary(Xs[sel], yb, c, sigma, tol, max_passes, seed))
            pairs.append((a, b))
    caught = [w for w in caught if issubclass(w.category, ConvergenceWarning)]
    if caught:
        warnings.warn(
            f"{len(caught)} pairwise model(s) did not converge", ConvergenceWarning, stacklevel=2
        )
    return SvmMulticlassModel(classes, models, pairs, std)


def predict_multiclass(model, x):
    return model.predict(np.asarray(x, dtype=np.float64).reshape(1, -1))[0]
