"""Out-of-distribution monitor behind the outlier variable of the network.

The default detector is the Mahalanobis distance of a feature vector to the
training mean, thresholded at an upper quantile of the training distances.
Perception features vary along a low-dimensional pose manifold, so the full
covariance separates a lighting shift far better than per-feature
standardization; ``"std-euclidean"`` (diagonal covariance) stays available.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

STD_FLOOR = 1e-6
RIDGE = 1e-3  # relative to the mean feature variance
METHODS = ("mahalanobis", "std-euclidean", "always", "never")


@dataclass(frozen=True)
class OodMonitor:
    """Distance-to-training-mean detector.

    ``precision`` is the inverse (regularized) feature covariance and is only
    used by the ``"mahalanobis"`` method. ``"always"`` and ``"never"`` pin the
    flag regardless of input, for ablations and gating checks.
    """

    mean: tuple
    std: tuple
    threshold: float
    method: str = "mahalanobis"
    precision: tuple | None = None

    def __post_init__(self):
        mean = tuple(float(m) for m in self.mean)
        std = tuple(max(float(s), STD_FLOOR) for s in self.std)
        if len(mean) != len(std):
            raise ValueError("mean and std must have the same length")
        if not self.threshold > 0:
            raise ValueError("threshold must be positive")
        if self.method not in METHODS:
            raise ValueError(f"unknown OOD method {self.method!r}")
        d = len(mean)
        if self.precision is None:
            prec = np.diag(1.0 / np.square(std))
        else:
            prec = np.asarray(self.precision, dtype=float).reshape(d, d)
        if self.method == "std-euclidean":
            prec = np.diag(1.0 / np.square(std))
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "std", std)
        if self.precision is not None:
            object.__setattr__(self, "precision", tuple(tuple(float(v) for v in row) for row in prec))
        object.__setattr__(self, "_mu", np.asarray(mean))
        object.__setattr__(self, "_prec", prec)

    @property
    def n_features(self):
        return len(self.mean)

    def distances(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.ndim != 2 or X.shape[1] != self.n_features:
            raise ValueError(f"expected (n, {self.n_features}) features, got {X.shape}")
        D = X - self._mu
        return np.sqrt(np.maximum(np.einsum("ij,jk,ik->i", D, self._prec, D), 0.0))

    def distance(self, features) -> float:
        x = np.asarray(features, dtype=float)
        if x.shape != (self.n_features,):
            raise ValueError(f"expected {self.n_features} features, got shape {x.shape}")
        dx = x - self._mu
        return float(np.sqrt(max(dx @ self._prec @ dx, 0.0)))

    def detect(self, features) -> bool:
        if self.method == "always":
            return True
        if self.method == "never":
            return False
        return self.distance(features) > self.threshold

    def with_method(self, method) -> "OodMonitor":
        return OodMonitor(self.mean, self.std, self.threshold, method, self.precision)

    def to_dict(self):
        return {
            "method": self.method,
            "mean": list(self.mean),
            "std": list(self.std),
            "threshold": self.threshold,
            "precision": None if self.precision is None else [list(r) for r in self.precision],
        }

    @classmethod
    def from_dict(cls, d):
        prec = d.get("precision")
        return cls(tuple(d["mean"]), tuple(d["std"]), float(d["threshold"]), d.get("method", "mahalanobis"),
                   None if prec is None else tuple(tuple(r) for r in prec))


def fit_ood(samples, quantile=0.99, method="mahalanobis") -> OodMonitor:
    """Calibrate the monitor so ``1 - quantile`` of the training set is flagged."""
    X = np.asarray(samples, dtype=float)
    if X.ndim != 2 or len(X) < 30:
        raise ValueError("need at least 30 feature vectors to calibrate the OOD monitor")
    if not 0.9 < quantile < 1.0:
        raise ValueError("quantile must lie in (0.9, 1.0)")
    if method not in ("mahalanobis", "std-euclidean"):
        raise ValueError(f"cannot calibrate OOD method {method!r}")
    mean = X.mean(axis=0)
    std = np.maximum(X.std(axis=0), STD_FLOOR)
    precision = None
    if method == "mahalanobis":
        cov = np.atleast_2d(np.cov(X, rowvar=False, bias=True))
        cov = cov + (RIDGE * np.mean(np.diag(cov)) + STD_FLOOR**2) * np.eye(X.shape[1])
        precision = tuple(map(tuple, np.linalg.inv(cov)))
    probe = OodMonitor(tuple(mean), tuple(std), 1.0, method, precision)
    threshold = float(np.quantile(probe.distances(X), quantile))
    if not threshold > 0:
        raise ValueError("degenerate training features: zero distance spread")
    return OodMonitor(probe.mean, probe.std, threshold, method, probe.precision)


def detect(monitor: OodMonitor, features) -> bool:
    return monitor.detect(features)
