"""Decision-tree ensemble mapping perception features to a CTE state distribution.

Trees are grown with the Gini criterion on small stratified resamples of
the training set, a random subset of ``ceil(sqrt(d))`` features at each
node, and a minimum terminal-node size. Leaves keep raw class counts; the
forest output is the average of Laplace-smoothed leaf histograms, so it is
strictly positive in every state.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

LEAF = -1


@dataclass(frozen=True)
class ForestConfig:
    trees: int = 280
    min_leaf: int = 10
    samples_per_tree: int = 100
    seed: int = 0
    balanced: bool = True
    max_features: int | None = None  # None -> ceil(sqrt(d))

    def __post_init__(self):
        for name in ("trees", "min_leaf", "samples_per_tree"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")

    def to_dict(self):
        return {
            "trees": self.trees,
            "min_leaf": self.min_leaf,
            "samples_per_tree": self.samples_per_tree,
            "seed": self.seed,
            "balanced": self.balanced,
            "max_features": self.max_features,
        }


@dataclass
class DecisionTree:
    """Array-encoded binary tree.

    ``feature[i] == -1`` marks node ``i`` as a leaf. Internal nodes send a
    sample left when ``x[feature] <= threshold``. ``counts[i]`` is the class
    histogram of training samples that reached node ``i``.
    """

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    counts: np.ndarray

    @property
    def n_nodes(self):
        return len(self.feature)

    @property
    def n_leaves(self):
        return int((self.feature == LEAF).sum())

    def depth(self, node=0):
        if self.feature[node] == LEAF:
            return 0
        return 1 + max(self.depth(self.left[node]), self.depth(self.right[node]))

    def apply(self, X):
        """Leaf index reached by each row of ``X``."""
        X = np.atleast_2d(X)
        node = np.zeros(len(X), dtype=np.int64)
        rows = np.arange(len(X))
        active = self.feature[node] != LEAF
        while active.any():
            n = node[active]
            go_left = X[rows[active], self.feature[n]] <= self.threshold[n]
            node[active] = np.where(go_left, self.left[n], self.right[n])
            active = self.feature[node] != LEAF
        return node

    def to_dict(self):
        return {
            "feature": self.feature.tolist(),
            "threshold": self.threshold.tolist(),
            "left": self.left.tolist(),
            "right": self.right.tolist(),
            "counts": self.counts.tolist(),
        }

    @classmethod
    def from_dict(cls, d):
        return cls(
            feature=np.asarray(d["feature"], dtype=np.int64),
            threshold=np.asarray(d["threshold"], dtype=float),
            left=np.asarray(d["left"], dtype=np.int64),
            right=np.asarray(d["right"], dtype=np.int64),
            counts=np.asarray(d["counts"], dtype=np.int64).reshape(len(d["feature"]), -1),
        )


def gini(counts):
    n = counts.sum()
    if n == 0:
        return 0.0
    p = counts / n
    return 1.0 - float(np.dot(p, p))


def _best_split(X, y, n_classes, features, min_leaf):
    """Best (feature, threshold, gain) over ``features``; gain -1 if none valid."""
    n = len(y)
    parent = np.bincount(y, minlength=n_classes).astype(float)
    parent_impurity = gini(parent)
    best = (LEAF, 0.0, -1.0)
    onehot = np.zeros((n, n_classes))
    for f in features:
        order = np.argsort(X[:, f], kind="stable")
        xs = X[order, f]
        onehot[:] = 0.0
        onehot[np.arange(n), y[order]] = 1.0
        left = np.cumsum(onehot, axis=0)[:-1]
        n_left = np.arange(1, n, dtype=float)
        # split between positions i and i+1; both sides must keep min_leaf
        valid = (xs[:-1] < xs[1:]) & (n_left >= min_leaf) & (n - n_left >= min_leaf)
        if not valid.any():
            continue
        right = parent - left
        n_right = n - n_left
        g_left = 1.0 - ((left / n_left[:, None]) ** 2).sum(axis=1)
        g_right = 1.0 - ((right / n_right[:, None]) ** 2).sum(axis=1)
        child = (n_left * g_left + n_right * g_right) / n
        gain = np.where(valid, parent_impurity - child, -np.inf)
        i = int(np.argmax(gain))
        if gain[i] > best[2]:
            best = (int(f), 0.5 * (xs[i] + xs[i + 1]), float(gain[i]))
    return best


def fit_tree(X, y, n_classes, min_leaf, max_features, rng) -> DecisionTree:
    """Grow one tree depth-first. ``rng`` draws the per-node feature subsets."""
    feature, threshold, left, right, counts = [], [], [], [], []

    def new_node(idx):
        feature.append(LEAF)
        threshold.append(0.0)
        left.append(LEAF)
        right.append(LEAF)
        counts.append(np.bincount(y[idx], minlength=n_classes))
        return len(feature) - 1

    def grow(idx):
        node = new_node(idx)
        c = counts[node]
        if len(idx) <= min_leaf or np.count_nonzero(c) <= 1:
            return node
        d = X.shape[1]
        feats = rng.choice(d, size=min(max_features, d), replace=False)
        f, thr, gain = _best_split(X[idx], y[idx], n_classes, feats, min_leaf)
        if f == LEAF or gain <= 0.0:
            return node
        go_left = X[idx, f] <= thr
        feature[node] = f
        threshold[node] = thr
        left[node] = grow(idx[go_left])
        right[node] = grow(idx[~go_left])
        return node

    grow(np.arange(len(y)))
    return DecisionTree(
        feature=np.asarray(feature, dtype=np.int64),
        threshold=np.asarray(threshold, dtype=float),
        left=np.asarray(left, dtype=np.int64),
        right=np.asarray(right, dtype=np.int64),
        counts=np.vstack(counts).astype(np.int64),
    )


def _stratified_sample(y, size, rng):
    """Indices drawn with replacement, spreading ``size`` evenly over present classes."""
    classes = np.unique(y)
    per_class = np.full(len(classes), size // len(classes))
    per_class[: size % len(classes)] += 1
    # rotate which classes receive the remainder so no class is favoured
    per_class = np.roll(per_class, int(rng.integers(len(classes))))
    parts = []
    for c, k in zip(classes, per_class):
        members = np.flatnonzero(y == c)
        parts.append(members[rng.integers(len(members), size=k)])
    return np.concatenate(parts)


def _tree_seeds(seed, n_trees):
    return np.random.SeedSequence(seed).spawn(n_trees)


@dataclass
class EmissionForest:
    trees: list
    n_states: int
    n_features: int
    config: ForestConfig = field(default_factory=ForestConfig)
    inbag: list | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        self._packed = None

    def _pack(self):
        """Concatenate all trees into flat arrays for vectorized traversal."""
        if self._packed is None:
            offsets = np.cumsum([0] + [t.n_nodes for t in self.trees[:-1]])
            feat = np.concatenate([t.feature for t in self.trees])
            thr = np.concatenate([t.threshold for t in self.trees])
            lft = np.concatenate([np.where(t.left == LEAF, LEAF, t.left + o) for t, o in zip(self.trees, offsets)])
            rgt = np.concatenate([np.where(t.right == LEAF, LEAF, t.right + o) for t, o in zip(self.trees, offsets)])
            cnt = np.vstack([t.counts for t in self.trees]).astype(float)
            smoothed = (cnt + 1.0) / (cnt.sum(axis=1, keepdims=True) + self.n_states)
            is_leaf = feat == LEAF
            # leaves get a dummy feature 0 so the traversal can stay branch-free
            self._packed = (
                offsets.astype(np.int64),
                np.where(is_leaf, 0, feat),
                thr,
                np.where(is_leaf, np.arange(len(feat)), lft),
                np.where(is_leaf, np.arange(len(feat)), rgt),
                smoothed,
                max(t.depth() for t in self.trees),
            )
        return self._packed

    def predict(self, features) -> np.ndarray:
        """Distribution over CTE states for one feature vector."""
        x = np.asarray(features, dtype=float)
        if x.shape != (self.n_features,):
            raise ValueError(f"expected {self.n_features} features, got shape {x.shape}")
        roots, feat, thr, lft, rgt, smoothed, depth = self._pack()
        node = roots
        for _ in range(depth):
            node = np.where(x[feat[node]] <= thr[node], lft[node], rgt[node])
        p = smoothed[node].mean(axis=0)
        return p / p.sum()

    def predict_many(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.ndim != 2 or X.shape[1] != self.n_features:
            raise ValueError(f"expected (n, {self.n_features}) features, got {X.shape}")
        roots, feat, thr, lft, rgt, smoothed, depth = self._pack()
        node = np.broadcast_to(roots, (len(X), len(roots))).copy()
        rows = np.arange(len(X))[:, None]
        for _ in range(depth):
            node = np.where(X[rows, feat[node]] <= thr[node], lft[node], rgt[node])
        p = smoothed[node].mean(axis=1)
        return p / p.sum(axis=1, keepdims=True)

    def oob_accuracy(self, X, y) -> float | None:
        """Accuracy using, for each sample, only the trees that never drew it."""
        if self.inbag is None:
            return None
        X = np.asarray(X, dtype=float)
        y = np.asarray(y)
        votes = np.zeros((len(X), self.n_states))
        for tree, bag in zip(self.trees, self.inbag):
            out = np.ones(len(X), dtype=bool)
            out[bag] = False
            leaves = tree.apply(X[out])
            c = tree.counts[leaves].astype(float)
            votes[out] += (c + 1.0) / (c.sum(axis=1, keepdims=True) + self.n_states)
        scored = votes.sum(axis=1) > 0
        if not scored.any():
            return None
        return float((votes[scored].argmax(axis=1) == y[scored]).mean())

    def to_dict(self):
        return {
            "n_states": self.n_states,
            "n_features": self.n_features,
            "config": self.config.to_dict(),
            "trees": [t.to_dict() for t in self.trees],
        }

    @classmethod
    def from_dict(cls, d):
        return cls(
            trees=[DecisionTree.from_dict(t) for t in d["trees"]],
            n_states=int(d["n_states"]),
            n_features=int(d["n_features"]),
            config=ForestConfig(**d["config"]),
        )


def fit_forest(X, y, n_states, config: ForestConfig | None = None) -> EmissionForest:
    """Train the emission forest.

    Parameters
    ----------
    X : (n, d) array of features in [0, 1]
    y : (n,) array of true CTE state indices
    n_states : number of CTE states (classes), including unseen ones
    config : ForestConfig
        Defaults to 280 trees, terminal nodes of at least 10 samples and
        100 resampled points per tree.
    """
    config = config or ForestConfig()
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=np.int64)
    if X.ndim != 2 or len(X) != len(y):
        raise ValueError("X must be (n, d) with one label per row")
    if len(np.unique(y)) < 2:
        raise ValueError("forest needs samples from at least two states")
    if y.min() < 0 or y.max() >= n_states:
        raise ValueError("labels must be state indices in [0, n_states)")
    d = X.shape[1]
    max_features = config.max_features or math.ceil(math.sqrt(d))

    trees, inbag = [], []
    for ss in _tree_seeds(config.seed, config.trees):
        rng = np.random.default_rng(ss)
        if config.balanced:
            idx = _stratified_sample(y, config.samples_per_tree, rng)
        else:
            idx = rng.integers(len(y), size=config.samples_per_tree)
        trees.append(fit_tree(X[idx], y[idx], n_states, config.min_leaf, max_features, rng))
        inbag.append(np.unique(idx))
    return EmissionForest(trees, n_states, d, config, inbag=inbag)


def forest_predict(forest: EmissionForest, features) -> np.ndarray:
    return forest.predict(features)
