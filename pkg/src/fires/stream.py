"""Stream sources: CSV ingestion and seeded synthetic generators."""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
import pandas as pd


class DataError(ValueError):
    """Input data cannot be turned into a valid binary stream."""


@dataclass(frozen=True)
class StreamBatch:
    x: np.ndarray  # (B, J), scaled to [0, 1]
    y: np.ndarray  # (B,), in {-1, +1}
    t: int

    def __len__(self) -> int:
        return self.y.size


@dataclass
class Stream:
    """A finite stream held in memory, emitted in row order."""

    X: np.ndarray
    y: np.ndarray
    feature_names: list[str] = field(default_factory=list)
    relevant: np.ndarray | None = None  # ground-truth columns, when known
    info: dict = field(default_factory=dict)

    def __post_init__(self):
        self.X = np.asarray(self.X, dtype=np.float64)
        self.y = np.asarray(self.y, dtype=np.float64)
        if self.X.ndim != 2 or self.y.shape != (self.X.shape[0],):
            raise DataError("X must be (n, J) with one label per row")
        if not self.feature_names:
            self.feature_names = [f"x{j}" for j in range(self.X.shape[1])]

    @property
    def n_samples(self) -> int:
        return self.X.shape[0]

    @property
    def n_features(self) -> int:
        return self.X.shape[1]

    def batches(self, batch_size: int):
        """Consecutive batches in row order; the last one may be short."""
        if batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        for t, lo in enumerate(range(0, self.n_samples, batch_size)):
            yield StreamBatch(self.X[lo:lo + batch_size], self.y[lo:lo + batch_size], t)

    def check_binary(self) -> None:
        labels = np.unique(self.y)
        if labels.size < 2:
            raise DataError("stream contains a single class")
        if not set(labels.tolist()) <= {-1.0, 1.0}:
            raise DataError("labels must be -1 or +1")


def min_max_scale(X: np.ndarray, names=None) -> np.ndarray:
    """Scale columns to [0, 1] with global min/max; constant columns become 0."""
    X = np.asarray(X, dtype=np.float64)
    lo = X.min(axis=0)
    span = X.max(axis=0) - lo
    const = span == 0
    if np.any(const):
        cols = np.flatnonzero(const)
        shown = [names[c] for c in cols] if names is not None else cols.tolist()
        warnings.warn(f"constant column(s) scaled to 0: {shown}", stacklevel=2)
    return (X - lo) / np.where(const, 1.0, span)


def read_csv_stream(path, label_column=None) -> Stream:
    """Read a headed CSV into a scaled binary stream.

    Text columns are integer-coded by first appearance, every feature is
    min-max scaled over the whole file, and the lexicographically smaller
    of the two labels maps to -1. ``label_column`` defaults to the last column.
    """
    try:
        df = pd.read_csv(path)
    except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError, UnicodeDecodeError) as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    if df.shape[1] < 2 or df.shape[0] == 0:
        raise DataError(f"{path}: need a label column, at least one feature and one row")
    if label_column is None:
        label_column = df.columns[-1]
    if label_column not in df.columns:
        raise DataError(f"{path}: no column named {label_column!r}")
    if df.isna().to_numpy().any():
        raise DataError(f"{path}: missing values are not supported")

    labels = df.pop(label_column).astype(str)
    classes = sorted(labels.unique())
    if len(classes) != 2:
        raise DataError(f"{path}: expected two classes in {label_column!r}, found {len(classes)}")
    y = np.where(labels == classes[0], -1.0, 1.0)

    for col in df.columns:
        if df[col].dtype == object or isinstance(df[col].dtype, pd.CategoricalDtype):
            df[col] = pd.factorize(df[col])[0]
        elif df[col].dtype == bool:
            df[col] = df[col].astype(int)
    try:
        raw = df.to_numpy(dtype=np.float64)
    except (TypeError, ValueError) as exc:
        raise DataError(f"{path}: non-numeric feature after encoding: {exc}") from exc
    names = [str(c) for c in df.columns]
    X = min_max_scale(raw, names)
    return Stream(X, y, names, info={"source": str(path), "classes": classes})


def load_csv_stream(path, batch_size: int, label_column=None) -> list[StreamBatch]:
    return list(read_csv_stream(path, label_column).batches(batch_size))


def gen_rbf_stream(seed: int, n_samples: int, n_features: int, n_centroids: int = 50,
                   max_spread: float = 1.0) -> Stream:
    """Radial-basis-function stream.

    Centroids are uniform in the unit cube, carry a class (balanced across
    centroids, then shuffled) and a spread drawn uniformly from
    [0, max_spread). Each sample picks a centroid uniformly, moves away from it
    in a random direction by a N(0, spread) distance, and is clipped to the cube.
    """
    if n_centroids < 1:
        raise ValueError("n_centroids must be >= 1")
    rng = np.random.default_rng(seed)
    centers = rng.uniform(0.0, 1.0, (n_centroids, n_features))
    classes = rng.permutation(np.arange(n_centroids) % 2)
    spread = rng.uniform(0.0, max_spread, n_centroids)

    which = rng.integers(0, n_centroids, n_samples)
    direction = rng.standard_normal((n_samples, n_features))
    direction /= np.maximum(np.linalg.norm(direction, axis=1, keepdims=True), 1e-12)
    length = rng.standard_normal(n_samples) * spread[which]
    X = np.clip(centers[which] + direction * length[:, None], 0.0, 1.0)
    y = np.where(classes[which] == 1, 1.0, -1.0)
    return Stream(X, y, info={"generator": "rbf", "seed": seed, "n_centroids": n_centroids})


@dataclass
class _Node:
    feature: int = -1  # index into the raw (pre one-hot) feature vector
    threshold: float = 0.0  # numeric: go right if x > threshold; categorical: right if x == value
    categorical: bool = False
    left: "_Node | None" = None
    right: "_Node | None" = None
    label: float = 0.0
    score: float = 0.0

    def is_leaf(self) -> bool:
        return self.left is None


@dataclass
class RandomTree:
    root: _Node
    n_num: int

    def route(self, raw: np.ndarray) -> list[_Node]:
        """Leaf reached by each raw row (numeric columns first, then category codes)."""
        out = []
        for row in np.atleast_2d(raw):
            node = self.root
            while not node.is_leaf():
                v = row[node.feature]
                go_right = v == node.threshold if node.categorical else v > node.threshold
                node = node.right if go_right else node.left
            out.append(node)
        return out

    def predict(self, raw: np.ndarray) -> np.ndarray:
        return np.array([leaf.label for leaf in self.route(raw)])

    def leaves(self) -> list[_Node]:
        found, stack = [], [self.root]
        while stack:
            node = stack.pop()
            if node.is_leaf():
                found.append(node)
            else:
                stack += [node.left, node.right]
        return found

    def features_used(self) -> set[int]:
        used, stack = set(), [self.root]
        while stack:
            node = stack.pop()
            if not node.is_leaf():
                used.add(node.feature)
                stack += [node.left, node.right]
        return used


def _build_tree(rng, candidates, n_num, n_cat_values, max_depth, min_depth, leaf_fraction, calibration):
    order = list(rng.permutation(candidates))
    pending = []

    def next_feature():
        # cycle through a shuffled list so every candidate gets used
        if not pending:
            pending.extend(rng.permutation(order).tolist())
        return int(pending.pop())

    def grow(depth):
        if depth >= max_depth or (depth >= min_depth and rng.random() < leaf_fraction):
            return _Node()
        f = next_feature()
        if f < n_num:
            node = _Node(feature=f, threshold=float(rng.uniform(0.35, 0.65)))
        else:
            node = _Node(feature=f, threshold=float(rng.integers(n_cat_values)), categorical=True)
        node.left, node.right = grow(depth + 1), grow(depth + 1)
        return node

    root = grow(0)
    # Each planted feature pushes the class one way: a leaf's score is the
    # signed count of turns along its path.
    direction = {int(f): (1.0 if rng.random() < 0.5 else -1.0) for f in candidates}

    def score(node, total):
        node.score = total
        if not node.is_leaf():
            d = direction[node.feature]
            score(node.left, total - d)
            score(node.right, total + d)

    score(root, 0.0)
    tree = RandomTree(root, n_num)
    # Leaves above the median score are positive. A small per-leaf jitter
    # breaks ties, and the median is taken over a calibration draw so the
    # classes come out near balance.
    for leaf in tree.leaves():
        leaf.score += 0.5 * rng.random()
    cut = float(np.median([leaf.score for leaf in tree.route(calibration)]))
    for leaf in tree.leaves():
        leaf.label = 1.0 if leaf.score > cut else -1.0
    return tree


def gen_tree_stream(seed: int, n_samples: int, n_num_features: int, n_cat_features: int = 0,
                    n_cat_values: int = 5, n_relevant: int | None = None, max_depth: int = 5,
                    min_depth: int = 3, leaf_fraction: float = 0.15, label_noise: float = 0.0) -> Stream:
    """Random-tree stream.

    Numeric features are uniform on [0, 1]; categorical ones uniform over
    ``n_cat_values`` codes and one-hot expanded after the numeric block.
    Labels come from a random tree that splits only on ``n_relevant``
    randomly chosen raw features (all of them when ``None``). Every planted
    feature gets a random direction; a leaf is positive when its path's
    signed turn count exceeds the median over a calibration draw, which
    keeps each planted feature monotonically informative and the classes
    near balance. ``relevant`` on the result lists the output columns the
    planted features occupy.
    """
    rng = np.random.default_rng(seed)
    n_raw = n_num_features + n_cat_features
    if n_raw < 1:
        raise ValueError("need at least one feature")
    n_relevant = n_raw if n_relevant is None else int(n_relevant)
    if not 1 <= n_relevant <= n_raw:
        raise ValueError("n_relevant out of range")
    planted = np.sort(rng.choice(n_raw, n_relevant, replace=False))

    def draw_raw(n):
        num = rng.uniform(0.0, 1.0, (n, n_num_features))
        cat = rng.integers(0, n_cat_values, (n, n_cat_features))
        return num, cat, np.hstack([num, cat.astype(np.float64)])

    tree = _build_tree(rng, planted, n_num_features, n_cat_values, max_depth, min_depth,
                       leaf_fraction, draw_raw(4096)[2])
    num, cat, raw = draw_raw(n_samples)
    y = tree.predict(raw)
    if label_noise > 0:
        flip = rng.random(n_samples) < label_noise
        y = np.where(flip, -y, y)

    onehot = np.zeros((n_samples, n_cat_features * n_cat_values))
    if n_cat_features:
        cols = np.arange(n_cat_features) * n_cat_values + cat
        onehot[np.arange(n_samples)[:, None], cols] = 1.0
    X = np.hstack([num, onehot])

    relevant = []
    for f in planted:
        if f < n_num_features:
            relevant.append(int(f))
        else:
            start = n_num_features + (f - n_num_features) * n_cat_values
            relevant.extend(range(start, start + n_cat_values))
    names = [f"num{j}" for j in range(n_num_features)] + [
        f"cat{c}={v}" for c in range(n_cat_features) for v in range(n_cat_values)
    ]
    return Stream(X, y, names, relevant=np.asarray(relevant, dtype=int),
                  info={"generator": "tree", "seed": seed, "tree": tree, "raw": raw})
