"""Prequential (test-then-train) evaluation of online feature selection."""

from __future__ import annotations

import dataclasses
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .engine import EngineConfig, FiresEngine
from .stability import StabilityWindow
from .stream import Stream


class Perceptron:
    """Mistake-driven perceptron.

    Predicts sign(w.x + b) with a zero score mapped to -1. A row is a mistake
    when y * (w.x + b) <= 0; each mistake applies w += lr*y*x, b += lr*y.
    """

    def __init__(self, n_features: int, learning_rate: float = 1.0):
        self.w = np.zeros(n_features)
        self.b = 0.0
        self.learning_rate = learning_rate

    def decision(self, X):
        return X @ self.w + self.b

    def predict(self, X):
        return np.where(self.decision(X) > 0, 1.0, -1.0)

    def partial_fit(self, X, y):
        for x_i, y_i in zip(X, y):
            if y_i * (x_i @ self.w + self.b) <= 0:
                self.w += self.learning_rate * y_i * x_i
                self.b += self.learning_rate * y_i
        return self


@dataclass
class StepRecord:
    t: int
    acc: float
    stability: float | None
    fs_ms: float
    train_ms: float
    selected: list[int]

    def as_dict(self) -> dict:
        return dataclasses.asdict(self)


@dataclass
class RunMetrics:
    records: list[StepRecord] = field(default_factory=list)
    config: dict = field(default_factory=dict)

    def mean_accuracy(self) -> float:
        return float(np.mean([r.acc for r in self.records]))

    def accuracy_variance(self) -> float:
        return float(np.var([r.acc for r in self.records]))

    def mean_stability(self) -> float | None:
        vals = [r.stability for r in self.records if r.stability is not None]
        return float(np.mean(vals)) if vals else None

    def mean_fs_ms(self) -> float:
        return float(np.mean([r.fs_ms for r in self.records]))

    def mean_train_ms(self) -> float:
        return float(np.mean([r.train_ms for r in self.records]))

    def mean_step_ms(self) -> float:
        return self.mean_fs_ms() + self.mean_train_ms()

    def summary(self) -> dict:
        return {
            "n_steps": len(self.records),
            "acc": self.mean_accuracy(),
            "acc_var": self.accuracy_variance(),
            "stability": self.mean_stability(),
            "fs_ms": self.mean_fs_ms(),
            "train_ms": self.mean_train_ms(),
            "step_ms": self.mean_step_ms(),
            "config": self.config,
        }


def _config_echo(cfg: EngineConfig, batch_size: int, window: int) -> dict:
    echo = dataclasses.asdict(cfg)
    echo["hidden_layers"] = list(cfg.hidden_layers)
    echo["batch_size"] = batch_size
    echo["window"] = window
    return echo


def prequential_run(stream: Stream, cfg: EngineConfig, batch_size: int, window: int = 10,
                    perceptron_lr: float = 1.0) -> RunMetrics:
    """Interleaved test-then-train over the stream.

    Per batch: the perceptron predicts on features masked by the previous
    selection (all features for the first batch) and accuracy is recorded;
    FIRES then updates on the unmasked batch to produce the next mask; the
    perceptron trains on the masked batch; the new mask enters the
    stability window.
    """
    stream.check_binary()
    J = stream.n_features
    engine = FiresEngine(J, cfg)
    clf = Perceptron(J, perceptron_lr)
    win = StabilityWindow(J, cfg.n_selected, window)
    keep = np.ones(J)
    metrics = RunMetrics(config=_config_echo(cfg, batch_size, window))

    for batch in stream.batches(batch_size):
        X_masked = batch.x * keep
        acc = float(np.mean(clf.predict(X_masked) == batch.y))

        t0 = time.perf_counter()
        mask, _ = engine.step(batch.x, batch.y)
        fs_ms = (time.perf_counter() - t0) * 1e3

        t0 = time.perf_counter()
        clf.partial_fit(X_masked, batch.y)
        train_ms = (time.perf_counter() - t0) * 1e3

        keep = mask.as_binary().astype(np.float64)
        win.push(mask)
        metrics.records.append(
            StepRecord(batch.t, acc, win.stability(), fs_ms, train_ms, mask.selected.tolist())
        )
    return metrics


@dataclass
class GridSummary:
    cells: list[tuple[int, float, RunMetrics]]

    def __len__(self) -> int:
        return len(self.cells)

    def mean_accuracy(self) -> float:
        return float(np.mean([m.mean_accuracy() for _, _, m in self.cells]))

    def mean_stability(self) -> float | None:
        vals = [m.mean_stability() for _, _, m in self.cells]
        vals = [v for v in vals if v is not None]
        return float(np.mean(vals)) if vals else None

    def mean_step_ms(self) -> float:
        return float(np.mean([m.mean_step_ms() for _, _, m in self.cells]))

    def mean_fs_ms(self) -> float:
        return float(np.mean([m.mean_fs_ms() for _, _, m in self.cells]))

    def summary(self) -> dict:
        return {
            "n_cells": len(self.cells),
            "acc": self.mean_accuracy(),
            "acc_var": float(np.var([m.mean_accuracy() for _, _, m in self.cells])),
            "stability": self.mean_stability(),
            "fs_ms": self.mean_fs_ms(),
            "step_ms": self.mean_step_ms(),
        }


def n_selected_for(fraction: float, n_features: int) -> int:
    """Number of features for a selected fraction, rounded, at least 1."""
    if not 0 < fraction <= 1:
        raise ValueError("selected fraction must be in (0, 1]")
    return max(1, min(n_features, int(round(fraction * n_features))))


def _run_cell(args):
    stream, cfg, batch_size, window = args
    return prequential_run(stream, cfg, batch_size, window)


def grid_run(stream: Stream, batch_sizes, selected_fractions, cfg: EngineConfig, window: int = 10,
             jobs: int = 1) -> GridSummary:
    """One prequential run per (batch size, selected fraction) cell."""
    batch_sizes = list(batch_sizes)
    selected_fractions = list(selected_fractions)
    if not batch_sizes or not selected_fractions:
        raise ValueError("grids must be nonempty")
    cells = [(b, f) for b in batch_sizes for f in selected_fractions]
    tasks = [
        (stream, dataclasses.replace(cfg, n_selected=n_selected_for(f, stream.n_features)), b, window)
        for b, f in cells
    ]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_run_cell, tasks))
    else:
        results = [_run_cell(task) for task in tasks]
    return GridSummary([(b, f, m) for (b, f), m in zip(cells, results)])
