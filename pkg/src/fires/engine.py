"""Online feature weighting and selection loop."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .glm import GlmModel
from .mc_models import AnnModel, SdtModel
from .weighting import FeatureWeights, WeightConfig, compute_weights, feature_ranking

BASE_MODELS = ("glm", "ann", "sdt")

# spawn-key namespaces for seed derivation
_INIT_KEY = 0
_STEP_KEY = 1


@dataclass(frozen=True)
class EngineConfig:
    n_selected: int
    base_model: str = "glm"
    alpha_mu: float = 0.01
    alpha_sigma: float = 0.01
    weight_cfg: WeightConfig = field(default_factory=WeightConfig)
    mc_samples: int = 5
    hidden_layers: tuple[int, ...] = (100, 100, 100)
    tree_depth: int = 3
    sdt_penalty: float = 0.01
    seed: int = 0

    def __post_init__(self):
        if self.base_model not in BASE_MODELS:
            raise ValueError(f"base_model must be one of {BASE_MODELS}, got {self.base_model!r}")
        if self.n_selected < 1:
            raise ValueError("n_selected must be >= 1")
        if not (self.alpha_mu > 0 and self.alpha_sigma > 0):
            raise ValueError("learning rates must be positive")
        if self.mc_samples < 1:
            raise ValueError("mc_samples must be >= 1")


@dataclass(frozen=True)
class SelectionMask:
    selected: np.ndarray  # sorted feature indices
    omega_snapshot: FeatureWeights

    @property
    def n_features(self) -> int:
        return len(self.omega_snapshot)

    def as_binary(self) -> np.ndarray:
        out = np.zeros(self.n_features, dtype=np.int8)
        out[self.selected] = 1
        return out


def select_top_m(weights: FeatureWeights, n_selected: int) -> SelectionMask:
    """The ``n_selected`` largest weights; ties go to the lower index."""
    J = len(weights)
    if not 1 <= n_selected <= J:
        raise ValueError(f"n_selected must be in [1, {J}], got {n_selected}")
    top = feature_ranking(weights)[:n_selected]
    return SelectionMask(np.sort(top), weights)


def step_rng(seed: int, t: int) -> np.random.Generator:
    """Independent generator for timestep ``t`` of a run seeded with ``seed``."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(_STEP_KEY, t)))


def make_model(cfg: EngineConfig, n_features: int):
    if cfg.base_model == "glm":
        return GlmModel(n_features)
    if cfg.base_model == "ann":
        return AnnModel(n_features, hidden=cfg.hidden_layers, mc_samples=cfg.mc_samples)
    init = np.random.SeedSequence(cfg.seed, spawn_key=(_INIT_KEY,))
    return SdtModel(n_features, depth=cfg.tree_depth, mc_samples=cfg.mc_samples,
                    penalty=cfg.sdt_penalty, seed=init)


class FiresEngine:
    """Owns one base model's parameter distribution and updates it per batch.

    Each :meth:`step` runs, in order: batch-mean log-likelihood gradient,
    gradient ascent on (mu, sigma) with the sigma floor, aggregation to one
    (mu, sigma) per feature when the model has more parameters than
    features, closed-form weights, and top-M selection.
    """

    def __init__(self, n_features: int, cfg: EngineConfig):
        if cfg.n_selected > n_features:
            raise ValueError(f"n_selected={cfg.n_selected} exceeds feature count {n_features}")
        self.cfg = cfg
        self.n_features = int(n_features)
        self.model = make_model(cfg, n_features)
        self.t = 0
        self.weights: FeatureWeights | None = None

    @property
    def params(self):
        return self.model.params

    def step(self, X, y) -> tuple[SelectionMask, FeatureWeights]:
        X = np.asarray(X, dtype=np.float64)
        y = np.asarray(y, dtype=np.float64)
        if X.ndim != 2 or X.shape[0] == 0:
            raise ValueError("batch must be a nonempty 2-D array")
        if X.shape[1] != self.n_features:
            raise ValueError(f"batch has {X.shape[1]} features, engine expects {self.n_features}")
        if y.shape != (X.shape[0],):
            raise ValueError("need exactly one label per row")
        cfg = self.cfg
        g_mu, g_sigma, extra = self.model.loglik_gradients(X, y, step_rng(cfg.seed, self.t))
        self.model.params.update(cfg.alpha_mu * g_mu, cfg.alpha_sigma * g_sigma)
        self.model.apply_extra(extra, cfg.alpha_mu)
        feature_params = self.model.feature_params()
        self.weights = compute_weights(feature_params, cfg.weight_cfg, self.t)
        mask = select_top_m(self.weights, cfg.n_selected)
        self.t += 1
        return mask, self.weights
