"""Online feature weighting and selection for binary data streams."""

from .engine import BASE_MODELS, EngineConfig, FiresEngine, SelectionMask, select_top_m
from .glm import GlmModel, glm_gradients, glm_marginal, glm_rho
from .harness import Perceptron, RunMetrics, StepRecord, grid_run, prequential_run
from .mc_models import AnnModel, SdtModel, aggregate_ann, aggregate_sdt, sdt_forward
from .prob import GaussianParamSet, gaussian_cdf_expectation, std_normal_cdf, std_normal_pdf
from .stability import StabilityWindow, stability_score
from .stream import DataError, Stream, gen_rbf_stream, gen_tree_stream, read_csv_stream
from .weighting import FeatureWeights, WeightConfig, compute_weights, feature_ranking

__all__ = [
    "AnnModel", "BASE_MODELS", "DataError", "EngineConfig", "FeatureWeights", "FiresEngine",
    "GaussianParamSet", "GlmModel", "Perceptron", "RunMetrics", "SdtModel", "SelectionMask",
    "StabilityWindow", "StepRecord", "Stream", "WeightConfig", "aggregate_ann", "aggregate_sdt",
    "compute_weights", "feature_ranking", "gaussian_cdf_expectation", "gen_rbf_stream",
    "gen_tree_stream", "glm_gradients", "glm_marginal", "glm_rho", "grid_run", "prequential_run",
    "read_csv_stream", "sdt_forward", "select_top_m", "stability_score", "std_normal_cdf",
    "std_normal_pdf",
]
