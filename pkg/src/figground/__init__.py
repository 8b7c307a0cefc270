"""figground: figure-ground urban morphology features and income classification.

The pipeline converts building-footprint vector data into 200 m figure-ground
tiles, extracts a 40-dimensional morphological descriptor per tile (edge
directionality, multi-scale density, building size, contour complexity), and
classifies zip-level income categories with a from-scratch random forest whose
out-of-bag permutation importances explain which morphology families carry
the signal.
"""

__version__ = "0.1.0"

from .config import PipelineConfig
from .forest import ForestParams, load_model, oob_error, permutation_importance, predict, save_model, train
from .morpho import FEATURE_NAMES, FeatureVector, featurize
from .pipeline import run_pipeline
from .raster import TileGeometry, TileRaster, clip_tile, make_tile, rasterize
from .sampler import balance_and_split, income_to_category, label_point, sample_points
from .synth import ClassRecipe, SyntheticSpec, generate_synthetic, two_class_default

__all__ = [
    "PipelineConfig",
    "ForestParams",
    "FeatureVector",
    "FEATURE_NAMES",
    "TileGeometry",
    "TileRaster",
    "ClassRecipe",
    "SyntheticSpec",
    "featurize",
    "train",
    "predict",
    "oob_error",
    "permutation_importance",
    "save_model",
    "load_model",
    "clip_tile",
    "make_tile",
    "rasterize",
    "sample_points",
    "label_point",
    "income_to_category",
    "balance_and_split",
    "generate_synthetic",
    "two_class_default",
    "run_pipeline",
    "__version__",
]
