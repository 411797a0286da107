"""Cell classification with CART Gini_Gain feature selection and a
PSO-tuned RBF support vector machine."""
from ._backend import BACKEND
from .cart import build_tree, feature_importance, select_top_k
from .features import DEFAULT_CATALOG, SegmentedCellImage, extract_all
from .metrics import evaluate
from .pipeline import PipelineConfig, run_pipeline
from .pso import SwarmConfig, optimize, tune_svm
from .svm import train_binary, train_multiclass

__version__ = "0.1.0"

__all__ = [
    "BACKEND", "DEFAULT_CATALOG", "PipelineConfig", "SegmentedCellImage", "SwarmConfig",
    "build_tree", "evaluate", "extract_all", "feature_importance", "optimize",
    "run_pipeline", "select_top_k", "train_binary", "train_multiclass", "tune_svm",
]
