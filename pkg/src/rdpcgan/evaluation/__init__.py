from .metrics import auprc, auroc, f1
from .mmd import MmdReport, median_bandwidth, mmd_squared
from .protocols import UtilityReport, dimension_wise_prediction, top_k_features, tstr_evaluate
from .trees import DecisionTree, RandomForest, fit_forest, fit_tree

__all__ = [
    "DecisionTree",
    "MmdReport",
    "RandomForest",
    "UtilityReport",
    "auprc",
    "auroc",
    "dimension_wise_prediction",
    "f1",
    "fit_forest",
    "fit_tree",
    "median_bandwidth",
    "mmd_squared",
    "top_k_features",
    "tstr_evaluate",
]
