from .dataset import (FEATURE_NAMES, FEATURE_SETS, EmptyDataset, FeatureTable, LabeledDataset,
                      read_table, time_ordered_split, write_table)
from .gbdt import (DimensionMismatch, GBDTModel, GBDTParams, SingleClassInput, load_gbdt,
                   predict, predict_proba, save_gbdt, train_gbdt)
from .logreg import LogRegModel, train_logreg
from .metrics import LengthMismatch, Metrics, evaluate
from .scoring import NegativeFeature, anova_f_scores, chi2_scores, chi2_stats, f_scores
from .curve import CurvePoint, fit_and_score, learning_curve

__all__ = [
    "FEATURE_NAMES", "FEATURE_SETS", "EmptyDataset", "FeatureTable", "LabeledDataset",
    "read_table", "time_ordered_split", "write_table",
    "DimensionMismatch", "GBDTModel", "GBDTParams", "SingleClassInput", "load_gbdt",
    "predict", "predict_proba", "save_gbdt", "train_gbdt",
    "LogRegModel", "train_logreg",
    "LengthMismatch", "Metrics", "evaluate",
    "NegativeFeature", "anova_f_scores", "chi2_scores", "chi2_stats", "f_scores",
    "CurvePoint", "fit_and_score", "learning_curve",
]
