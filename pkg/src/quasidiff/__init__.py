"""Generalized one-dimensional diffusions: regularization, forms, chains, paths."""

from .extended import INF, NEG_INF, fmt
from .triple_model import (
    LEFT, AT, RIGHT, ScaleFunction, SpeedMeasure, Tail, eval_scale, decompose_scale,
    plateau_intervals, classify_endpoint, check_hypotheses, normalize_base,
)
from .regularize import (
    canonical_regularization, star_space, collapse_r, transience, feller_classification,
    HypothesisRejected, Recurrence,
)

__version__ = "0.1.0"
