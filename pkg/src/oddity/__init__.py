"""Odd-one-out solver for six-panel geometry problems.

Panels are binarized, turned into point clouds, rotated into their principal
axes, described by a bank of Gestalt features, and compared by standard
score; features that single out one panel vote for it.
"""

from .config import RunConfig
from .errors import (
    CorruptImage,
    EmptyCloud,
    GridNotDetected,
    NonFiniteInput,
    OddityError,
    RegionOutOfBounds,
    TooFewPoints,
    UnknownConcept,
    UnsupportedFormat,
)
from .features import REGISTRY, compute_feature_matrix
from .generator import CONCEPTS, GeneratedProblem, generate, generate_suite
from .matrix import FeatureMatrix, zscore_row
from .pointset import PointCloud, PrincipalFrame, normalize, principal_frame, to_points
from .raster import BinaryRaster, GrayRaster, binarize, crop_caption, load_grayscale, segment_grid
from .solver import Verdict, select_features, solve_problem, solve_sheet, vote

__all__ = [
    "RunConfig", "OddityError", "CorruptImage", "EmptyCloud", "GridNotDetected", "NonFiniteInput",
    "RegionOutOfBounds", "TooFewPoints", "UnknownConcept", "UnsupportedFormat",
    "REGISTRY", "compute_feature_matrix", "CONCEPTS", "GeneratedProblem", "generate", "generate_suite",
    "FeatureMatrix", "zscore_row", "PointCloud", "PrincipalFrame", "normalize", "principal_frame",
    "to_points", "BinaryRaster", "GrayRaster", "binarize", "crop_caption", "load_grayscale",
    "segment_grid", "Verdict", "select_features", "solve_problem", "solve_sheet", "vote",
]
__version__ = "0.1.0"
