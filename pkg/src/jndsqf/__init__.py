"""Stair quality functions from just-noticeable-difference (JND) samples.

G-method: partition raw JND samples into low/middle/high QF groups, fit a
BIC-selected Gaussian mixture per group and turn the components into the
jumps of a stair quality function.  K-method: the subject-weighted k-means
baseline it is compared against.
"""

__version__ = "0.1.0"

from .data import (
    ImageJndSet,
    IngestError,
    JndPoint,
    QfHistogram,
    SubjectRecord,
    build_histogram,
    ingest,
    subject_weighting,
)
from .gmm import GaussianMixture, bic_of, em_fit, init_params, select_model
from .kmethod import KMethodModel, choose_k, kmeans_1d, kmethod_fit
from .partition import GroupPartition, QfGroup, percentile_candidates, refine_boundary, split_groups
from .pipeline import compare_image, gmethod_fit
from .simulate import ComparisonOracle, LatentSubject, bisection_search, simulate_panel
from .sqf import StairQualityFunction, assemble, evaluate, jumps_from_mixture, quality_levels
