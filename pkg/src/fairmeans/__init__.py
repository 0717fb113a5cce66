"""Individually fair k-means clustering with outlier discards.

Library layout: ``dataset`` (points, sampling, injection), ``geometry``
(distances, fair radii, aspect ratio), ``seeding`` (anchor construction and
set cover), ``local_search`` (the constrained solver), ``metrics``
(baselines, exact oracle, bounds), ``cli`` (experiment harness).
"""

from .dataset import PointSet, RandomSource, inject_outliers, load_csv, make_census_like, subsample, write_csv
from .errors import ConfigError, DataError, GuardRefusal, InvariantViolation
from .geometry import AspectRatio, FairRadii, aspect_ratio, dist_to_set, distance, fair_radii
from .local_search import (
    ClusteringState,
    IterationRecord,
    LocalOptReport,
    SolveReport,
    ZoneBall,
    constrained_ls_pp,
    cost,
    farthest_m,
    local_optimality_check,
    lsfo,
)
from .metrics import (
    EvalSummary,
    OracleResult,
    brute_force_opt,
    greedy_baseline,
    max_bound_ratio,
    outlier_bound,
)
from .seeding import AnchorZone, SeedResult, base_cent, greedy_set_cover, verify_lemma1_cover

__version__ = "0.1.0"

__all__ = [
    "AnchorZone",
    "AspectRatio",
    "ClusteringState",
    "ConfigError",
    "DataError",
    "EvalSummary",
    "FairRadii",
    "GuardRefusal",
    "InvariantViolation",
    "IterationRecord",
    "LocalOptReport",
    "OracleResult",
    "PointSet",
    "RandomSource",
    "SeedResult",
    "SolveReport",
    "ZoneBall",
    "aspect_ratio",
    "base_cent",
    "brute_force_opt",
    "constrained_ls_pp",
    "cost",
    "dist_to_set",
    "distance",
    "fair_radii",
    "farthest_m",
    "greedy_baseline",
    "greedy_set_cover",
    "inject_outliers",
    "load_csv",
    "local_optimality_check",
    "lsfo",
    "make_census_like",
    "max_bound_ratio",
    "outlier_bound",
    "subsample",
    "verify_lemma1_cover",
    "write_csv",
]
