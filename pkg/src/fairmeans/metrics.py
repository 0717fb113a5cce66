"""Evaluation metrics, the greedy baseline, and the exact small-instance oracle.

Everything here recomputes from raw coordinates rather than trusting solver
caches, so these functions double as independent checks on the search code.
"""

from __future__ import annotations

import csv
import math
import os
import time
from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .dataset import PointSet
from .errors import GuardRefusal
from .geometry import AspectRatio, FairRadii, sq_dists
from .seeding import base_cent

# Fixed schema of the results CSV produced by the experiment harness.
RESULT_COLUMNS = (
    "dataset",
    "n",
    "k",
    "m",
    "gamma",
    "eps",
    "seed",
    "algorithm",
    "cost",
    "rho",
    "n_outliers",
    "bound",
    "ms",
    "config_hash",
)

# Default enumeration guard for the exact oracle.
ORACLE_MAX_N = 14
ORACLE_MAX_K = 3
ORACLE_MAX_M = 2


@dataclass(frozen=True)
class EvalSummary:
    """One algorithm run boiled down to the reported metrics.

    bound_m_plus is the discard-count ceiling m + (m*k/eps) * ln(n * spread);
    centers is carried for report writing and is not part of the CSV row.
    """

    kmeans_cost: float
    rho: float
    n_outliers: int
    runtime_ms: int
    bound_m_plus: float
    centers: tuple[int, ...] = ()


@dataclass(frozen=True)
class OracleResult:
    """Exact optimum over all small center/outlier subsets.

    feasible is False when no (centers, outliers) pair serves every kept
    point within gamma times its fair radius; cost is +inf in that case.
    """

    feasible: bool
    cost: float
    centers: tuple[int, ...]
    outliers: tuple[int, ...]
    states_scanned: int


def max_bound_ratio(ps: PointSet, centers, excluded, delta: FairRadii) -> float:
    """Worst served-point ratio of center distance to fair radius.

    Points in ``excluded`` are skipped.  A point at distance 0 with fair
    radius 0 contributes 0; positive distance over a zero radius contributes
    +inf.  Raises ValueError on an empty center set.
    """
    c = sorted(int(s) for s in centers)
    if not c:
        raise ValueError("max_bound_ratio needs a nonempty center set")
    excl = set(int(i) for i in excluded)
    ids = np.asarray([i for i in range(ps.n) if i not in excl], dtype=np.int64)
    if ids.size == 0:
        return 0.0
    d = np.sqrt(sq_dists(ps.points[ids], ps.points[np.asarray(c)]).min(axis=1))
    dv = delta.delta[ids]
    with np.errstate(divide="ignore", invalid="ignore"):
        r = np.where(dv > 0, d / dv, np.where(d > 0, np.inf, 0.0))
    return float(r.max())


def recompute_cost(ps: PointSet, centers, excluded) -> float:
    """Sum of squared nearest-center distances over all non-excluded points."""
    c = np.asarray(sorted(int(s) for s in centers), dtype=np.int64)
    excl = set(int(i) for i in excluded)
    ids = np.asarray([i for i in range(ps.n) if i not in excl], dtype=np.int64)
    if ids.size == 0:
        return 0.0
    return float(sq_dists(ps.points[ids], ps.points[c]).min(axis=1).sum())


def outlier_bound(m: int, k: int, eps: float, n: int, aspect: AspectRatio) -> float:
    """Ceiling on total discards: m + (m*k/eps) * ln(n * spread), natural log."""
    if m < 0 or k < 1 or eps <= 0 or n < 1:
        raise ValueError("outlier_bound needs m >= 0, k >= 1, eps > 0, n >= 1")
    if m == 0:
        return 0.0
    return m + (m * k / eps) * math.log(n * aspect.delta_max_over_min)


def greedy_baseline(ps: PointSet, delta: FairRadii, k: int, gamma: float) -> EvalSummary:
    """Anchor-seeding baseline: greedy anchors as centers, no discards, no search.

    Runs the seeding greedy phase with a zero outlier budget, truncates the
    resulting anchors to k (or pads with farthest-point picks, ties to the
    smaller id, when fewer anchors exist), and evaluates cost and rho with an
    empty outlier set.
    """
    t0 = time.perf_counter()
    seed = base_cent(ps, delta, k, 0, gamma)
    centers = [int(a) for a in seed.anchors_S0[:k]]
    pts = ps.points
    while len(centers) < k:
        d1 = sq_dists(pts, pts[np.asarray(centers)]).min(axis=1)
        d1[np.asarray(centers)] = -np.inf
        order = np.lexsort((np.arange(ps.n), -d1))
        centers.append(int(order[0]))
    centers = sorted(centers)
    cost = recompute_cost(ps, centers, ())
    rho = max_bound_ratio(ps, centers, (), delta)
    ms = int(round((time.perf_counter() - t0) * 1000.0))
    return EvalSummary(cost, rho, 0, ms, 0.0, tuple(centers))


def _combo_cache():
    cache: dict[tuple[int, int], np.ndarray] = {}

    def combos(n: int, r: int) -> np.ndarray:
        key = (n, r)
        if key not in cache:
            cache[key] = np.array(list(combinations(range(n), r)), dtype=np.int64)
        return cache[key]

    return combos


def brute_force_opt(
    ps: PointSet,
    delta: FairRadii,
    k: int,
    m: int,
    gamma: float | None,
    max_n: int = ORACLE_MAX_N,
    max_k: int = ORACLE_MAX_K,
    max_m: int = ORACLE_MAX_M,
):
    """Exact optimum by exhausting every outlier and center subset.

    Enumerates all outlier sets of size up to m and, for each, all center
    sets drawn from the kept points.  A pair is feasible when every kept
    point lies within gamma times its fair radius of some center; pass
    gamma=None to drop that filter entirely.  Returns the minimum feasible
    cost with its witnesses.  Since cost and feasibility both improve with
    more centers, only maximal center sets are scanned; the optimum over
    smaller sets is identical.

    Raises:
        GuardRefusal: instance exceeds the (max_n, max_k, max_m) guard.
    """
    n = ps.n
    if n > max_n or k > max_k or m > max_m:
        raise GuardRefusal(
            f"oracle guard: need n <= {max_n}, k <= {max_k}, m <= {max_m}; "
            f"got n={n}, k={k}, m={m}"
        )
    if k < 1 or m < 0:
        raise ValueError(f"need k >= 1 and m >= 0, got k={k}, m={m}")
    d2 = sq_dists(ps.points, ps.points)
    limit2 = None
    if gamma is not None:
        lim = gamma * delta.delta
        limit2 = lim * lim
    combos = _combo_cache()
    all_ids = np.arange(n)
    best_cost = math.inf
    best_centers: tuple[int, ...] = ()
    best_outliers: tuple[int, ...] = ()
    feasible = False
    scanned = 0
    for z_size in range(min(m, n - 1) + 1):
        for z in combinations(range(n), z_size):
            keep = np.setdiff1d(all_ids, np.asarray(z, dtype=np.int64), assume_unique=True)
            s_size = min(k, keep.size)
            cmb = combos(keep.size, s_size)
            sub = d2[np.ix_(keep, keep)]
            mind = sub[:, cmb].min(axis=2)  # (|keep|, n_combos)
            scanned += cmb.shape[0]
            if limit2 is not None:
                ok = (mind <= limit2[keep][:, None]).all(axis=0)
            else:
                ok = np.ones(cmb.shape[0], dtype=bool)
            if not ok.any():
                continue
            costs = mind.sum(axis=0)
            costs[~ok] = math.inf
            j = int(np.argmin(costs))
            if costs[j] < best_cost:
                best_cost = float(costs[j])
                best_centers = tuple(int(keep[i]) for i in cmb[j])
                best_outliers = tuple(int(i) for i in z)
                feasible = True
    if not feasible:
        return OracleResult(False, math.inf, (), (), scanned)
    return OracleResult(True, best_cost, best_centers, best_outliers, scanned)


def format_row(values: dict) -> list[str]:
    """Order and stringify a result-row dict per RESULT_COLUMNS."""
    out = []
    for col in RESULT_COLUMNS:
        v = values.get(col, "")
        if isinstance(v, float):
            out.append(repr(v))
        else:
            out.append(str(v))
    return out


def append_result_row(path: str, values: dict) -> None:
    """Append one row to the results CSV, creating it with a header if absent."""
    new = not os.path.exists(path)
    with open(path, "a", newline="") as fh:
        writer = csv.writer(fh)
        if new:
            writer.writerow(RESULT_COLUMNS)
        writer.writerow(format_row(values))


def ensure_results_file(path: str) -> None:
    """Create an empty results CSV (header only) if the file does not exist."""
    if not os.path.exists(path):
        with open(path, "w", newline="") as fh:
            csv.writer(fh).writerow(RESULT_COLUMNS)


def existing_config_hashes(path: str) -> set[str]:
    """Config hashes already present in a results CSV (empty set if no file)."""
    if not os.path.exists(path):
        return set()
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or "config_hash" not in rows[0]:
        return set()
    idx = rows[0].index("config_hash")
    return {row[idx] for row in rows[1:] if len(row) > idx and row[idx]}
