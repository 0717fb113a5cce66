"""Euclidean primitives: distances, per-point fair radii, aspect ratio.

Everything here is exact brute force, vectorized with numpy and chunked so the
(n x n) distance matrix never has to be materialized at once.  That keeps
memory flat and stays practical into the hundreds of thousands of points.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .dataset import PointSet
from .errors import DataError

# Budget of pairwise entries held in memory per chunk (~256 MB of float64).
_CHUNK_CELLS = 32_000_000


@dataclass(frozen=True)
class FairRadii:
    """Per-point fair radius: distance to the neighbor_count-th nearest other point.

    Attributes:
        delta: (n,) float64, delta[i] > 0 unless point i has neighbor_count
            exact duplicates.
        neighbor_count: the neighbor rank actually used, i.e.
            ceil(n / k) clamped to at most n - 1.
    """

    delta: np.ndarray
    neighbor_count: int


@dataclass(frozen=True)
class AspectRatio:
    """Spread of a point set: max pairwise distance over min positive pairwise.

    ``approximate`` marks results where the maximum came from a bounding-box
    extremes pass instead of the full quadratic scan.
    """

    delta_max_over_min: float
    min_pairwise: float
    max_pairwise: float
    approximate: bool = False


def distance(p: np.ndarray, q: np.ndarray) -> float:
    """Euclidean distance between two points of equal dimension."""
    p = np.asarray(p, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    if p.shape != q.shape:
        raise ValueError(f"dimension mismatch: {p.shape} vs {q.shape}")
    return float(np.sqrt(np.sum((p - q) ** 2)))

def dist_to_set(p: np.ndarray, points: np.ndarray) -> float:
    """Distance from p to the nearest row of ``points``; +inf when empty."""
    if len(points) == 0:
        return math.inf
    diff = np.asarray(points, dtype=np.float64) - np.asarray(p, dtype=np.float64)
    return float(np.sqrt(np.einsum("ij,ij->i", diff, diff).min()))


def sq_dists(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """All squared distances between rows of a and rows of b, shape (|a|, |b|).

    Computed as explicit differences (not the expanded dot-product identity),
    so each entry is bit-for-bit sum((a_i - b_j)**2) with no cancellation.
    """
    diff = a[:, None, :] - b[None, :, :]
    return np.einsum("ijk,ijk->ij", diff, diff)


def _row_chunks(n_rows: int, n_cols: int):
    step = max(1, _CHUNK_CELLS // max(n_cols, 1))
    for start in range(0, n_rows, step):
        yield start, min(start + step, n_rows)


def fair_radii(ps: PointSet, k: int) -> FairRadii:
    """Fair radius of every point for a k-center budget.

    delta[i] is the distance from point i to its ceil(n/k)-th nearest other
    point: the radius of the smallest ball around i holding an equal share of
    the data.  Any fair solution must serve i within a small multiple of it.

    Args:
        ps: the point set, n >= 2.
        k: number of centers, 1 <= k <= n.

    Returns:
        FairRadii with the (n,) radii and the neighbor rank used (clamped to
        n - 1 so the rank always exists).
    """
    n = ps.n
    if not 1 <= k <= n:
        raise ValueError(f"k must be in 1..{n}, got {k}")
    if n < 2:
        raise ValueError("fair radii need at least 2 points")
    nc = min(-(n // -k), n - 1)
    delta = np.empty(n, dtype=np.float64)
    pts = ps.points
    for lo, hi in _row_chunks(n, n):
        d2 = sq_dists(pts[lo:hi], pts)
        d2[np.arange(hi - lo), np.arange(lo, hi)] = np.inf
        delta[lo:hi] = np.sqrt(np.partition(d2, nc - 1, axis=1)[:, nc - 1])
    return FairRadii(delta, nc)


# Above this size the max-pairwise scan switches to bounding-box extremes.
EXACT_ASPECT_LIMIT = 20_000


def aspect_ratio(ps: PointSet) -> AspectRatio:
    """Ratio of the largest pairwise distance to the smallest positive one.

    Exact up to EXACT_ASPECT_LIMIT points.  Beyond that the minimum still
    comes from an exact nearest-neighbor pass, while the maximum is taken
    over pairs of bounding-box extreme points only and the result is flagged
    approximate.

    Raises:
        ValueError: fewer than 2 points, or all points identical.
    """
    n = ps.n
    if n < 2:
        raise ValueError("aspect ratio needs at least 2 points")
    pts = ps.points
    min_pos = math.inf
    max_sq = 0.0
    exact = n <= EXACT_ASPECT_LIMIT
    for lo, hi in _row_chunks(n, n):
        d2 = sq_dists(pts[lo:hi], pts)
        d2[np.arange(hi - lo), np.arange(lo, hi)] = np.inf
        if exact:
            finite = d2[np.isfinite(d2)]
            max_sq = max(max_sq, float(finite.max()))
        pos = d2[d2 > 0.0]
        if pos.size:
            min_pos = min(min_pos, float(pos.min()))
    if exact:
        max_pair = math.sqrt(max_sq)
    else:
        corners = np.concatenate([np.argmin(pts, axis=0), np.argmax(pts, axis=0)])
        ext = pts[np.unique(corners)]
        max_pair = math.sqrt(float(sq_dists(ext, pts).max()))
    if not math.isfinite(min_pos):
        raise ValueError("all points identical; aspect ratio undefined")
    return AspectRatio(max_pair / math.sqrt(min_pos), math.sqrt(min_pos), max_pair, not exact)


def save_fair_radii(path: str, fr: FairRadii) -> None:
    """Write radii as a two-column CSV (id, delta) for caching."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["id", "delta"])
        for i, d in enumerate(fr.delta):
            writer.writerow([i, repr(float(d))])


def load_fair_radii(path: str, neighbor_count: int) -> FairRadii:
    """Read radii written by save_fair_radii; ids must be 0..n-1 in order."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0] != ["id", "delta"]:
        raise DataError(f"{path}: not a fair-radii cache file")
    delta = np.empty(len(rows) - 1, dtype=np.float64)
    for i, row in enumerate(rows[1:]):
        if int(row[0]) != i:
            raise DataError(f"{path}: ids out of order at line {i + 2}")
        delta[i] = float(row[1])
    return FairRadii(delta, neighbor_count)
