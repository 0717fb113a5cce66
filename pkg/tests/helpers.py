"""Shared instance generators for the test suite."""

import numpy as np

from fairmeans.dataset import PointSet


def uniform_instance(gen, n, dim=2, lo=-10.0, hi=10.0) -> PointSet:
    """Points drawn uniformly from a box; almost surely in general position."""
    return PointSet(gen.uniform(lo, hi, size=(n, dim)))


def clustered_instance(gen, n, dim=2, n_clusters=3, spread=0.5, box=50.0) -> PointSet:
    """Gaussian bumps around well-separated cluster centers."""
    centers = gen.uniform(-box, box, size=(n_clusters, dim))
    assign = gen.integers(0, n_clusters, size=n)
    pts = centers[assign] + gen.normal(0.0, spread, size=(n, dim))
    return PointSet(pts)


def grid_instance(gen, n, dim=2, cells=6) -> PointSet:
    """Integer-grid points; duplicate coordinates and exact ties are common."""
    return PointSet(gen.integers(0, cells, size=(n, dim)).astype(np.float64))


def separable_with_strays(gen, k, per_cluster, n_strays, dim=2, gap=200.0):
    """k tight clusters plus far stray singletons; returns (PointSet, stray ids)."""
    chunks = []
    for c in range(k):
        base = np.zeros(dim)
        base[0] = c * gap
        chunks.append(base + gen.normal(0.0, 0.5, size=(per_cluster, dim)))
    strays = gen.uniform(10 * gap, 20 * gap, size=(n_strays, dim))
    pts = np.vstack(chunks + [strays])
    stray_ids = set(range(k * per_cluster, k * per_cluster + n_strays))
    return PointSet(pts), stray_ids
