"""Slow, obviously-correct reference implementations for the test suite.

Everything here is written with plain Python loops and full sorts, avoiding
the vectorized shortcuts the package uses, so the two sides count as
independent.  Keep these dumb: clarity beats speed.
"""

import itertools
import math

import numpy as np


def ref_dist(p, q) -> float:
    return math.dist(tuple(p), tuple(q))


def ref_sq_dist_to_set(points, i, centers) -> float:
    return min(ref_dist(points[i], points[c]) ** 2 for c in centers)


def ref_fair_radii(points, k):
    """Per-point distance to the ceil(n/k)-th nearest other point, full sort."""
    n = len(points)
    nc = min(math.ceil(n / k), n - 1)
    out = []
    for i in range(n):
        ds = sorted(ref_dist(points[i], points[j]) for j in range(n) if j != i)
        out.append(ds[nc - 1])
    return np.array(out, dtype=np.float64), nc


def ref_cost(points, centers, excluded=(), universe=None) -> float:
    uni = range(len(points)) if universe is None else universe
    skip = set(int(i) for i in excluded)
    total = 0.0
    for i in uni:
        if int(i) in skip:
            continue
        total += ref_sq_dist_to_set(points, int(i), centers)
    return total


def ref_farthest(points, centers, base_excluded, m, universe=None):
    """The m candidate ids farthest from the centers; ties to the smaller id."""
    uni = set(range(len(points))) if universe is None else set(int(i) for i in universe)
    cand = sorted(uni - set(int(i) for i in base_excluded))
    ranked = sorted(cand, key=lambda i: (-ref_sq_dist_to_set(points, i, centers), i))
    return set(ranked[:m])


def ref_rho(points, centers, excluded, delta) -> float:
    worst = 0.0
    skip = set(int(i) for i in excluded)
    for i in range(len(points)):
        if i in skip:
            continue
        d = min(ref_dist(points[i], points[c]) for c in centers)
        dv = float(delta[i])
        if dv > 0:
            worst = max(worst, d / dv)
        elif d > 0:
            return math.inf
    return worst


def ref_aspect(points) -> float:
    n = len(points)
    best_max = 0.0
    best_min = math.inf
    for i in range(n):
        for j in range(i + 1, n):
            d = ref_dist(points[i], points[j])
            best_max = max(best_max, d)
            if d > 0:
                best_min = min(best_min, d)
    return best_max / best_min


def ref_greedy_cover(universe, sets):
    """Greedy max-marginal-gain cover; ties to the smaller set index."""
    remaining = set(universe)
    picks = []
    while remaining:
        best_idx = None
        best_gain = 0
        for idx, s in enumerate(sets):
            gain = len(remaining & set(s))
            if gain > best_gain:
                best_gain = gain
                best_idx = idx
        if best_idx is None:
            raise RuntimeError("universe not coverable")
        picks.append(best_idx)
        remaining -= set(sets[best_idx])
    return picks


def ref_min_cover_size(universe, sets):
    """Size of the smallest exact cover, or None when no cover exists."""
    uni = set(universe)
    for r in range(len(sets) + 1):
        for combo in itertools.combinations(range(len(sets)), r):
            covered = set()
            for idx in combo:
                covered |= set(sets[idx])
            if uni <= covered:
                return r
    return None


def ref_brute_opt(points, delta, k, m, gamma):
    """Exhaustive optimum over every outlier set and center set, all sizes.

    Returns (feasible, cost, centers, outliers).  gamma=None drops the
    fairness filter.  Intended for very small n only.
    """
    n = len(points)
    best = (False, math.inf, (), ())
    for z_size in range(min(m, n - 1) + 1):
        for z in itertools.combinations(range(n), z_size):
            keep = [i for i in range(n) if i not in z]
            for s_size in range(1, min(k, len(keep)) + 1):
                for s in itertools.combinations(keep, s_size):
                    ok = True
                    total = 0.0
                    for p in keep:
                        d = min(ref_dist(points[p], points[c]) for c in s)
                        if gamma is not None and d > gamma * float(delta[p]):
                            ok = False
                            break
                        total += d * d
                    if ok and total < best[1]:
                        best = (True, total, tuple(s), tuple(z))
    return best
