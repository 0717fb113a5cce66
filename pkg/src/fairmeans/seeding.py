"""Anchor-based seeding for fair clustering with outlier discards.

``base_cent`` builds an initial center set in three moves: grow anchors
greedily in increasing fair-radius order until every point has an anchor
within gamma times its own fair radius, discard the m points with the largest
fair radii, then shrink the surviving anchors with a greedy set cover over
their (gamma+2)-relaxed zones.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .dataset import PointSet
from .errors import GuardRefusal, InvariantViolation
from .geometry import FairRadii, sq_dists

DISCARD_POLICIES = ("largest_delta", "last_covered")


@dataclass(frozen=True)
class AnchorZone:
    """Points lying within radius_factor times their own fair radius of an anchor.

    Construction zones use factor gamma with an inclusive test (an anchor
    covers itself at distance 0); relaxed cover sets use factor gamma+2 with
    a strict test.
    """

    anchor: int
    radius_factor: float
    members: frozenset[int]


@dataclass(frozen=True)
class SeedResult:
    """Output of base_cent.

    Attributes:
        anchors_S0: anchor ids in greedy set-cover pick order (greedy-phase
            order when no cover step was needed).
        outliers_Z0: ids discarded for having the largest fair radii.
        zones: relaxed (gamma+2) cover set of each anchor in anchors_S0.
        coverage_order: (n,) array; coverage_order[p] is the index of the
            anchor addition that first brought p within gamma * delta[p].
        greedy_anchors: every anchor added in the greedy phase, in order,
            including anchors later discarded or dropped by set cover.
        fallback_count: points of X \\ Z0 in no relaxed zone, assigned to the
            nearest surviving anchor's zone instead.  Each such assignment is
            a measurable fairness relaxation.
    """

    anchors_S0: tuple[int, ...]
    outliers_Z0: frozenset[int]
    zones: tuple[AnchorZone, ...]
    coverage_order: np.ndarray
    greedy_anchors: tuple[int, ...] = ()
    fallback_count: int = 0


def greedy_set_cover(universe, sets) -> list[int]:
    """Greedy set cover: repeatedly pick the set covering the most uncovered ids.

    Ties break toward the smaller set index.  Returns picked indices in pick
    order.

    Raises:
        InvariantViolation: the union of sets does not cover the universe.
    """
    remaining = set(universe)
    pool = [set(s) for s in sets]
    picks: list[int] = []
    while remaining:
        best_idx = -1
        best_gain = 0
        for idx, s in enumerate(pool):
            gain = len(s & remaining)
            if gain > best_gain:
                best_gain = gain
                best_idx = idx
        if best_idx < 0:
            raise InvariantViolation(
                f"set cover stuck with {len(remaining)} ids uncoverable"
            )
        picks.append(best_idx)
        remaining -= pool[best_idx]
    return picks


def base_cent(
    ps: PointSet,
    delta: FairRadii,
    k: int,
    m: int,
    gamma: float,
    discard_policy: str = "largest_delta",
) -> SeedResult:
    """Build the initial anchor set S0 and fairness outliers Z0.

    Greedy phase: while some point p has no anchor within gamma * delta[p],
    add the uncovered point of minimum fair radius (ties by smaller id) as a
    new anchor.  Discard phase: Z0 = the m points with the largest fair radii
    (default policy); anchors that land in Z0, or whose construction zone
    lies entirely in Z0, are deleted.  Cover phase: if more than k anchors
    survive, greedy set cover over the relaxed zones
    P_i = {x in X \\ Z0 : dist(x, anchor_i) < (gamma+2) * delta[x]}
    picks the final anchors; survivors in no P_i are fallback-assigned to the
    nearest surviving anchor and counted.

    Args:
        ps: points.
        delta: fair radii for this (ps, k).
        k: center budget, >= 1.
        m: outlier budget, 0 <= m <= n - k.
        gamma: fairness relaxation, >= 1.
        discard_policy: "largest_delta" (default) or "last_covered", which
            discards the m points covered latest in the greedy phase (ties by
            larger fair radius, then smaller id).

    Returns:
        SeedResult; anchors_S0 can be longer than k, in which case only the
        first k become hard zones downstream.
    """
    n = ps.n
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if not 0 <= m <= n - k:
        raise ValueError(f"m must be in 0..{n - k}, got {m}")
    if gamma < 1.0:
        raise ValueError(f"gamma must be >= 1, got {gamma}")
    if discard_policy not in DISCARD_POLICIES:
        raise ValueError(f"discard_policy must be one of {DISCARD_POLICIES}")
    dvec = delta.delta
    pts = ps.points
    ids = np.arange(n)

    # Greedy phase.  cover_radius[p] = gamma * delta[p] is p's own coverage
    # requirement; a point is covered once some anchor sits within it.
    cover_radius = gamma * dvec
    dmin = np.full(n, np.inf)
    coverage_order = np.full(n, -1, dtype=np.int64)
    zone_of = np.full(n, -1, dtype=np.int64)
    anchors: list[int] = []
    while True:
        uncovered = np.flatnonzero(coverage_order < 0)
        if uncovered.size == 0:
            break
        order = np.lexsort((uncovered, dvec[uncovered]))
        p_star = int(uncovered[order[0]])
        a_idx = len(anchors)
        anchors.append(p_star)
        d_new = np.sqrt(np.einsum("ij,ij->i", pts - pts[p_star], pts - pts[p_star]))
        dmin = np.minimum(dmin, d_new)
        newly = uncovered[dmin[uncovered] <= cover_radius[uncovered]]
        coverage_order[newly] = a_idx
        zone_of[newly] = a_idx

    # Discard phase.
    if discard_policy == "largest_delta":
        discard_order = np.lexsort((ids, -dvec))
    else:
        discard_order = np.lexsort((ids, -dvec, -coverage_order))
    z0 = frozenset(int(i) for i in discard_order[:m])
    in_z0 = np.zeros(n, dtype=bool)
    if m:
        in_z0[discard_order[:m]] = True

    survivors: list[int] = []
    for a_idx, a in enumerate(anchors):
        if in_z0[a]:
            continue
        members = np.flatnonzero(zone_of == a_idx)
        if members.size and bool(np.all(in_z0[members])):
            continue
        survivors.append(a)

    keep = ~in_z0
    kept_ids = np.flatnonzero(keep)
    fallback = 0
    if survivors:
        # Relaxed cover sets over X \ Z0, strict inequality.
        anchor_pts = pts[np.array(survivors)]
        d_anchor = np.sqrt(sq_dists(pts[kept_ids], anchor_pts))
        relaxed = d_anchor < ((gamma + 2.0) * dvec[kept_ids])[:, None]
        cover_sets = [set(map(int, kept_ids[relaxed[:, j]])) for j in range(len(survivors))]
        orphans = np.flatnonzero(~relaxed.any(axis=1))
        for row in orphans:
            nearest = int(np.argmin(d_anchor[row]))
            cover_sets[nearest].add(int(kept_ids[row]))
            fallback += 1
        if len(survivors) <= k:
            picks = list(range(len(survivors)))
        else:
            picks = greedy_set_cover(set(map(int, kept_ids)), cover_sets)
        s0 = tuple(survivors[j] for j in picks)
        zones = tuple(
            AnchorZone(survivors[j], gamma + 2.0, frozenset(cover_sets[j])) for j in picks
        )
    elif kept_ids.size == 0:
        s0, zones = (), ()
    else:
        # Every anchor was discarded; nothing can anchor a zone.
        s0, zones = (), ()
        fallback = int(kept_ids.size)
    return SeedResult(
        anchors_S0=s0,
        outliers_Z0=z0,
        zones=zones,
        coverage_order=coverage_order,
        greedy_anchors=tuple(anchors),
        fallback_count=fallback,
    )


# Hard size limit for the exhaustive cover certificate below.
VERIFY_MAX_N = 14


def verify_lemma1_cover(seed: SeedResult, ps: PointSet, delta: FairRadii, k: int, m: int, gamma: float):
    """Exhaustively certify the seeding cover guarantee on a tiny instance.

    Checks whether, after removing Z0 plus some m further points of free
    choice, k points of the remainder have relaxed (gamma+2) zones covering
    everything left: at most 2m points sacrificed in total.  Diagnostic only.

    Returns:
        (True, witness) with witness = {"extra_discards": [...], "anchors":
        [...]} when such a cover exists, else (False, None).

    Raises:
        GuardRefusal: n > 14; the enumeration is exponential.
    """
    n = ps.n
    if n > VERIFY_MAX_N:
        raise GuardRefusal(f"exhaustive cover check refused for n={n} > {VERIFY_MAX_N}")
    dvec = delta.delta
    d_all = np.sqrt(sq_dists(ps.points, ps.points))
    # relaxed[a, x]: anchor a serves x within x's relaxed radius.
    relaxed = d_all < ((gamma + 2.0) * dvec)[None, :]
    kept = sorted(set(range(n)) - set(seed.outliers_Z0))
    m_eff = min(m, len(kept))
    for extra in itertools.combinations(kept, m_eff):
        served = np.array(sorted(set(kept) - set(extra)), dtype=np.int64)
        if served.size == 0:
            return True, {"extra_discards": list(extra), "anchors": []}
        k_eff = min(k, served.size)
        for anchor_choice in itertools.combinations(map(int, served), k_eff):
            if relaxed[np.array(anchor_choice)][:, served].any(axis=0).all():
                return True, {
                    "extra_discards": sorted(map(int, extra)),
                    "anchors": sorted(anchor_choice),
                }
    return False, None
