"""Constrained local search for fair k-means with outlier discards.

The solver keeps a set of k centers and a growing set of discarded outliers.
Each outer iteration runs three stages: a sampled single-swap improvement
pass (constrained_ls_pp), a tentative discard of the m currently-farthest
points, and a full or sampled sweep over (incoming u, outgoing v) center
swaps that also re-discards m farthest points.  The best candidate is
accepted only when it beats the post-stage-1 cost by a factor of
(1 - eps/k), and every accepted move must keep at least one center inside
every hard anchor zone.

All squared distances flow through one cached (n, k) matrix; swap candidates
are evaluated in vectorized batches whose top-m discard selection matches
the ``farthest_m`` primitive exactly, ties included.
"""

from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass

import numpy as np

from .dataset import PointSet, RandomSource
from .errors import ConfigError, InvariantViolation
from .geometry import FairRadii, aspect_ratio, sq_dists
from .seeding import base_cent

# Stage 3 evaluates every candidate u while the active set is at most this
# large; above it the "auto" mode switches to uniform sampling of u.
FULL_STAGE3_LIMIT = 5000
DEFAULT_STAGE3_BUDGET = 512


@dataclass(frozen=True)
class ZoneBall:
    """Closed ball around a hard anchor; accepted center sets must hit it.

    ``radius`` is already relaxed (gamma + 2 times the anchor's own fair
    radius) and ``members`` lists every point id inside it.
    """

    anchor: int
    radius: float
    members: frozenset[int]


@dataclass(frozen=True)
class ClusteringState:
    """A solver state: centers, discarded outliers, assignments, cost.

    assignment maps every served point (fair universe minus outliers) to its
    nearest center, ties to the smaller center id.  cached_cost is the sum of
    squared assigned distances.  hard_zones and seed_excluded carry enough
    context to re-audit the state on its own.
    """

    centers_S: tuple[int, ...]
    outliers_Z: frozenset[int]
    assignment: dict[int, int]
    cached_cost: float
    hard_zones: tuple[ZoneBall, ...] = ()
    seed_excluded: frozenset[int] = frozenset()


@dataclass(frozen=True)
class IterationRecord:
    """One outer iteration: costs after each stage, outlier count, move, time."""

    stage_costs: tuple[float, float, float]
    z_size: int
    accepted: str
    ms: float

    def to_dict(self, include_timings: bool = False) -> dict:
        d = {
            "stage_costs": list(self.stage_costs),
            "z_size": self.z_size,
            "accepted": self.accepted,
        }
        if include_timings:
            d["ms"] = self.ms
        return d


@dataclass(frozen=True)
class LocalOptReport:
    """Outcome of the terminal-state optimality audit."""

    passed: bool
    condition1_ok: bool
    condition2_ok: bool
    pairs_checked: int
    witness: dict | None = None


@dataclass(frozen=True)
class SolveReport:
    """Everything a finished solve produced, serializable to canonical JSON."""

    n: int
    k: int
    m: int
    gamma: float
    eps: float
    seed: int
    stage3_mode: str
    cost: float
    rho: float
    centers: tuple[int, ...]
    outliers: tuple[int, ...]
    seed_outliers: tuple[int, ...]
    hard_anchors: tuple[int, ...]
    fallback_count: int
    cap_hit: bool
    iterations: tuple[IterationRecord, ...]
    state: ClusteringState

    def to_json_dict(self, include_timings: bool = False) -> dict:
        return {
            "k": self.k,
            "m": self.m,
            "gamma": self.gamma,
            "eps": self.eps,
            "seed": self.seed,
            "cost": self.cost,
            "rho": self.rho,
            "outliers": list(self.outliers),
            "centers": list(self.centers),
            "iterations": [r.to_dict(include_timings) for r in self.iterations],
            "fallback_count": self.fallback_count,
            "cap_hit": self.cap_hit,
            "diagnostics": {
                "n": self.n,
                "stage3_mode": self.stage3_mode,
                "seed_outliers": list(self.seed_outliers),
                "hard_anchors": list(self.hard_anchors),
            },
        }

    def to_json(self, include_timings: bool = False) -> str:
        return json.dumps(self.to_json_dict(include_timings), sort_keys=True, indent=2) + "\n"


def cost(ps: PointSet, centers, excluded=(), points=None) -> float:
    """Sum of squared distances from each served point to its nearest center.

    Served points are ``points`` minus ``excluded`` (all ids when points is
    None).  Raises ValueError on an empty center set.
    """
    c = sorted(int(s) for s in centers)
    if not c:
        raise ValueError("cost needs a nonempty center set")
    ids = np.arange(ps.n) if points is None else np.asarray(sorted(points), dtype=np.int64)
    excl = set(int(i) for i in excluded)
    if excl:
        ids = ids[~np.isin(ids, np.fromiter(excl, dtype=np.int64, count=len(excl)))]
    if ids.size == 0:
        return 0.0
    d2 = sq_dists(ps.points[ids], ps.points[np.asarray(c)]).min(axis=1)
    return float(d2.sum())


def _top_m_ids(values: np.ndarray, cand_ids: np.ndarray, m: int) -> np.ndarray:
    """Ids of the m largest values, ties broken toward the smaller id.

    cand_ids must be ascending; values is indexed by id.  Returns exactly
    min(m, len(cand_ids)) ids.
    """
    if m <= 0 or cand_ids.size == 0:
        return cand_ids[:0]
    if m >= cand_ids.size:
        return cand_ids
    vals = values[cand_ids]
    kth = np.partition(vals, cand_ids.size - m)[cand_ids.size - m]
    above = cand_ids[vals > kth]
    ties = cand_ids[vals == kth][: m - above.size]
    return np.concatenate([above, ties])


def farthest_m(ps: PointSet, centers, base_excluded, m: int, x_fair=None) -> frozenset[int]:
    """The m points, outside base_excluded, farthest from the center set.

    Candidates are x_fair minus base_excluded (x_fair defaults to all ids).
    Distance is squared distance to the nearest center; ties break toward
    the smaller id.

    Raises:
        ValueError: fewer than m candidates remain.
    """
    if m < 0:
        raise ValueError(f"m must be >= 0, got {m}")
    universe = set(range(ps.n)) if x_fair is None else set(int(i) for i in x_fair)
    cand = np.asarray(sorted(universe - set(int(i) for i in base_excluded)), dtype=np.int64)
    if cand.size < m:
        raise ValueError(f"need at least m={m} candidates, have {cand.size}")
    if m == 0:
        return frozenset()
    c = np.asarray(sorted(int(s) for s in centers), dtype=np.int64)
    d1 = np.full(ps.n, -np.inf)
    d1[cand] = sq_dists(ps.points[cand], ps.points[c]).min(axis=1)
    return frozenset(int(i) for i in _top_m_ids(d1, cand, m))


def _zone_matrix(n: int, zones) -> np.ndarray:
    """(n_zones, n) bool matrix of ball membership; shape (0, n) when no zones."""
    mat = np.zeros((len(zones), n), dtype=bool)
    for row, z in enumerate(zones):
        if z.members:
            mat[row, np.fromiter(z.members, dtype=np.int64, count=len(z.members))] = True
    return mat


class _Engine:
    """Cached-distance workhorse shared by the solver stages.

    Keeps S (sorted center ids) and D, the (n, |S|) matrix of squared
    distances from every point to every center, plus zone membership for
    legality tests.  Columns are rebuilt from raw coordinates on swaps, so
    no float drift accumulates.
    """

    def __init__(self, ps: PointSet, zones, centers):
        self.pts = ps.points
        self.n = ps.n
        self.in_ball = _zone_matrix(ps.n, zones)
        self.S = np.asarray(sorted(int(c) for c in centers), dtype=np.int64)
        self._rebuild()

    def _rebuild(self) -> None:
        self.D = sq_dists(self.pts, self.pts[self.S])
        self._stats = None

    def swap(self, u: int, v: int) -> None:
        """Replace center v with point u, updating one column of D."""
        keep = self.S != v
        diff = self.pts - self.pts[u]
        col = np.einsum("ij,ij->i", diff, diff)
        pos = int(np.searchsorted(self.S[keep], u))
        self.S = np.insert(self.S[keep], pos, u)
        self.D = np.insert(self.D[:, keep], pos, col, axis=1)
        self._stats = None

    def set_centers(self, centers) -> None:
        self.S = np.asarray(sorted(int(c) for c in centers), dtype=np.int64)
        self._rebuild()

    def stats(self):
        """(d1, d2, nearest_col) per point; d2 is +inf when there is one center."""
        if self._stats is None:
            D = self.D
            if D.shape[1] == 1:
                d1 = D[:, 0].copy()
                d2 = np.full(self.n, np.inf)
                nearest = np.zeros(self.n, dtype=np.int64)
            else:
                nearest = np.argmin(D, axis=1)
                d1 = D[np.arange(self.n), nearest]
                d2 = np.partition(D, 1, axis=1)[:, 1]
            self._stats = (d1, d2, nearest)
        return self._stats

    def zone_ok(self, center_ids=None) -> bool:
        if self.in_ball.shape[0] == 0:
            return True
        s = self.S if center_ids is None else np.asarray(sorted(center_ids), dtype=np.int64)
        return bool(self.in_ball[:, s].any(axis=1).all())

    def legal_removals(self, new_center: int) -> np.ndarray:
        """Bool per column: removing that center while adding new_center keeps every zone hit."""
        k = self.S.size
        if self.in_ball.shape[0] == 0:
            return np.ones(k, dtype=bool)
        ball_s = self.in_ball[:, self.S]
        cnt = ball_s.sum(axis=1)
        after = cnt[:, None] - ball_s + self.in_ball[:, new_center][:, None]
        return (after >= 1).all(axis=0)


def _served_cost(d1: np.ndarray, served_mask: np.ndarray) -> float:
    return float(d1[served_mask].sum())


def _discard_sum(values: np.ndarray, selected: np.ndarray, z_mask: np.ndarray) -> float:
    """Sum of values over selected ids not already discarded."""
    if selected.size == 0:
        return 0.0
    live = selected[~z_mask[selected]]
    return float(values[live].sum())


def constrained_ls_pp(ps: PointSet, points, zones, centers, eps: float, rng: RandomSource, max_iters: int):
    """Zone-respecting sampled swap improvement (one candidate per round).

    Each round draws a candidate p with probability proportional to its
    squared distance to the current centers, finds the legal outgoing center
    whose replacement by p lowers the cost the most, and swaps only on a
    strict improvement.  Rounds continue while the previous round improved
    the cost by a factor greater than (1 - eps/k), up to max_iters.

    Args:
        ps: points.
        points: ids the cost is measured over (the non-discarded set).
        zones: hard ZoneBall list; every accepted center set hits all of them.
        centers: initial center ids, already satisfying the zones.
        eps: improvement granularity, > 0.
        rng: random source for the distance-weighted draws.
        max_iters: hard cap on rounds.

    Returns:
        Sorted tuple of final center ids.  With zero total sampling mass
        (every active point sits on a center) the input set comes back
        unchanged.
    """
    if eps <= 0:
        raise ValueError(f"eps must be > 0, got {eps}")
    eng = _Engine(ps, zones, centers)
    if not eng.zone_ok():
        raise InvariantViolation("initial centers violate a hard zone")
    mask = np.zeros(ps.n, dtype=bool)
    mask[np.asarray(sorted(int(i) for i in points), dtype=np.int64)] = True
    _cls_pp_rounds(eng, mask, eps, rng, max_iters)
    return tuple(int(c) for c in eng.S)


def _cls_pp_rounds(eng: _Engine, active_mask: np.ndarray, eps: float, rng: RandomSource, max_iters: int) -> None:
    k = eng.S.size
    factor = 1.0 - eps / k
    active = np.flatnonzero(active_mask)
    gen = rng.generator
    alpha = math.inf
    rounds = 0
    while rounds < max_iters:
        d1, d2, nearest = eng.stats()
        cur = _served_cost(d1, active_mask)
        if not factor * alpha > cur:
            break
        alpha = cur
        rounds += 1
        weights = d1[active]
        total = weights.sum()
        if total <= 0.0:
            break
        p = int(gen.choice(active, p=weights / total))
        diff = eng.pts - eng.pts[p]
        dp = np.einsum("ij,ij->i", diff, diff)
        legal = eng.legal_removals(p)
        best_cost = cur
        best_col = -1
        for j in range(k):
            if not legal[j]:
                continue
            alt = np.where(nearest == j, d2, d1)
            cand = float(np.minimum(alt, dp)[active_mask].sum())
            if cand < best_cost:
                best_cost = cand
                best_col = j
        if best_col >= 0:
            eng.swap(p, int(eng.S[best_col]))
            if not eng.zone_ok():
                raise InvariantViolation("sampled swap violated a hard zone")


def _parse_stage3_mode(mode, n_active: int):
    """Normalize a stage3 mode spec into (kind, budget, label)."""
    if mode in (None, "auto"):
        if n_active <= FULL_STAGE3_LIMIT:
            return "full", 0, "full"
        return "sampled", DEFAULT_STAGE3_BUDGET, f"sampled:{DEFAULT_STAGE3_BUDGET}"
    if isinstance(mode, tuple):
        mode = f"{mode[0]}:{mode[1]}"
    text = str(mode)
    if text == "full":
        return "full", 0, "full"
    if text == "sampled":
        return "sampled", DEFAULT_STAGE3_BUDGET, f"sampled:{DEFAULT_STAGE3_BUDGET}"
    if text.startswith("sampled:"):
        try:
            budget = int(text.split(":", 1)[1])
        except ValueError:
            raise ConfigError(f"bad stage3 budget in {text!r}") from None
        if budget < 1:
            raise ConfigError(f"stage3 budget must be >= 1, got {budget}")
        return "sampled", budget, f"sampled:{budget}"
    raise ConfigError(f"stage3_mode must be auto, full, or sampled[:budget], got {mode!r}")


def _swap_ests(M, sc, cand_ids, S, z_mask, m, legal_cols):
    """Estimated post-swap cost per outgoing column, +inf where illegal.

    M[j] holds, for every point, the squared distance to the swapped center
    set S minus column j plus the incoming point.  cand_ids are the discard
    candidates shared by all columns; the outgoing center S[j] additionally
    rejoins the candidate pool of its own column.  Top-m selection matches
    farthest_m: largest value first, ties to the smaller id.
    """
    k = M.shape[0]
    ests = np.full(k, np.inf)
    if m == 0:
        ests[legal_cols] = sc[legal_cols]
        return ests
    n_cand = cand_ids.size
    for j in range(k):
        if not legal_cols[j]:
            continue
        v = int(S[j])
        row = M[j]
        if n_cand < m:
            # The pool plus v is at most m points: discard everything.
            red = _discard_sum(row, cand_ids, z_mask) + row[v]
        else:
            vals = row[cand_ids]
            kth = np.partition(vals, n_cand - m)[n_cand - m]
            above = cand_ids[vals > kth]
            ties = cand_ids[vals == kth][: m - above.size]
            sel = np.concatenate([above, ties])
            last_tie = int(ties[-1])
            red = _discard_sum(row, sel, z_mask)
            vv = row[v]
            if vv > kth or (vv == kth and v < last_tie):
                # v enters the top-m and the weakest member drops out.
                red += vv
                if not z_mask[last_tie]:
                    red -= kth
        ests[j] = sc[j] - red
    return ests


def _stage3_scan(eng: _Engine, fair_mask, z_mask, m, cand_u, best_est):
    """Sweep swap candidates (u in, v out); return (u, v, est) of the best.

    Candidates are evaluated against ``best_est`` with strict improvement,
    scanning u ascending then outgoing center ascending, so the first best
    wins and the scan is deterministic.
    """
    k = eng.S.size
    n = eng.n
    d1, d2, nearest = eng.stats()
    served = fair_mask & ~z_mask
    in_s = np.zeros(n, dtype=bool)
    in_s[eng.S] = True
    cols = np.arange(k)
    alt = np.where(nearest[None, :] == cols[:, None], d2[None, :], d1[None, :])
    have_zones = eng.in_ball.shape[0] > 0
    if have_zones:
        ball_s = eng.in_ball[:, eng.S]
        cnt = ball_s.sum(axis=1)
    best = (None, None, best_est)
    base_cand = fair_mask & ~in_s
    batch = max(1, min(128, 4_000_000 // max(1, k * n)))
    for lo in range(0, cand_u.size, batch):
        us = cand_u[lo : lo + batch]
        du2 = sq_dists(eng.pts[us], eng.pts)
        if have_zones:
            after = cnt[:, None, None] - ball_s[:, :, None] + eng.in_ball[:, us][:, None, :]
            legal = (after >= 1).all(axis=0)  # (k, B)
        else:
            legal = np.ones((k, us.size), dtype=bool)
        for b in range(us.size):
            if not legal[:, b].any():
                continue
            u = int(us[b])
            M = np.minimum(du2[b][None, :], alt)  # (k, n)
            sc = M[:, served].sum(axis=1)
            cmask = base_cand.copy()
            cmask[u] = False
            ests = _swap_ests(M, sc, np.flatnonzero(cmask), eng.S, z_mask, m, legal[:, b])
            j = int(np.argmin(ests))
            if ests[j] < best[2]:
                best = (u, int(eng.S[j]), float(ests[j]))
    return best


def _non_center_fair(n: int, base_mask: np.ndarray, center_ids: np.ndarray) -> np.ndarray:
    mask = base_mask.copy()
    mask[center_ids] = False
    return np.flatnonzero(mask)


def _ratio_max(d: np.ndarray, delta: np.ndarray) -> float:
    with np.errstate(divide="ignore", invalid="ignore"):
        r = np.where(delta > 0, d / delta, np.where(d > 0, np.inf, 0.0))
    return float(r.max()) if r.size else 0.0


def lsfo(
    ps: PointSet,
    delta: FairRadii,
    k: int,
    m: int,
    gamma: float,
    eps: float,
    rng: RandomSource,
    stage3_mode="auto",
    max_outer: int | None = None,
    discard_policy: str = "largest_delta",
) -> SolveReport:
    """Full solve: seed, then three-stage local search until no move helps.

    Seeding produces anchors S0 and fairness outliers Z0.  The center set
    starts as S0, padded with uniform random non-discarded points up to k
    (or truncated to the first k anchors when seeding returned more; only
    those first k anchors carry hard zones).  Each outer iteration runs the
    sampled swap stage over non-discarded points, tentatively discards the m
    farthest non-center points, and sweeps (u, v) center swaps that each
    re-discard m farthest points; the best candidate is accepted only on a
    factor-(1 - eps/k) improvement over the post-stage-1 cost.  The loop
    stops at the first iteration that accepts nothing, or at the cap.

    Discard selections always range over the whole fair universe, so they
    may overlap points already out; only the fresh members count toward the
    improvement test, and an accepted move unions them into the outlier set
    (a swapped-in center leaves it).  The set therefore saturates near the
    m farthest points of wherever the centers settle, usually below 2m in
    total, though each accepted iteration may add up to m fresh points.

    Args:
        ps: points.
        delta: fair radii for (ps, k).
        k: center budget, >= 1.
        m: per-move outlier budget, 0 <= m <= n - k.
        gamma: fairness relaxation, >= 1.
        eps: improvement granularity, > 0.
        rng: seeded randomness for padding, sampling, and stage-3 subsets.
        stage3_mode: "auto" (full up to 5000 active points, else sampled:512),
            "full", or "sampled[:budget]".
        max_outer: iteration cap; defaults to
            ceil((k / eps) * ln(n * spread^2)) with spread the aspect ratio.
        discard_policy: forwarded to seeding.

    Returns:
        SolveReport with the final state, per-iteration trace, and fairness
        ratio rho = max over served points of distance / fair radius.
    """
    n = ps.n
    if eps <= 0:
        raise ValueError(f"eps must be > 0, got {eps}")
    seed_res = base_cent(ps, delta, k, m, gamma, discard_policy)
    dvec = delta.delta
    pts = ps.points

    hard_anchors = tuple(seed_res.anchors_S0[:k])
    zones = []
    for a in hard_anchors:
        diff = pts - pts[a]
        d_a = np.sqrt(np.einsum("ij,ij->i", diff, diff))
        radius = (gamma + 2.0) * dvec[a]
        zones.append(ZoneBall(a, float(radius), frozenset(map(int, np.flatnonzero(d_a <= radius)))))
    zones = tuple(zones)

    z0 = seed_res.outliers_Z0
    fair_mask = np.ones(n, dtype=bool)
    if z0:
        fair_mask[np.fromiter(z0, dtype=np.int64, count=len(z0))] = False
    z_mask = (~fair_mask).copy()
    # At most this many non-center discard candidates ever exist.
    out_cap = n - len(z0) - k

    s = list(hard_anchors)
    if len(s) < k:
        cand = np.asarray(sorted(set(range(n)) - z0 - set(s)), dtype=np.int64)
        need = k - len(s)
        if cand.size < need:
            raise ValueError(f"cannot pad to k={k} centers: only {cand.size} free points")
        s.extend(int(i) for i in rng.generator.choice(cand, size=need, replace=False))
    eng = _Engine(ps, zones, s)
    if not eng.zone_ok():
        raise InvariantViolation("seeded centers violate a hard zone")

    if max_outer is None:
        try:
            spread = aspect_ratio(ps).delta_max_over_min
            cap = max(1, math.ceil((k / eps) * math.log(n * spread * spread)))
        except ValueError:
            cap = max(1, math.ceil((k / eps) * math.log(max(n, 2))))
    else:
        cap = max_outer

    kind, budget, mode_label = _parse_stage3_mode(stage3_mode, int(fair_mask.sum()))
    factor = 1.0 - eps / k
    gen = rng.generator
    records: list[IterationRecord] = []
    alpha = math.inf
    cap_hit = False
    d1, _, _ = eng.stats()
    current = _served_cost(d1, fair_mask & ~z_mask)
    while True:
        if not factor * alpha > current:
            break
        if len(records) >= cap:
            cap_hit = True
            break
        alpha = current
        t0 = time.perf_counter()

        # Stage 1: sampled swaps over the non-discarded points.
        _cls_pp_rounds(eng, fair_mask & ~z_mask, eps, rng, cap)
        d1, _, _ = eng.stats()
        served = fair_mask & ~z_mask
        c1 = _served_cost(d1, served)

        # Stage 2: tentative discard of the m farthest non-center points of
        # the fair universe.  Candidates include the current outliers, so
        # only the fresh members of the selection reduce the cost; repeating
        # the same discard is never an improvement.
        cand2 = _non_center_fair(n, fair_mask, eng.S)
        out2 = _top_m_ids(d1, cand2, min(m, cand2.size))
        cost2 = c1 - _discard_sum(d1, out2, z_mask)
        stage2_ok = factor * c1 > cost2
        best_swap = None
        best_cost = cost2 if stage2_ok else c1
        post2 = best_cost

        # Stage 3: swap sweep with per-candidate re-discard.  Incoming
        # candidates span the whole fair universe, so a previously discarded
        # point may return as a center (it leaves Z on acceptance).
        cand_u = _non_center_fair(n, fair_mask, eng.S)
        if kind == "sampled" and cand_u.size > budget:
            pick = gen.choice(cand_u.size, size=budget, replace=False)
            cand_u = np.sort(cand_u[pick])
        u, v, _est = _stage3_scan(eng, fair_mask, z_mask, m, cand_u, best_cost)
        if u is not None:
            s_new = sorted(set(map(int, eng.S)) - {v} | {u})
            out3 = farthest_m(ps, s_new, s_new, min(m, out_cap), np.flatnonzero(fair_mask))
            z_new = z_mask.copy()
            z_new[u] = False
            if out3:
                z_new[np.fromiter(out3, dtype=np.int64, count=len(out3))] = True
            exact = cost(ps, s_new, np.flatnonzero(z_new), np.flatnonzero(fair_mask))
            if exact < best_cost:
                best_swap = (s_new, z_new)
                best_cost = exact

        accepted = "none"
        post3 = c1
        if best_cost < factor * c1:
            if best_swap is not None:
                eng.set_centers(best_swap[0])
                z_mask = best_swap[1]
                accepted = f"swap(in={u},out={v})"
            elif stage2_ok:
                z_mask = z_mask.copy()
                if out2.size:
                    z_mask[out2] = True
                accepted = "discard"
            if accepted != "none":
                if not eng.zone_ok():
                    raise InvariantViolation("accepted move left a hard zone empty")
                d1, _, _ = eng.stats()
                current = _served_cost(d1, fair_mask & ~z_mask)
                post3 = current
        if accepted == "none":
            current = c1
        ms = (time.perf_counter() - t0) * 1000.0
        records.append(IterationRecord((c1, post2, post3), int(z_mask.sum()), accepted, ms))

    d1, _, nearest = eng.stats()
    served_all = ~z_mask
    rho = _ratio_max(np.sqrt(d1[served_all]), dvec[served_all])
    final_cost = _served_cost(d1, fair_mask & ~z_mask)
    served_ids = np.flatnonzero(fair_mask & ~z_mask)
    assignment = {int(p): int(eng.S[nearest[p]]) for p in served_ids}
    state = ClusteringState(
        centers_S=tuple(int(c) for c in eng.S),
        outliers_Z=frozenset(map(int, np.flatnonzero(z_mask))),
        assignment=assignment,
        cached_cost=final_cost,
        hard_zones=zones,
        seed_excluded=z0,
    )
    return SolveReport(
        n=n,
        k=k,
        m=m,
        gamma=float(gamma),
        eps=float(eps),
        seed=rng.seed,
        stage3_mode=mode_label,
        cost=final_cost,
        rho=rho,
        centers=state.centers_S,
        outliers=tuple(sorted(state.outliers_Z)),
        seed_outliers=tuple(sorted(z0)),
        hard_anchors=hard_anchors,
        fallback_count=seed_res.fallback_count,
        cap_hit=cap_hit,
        iterations=tuple(records),
        state=state,
    )


def local_optimality_check(
    ps: PointSet,
    delta: FairRadii,
    state: ClusteringState,
    m: int,
    eps: float,
    k: int,
    mode="full",
    rng: RandomSource | None = None,
    rel_slack: float = 1e-9,
) -> LocalOptReport:
    """Audit a terminal state against both no-improving-move conditions.

    Condition 1: discarding the m farthest points cannot cut the cost by more
    than a factor of eps/k.  Condition 2: no zone-legal center swap, followed
    by a fresh m-farthest discard, cuts the cost below (1 - eps/k) of the
    current cost.  Both inequalities get a relative slack of rel_slack.

    mode is "full" (every swap pair) or ("sampled", n_pairs), which draws
    that many (u, column) pairs from rng and skips the zone-illegal ones.
    Returns a LocalOptReport carrying the first violating move if any.
    """
    n = ps.n
    fair_mask = np.ones(n, dtype=bool)
    if state.seed_excluded:
        fair_mask[np.fromiter(state.seed_excluded, dtype=np.int64, count=len(state.seed_excluded))] = False
    z_mask = np.zeros(n, dtype=bool)
    if state.outliers_Z:
        z_mask[np.fromiter(state.outliers_Z, dtype=np.int64, count=len(state.outliers_Z))] = True
    eng = _Engine(ps, state.hard_zones, state.centers_S)
    d1, d2, nearest = eng.stats()
    served = fair_mask & ~z_mask
    c = _served_cost(d1, served)
    slack = rel_slack * max(c, 1.0)
    factor = 1.0 - eps / k
    threshold = factor * c - slack

    cand2 = _non_center_fair(n, fair_mask, eng.S)
    out2 = _top_m_ids(d1, cand2, min(m, cand2.size))
    cost2 = c - _discard_sum(d1, out2, z_mask)
    cond1 = (cost2 - c) >= -(eps / k) * c - slack

    def _eval_pair(u: int, j: int) -> float:
        du = eng.pts - eng.pts[u]
        du2 = np.einsum("ij,ij->i", du, du)
        alt = np.where(nearest == j, d2, d1)
        row = np.minimum(du2, alt)
        sc = float(row[served].sum())
        if m == 0:
            return sc
        cmask = fair_mask.copy()
        cmask[eng.S] = False
        cmask[u] = False
        cmask[int(eng.S[j])] = True
        cand = np.flatnonzero(cmask)
        sel = _top_m_ids(row, cand, min(m, cand.size))
        return sc - _discard_sum(row, sel, z_mask)

    have_zones = eng.in_ball.shape[0] > 0
    if have_zones:
        ball_s = eng.in_ball[:, eng.S]
        cnt = ball_s.sum(axis=1)

    def _legal(u: int) -> np.ndarray:
        if not have_zones:
            return np.ones(eng.S.size, dtype=bool)
        after = cnt[:, None] - ball_s + eng.in_ball[:, u][:, None]
        return (after >= 1).all(axis=0)

    cand_u = _non_center_fair(n, fair_mask, eng.S)
    if mode == "full":
        pair_iter = ((int(u), j) for u in cand_u for j in range(eng.S.size))
    else:
        kind, n_pairs = mode
        if kind != "sampled":
            raise ConfigError(f"mode must be 'full' or ('sampled', n), got {mode!r}")
        if rng is None:
            raise ConfigError("sampled mode needs an rng")
        gen = rng.generator
        sampled = []
        if cand_u.size:
            for _ in range(int(n_pairs)):
                sampled.append((int(cand_u[gen.integers(cand_u.size)]), int(gen.integers(eng.S.size))))
        pair_iter = iter(sampled)

    cond2 = True
    witness = None
    checked = 0
    legal_cache: dict[int, np.ndarray] = {}
    for u, j in pair_iter:
        if u not in legal_cache:
            legal_cache[u] = _legal(u)
        if not legal_cache[u][j]:
            continue
        checked += 1
        c3 = _eval_pair(u, j)
        if c3 < threshold:
            cond2 = False
            witness = {"u": u, "v": int(eng.S[j]), "cost": c3, "threshold": threshold}
            break

    if not cond1 and witness is None:
        witness = {"discard_cost": cost2, "cost": c}
    return LocalOptReport(
        passed=bool(cond1 and cond2),
        condition1_ok=bool(cond1),
        condition2_ok=bool(cond2),
        pairs_checked=checked,
        witness=witness,
    )
