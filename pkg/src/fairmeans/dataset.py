"""Dataset loading, sampling, and synthetic outlier injection.

Points live in a fixed-dimension Euclidean space and are identified by their
0-based row index.  All randomness flows through ``RandomSource`` so that any
pipeline is reproducible from a single integer seed.
"""

from __future__ import annotations

import csv
import hashlib
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DataError

# Column name written next to feature columns to mark synthetic outliers.
INJECTED_FLAG_COLUMN = "injected_outlier"

_SEED_MASK = (1 << 64) - 1


class RandomSource:
    """A seeded random stream with derivable, independent child streams.

    Wraps ``numpy.random.Generator`` (PCG64).  ``child(index)`` derives a new
    source whose seed is a pure function of ``(seed, index)``, so sweep cells
    and repeated runs stay reproducible regardless of execution order.
    """

    def __init__(self, seed: int):
        self.seed = int(seed) & _SEED_MASK
        self.generator = np.random.default_rng(self.seed)

    def child(self, index: int) -> "RandomSource":
        """Return an independent source derived from (seed, index)."""
        ss = np.random.SeedSequence((self.seed, int(index) & _SEED_MASK))
        return RandomSource(int(ss.generate_state(1, np.uint64)[0]))

    def __repr__(self) -> str:
        return f"RandomSource(seed={self.seed})"


@dataclass(frozen=True)
class PointSet:
    """An immutable set of points with stable integer ids 0..n-1.

    Attributes:
        points: (n, d) float64 matrix, one row per point.  The array is
            marked read-only; concurrent readers never need locks.
        injected_outliers: ids of rows that were synthetically perturbed.
        column_names: one name per feature column, kept through CSV round
            trips.  Defaults to c0..c{d-1}.
    """

    points: np.ndarray
    injected_outliers: frozenset[int] = frozenset()
    column_names: tuple[str, ...] = ()

    def __post_init__(self):
        pts = np.array(self.points, dtype=np.float64, copy=True, order="C")
        if pts.ndim != 2 or pts.shape[0] < 1 or pts.shape[1] < 1:
            raise DataError(f"points must be a non-empty 2-d matrix, got shape {pts.shape}")
        if not np.all(np.isfinite(pts)):
            raise DataError("points must be finite (no NaN or inf)")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)
        flags = frozenset(int(i) for i in self.injected_outliers)
        if flags and (min(flags) < 0 or max(flags) >= pts.shape[0]):
            raise DataError("injected_outliers contains an id outside 0..n-1")
        object.__setattr__(self, "injected_outliers", flags)
        names = tuple(self.column_names) or tuple(f"c{j}" for j in range(pts.shape[1]))
        if len(names) != pts.shape[1]:
            raise DataError(f"expected {pts.shape[1]} column names, got {len(names)}")
        object.__setattr__(self, "column_names", names)

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    @property
    def ids(self) -> np.ndarray:
        return np.arange(self.n)

    def content_hash(self) -> str:
        """Hex digest of the numeric matrix; keys caches of derived values."""
        h = hashlib.sha256()
        h.update(str(self.points.shape).encode())
        h.update(self.points.tobytes(order="C"))
        return h.hexdigest()


def _parse_cell(raw: str, line_no: int, col_name: str) -> float:
    try:
        return float(raw)
    except ValueError:
        raise DataError(
            f"line {line_no}, column {col_name!r}: value {raw!r} is not numeric"
        ) from None


def load_csv(path: str, numeric_columns=None) -> PointSet:
    """Load a CSV file into a PointSet.

    The first line is treated as a header unless every cell on it parses as a
    float.  ``numeric_columns`` selects feature columns by name or 0-based
    index; when omitted, every column whose cells all parse as floats is kept
    (a column literally named ``injected_outlier`` is read back as the
    outlier-flag marker instead of a feature).

    Raises:
        DataError: empty file, ragged rows, or a non-numeric cell in a
            selected column (the message names the line and column).
    """
    with open(path, newline="") as fh:
        rows = [row for row in csv.reader(fh) if row and any(c.strip() for c in row)]
    if not rows:
        raise DataError(f"{path}: file contains no data")

    def _is_float(cell: str) -> bool:
        try:
            float(cell)
            return True
        except ValueError:
            return False

    has_header = not all(_is_float(c) for c in rows[0])
    if has_header:
        names = [c.strip() for c in rows[0]]
        data_rows = rows[1:]
        first_line = 2
    else:
        names = [f"c{j}" for j in range(len(rows[0]))]
        data_rows = rows
        first_line = 1
    if not data_rows:
        raise DataError(f"{path}: header only, no data rows")
    width = len(names)
    for off, row in enumerate(data_rows):
        if len(row) != width:
            raise DataError(
                f"{path}: line {first_line + off} has {len(row)} cells, expected {width}"
            )

    flag_idx = None
    if numeric_columns is None:
        keep = []
        for j, name in enumerate(names):
            if has_header and name == INJECTED_FLAG_COLUMN:
                flag_idx = j
                continue
            if all(_is_float(row[j]) for row in data_rows):
                keep.append(j)
        if not keep:
            raise DataError(f"{path}: no fully numeric columns found")
    else:
        keep = []
        for sel in numeric_columns:
            if isinstance(sel, str):
                if sel not in names:
                    raise ConfigError(f"unknown column {sel!r}; file has {names}")
                keep.append(names.index(sel))
            else:
                j = int(sel)
                if not 0 <= j < width:
                    raise ConfigError(f"column index {j} out of range 0..{width - 1}")
                keep.append(j)
        if has_header and INJECTED_FLAG_COLUMN in names:
            fj = names.index(INJECTED_FLAG_COLUMN)
            if fj not in keep:
                flag_idx = fj

    mat = np.empty((len(data_rows), len(keep)), dtype=np.float64)
    for i, row in enumerate(data_rows):
        for jj, j in enumerate(keep):
            mat[i, jj] = _parse_cell(row[j], first_line + i, names[j])
    flags: set[int] = set()
    if flag_idx is not None:
        for i, row in enumerate(data_rows):
            if _parse_cell(row[flag_idx], first_line + i, INJECTED_FLAG_COLUMN) != 0.0:
                flags.add(i)
    return PointSet(mat, frozenset(flags), tuple(names[j] for j in keep))


def write_csv(ps: PointSet, path: str) -> None:
    """Write a PointSet to CSV with a header and an ``injected_outlier`` column.

    Floats are written with ``repr`` so ``load_csv(write_csv(ps))`` reproduces
    the matrix (and the flag set) bit-exactly.
    """
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(list(ps.column_names) + [INJECTED_FLAG_COLUMN])
        flagged = ps.injected_outliers
        for i in range(ps.n):
            row = [repr(float(v)) for v in ps.points[i]]
            row.append("1" if i in flagged else "0")
            writer.writerow(row)


def subsample(ps: PointSet, n_target: int, rng: RandomSource) -> PointSet:
    """Draw ``n_target`` distinct rows uniformly; ids are renumbered 0..n_target-1.

    Selected original rows keep their relative order, so the map from new id
    to original id is the sorted selection.  Outlier flags follow their rows.
    """
    if not 1 <= n_target <= ps.n:
        raise ConfigError(f"n_target must be in 1..{ps.n}, got {n_target}")
    chosen = np.sort(rng.generator.choice(ps.n, size=n_target, replace=False))
    old_flags = ps.injected_outliers
    flags = frozenset(new for new, old in enumerate(chosen) if int(old) in old_flags)
    return PointSet(ps.points[chosen], flags, ps.column_names)


def inject_outliers(ps: PointSet, fraction: float, rng: RandomSource) -> PointSet:
    """Perturb a random ``round(fraction * n)`` rows into synthetic outliers.

    Each selected row gets, per feature, an independent draw from
    Uniform(0, col_max) added, where col_max is that column's maximum over all
    rows before injection.  Columns with col_max <= 0 are left unchanged.

    Raises:
        ConfigError: fraction outside (0, 1] or fraction * n < 1.
    """
    if not 0.0 < fraction <= 1.0:
        raise ConfigError(f"fraction must be in (0, 1], got {fraction}")
    if fraction * ps.n < 1.0:
        raise ConfigError(f"fraction * n = {fraction * ps.n:.3f} < 1; nothing to inject")
    count = round(fraction * ps.n)
    gen = rng.generator
    chosen = np.sort(gen.choice(ps.n, size=count, replace=False))
    scale = np.maximum(ps.points.max(axis=0), 0.0)
    noise = gen.uniform(0.0, 1.0, size=(count, ps.dim)) * scale
    pts = np.array(ps.points, copy=True)
    pts[chosen] += noise
    flags = frozenset(ps.injected_outliers | {int(i) for i in chosen})
    return PointSet(pts, flags, ps.column_names)


def minmax_scale(ps: PointSet) -> PointSet:
    """Rescale every column to [0, 1]; constant columns map to 0."""
    lo = ps.points.min(axis=0)
    span = ps.points.max(axis=0) - lo
    span = np.where(span > 0, span, 1.0)
    return PointSet((ps.points - lo) / span, ps.injected_outliers, ps.column_names)


def make_census_like(n: int, rng: RandomSource, n_clusters: int = 12) -> PointSet:
    """Generate a clustered numeric table shaped like census survey data.

    Six columns with wildly different scales (age-like, sampling-weight-like,
    years-of-schooling-like, two sparse heavy-tailed monetary columns, and an
    hours-per-week-like column).  Rows come from ``n_clusters`` Gaussian
    bumps, which gives the geometry real cluster structure plus a natural
    heavy tail.  Useful as a benchmark stand-in for demos and tests.
    """
    if n < n_clusters:
        raise ConfigError(f"need n >= n_clusters, got n={n}, n_clusters={n_clusters}")
    gen = rng.generator
    lows = np.array([17.0, 1.2e4, 1.0, 0.0, 0.0, 1.0])
    highs = np.array([90.0, 1.5e6, 16.0, 0.0, 0.0, 99.0])
    centers = gen.uniform(lows, highs, size=(n_clusters, 6))
    assign = gen.integers(0, n_clusters, size=n)
    spread = (highs - lows) / 18.0 + 1.0
    pts = centers[assign] + gen.normal(0.0, 1.0, size=(n, 6)) * spread
    # Sparse monetary columns: mostly zero, occasionally large.
    gain_mask = gen.random(n) < 0.08
    loss_mask = gen.random(n) < 0.05
    pts[:, 3] = np.where(gain_mask, gen.uniform(1e3, 1e5, size=n), 0.0)
    pts[:, 4] = np.where(loss_mask, gen.uniform(1e3, 4.4e3, size=n), 0.0)
    pts = np.clip(pts, lows, None)
    names = ("age", "smpwt", "eduyrs", "capgain", "caploss", "hours")
    return PointSet(pts, frozenset(), names)
