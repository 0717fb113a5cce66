import numpy as np
import pytest

from fairmeans.dataset import (
    INJECTED_FLAG_COLUMN,
    PointSet,
    RandomSource,
    inject_outliers,
    load_csv,
    make_census_like,
    minmax_scale,
    subsample,
    write_csv,
)
from fairmeans.errors import ConfigError, DataError


def test_pointset_copies_and_freezes():
    src = np.array([[1.0, 2.0], [3.0, 4.0]])
    ps = PointSet(src)
    src[0, 0] = 99.0
    assert ps.points[0, 0] == 1.0
    assert not ps.points.flags.writeable
    with pytest.raises(ValueError):
        ps.points[0, 0] = 5.0
    assert ps.n == 2 and ps.dim == 2
    assert list(ps.ids) == [0, 1]
    assert ps.column_names == ("c0", "c1")


def test_pointset_rejects_bad_input():
    with pytest.raises(DataError):
        PointSet(np.empty((0, 2)))
    with pytest.raises(DataError):
        PointSet(np.array([1.0, 2.0]))
    with pytest.raises(DataError):
        PointSet(np.array([[np.nan, 0.0]]))
    with pytest.raises(DataError):
        PointSet(np.array([[np.inf, 0.0]]))
    with pytest.raises(DataError):
        PointSet(np.array([[0.0, 1.0]]), injected_outliers={3})
    with pytest.raises(DataError):
        PointSet(np.array([[0.0, 1.0]]), column_names=("only_one",))


def test_content_hash_tracks_data():
    a = PointSet(np.array([[0.0, 1.0], [2.0, 3.0]]))
    b = PointSet(np.array([[0.0, 1.0], [2.0, 3.0]]))
    c = PointSet(np.array([[0.0, 1.0], [2.0, 3.5]]))
    assert a.content_hash() == b.content_hash()
    assert a.content_hash() != c.content_hash()


def test_random_source_reproducible():
    a = RandomSource(42).generator.random(5)
    b = RandomSource(42).generator.random(5)
    assert np.array_equal(a, b)
    c1 = RandomSource(42).child(3)
    c2 = RandomSource(42).child(3)
    assert c1.seed == c2.seed
    assert RandomSource(42).child(1).seed != RandomSource(42).child(2).seed
    assert "RandomSource" in repr(c1)


def test_csv_round_trip_bit_exact(tmp_path):
    gen = np.random.default_rng(7)
    pts = gen.normal(0.0, 1.0, size=(20, 3))
    pts[0, 0] = 0.1
    pts[1, 1] = 1e-17
    pts[2, 2] = 1.23456789e18
    ps = PointSet(pts, injected_outliers={1, 5}, column_names=("x", "y", "z"))
    path = tmp_path / "round.csv"
    write_csv(ps, str(path))
    back = load_csv(str(path))
    assert np.array_equal(back.points, ps.points)
    assert back.injected_outliers == ps.injected_outliers
    assert back.column_names == ps.column_names


def test_load_csv_headerless(tmp_path):
    path = tmp_path / "plain.csv"
    path.write_text("1.5,2\n3,4.5\n")
    ps = load_csv(str(path))
    assert ps.column_names == ("c0", "c1")
    assert np.array_equal(ps.points, np.array([[1.5, 2.0], [3.0, 4.5]]))


def test_load_csv_selects_columns(tmp_path):
    path = tmp_path / "sel.csv"
    path.write_text("a,b,c\n1,x,3\n4,y,6\n")
    by_name = load_csv(str(path), numeric_columns=["c", "a"])
    assert by_name.column_names == ("c", "a")
    assert np.array_equal(by_name.points, np.array([[3.0, 1.0], [6.0, 4.0]]))
    by_index = load_csv(str(path), numeric_columns=[0])
    assert by_index.column_names == ("a",)


def test_load_csv_auto_keeps_numeric_columns(tmp_path):
    path = tmp_path / "mixed.csv"
    path.write_text("a,label,b\n1,red,2\n3,blue,4\n")
    ps = load_csv(str(path))
    assert ps.column_names == ("a", "b")
    assert np.array_equal(ps.points, np.array([[1.0, 2.0], [3.0, 4.0]]))


def test_load_csv_flag_column(tmp_path):
    path = tmp_path / "flagged.csv"
    path.write_text(f"a,{INJECTED_FLAG_COLUMN}\n1,0\n2,1\n3,0\n")
    ps = load_csv(str(path))
    assert ps.column_names == ("a",)
    assert ps.injected_outliers == frozenset({1})


def test_load_csv_errors(tmp_path):
    empty = tmp_path / "empty.csv"
    empty.write_text("\n")
    with pytest.raises(DataError, match="no data"):
        load_csv(str(empty))

    ragged = tmp_path / "ragged.csv"
    ragged.write_text("a,b\n1,2\n3\n")
    with pytest.raises(DataError, match="line 3"):
        load_csv(str(ragged))

    textual = tmp_path / "text.csv"
    textual.write_text("a,b\n1,oops\n")
    with pytest.raises(DataError, match="column 'b'"):
        load_csv(str(textual), numeric_columns=["a", "b"])

    with pytest.raises(ConfigError, match="unknown column"):
        load_csv(str(textual), numeric_columns=["missing"])
    with pytest.raises(ConfigError, match="out of range"):
        load_csv(str(textual), numeric_columns=[9])

    allwords = tmp_path / "words.csv"
    allwords.write_text("a,b\nfoo,bar\n")
    with pytest.raises(DataError, match="numeric"):
        load_csv(str(allwords))


def test_subsample_deterministic_and_flags():
    gen = np.random.default_rng(3)
    pts = gen.normal(size=(50, 2))
    ps = PointSet(pts, injected_outliers=frozenset(range(0, 50, 5)))
    a = subsample(ps, 20, RandomSource(11))
    b = subsample(ps, 20, RandomSource(11))
    assert np.array_equal(a.points, b.points)
    assert a.n == 20
    # Every flagged row in the sample must carry coordinates of an original
    # flagged row, and vice versa for unflagged ones.
    flagged_coords = {tuple(pts[i]) for i in ps.injected_outliers}
    for new_id in range(a.n):
        coords = tuple(a.points[new_id])
        assert (coords in flagged_coords) == (new_id in a.injected_outliers)


def test_subsample_bounds():
    ps = PointSet(np.zeros((4, 2)))
    with pytest.raises(ConfigError):
        subsample(ps, 0, RandomSource(0))
    with pytest.raises(ConfigError):
        subsample(ps, 5, RandomSource(0))


def test_inject_outliers_count_and_direction():
    gen = np.random.default_rng(9)
    pts = np.abs(gen.normal(size=(40, 3))) + 0.5
    pts[:, 2] = -1.0  # a column whose maximum is negative stays untouched
    ps = PointSet(pts)
    out = inject_outliers(ps, 0.1, RandomSource(1))
    assert len(out.injected_outliers) == 4
    moved = sorted(out.injected_outliers)
    for i in range(40):
        if i in out.injected_outliers:
            assert np.all(out.points[i, :2] >= ps.points[i, :2])
        else:
            assert np.array_equal(out.points[i], ps.points[i])
    assert np.array_equal(out.points[moved][:, 2], ps.points[moved][:, 2])


def test_inject_outliers_errors():
    ps = PointSet(np.ones((10, 2)))
    with pytest.raises(ConfigError):
        inject_outliers(ps, 0.0, RandomSource(0))
    with pytest.raises(ConfigError):
        inject_outliers(ps, 1.5, RandomSource(0))
    with pytest.raises(ConfigError, match="nothing to inject"):
        inject_outliers(ps, 0.01, RandomSource(0))


def test_minmax_scale():
    ps = PointSet(np.array([[0.0, 5.0, 7.0], [10.0, 5.0, 3.0], [5.0, 5.0, 5.0]]))
    scaled = minmax_scale(ps)
    assert scaled.points.min() >= 0.0 and scaled.points.max() <= 1.0
    assert np.array_equal(scaled.points[:, 1], np.zeros(3))
    assert scaled.points[:, 0].max() == 1.0 and scaled.points[:, 0].min() == 0.0


def test_make_census_like():
    a = make_census_like(300, RandomSource(5))
    b = make_census_like(300, RandomSource(5))
    assert np.array_equal(a.points, b.points)
    assert a.n == 300 and a.dim == 6
    assert a.column_names == ("age", "smpwt", "eduyrs", "capgain", "caploss", "hours")
    # The monetary columns are sparse: mostly zero with a heavy tail.
    assert (a.points[:, 3] == 0.0).mean() > 0.5
    assert a.points[:, 3].max() > 1e3
    with pytest.raises(ConfigError):
        make_census_like(5, RandomSource(0))
