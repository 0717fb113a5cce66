import math

import numpy as np
import pytest

import fairmeans.geometry as geometry
from fairmeans.dataset import PointSet
from fairmeans.errors import DataError
from fairmeans.geometry import (
    aspect_ratio,
    dist_to_set,
    distance,
    fair_radii,
    load_fair_radii,
    save_fair_radii,
    sq_dists,
)
from helpers import clustered_instance, grid_instance, uniform_instance
from reference import ref_aspect, ref_fair_radii


def test_distance_basics():
    assert distance(np.array([0.0, 0.0]), np.array([3.0, 4.0])) == 5.0
    with pytest.raises(ValueError):
        distance(np.array([0.0]), np.array([0.0, 1.0]))


def test_dist_to_set():
    pts = np.array([[0.0, 0.0], [3.0, 4.0]])
    assert dist_to_set(np.array([0.0, 1.0]), pts) == 1.0
    assert dist_to_set(np.array([0.0, 0.0]), pts[:0]) == math.inf


def test_sq_dists_matches_reference():
    gen = np.random.default_rng(14)
    for _ in range(10):
        a = gen.normal(size=(gen.integers(1, 12), gen.integers(1, 4)))
        b = gen.normal(size=(gen.integers(1, 12), a.shape[1]))
        got = sq_dists(a, b)
        want = np.array([[math.dist(p, q) ** 2 for q in b] for p in a])
        assert np.allclose(got, want, rtol=1e-12, atol=0.0)


def test_fair_radii_fixture(line_four):
    fr = fair_radii(line_four, 2)
    assert fr.neighbor_count == 2
    assert np.array_equal(fr.delta, np.array([2.0, 1.0, 2.0, 99.0]))


def test_fair_radii_matches_reference():
    gen = np.random.default_rng(21)
    for trial in range(30):
        n = int(gen.integers(2, 40))
        k = int(gen.integers(1, n + 1))
        ps = (grid_instance if trial % 3 == 0 else uniform_instance)(gen, n, dim=int(gen.integers(1, 4)))
        fr = fair_radii(ps, k)
        want, nc = ref_fair_radii(ps.points, k)
        assert fr.neighbor_count == nc
        assert np.allclose(fr.delta, want, rtol=1e-12, atol=1e-12)


def test_fair_radii_chunked_path_matches(monkeypatch):
    gen = np.random.default_rng(8)
    ps = uniform_instance(gen, 37, dim=2)
    whole = fair_radii(ps, 4).delta
    monkeypatch.setattr(geometry, "_CHUNK_CELLS", 100)
    chunked = fair_radii(ps, 4).delta
    assert np.array_equal(whole, chunked)


def test_fair_radii_duplicates_give_zero():
    ps = PointSet(np.array([[0.0], [0.0], [0.0], [5.0], [9.0], [14.0]]))
    fr = fair_radii(ps, 3)  # neighbor_count = 2, inside the duplicate triple
    assert fr.neighbor_count == 2
    assert fr.delta[0] == 0.0 and fr.delta[1] == 0.0 and fr.delta[2] == 0.0
    assert fr.delta[3] > 0.0


def test_fair_radii_monotone_in_k():
    gen = np.random.default_rng(5)
    ps = uniform_instance(gen, 30, dim=2)
    d_small_k = fair_radii(ps, 2).delta
    d_big_k = fair_radii(ps, 10).delta
    assert np.all(d_big_k <= d_small_k)


def test_fair_radii_translation_invariance():
    gen = np.random.default_rng(6)
    pts = gen.normal(size=(25, 3))
    a = fair_radii(PointSet(pts), 4).delta
    b = fair_radii(PointSet(pts + 7.25), 4).delta
    assert np.allclose(a, b, rtol=1e-9)


def test_fair_radii_validation():
    ps = PointSet(np.array([[0.0], [1.0], [2.0]]))
    with pytest.raises(ValueError):
        fair_radii(ps, 0)
    with pytest.raises(ValueError):
        fair_radii(ps, 4)
    with pytest.raises(ValueError):
        fair_radii(PointSet(np.array([[0.0]])), 1)


def test_aspect_ratio_exact():
    ps = PointSet(np.array([[0.0], [1.0], [3.0]]))
    ar = aspect_ratio(ps)
    assert ar.min_pairwise == 1.0 and ar.max_pairwise == 3.0
    assert ar.delta_max_over_min == 3.0
    assert not ar.approximate


def test_aspect_ratio_matches_reference():
    gen = np.random.default_rng(31)
    for _ in range(10):
        ps = uniform_instance(gen, int(gen.integers(2, 30)), dim=2)
        assert math.isclose(aspect_ratio(ps).delta_max_over_min, ref_aspect(ps.points), rel_tol=1e-12)


def test_aspect_ratio_tolerates_duplicates():
    ps = PointSet(np.array([[0.0], [0.0], [2.0]]))
    ar = aspect_ratio(ps)
    assert ar.min_pairwise == 2.0 and ar.max_pairwise == 2.0


def test_aspect_ratio_degenerate():
    with pytest.raises(ValueError):
        aspect_ratio(PointSet(np.array([[1.0]])))
    with pytest.raises(ValueError):
        aspect_ratio(PointSet(np.array([[1.0], [1.0], [1.0]])))


def test_aspect_ratio_approximate_flag(monkeypatch):
    gen = np.random.default_rng(12)
    ps = clustered_instance(gen, 60, dim=2)
    exact = aspect_ratio(ps)
    monkeypatch.setattr(geometry, "EXACT_ASPECT_LIMIT", 10)
    approx = aspect_ratio(ps)
    assert approx.approximate
    assert approx.min_pairwise == exact.min_pairwise
    # Bounding-box extremes can only miss the true diameter by the dimension factor.
    assert exact.max_pairwise / math.sqrt(ps.dim) <= approx.max_pairwise <= exact.max_pairwise + 1e-12


def test_save_load_fair_radii(tmp_path):
    gen = np.random.default_rng(2)
    ps = uniform_instance(gen, 15)
    fr = fair_radii(ps, 3)
    path = tmp_path / "radii.csv"
    save_fair_radii(str(path), fr)
    back = load_fair_radii(str(path), fr.neighbor_count)
    assert np.array_equal(back.delta, fr.delta)
    assert back.neighbor_count == fr.neighbor_count

    bad = tmp_path / "bad.csv"
    bad.write_text("nope\n1,2\n")
    with pytest.raises(DataError):
        load_fair_radii(str(bad), 2)

    shuffled = tmp_path / "shuffled.csv"
    shuffled.write_text("id,delta\n1,0.5\n0,0.25\n")
    with pytest.raises(DataError, match="out of order"):
        load_fair_radii(str(shuffled), 2)
