import numpy as np
import pytest
from scipy.spatial import cKDTree

from nnmetric.geometry import BoundingBox, GeometryError, PointSet, second_nearest_distance
from nnmetric.steiner import (compute_exclusion_radii, generate_delta_sample, read_delta_sample,
                              sample_size_report, spread, write_delta_sample)

TWO = PointSet([[0.0, 0.0], [2.0, 0.0]])
BOX = BoundingBox(np.array([-2.0, -2.0]), np.array([4.0, 4.0]))


def admissible_probes(ps, sample, count, seed):
    rng = np.random.default_rng(seed)
    out = np.empty((0, ps.d))
    while len(out) < count:
        z = rng.uniform(sample.domain.lo, sample.domain.hi, size=(2 * count, ps.d))
        out = np.vstack([out, z[sample.admissible(ps, z)]])
    return out[:count]


def test_exclusion_radii_examples():
    ps = PointSet([[0.0, 0.0], [2.0, 0.0]])
    assert compute_exclusion_radii(ps, 0.001) == pytest.approx([0.99, 0.99], rel=1e-12)
    assert compute_exclusion_radii(ps, 0.125) == pytest.approx([0.75, 0.75], rel=1e-12)
    assert np.all(compute_exclusion_radii(ps, 1 - 1e-12) < 1e-7)
    with pytest.raises(ValueError):
        compute_exclusion_radii(ps, 1.0)
    with pytest.raises(GeometryError):
        compute_exclusion_radii(PointSet([[0.0, 0.0]]), 0.1)


def test_two_site_delta_sample_property():
    sample = generate_delta_sample(TWO, BOX, 0.1)
    z = admissible_probes(TWO, sample, 10_000, 0)
    gap = cKDTree(sample.points).query(z)[0]
    assert np.all(gap <= 0.1 * TWO.dnn(z))


def test_emitted_points_admissible(rng):
    ps = PointSet(rng.random((15, 2)))
    box = BoundingBox.around(ps.points, 0.3)
    sample = generate_delta_sample(ps, box, 0.1)
    assert np.all(box.contains(sample.points))
    idx, dist = ps.nearest(sample.points)
    # closed complement of the open balls; projected points sit on the sphere
    assert np.all(dist >= sample.exclusion_radii[idx] * (1 - 1e-12))
    assert np.all(sample.admissible(ps, sample.points[dist > sample.exclusion_radii[idx] * (1 + 1e-9)]))


def test_three_dimensional_sample():
    ps = PointSet(np.random.default_rng(5).random((6, 3)))
    sample = generate_delta_sample(ps, BoundingBox.around(ps.points, 0.2), 0.2)
    z = admissible_probes(ps, sample, 3000, 1)
    assert np.all(cKDTree(sample.points).query(z)[0] <= 0.2 * ps.dnn(z))


def test_growth_per_halving():
    ps = PointSet(np.random.default_rng(2).random((10, 2)))
    box = BoundingBox.around(ps.points, 0.5)
    sizes = [len(generate_delta_sample(ps, box, d)) for d in (0.2, 0.1, 0.05)]
    for a, b in zip(sizes, sizes[1:]):
        assert 1 < b / a <= 4 * 1.25


def test_second_nearest_within_five_dnn():
    ps = PointSet(np.random.default_rng(8).random((12, 2)))
    sample = generate_delta_sample(ps, BoundingBox.around(ps.points, 0.5), 0.2)
    for z in admissible_probes(ps, sample, 500, 3):
        f = second_nearest_distance(ps, z)
        dnn = ps.dnn(z)[0]
        assert dnn <= f <= 5 * dnn


def test_deterministic():
    ps = PointSet(np.random.default_rng(3).random((8, 2)))
    box = BoundingBox.around(ps.points, 0.4)
    a = generate_delta_sample(ps, box, 0.1)
    b = generate_delta_sample(ps, box, 0.1)
    assert np.array_equal(a.points, b.points)


def test_generation_errors():
    with pytest.raises(ValueError):
        generate_delta_sample(TWO, BOX, 0.0)
    with pytest.raises(GeometryError):
        generate_delta_sample(TWO, BoundingBox(np.array([0.5, -1.0]), np.array([3.0, 1.0])), 0.1)
    with pytest.raises(GeometryError):
        generate_delta_sample(TWO, BoundingBox(np.zeros(3), np.ones(3)), 0.1)


def test_spread_and_report():
    assert spread(PointSet([[0.0], [1.0], [4.0]])) == 4.0
    rep = sample_size_report(generate_delta_sample(TWO, BOX, 0.2))
    assert rep["spread"] == 1.0 and rep["ratio"] is None and rep["size"] > 0
    ps = PointSet([[0.0, 0.0], [1.0, 0.0], [4.0, 0.0]])
    box = BoundingBox.around(ps.points, 2.0)
    reps = [sample_size_report(generate_delta_sample(ps, box, d)) for d in (0.2, 0.1, 0.05)]
    assert reps[0]["ratio"] == pytest.approx(reps[0]["size"] / (3 * np.log(4)))
    assert reps[0]["ratio"] < reps[1]["ratio"] < reps[2]["ratio"] <= 4 * 1.25 * reps[1]["ratio"]


def test_serialization_round_trip(tmp_path):
    sample = generate_delta_sample(TWO, BOX, 0.2)
    meta = write_delta_sample(sample, tmp_path / "s.csv")
    assert meta.name == "s.csv.meta"
    assert "delta=0.2" in meta.read_text()
    back = read_delta_sample(tmp_path / "s.csv")
    assert back.delta == sample.delta
    assert np.array_equal(back.points, sample.points)
    assert np.array_equal(back.exclusion_radii, sample.exclusion_radii)
    assert np.array_equal(back.domain.lo, sample.domain.lo)
    assert back.stats == sample.stats
