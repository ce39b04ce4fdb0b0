import numpy as np
import pytest

from nnmetric.geometry import BoundingBox
from nnmetric.io import read_points_csv, write_points_csv
from nnmetric.single_site import single_site_geodesic_path
from nnmetric.svg import render_paths


def test_csv_round_trip(tmp_path):
    pts = np.random.default_rng(0).random((7, 3))
    for header in (None, ["x", "y", "z"]):
        write_points_csv(tmp_path / "p.csv", pts, header)
        assert np.array_equal(read_points_csv(tmp_path / "p.csv"), pts)


def test_csv_errors(tmp_path):
    (tmp_path / "bad.csv").write_text("1,2\n3\n")
    with pytest.raises(ValueError):
        read_points_csv(tmp_path / "bad.csv")
    (tmp_path / "empty.csv").write_text("x,y\n")
    with pytest.raises(ValueError):
        read_points_csv(tmp_path / "empty.csv")
    (tmp_path / "nan.csv").write_text("1,2\n3,abc\n")
    with pytest.raises(ValueError):
        read_points_csv(tmp_path / "nan.csv")


def test_svg_curved_geodesic_line_count():
    path = single_site_geodesic_path((0, 0), (1, 0), (0.3, 0.8), 40)
    svg = render_paths([[0.0, 0.0]], [path.vertices])
    assert svg.count("<line") >= 40
    assert svg.startswith("<svg") and svg.rstrip().endswith("</svg>")


def test_svg_deterministic_and_fixed_viewbox():
    sites = np.array([[0.0, 0.0], [2.0, 0.0]])
    box = BoundingBox(np.array([-1.0, -1.5]), np.array([3.0, 1.5]))
    a = render_paths(sites, [sites], domain=box, width=400)
    b = render_paths(sites, [sites], domain=box, width=400)
    assert a == b
    assert 'viewBox="0 0 400 300"' in a
    assert a.count('class="site"') == 2


def test_svg_rejects_3d():
    with pytest.raises(ValueError):
        render_paths(np.zeros((2, 3)) + [[0, 0, 0], [1, 1, 1]])
