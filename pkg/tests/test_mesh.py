import math

import numpy as np
import pytest

from fluxbranch.errors import (
    MeshOrientationError,
    MeshParseError,
    MeshTopologyError,
    ResourceError,
)
from fluxbranch.mesh import (
    Disk,
    MeshGeometry,
    generate_disk_mesh,
    generate_rectangle_mesh,
    load_mesh,
    parse_mesh_spec,
    refine_mesh,
    save_mesh,
    validate_mesh,
)


def test_base_fan_is_inscribed():
    m = generate_disk_mesh(1.0, 0)
    assert len(m.triangles) == 16
    assert m.area() < math.pi
    assert np.all(m.signed_areas() > 0)


def test_disk_area_and_perimeter_converge_quadratically():
    area_err, perim_err = [], []
    for k in range(6):
        m = generate_disk_mesh(1.0, k)
        area_err.append(math.pi - m.area())
        perim_err.append(2 * math.pi - m.perimeter())
    area_ratio = np.array(area_err[1:]) / np.array(area_err[:-1])
    perim_ratio = np.array(perim_err[1:]) / np.array(perim_err[:-1])
    np.testing.assert_allclose(area_ratio, 0.25, atol=0.01)
    np.testing.assert_allclose(perim_ratio, 0.25, atol=0.01)
    assert min(area_err) > 0


def test_boundary_on_circle():
    for level in (0, 3):
        m = generate_disk_mesh(2.0, level)
        r = np.hypot(*m.vertices[m.boundary_vertex_set].T)
        np.testing.assert_allclose(r, 2.0, atol=1e-12)


def test_refinement_preserves_invariants_and_shrinks_edges():
    m = generate_disk_mesh(1.0, 0)
    h = m.max_edge_length()
    for _ in range(4):
        m = refine_mesh(m)
        validate_mesh(m)
        assert m.max_edge_length() < h
        h = m.max_edge_length()
    assert isinstance(m.domain_tag, Disk)
    assert m.level == 4


def test_refinement_guard():
    with pytest.raises(ResourceError):
        generate_disk_mesh(1.0, 11)


@pytest.mark.parametrize("nx,ny,nt,nb", [(1, 1, 2, 4), (2, 2, 8, 8), (3, 2, 12, 10)])
def test_rectangle_counts(nx, ny, nt, nb):
    m = generate_rectangle_mesh(1.0, 1.0, nx, ny)
    assert len(m.triangles) == nt == 2 * nx * ny
    assert len(m.boundary_edges) == nb == 2 * (nx + ny)


def test_rectangle_area_exact():
    assert generate_rectangle_mesh(3.0, 2.0, 3, 2).area() == 6.0


def test_boundary_vertex_set_matches_edges():
    m = generate_rectangle_mesh(2.0, 1.0, 4, 3)
    np.testing.assert_array_equal(m.boundary_vertex_set, np.unique(m.boundary_edges))
    # each boundary vertex has one outgoing and one incoming boundary edge
    assert np.all(np.bincount(m.boundary_edges[:, 0])[m.boundary_vertex_set] == 1)
    assert np.all(np.bincount(m.boundary_edges[:, 1])[m.boundary_vertex_set] == 1)


def test_boundary_edges_outward():
    # domain lies to the left of i -> j, so the outward normal points right
    m = generate_disk_mesh(1.0, 2)
    a, b = m.vertices[m.boundary_edges[:, 0]], m.vertices[m.boundary_edges[:, 1]]
    d = b - a
    normal = np.stack([d[:, 1], -d[:, 0]], axis=1)
    mid = 0.5 * (a + b)
    assert np.all(np.sum(normal * mid, axis=1) > 0)


@pytest.mark.parametrize("make", [
    lambda: generate_rectangle_mesh(1.0, 1.0, 1, 1),
    lambda: generate_rectangle_mesh(3.0, 2.0, 3, 2),
    lambda: generate_disk_mesh(1.0, 2),
])
def test_round_trip(tmp_path, make):
    m = make()
    path = tmp_path / "m.txt"
    save_mesh(m, path)
    back = load_mesh(path)
    assert back.vertices.tobytes() == m.vertices.tobytes()
    np.testing.assert_array_equal(back.triangles, m.triangles)
    np.testing.assert_array_equal(back.boundary_edges, m.boundary_edges)


def test_smallest_mesh_loads(tmp_path):
    path = tmp_path / "sq.txt"
    save_mesh(generate_rectangle_mesh(1.0, 1.0, 1, 1), path)
    assert load_mesh(path).n_vertices == 4


SQUARE = """mesh2d 4 2 4
v 0 0
v 1 0
v 1 1
v 0 1
t {t1}
t 0 2 3
b 0 1
b 1 2
b 2 3
b 3 0
"""


def test_clockwise_triangle_rejected(tmp_path):
    path = tmp_path / "cw.txt"
    path.write_text(SQUARE.format(t1="0 2 1"))
    with pytest.raises(MeshOrientationError):
        load_mesh(path)


def test_dangling_boundary_edge_rejected(tmp_path):
    text = SQUARE.format(t1="0 1 2").replace("mesh2d 4 2 4", "mesh2d 4 2 5") + "b 0 2\n"
    path = tmp_path / "dangling.txt"
    path.write_text(text)
    with pytest.raises(MeshTopologyError):
        load_mesh(path)


def test_missing_boundary_edge_rejected(tmp_path):
    text = SQUARE.format(t1="0 1 2").replace("mesh2d 4 2 4", "mesh2d 4 2 3").replace("b 3 0\n", "")
    path = tmp_path / "open.txt"
    path.write_text(text)
    with pytest.raises(MeshTopologyError):
        load_mesh(path)


def test_parse_error_names_line(tmp_path):
    path = tmp_path / "bad.txt"
    path.write_text(SQUARE.format(t1="0 1 x"))
    with pytest.raises(MeshParseError, match="line 6"):
        load_mesh(path)


def test_header_count_mismatch(tmp_path):
    path = tmp_path / "short.txt"
    path.write_text(SQUARE.format(t1="0 1 2").replace("mesh2d 4 2 4", "mesh2d 5 2 4"))
    with pytest.raises(MeshParseError):
        load_mesh(path)


def test_mesh_is_read_only():
    m = generate_disk_mesh(1.0, 1)
    with pytest.raises(ValueError):
        m.vertices[0, 0] = 3.0


def test_parse_mesh_spec(tmp_path):
    assert parse_mesh_spec("disk:1").n_vertices == generate_disk_mesh(1.0, 1).n_vertices
    assert len(parse_mesh_spec("rect:3x2", width=3.0, height=2.0).triangles) == 12
    path = tmp_path / "m.txt"
    save_mesh(generate_rectangle_mesh(1.0, 1.0, 2, 2), path)
    assert parse_mesh_spec(f"file:{path}").n_vertices == 9
    with pytest.raises(ValueError):
        parse_mesh_spec("sphere:3")


def test_manual_geometry_validates():
    m = MeshGeometry(
        np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]),
        np.array([[0, 1, 2]]),
        np.array([[0, 1], [1, 2], [2, 0]]),
    )
    validate_mesh(m)
    assert m.area() == 0.5
