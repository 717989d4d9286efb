from fractions import Fraction as F

import pytest

from thom_jiggle.core import (
    barycentric_subdivide,
    build_complex,
    face_closure,
    find_isomorphism,
    star_link,
    tiling_check,
)
from thom_jiggle.errors import (
    DanglingVertexId,
    DegenerateSimplex,
    DimensionMismatch,
    ImproperColoring,
    UnknownSimplex,
)

TRI = {0: (0, 0), 1: (1, 0), 2: (0, 1)}


def standard_triangle(coloring=None):
    return build_complex(2, TRI, [(0, 1, 2)], coloring)


def test_face_closure_of_one_triangle():
    c = standard_triangle()
    assert len(c.simplices_of_dim(0)) == 3
    assert len(c.simplices_of_dim(1)) == 3
    assert len(c.simplices_of_dim(2)) == 1
    assert c.dim == 2


def test_collinear_vertices_rejected():
    with pytest.raises(DegenerateSimplex):
        build_complex(2, {0: (0, 0), 1: (1, 1), 2: (2, 2)}, [(0, 1, 2)])


def test_improper_coloring_rejected():
    with pytest.raises(ImproperColoring):
        standard_triangle(coloring={0: 0, 1: 0, 2: 1})


def test_dangling_vertex_id():
    with pytest.raises(DanglingVertexId):
        build_complex(2, TRI, [(0, 1, 7)])


def test_star_link_of_vertex():
    c = standard_triangle()
    star, link = star_link(c, (0,))
    assert star.simplices == c.simplices
    assert link.simplices == face_closure([(1, 2)])


def test_star_link_of_edge():
    c = standard_triangle()
    star, link = star_link(c, (0, 1))
    assert star.simplices == c.simplices
    assert link.simplices == frozenset({(2,)})


def test_star_link_unknown_simplex():
    c = standard_triangle()
    with pytest.raises(UnknownSimplex):
        star_link(c, (0, 3))


def hexagon_fan():
    verts = {0: (0, 0)}
    ring = [(2, 0), (1, 2), (-1, 2), (-2, 0), (-1, -2), (1, -2)]
    for i, p in enumerate(ring):
        verts[i + 1] = p
    tris = [(0, i + 1, (i + 1) % 6 + 1) for i in range(6)]
    return build_complex(2, verts, tris)


def test_star_link_interior_vertex_of_fan():
    c = hexagon_fan()
    star, link = star_link(c, (0,))
    assert len([s for s in star.simplices if len(s) == 3]) == 6
    link_edges = [s for s in link.simplices if len(s) == 2]
    link_verts = [s for s in link.simplices if len(s) == 1]
    assert len(link_edges) == 6 and len(link_verts) == 6


def test_barycentric_interval():
    c = build_complex(1, {0: (0,), 1: (1,)}, [(0, 1)])
    sub, srmap = barycentric_subdivide(c)
    assert len(sub.simplices_of_dim(1)) == 2
    assert len(sub.vertices) == 3
    assert sorted(sub.coloring.values()) == [0, 0, 1]
    # the map folds each barycenter onto the lowest-id original vertex
    for v, img in srmap.vertex_images.items():
        assert img in c.vertices


def test_barycentric_triangle_counts_and_coloring():
    c = standard_triangle()
    sub, _ = barycentric_subdivide(c)
    assert len(sub.simplices_of_dim(2)) == 6
    assert len(sub.vertices) == 7
    for s in sub.simplices_of_dim(2):
        assert sorted(sub.coloring[v] for v in s) == [0, 1, 2]


def test_barycentric_multiplies_top_count():
    c = hexagon_fan()
    sub, _ = barycentric_subdivide(c)
    assert len(sub.simplices_of_dim(2)) == 6 * 6


def test_tiling_check_two_edges_on_interval():
    c = build_complex(1, {0: (0,), 1: (F(1, 3),), 2: (1,)}, [(0, 1), (1, 2)])
    report = tiling_check(c, [(0,), (1,)])
    assert report.passed
    assert report.total_volume == 1


def test_tiling_check_overlap_detected():
    c = build_complex(
        2,
        {0: (0, 0), 1: (1, 0), 2: (0, 1), 3: (F(1, 2), F(1, 2))},
        [(0, 1, 2), (0, 1, 3)],
    )
    report = tiling_check(c, [(0, 0), (1, 0), (0, 1)])
    assert not report.passed
    kinds = {f["kind"] for f in report.failures}
    assert "interior_overlap" in kinds


def test_tiling_check_gap_detected():
    c = build_complex(2, {0: (0, 0), 1: (F(1, 2), 0), 2: (0, 1)}, [(0, 1, 2)])
    report = tiling_check(c, [(0, 0), (1, 0), (0, 1)])
    assert not report.passed
    assert any(f["kind"] == "volume_mismatch" for f in report.failures)


def test_tiling_check_hanging_node_detected():
    # volumes agree exactly, but T2's long edge meets a T-junction at (1, 1)
    c = build_complex(
        2,
        {0: (0, 0), 1: (4, 0), 2: (0, 4), 3: (2, 2), 4: (1, 1)},
        [(0, 1, 4), (4, 1, 3), (0, 3, 2)],
    )
    report = tiling_check(c, [(0, 0), (4, 0), (0, 4)])
    assert not report.passed
    kinds = {f["kind"] for f in report.failures}
    assert "volume_mismatch" not in kinds
    assert kinds & {"intersection_beyond_face", "unmatched_interior_facet"}


def test_tiling_region_dimension_mismatch():
    c = standard_triangle()
    with pytest.raises(DimensionMismatch):
        tiling_check(c, [(0,), (1,)])


def test_find_isomorphism_relabelled_triangle():
    a = standard_triangle()
    b = build_complex(2, {5: (0, 0), 9: (2, 0), 7: (0, 3)}, [(5, 9, 7)])
    iso = find_isomorphism(a, b)
    assert iso is not None
    assert sorted(iso) == [0, 1, 2]
    # symmetry of the success set
    assert find_isomorphism(b, a) is not None


def test_find_isomorphism_reflexive():
    c = hexagon_fan()
    iso = find_isomorphism(c, c)
    assert iso is not None


def test_find_isomorphism_rejects_different_complexes():
    a = standard_triangle()
    b = build_complex(1, {0: (0,), 1: (1,)}, [(0, 1)])
    assert find_isomorphism(a, b) is None


def test_periodic_complex_nondegenerate_across_seam():
    # a wrapped edge is degenerate in chart coordinates but fine once lifted
    c = build_complex(
        1, {0: (0,), 1: (F(3, 4),)}, [(0, 1)], periods=(1,)
    )
    assert c.sq_diameter((0, 1)) == F(1, 16)


def test_simplex_volume_and_euler():
    c = standard_triangle()
    assert c.simplex_volume((0, 1, 2)) == F(1, 2)
    assert c.euler_characteristic() == 1
