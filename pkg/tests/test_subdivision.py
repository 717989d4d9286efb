from fractions import Fraction as F

import pytest

from thom_jiggle._rational import edge_matrix, mat_rank
from thom_jiggle.core import build_complex, tiling_check
from thom_jiggle.errors import InvalidParams, InvalidTime
from thom_jiggle.subdivision import (
    FoldingTower,
    ThomPattern,
    fold_bijective_on_top,
    iterate_fold,
    standard_simplex_complex,
    thom_pattern,
    thom_subdivide,
    unfolding_homotopy,
    verify_pattern,
    whitney_prism_subdivide,
)
from thom_jiggle.core import SimplicialMap


def test_pattern_n0():
    p = thom_pattern(0)
    assert p.complex.f_vector() == (1,)
    assert p.sigma.vertex_images == {0: 0}


def test_pattern_n1_structure():
    p = thom_pattern(1)
    assert p.complex.f_vector() == (4, 3)
    # sigma swaps the interior vertices onto the far endpoints
    by_coord = {p.complex.point(v): v for v in p.complex.vertices}
    v1 = by_coord[(F(1, 3),)]
    v0 = by_coord[(F(2, 3),)]
    assert p.sigma.vertex_images[v1] == 1
    assert p.sigma.vertex_images[v0] == 0
    assert p.sigma.vertex_images[0] == 0 and p.sigma.vertex_images[1] == 1


def test_pattern_n2_counts_and_verification():
    p = thom_pattern(2)
    assert p.complex.f_vector() == (12, 24, 13)
    assert p.complex.euler_characteristic() == 1
    rep = verify_pattern(p)
    assert rep.passed
    assert rep.top_count == 13


def test_pattern_invalid_params():
    with pytest.raises(InvalidParams):
        thom_pattern(2, {"t": 0})
    with pytest.raises(InvalidParams):
        thom_pattern(1, {"u1": F(2, 3), "u0": F(1, 3)})


def test_pattern_k1_tiling_on_interval():
    p = thom_pattern(1)
    rep = tiling_check(p.complex, [(0,), (1,)])
    assert rep.passed
    assert rep.total_volume == 1


def test_verify_rejects_degenerate_sigma():
    # both interior vertices folded to 0: the middle edge image collapses
    p = thom_pattern(1)
    delta = p.delta
    images = dict(p.sigma.vertex_images)
    by_coord = {p.complex.point(v): v for v in p.complex.vertices}
    images[by_coord[(F(1, 3),)]] = 0
    bad = ThomPattern(1, p.complex, SimplicialMap(p.complex, delta, images),
                      p.params, delta, (0, 1))
    rep = verify_pattern(bad)
    assert rep.surjectivity_failures


def test_subdivide_single_triangle_equals_pattern():
    p = thom_pattern(2)
    T = standard_simplex_complex(2)
    sub, fold = thom_subdivide(T, p)
    assert len(sub.simplices_of_dim(2)) == 13
    assert len(sub.vertices) == 12
    # fold fixes the corners of T
    for v in T.vertices:
        assert fold.vertex_images[v] == v


def test_subdivide_two_triangles_share_edge_consistently():
    p = thom_pattern(2)
    T = build_complex(
        2, {0: (0, 0), 1: (1, 0), 2: (0, 1), 3: (1, 1)}, [(0, 1, 2), (1, 2, 3)]
    )
    sub, fold = thom_subdivide(T, p)
    assert len(sub.simplices_of_dim(2)) == 26
    # oracle: exact dedup. 2 x 12 pattern vertices minus the 4 shared along
    # the common edge (2 corners + 2 interior subdivision points).
    assert len(sub.vertices) == 20
    shared_interior = [
        v for v in sub.vertices
        if sub.point(v)[0] + sub.point(v)[1] == 1 and 0 < sub.point(v)[0] < 1
    ]
    assert len(shared_interior) == 2  # subdivided once, consistently


def test_subdivide_graph_triples_edges():
    p = thom_pattern(1)
    T = build_complex(1, {0: (0,), 1: (1,), 2: (3,)}, [(0, 1), (1, 2)])
    sub, _ = thom_subdivide(T, p)
    assert len(sub.simplices_of_dim(1)) == 6


def test_iterate_fold_counts_and_bijectivity():
    p = thom_pattern(2)
    T = standard_simplex_complex(2)
    for r in (0, 1, 2):
        tower = iterate_fold(T, p, r)
        assert len(tower.top_complex.simplices_of_dim(2)) == 13 ** r
        assert fold_bijective_on_top(tower) == []
    p1 = thom_pattern(1)
    I = standard_simplex_complex(1)
    tower = iterate_fold(I, p1, 2)
    assert len(tower.top_complex.simplices_of_dim(1)) == 9
    assert fold_bijective_on_top(tower) == []


def test_iterate_fold_fixes_base_vertices():
    p = thom_pattern(2)
    T = standard_simplex_complex(2)
    tower = iterate_fold(T, p, 2)
    for v in T.vertices:
        assert tower.composed.vertex_images[v] == v


def test_fold_composability_by_reference():
    p = thom_pattern(1)
    I = standard_simplex_complex(1)
    t1 = iterate_fold(I, p, 1)
    t2 = iterate_fold(I, p, 1)
    with pytest.raises(Exception):
        t1.levels[0][1].compose(t2.levels[0][1])  # different intermediate objects


def test_heredity_composes_on_shared_face():
    # subdividing the triangle restricts on each edge to the 1-pattern
    p = thom_pattern(2)
    T = standard_simplex_complex(2)
    sub, fold = thom_subdivide(T, p)
    edge_vertices = sorted(
        v for v in sub.vertices if sub.point(v)[1] == 0
    )
    assert len(edge_vertices) == 4  # K1 on the bottom edge
    xs = sorted(sub.point(v)[0] for v in edge_vertices)
    assert xs == [0, F(1, 3), F(2, 3), 1]


def test_unfolding_snapshot_times():
    p = thom_pattern(2)
    with pytest.raises(InvalidTime):
        unfolding_homotopy(p, F(3, 2))
    snap = unfolding_homotopy(p, 0)
    for v in p.complex.vertices:
        assert snap.domain_coords[v] == p.complex.point(v)
        assert snap.image_coords[v] == p.delta.point(p.sigma.vertex_images[v])


def test_unfolding_nondegenerate_before_time_one():
    for n in (1, 2):
        p = thom_pattern(n)
        for k in range(17):
            s = F(k, 16)
            snap = unfolding_homotopy(p, s)
            if s < 1:
                assert snap.top_rank_failures() == []


def test_unfolding_n1_midpoint_slopes():
    p = thom_pattern(1)
    snap = unfolding_homotopy(p, F(1, 2))
    by_coord = {p.complex.point(v): v for v in p.complex.vertices}
    v1 = by_coord[(F(1, 3),)]
    v0 = by_coord[(F(2, 3),)]
    # images interpolate halfway toward the barycenter 1/2
    assert snap.image_coords[v1] == (F(3, 4),)
    assert snap.image_coords[v0] == (F(1, 4),)
    # slopes nonzero on all three deformed edges
    dom = snap.domain_coords
    img = snap.image_coords
    for e in p.complex.simplices_of_dim(1):
        run = dom[e[1]][0] - dom[e[0]][0]
        rise = img[e[1]][0] - img[e[0]][0]
        assert run != 0 and rise != 0


def test_whitney_edge_times_interval():
    base = build_complex(1, {0: (0,), 1: (1,)}, [(0, 1)])
    prism = whitney_prism_subdivide(base, 0, 1)
    assert len(prism.simplices_of_dim(2)) == 2


def test_whitney_triangle_times_interval():
    base = standard_simplex_complex(2)
    prism = whitney_prism_subdivide(base, 0, 1)
    assert len(prism.simplices_of_dim(3)) == 3


def test_whitney_shared_face_consistent():
    base = build_complex(
        2, {0: (0, 0), 1: (1, 0), 2: (0, 1), 3: (1, 1)}, [(0, 1, 2), (1, 2, 3)]
    )
    prism = whitney_prism_subdivide(base, 0, 1)
    assert len(prism.simplices_of_dim(3)) == 6
    # every interior quadrilateral face is split identically: the complex is
    # face-closed and each tetrahedron facet is shared by at most two cells
    from collections import Counter

    cnt = Counter()
    for cell in prism.simplices_of_dim(3):
        from itertools import combinations

        for f in combinations(cell, 3):
            cnt[f] += 1
    assert all(v <= 2 for v in cnt.values())


def test_whitney_volume_identity():
    base = build_complex(
        2, {0: (0, 0), 1: (1, 0), 2: (0, 1), 3: (1, 1)}, [(0, 1, 2), (1, 2, 3)]
    )
    prism = whitney_prism_subdivide(base, F(1, 2), F(5, 2))
    total = sum(prism.simplex_volume(s) for s in prism.simplices_of_dim(3))
    base_vol = sum(base.simplex_volume(s) for s in base.simplices_of_dim(2))
    assert total == base_vol * 2


def test_pattern_heredity_restriction_isomorphic_to_lower_pattern():
    # facet restriction of the 2-pattern vs the freestanding 1-pattern
    from thom_jiggle.core import find_isomorphism

    p2 = thom_pattern(2)
    p1 = thom_pattern(1)
    # bottom edge of the standard triangle
    members = [
        s
        for s in p2.complex.simplices
        if all(p2.complex.point(v)[1] == 0 for v in s)
    ]
    vids = sorted({v for s in members for v in s})
    facet = build_complex(
        1, {v: (p2.complex.point(v)[0],) for v in vids}, members
    )
    assert find_isomorphism(facet, p1.complex) is not None
