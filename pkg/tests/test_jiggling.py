from fractions import Fraction as F

import pytest

from thom_jiggle._rational import vdot, vsub
from thom_jiggle.core import build_complex
from thom_jiggle.errors import (
    DiameterTooLarge,
    ImproperColoring,
    InvalidTime,
    UnsupportedDimension,
)
from thom_jiggle.jiggling import (
    FlatModel,
    fiber_convergence_profile,
    jiggle_colored,
    jiggle_exp,
    max_sq_diameter,
    section_homotopy_to_zero,
    torus_triangulation,
)
from thom_jiggle.subdivision import iterate_fold, thom_pattern


def circle(m=4):
    return torus_triangulation(1, m)


def test_torus_triangulation_counts():
    assert len(circle(4).simplices_of_dim(1)) == 8
    t2 = torus_triangulation(2, 2)
    assert len(t2.simplices_of_dim(2)) == 48
    assert t2.coloring is not None


def test_torus_m1_is_valid():
    t1 = torus_triangulation(2, 1)
    assert t1.periods == (1, 1)
    assert t1.dim == 2
    # proper coloring survived the identification
    for e in t1.simplices_of_dim(1):
        assert t1.coloring[e[0]] != t1.coloring[e[1]]


def test_torus_unsupported_dimension():
    with pytest.raises(UnsupportedDimension):
        torus_triangulation(4, 2)


def test_jiggle_r0_is_zero_section():
    c = circle()
    tower = iterate_fold(c, thom_pattern(1), 0)
    sec = jiggle_exp(tower, FlatModel(1))
    assert all(v == (0,) for v in sec.lift.values())


def test_jiggle_circle_slopes():
    c = circle()
    tower = iterate_fold(c, thom_pattern(1), 1)
    sec = jiggle_exp(tower, FlatModel(1))
    slopes = set()
    for _, rows in sec.embedded_cells():
        (x0, v0), (x1, v1) = rows
        slopes.add((v1 - v0) / (x1 - x0))
    assert slopes == {F(2), F(-4)}


def test_jiggle_lift_bounded_by_diameter():
    T = torus_triangulation(2, 3)
    tower = iterate_fold(T, thom_pattern(2), 1)
    sec = jiggle_exp(tower, FlatModel(2))
    assert sec.max_lift_sq() <= max_sq_diameter(T)


def test_jiggle_lift_vanishes_on_base_vertices():
    T = torus_triangulation(2, 3)
    tower = iterate_fold(T, thom_pattern(2), 2)
    sec = jiggle_exp(tower, FlatModel(2))
    for v in T.vertices:
        assert sec.lift[v] == (F(0), F(0))


def test_jiggle_rejects_coarse_torus():
    # one-cell torus grid: Kuhn cells have diameter sqrt(2) > 1/2
    grid = build_complex(
        1, {0: (0,), 1: (F(3, 4),)}, [(0, 1)], periods=(1,)
    )
    # diameter 1/4 fine; now an overly large cell
    big = build_complex(1, {0: (0,), 1: (F(1, 2),)}, [(0, 1)], periods=(1,))
    tower = iterate_fold(big, thom_pattern(1), 0)
    with pytest.raises(DiameterTooLarge):
        jiggle_exp(tower, FlatModel(1))
    tower2 = iterate_fold(grid, thom_pattern(1), 0)
    jiggle_exp(tower2, FlatModel(1))


def test_jiggle_colored_edge_values():
    # single edge with colors (0, 1): section folds over [p0, p1] three times
    c = build_complex(1, {0: (0,), 1: (1,)}, [(0, 1)], {0: 0, 1: 1})
    tower = iterate_fold(c, thom_pattern(1), 1)
    sec = jiggle_colored(tower, c.coloring, [(0,), (1,)])
    vals = [sec.lift[v][0] for v in sorted(
        sec.base.vertices, key=lambda v: sec.base.point(v))]
    assert vals == [0, 1, 0, 1]


def test_jiggle_colored_values_independent_of_order_on_base_vertices():
    c = torus_triangulation(2, 2)
    target = [(0, 0), (1, 0), (0, 1)]
    for r in (0, 1):
        tower = iterate_fold(c, thom_pattern(2), r)
        sec = jiggle_colored(tower, c.coloring, target)
        for v in c.vertices:
            assert sec.lift[v] == tuple(map(F, target[c.coloring[v]]))


def test_jiggle_colored_improper_coloring():
    c = build_complex(1, {0: (0,), 1: (1,)}, [(0, 1)])
    tower = iterate_fold(c, thom_pattern(1), 1)
    with pytest.raises(ImproperColoring):
        jiggle_colored(tower, {0: 0, 1: 0}, [(0,), (1,)])


def test_section_homotopy_endpoints():
    c = circle()
    tower = iterate_fold(c, thom_pattern(1), 1)
    sec = jiggle_exp(tower, FlatModel(1))
    snap = section_homotopy_to_zero(sec, 1, 0)
    for v in sec.base.vertices:
        assert snap.fiber_points[v] == sec.lift[v]
        assert snap.base_points[v] == sec.base.point(v)
    snap0 = section_homotopy_to_zero(sec, 0, 1)
    assert all(p == (0,) for p in snap0.fiber_points.values())
    with pytest.raises(InvalidTime):
        section_homotopy_to_zero(sec, 2, 0)


def test_section_homotopy_never_tangent_to_exp_leaves():
    # circle model: leaves have slope -1; snapshot cells never align with them
    c = circle()
    tower = iterate_fold(c, thom_pattern(1), 1)
    sec = jiggle_exp(tower, FlatModel(1))
    for ku in range(17):
        for ks in range(17):
            snap = section_homotopy_to_zero(sec, F(ku, 16), F(ks, 16))
            for _, rows in snap.embedded_cells():
                (x0, v0), (x1, v1) = rows
                dx, dv = x1 - x0, v1 - v0
                if dx == 0 and dv == 0:
                    continue  # cell collapsed at s=1
                assert dx + dv != 0  # tangent to a leaf iff dx = -dv


def test_convergence_profile_strictly_decreasing():
    T = torus_triangulation(2, 3)
    prof = fiber_convergence_profile(T, thom_pattern(2), r_max=4)
    vals = [row["hausdorff_sq"] for row in prof]
    assert all(isinstance(v, F) for v in vals)
    assert all(vals[i + 1] < vals[i] for i in range(len(vals) - 1))
    for row in prof:
        assert row["hausdorff_sq"] <= 2 * row["cell_diam_sq"]


def test_convergence_profile_circle():
    c = circle()
    prof = fiber_convergence_profile(c, thom_pattern(1), r_max=4)
    vals = [row["hausdorff_sq"] for row in prof]
    assert all(vals[i + 1] < vals[i] for i in range(len(vals) - 1))
