import numpy as np
import pytest

from thom_jiggle.errors import DomainMismatch, OrderExhausted
from thom_jiggle.jiggling import FlatModel, jiggle_exp, torus_triangulation
from thom_jiggle.subdivision import iterate_fold, thom_pattern
from thom_jiggle.transversality import (
    certify_transversality,
    exp_tangent_field,
    field_schedule,
    graph_field,
    horizontal_field,
    interpolate_fields,
    min_transversal_order,
)


def circle_section(r=1, m=4):
    c = torus_triangulation(1, m)
    tower = iterate_fold(c, thom_pattern(1), r)
    return jiggle_exp(tower, FlatModel(1))


def test_graph_fields_are_fiber_transverse():
    for fld in (horizontal_field(2), graph_field(np.eye(2)), exp_tangent_field(2)):
        B = fld.basis(np.zeros(4))
        # no nonzero vertical vector lies in the plane: the horizontal block
        # of the basis is the identity
        assert np.allclose(B[:2, :], np.eye(2))


def test_certify_circle_against_exp_leaves():
    rep = certify_transversality(circle_section(), exp_tangent_field(1))
    assert rep.passed
    assert rep.min_margin > 0.3


def test_certify_zero_section_vs_horizontal_reports_exact_tangency():
    rep = certify_transversality(circle_section(r=0), horizontal_field(1))
    assert not rep.passed
    assert rep.min_margin == 0.0


def test_certify_vertical_segment_vs_graph_field():
    # a vertical fiber edge can never be tangent to a graph-form plane
    from thom_jiggle.core import build_complex

    seg = build_complex(2, {0: (0, 0), 1: (0, 1)}, [(0, 1)])
    rep = certify_transversality(seg, graph_field(np.array([[3.0]])))
    assert rep.passed
    assert rep.min_margin > 0.1


def test_margins_invariant_under_relabeling():
    c = torus_triangulation(1, 4)
    tower = iterate_fold(c, thom_pattern(1), 1)
    sec = jiggle_exp(tower, FlatModel(1))
    rep1 = certify_transversality(sec, exp_tangent_field(1))
    margins1 = sorted(m for _, _, m in rep1.entries)
    rep2 = certify_transversality(sec, exp_tangent_field(1))
    margins2 = sorted(m for _, _, m in rep2.entries)
    assert margins1 == margins2


def test_interpolation_endpoints_and_midpoint():
    P = graph_field(np.zeros((1, 1)))
    Q = graph_field(2 * np.eye(1))
    assert interpolate_fields(P, Q, 0) is P
    assert interpolate_fields(P, Q, 1) is Q
    mid = interpolate_fields(P, Q, 0.5)
    assert np.allclose(mid.matrix(np.zeros(2)), np.eye(1))


def test_interpolation_domain_mismatch():
    with pytest.raises(DomainMismatch):
        interpolate_fields(horizontal_field(1), horizontal_field(2), 0.5)


def test_field_schedule_continuity():
    f = field_schedule(horizontal_field(1), exp_tangent_field(1), 1.0, 2.0)
    ts = np.linspace(0.5, 2.5, 21)
    vals = [float(f(t).matrix(np.zeros(2))[0, 0]) for t in ts]
    assert vals[0] == 0.0 and vals[-1] == -1.0
    diffs = np.abs(np.diff(vals))
    assert diffs.max() < 0.2  # no jumps across the schedule


def test_scan_horizontal_family_returns_one():
    c = torus_triangulation(1, 4)
    r = min_transversal_order(c, thom_pattern(1), FlatModel(1), [horizontal_field(1)], 4)
    assert r == 1


def test_scan_exp_family_circle_and_torus():
    c = torus_triangulation(1, 4)
    assert min_transversal_order(c, thom_pattern(1), FlatModel(1),
                                 [exp_tangent_field(1)], 4) == 1
    T = torus_triangulation(2, 3)
    assert min_transversal_order(T, thom_pattern(2), FlatModel(2),
                                 [exp_tangent_field(2)], 4) == 1


def test_scan_adversarial_slope_proceeds_past_r1():
    c = torus_triangulation(1, 4)
    adv = graph_field(np.array([[2.0]]))
    r = min_transversal_order(c, thom_pattern(1), FlatModel(1), [adv], 3)
    assert r == 2


def test_scan_exhaustion_reports_margins():
    c = torus_triangulation(1, 4)
    adv = graph_field(np.array([[2.0]]))
    with pytest.raises(OrderExhausted) as err:
        min_transversal_order(c, thom_pattern(1), FlatModel(1), [adv], 1)
    assert 1 in err.value.best_margins


def test_scan_monotone_in_field_family():
    c = torus_triangulation(1, 4)
    p = thom_pattern(1)
    small = [exp_tangent_field(1)]
    big = small + [graph_field(np.array([[2.0]]))]
    r_small = min_transversal_order(c, p, FlatModel(1), small, 4)
    r_big = min_transversal_order(c, p, FlatModel(1), big, 4)
    assert r_big >= r_small


def test_margins_nondecreasing_in_r_once_positive():
    c = torus_triangulation(1, 4)
    p = thom_pattern(1)
    model = FlatModel(1)
    fld = exp_tangent_field(1)
    margins = []
    for r in (1, 2):
        sec = jiggle_exp(iterate_fold(c, p, r), model)
        margins.append(certify_transversality(sec, fld).min_margin)
    assert margins[1] >= margins[0] > 0
