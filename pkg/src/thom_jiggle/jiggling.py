"""Flat-model triangulations and jiggled piecewise-affine sections.

Two section constructions live here: the displacement section determined by
exp_x(j(x)) = fold(x) on a flat model, and the colored section that composes
a vertex coloring with the folding map.  Both are affine on each cell of the
subdivided complex.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import permutations

from ._rational import (
    ONE,
    ZERO,
    edge_matrix,
    frac,
    mat_rank,
    minimal_norm_rep,
    solve,
    sq_distance_point_simplex,
    vadd,
    vdot,
    vscale,
    vsub,
)
from .core import SimplicialComplex, barycentric_subdivide, build_complex
from .errors import (
    DiameterTooLarge,
    DimensionMismatch,
    ImproperColoring,
    InvalidParams,
    InvalidTime,
    UnsupportedDimension,
)
from .subdivision import FoldingTower, ThomPattern, _affine_vertex_map, unfolding_homotopy


@dataclass(frozen=True)
class FlatModel:
    """Flat base geometry: the unit torus R^n/Z^n or a box domain in R^n.

    exp_x(v) = x + v, reduced to the minimal-norm representative on the torus.
    """

    n: int
    kind: str = "torus"
    bounds: tuple | None = None

    def __post_init__(self):
        if self.kind not in ("torus", "box"):
            raise InvalidParams(f"unknown model kind {self.kind!r}")

    @property
    def periods(self):
        return tuple(ONE for _ in range(self.n)) if self.kind == "torus" else None

    def reduce(self, v):
        if self.kind == "torus":
            return minimal_norm_rep(v, self.periods)
        return tuple(v)

    def wrap(self, x):
        if self.kind != "torus":
            return tuple(x)
        return tuple(xi - xi.__floor__() for xi in x)

    def exp(self, x, v):
        return self.wrap(vadd(x, v))


def torus_triangulation(n: int, m: int) -> SimplicialComplex:
    """Colored triangulation of the unit n-torus on an m-grid.

    Kuhn-triangulates [0,1]^n with spacing 1/m, takes one barycentric
    subdivision (which colors vertices by dimension), then identifies
    opposite boundary faces by exact coordinate wraparound.
    """
    if n not in (1, 2, 3):
        raise UnsupportedDimension(f"torus triangulation implemented for n in 1..3, got {n}")
    if m < 1:
        raise InvalidParams("grid resolution m must be >= 1")
    grid = _kuhn_grid(n, m)
    sub, _ = barycentric_subdivide(grid)
    return _wrap_identify(sub)


def _kuhn_grid(n, m):
    step = Fraction(1, m)
    ids = {}
    coords = {}
    for idx, key in enumerate(_lattice(n, m + 1)):
        ids[key] = idx
        coords[idx] = tuple(step * k for k in key)
    cells = []
    for corner in _lattice(n, m):
        for perm in permutations(range(n)):
            chain = [tuple(corner)]
            for axis in perm:
                prev = chain[-1]
                nxt = list(prev)
                nxt[axis] += 1
                chain.append(tuple(nxt))
            cells.append(tuple(sorted(ids[k] for k in chain)))
    return build_complex(n, coords, cells)


def _lattice(n, size):
    if n == 0:
        yield ()
        return
    for rest in _lattice(n - 1, size):
        for k in range(size):
            yield rest + (k,)


def _wrap_identify(c: SimplicialComplex):
    periods = tuple(ONE for _ in range(c.ambient_dim))
    remap = {}
    coords = {}
    by_coord = {}
    coloring = {}
    for v in sorted(c.vertices):
        w = tuple(x - x.__floor__() for x in c.vertices[v])
        vid = by_coord.get(w)
        if vid is None:
            vid = len(coords)
            coords[vid] = w
            by_coord[w] = vid
            coloring[vid] = c.coloring[v]
        elif coloring[vid] != c.coloring[v]:
            raise ImproperColoring("wraparound identified vertices of unlike color")
        remap[v] = vid
    cells = {tuple(sorted({remap[v] for v in s})) for s in c.maximal_simplices()}
    return build_complex(c.ambient_dim, coords, cells, coloring, periods)


# --- sections -----------------------------------------------------------------------


@dataclass(frozen=True)
class PLSection:
    """Piecewise-affine section of the trivial fiber bundle over a complex.

    The lift holds one exact fiber vector per vertex; the section is affine on
    each cell.  `kind` records how the lift is meant: a displacement measured
    from the base point ("exp") or an absolute fiber position ("colored").
    """

    base: SimplicialComplex
    lift: dict
    model: FlatModel
    kind: str = "exp"
    tower: FoldingTower | None = None
    bundle_radius: Fraction | None = None

    @property
    def fiber_dim(self):
        return len(next(iter(self.lift.values()))) if self.lift else 0

    def max_lift_sq(self):
        return max((vdot(v, v) for v in self.lift.values()), default=ZERO)

    def embedded_cells(self):
        """Yield (simplex, point rows) with base coordinates lifted coherently."""
        for s in self.base.maximal_simplices():
            pts = self.base.lifted_points(s)
            yield s, [pts[i] + self.lift[v] for i, v in enumerate(s)]


def max_sq_diameter(c: SimplicialComplex):
    return max((c.sq_diameter(s) for s in c.maximal_simplices()), default=ZERO)


def jiggle_exp(tower: FoldingTower, model: FlatModel, bundle_radius=None) -> PLSection:
    """Displacement section: lift(x) is the minimal-norm representative of
    fold(x) - x; exactly zero on the vertices of the unsubdivided complex."""
    T = tower.base
    if T.ambient_dim != model.n:
        raise DimensionMismatch("model dimension does not match the complex")
    diam_sq = max_sq_diameter(T)
    if model.kind == "torus" and diam_sq * 4 >= 1:
        raise DiameterTooLarge(
            "triangulation too coarse: a cell exceeds the injectivity margin"
        )
    if bundle_radius is None:
        bundle_radius = _default_radius(diam_sq)
        if bundle_radius * bundle_radius < diam_sq:
            raise DiameterTooLarge(
                "default disk bundle (1/2 minus max diameter) cannot hold the "
                "jiggled lifts; pass bundle_radius explicitly"
            )
    bundle_radius = frac(bundle_radius)
    top = tower.top_complex
    periods = T.periods
    lift = {}
    for v in sorted(top.vertices):
        disp = vsub(T.point(tower.composed.vertex_images[v]), top.point(v))
        if periods is not None:
            disp = minimal_norm_rep(disp, periods)
        lift[v] = disp
    return PLSection(top, lift, model, "exp", tower, bundle_radius)


def _default_radius(diam_sq):
    # rational undershoot of 1/2 - sqrt(diam_sq)
    half = Fraction(1, 2)
    d = _sqrt_upper(diam_sq)
    return half - d if d < half else Fraction(0)


def _sqrt_upper(x, iters=40):
    """Rational upper bound on sqrt(x) by a few Newton steps from above."""
    x = frac(x)
    if x == 0:
        return ZERO
    g = x if x >= 1 else ONE
    for _ in range(iters):
        g = (g + x / g) / 2
        g = g.limit_denominator(10**12)
        if g * g < x:
            g = x / g  # keep an upper bound
    return g


def jiggle_colored(tower: FoldingTower, coloring, target_simplex) -> PLSection:
    """Colored section: lift(x) is the target vertex whose color is the color
    of fold(x); values are independent of the folding order on base vertices."""
    T = tower.base
    target = [tuple(frac(x) for x in p) for p in target_simplex]
    k = len(target) - 1
    if any(len(p) != k for p in target):
        raise DimensionMismatch("target simplex must be full-dimensional")
    if k >= 1 and mat_rank(edge_matrix(target)) != k:
        raise InvalidParams("target simplex is degenerate")
    colors = dict(coloring)
    for s in T.simplices_of_dim(1):
        if colors.get(s[0]) == colors.get(s[1]):
            raise ImproperColoring(f"edge {s} carries one color twice")
    for v in T.vertices:
        cv = colors.get(v)
        if cv is None or not 0 <= cv <= k:
            raise ImproperColoring(f"vertex {v} has no usable color for the target")
    top = tower.top_complex
    lift = {}
    for v in sorted(top.vertices):
        lift[v] = target[colors[tower.composed.vertex_images[v]]]
    model = FlatModel(T.ambient_dim, "torus" if T.periods else "box")
    return PLSection(top, lift, model, "colored", tower, None)


# --- homotopy of sections toward the zero section -------------------------------------


@dataclass(frozen=True)
class SectionSnapshot:
    """Embedded time-(u, s) stage of the homotopy from a jiggled section to zero.

    Base points move along exponential leaves (leafwise homothety by u) while
    the folding map unfolds with s; cells are embedded in base x fiber space.
    """

    complex: SimplicialComplex
    base_points: dict
    fiber_points: dict
    model: FlatModel
    u: Fraction
    s: Fraction

    def embedded_cells(self):
        periods = self.complex.periods
        for cell in self.complex.maximal_simplices():
            base0 = self.base_points[cell[0]]
            rows = []
            for v in cell:
                b = self.base_points[v]
                if periods is not None:
                    b = vadd(base0, minimal_norm_rep(vsub(b, base0), periods))
                rows.append(b + self.fiber_points[v])
            yield cell, rows


def section_homotopy_to_zero(section: PLSection, u, s) -> SectionSnapshot:
    """Snapshot of the two-stage homotopy: fiber homothety by u along the
    exponential leaves, then unfolding of the last folding level by s."""
    if section.kind != "exp" or section.tower is None:
        raise InvalidParams("homotopy applies to sections produced by jiggle_exp")
    u, s = frac(u), frac(s)
    if not (0 <= u <= 1) or not (0 <= s <= 1):
        raise InvalidTime(f"homotopy parameters (u={u}, s={s}) outside [0,1]")
    tower = section.tower
    model = section.model
    top = tower.top_complex
    disp = _unfolded_displacements(tower, s)
    base_pts = {}
    fiber_pts = {}
    one_minus_u = ONE - u
    for v in sorted(top.vertices):
        dom, d = disp[v]
        base = vadd(dom, vscale(one_minus_u, d))
        base_pts[v] = model.wrap(base) if model.kind == "torus" else base
        fiber_pts[v] = vscale(u, d)
    return SectionSnapshot(top, base_pts, fiber_pts, model, u, s)


def _unfolded_displacements(tower: FoldingTower, s):
    """Per-vertex (deformed position, fold displacement) at unfolding time s.

    The last folding level is replaced by its unfolding snapshot; earlier
    levels stay folded.  At s=0 this reproduces the composed displacement.
    """
    top = tower.top_complex
    periods = top.periods
    out = {}
    if tower.order == 0:
        for v in top.vertices:
            out[v] = (top.point(v), tuple(ZERO for _ in range(top.ambient_dim)))
        return out
    prev = tower.levels[-2][0] if tower.order >= 2 else tower.base
    prev_to_base = (
        _composed_upto(tower, tower.order - 1)
    )
    pattern = tower.pattern
    snap = unfolding_homotopy(pattern, s)
    std_pts = [pattern.delta.point(i) for i in range(pattern.n + 1)]
    pattern_by_coord = {pattern.complex.point(pv): pv for pv in pattern.complex.vertices}
    prev_tops = prev.maximal_simplices()
    for tau in prev_tops:
        tau_pts = prev.lifted_points(tau)
        amap = _affine_vertex_map(std_pts, tau_pts)
        inv = _affine_vertex_map(tau_pts, std_pts)
        # image of tau under the earlier folds, lifted near tau
        img_ids = [prev_to_base[v] for v in tau]
        img_pts = []
        for vid in img_ids:
            q = tower.base.point(vid)
            if periods is not None:
                q = vadd(tau_pts[0], minimal_norm_rep(vsub(q, tau_pts[0]), periods))
            img_pts.append(q)
        fold_prev = _affine_vertex_map(tau_pts, img_pts)
        for v in _vertices_inside(tower, tau):
            if v in out:
                continue
            x = _lift_near(tower.top_complex.point(v), tau_pts[0], periods)
            pv = pattern_by_coord.get(inv(x))
            if pv is None:
                continue
            dom = amap(snap.domain_coords[pv])
            img_level = amap(snap.image_coords[pv])
            target = fold_prev(img_level)
            d = vsub(target, dom)
            wrapped = dom
            if periods is not None:
                wrapped = tuple(xi - xi.__floor__() for xi in dom)
            out[v] = (wrapped, d)
    missing = [v for v in top.vertices if v not in out]
    if missing:
        raise DimensionMismatch(f"vertices not located in any parent cell: {missing}")
    return out


def _composed_upto(tower, level):
    """Vertex images of the composed fold from level `level` down to the base."""
    if level == 0:
        return {v: v for v in tower.base.vertices}
    images = dict(tower.levels[0][1].vertex_images)
    for complex_, m in tower.levels[1:level]:
        images = {v: images[w] for v, w in m.vertex_images.items()}
    return images


def _vertices_inside(tower, tau):
    """Vertices of the top complex lying inside the parent cell tau (exact)."""
    prev = tower.levels[-2][0] if tower.order >= 2 else tower.base
    top = tower.top_complex
    periods = top.periods
    tau_pts = prev.lifted_points(tau)
    base = tau_pts[0]
    rows = [vsub(p, base) for p in tau_pts[1:]]
    gram = [[vdot(a, b) for b in rows] for a in rows]
    out = []
    for v in sorted(top.vertices):
        x = _lift_near(top.point(v), base, periods)
        rhs = [vdot(vsub(x, base), r) for r in rows]
        w = solve(gram, rhs) if rows else ()
        if w is None:
            continue
        lam = [ONE - sum(w, ZERO)] + list(w)
        if all(c >= 0 for c in lam):
            # confirm the gram projection is the point itself
            proj = base
            for c, r in zip(w, rows):
                proj = vadd(proj, vscale(c, r))
            if proj == x:
                out.append(v)
    return out


def _lift_near(x, anchor, periods):
    if periods is None:
        return x
    return vadd(anchor, minimal_norm_rep(vsub(x, anchor), periods))


# --- convergence toward vertical fibers ------------------------------------------------


def fiber_convergence_profile(
    T: SimplicialComplex,
    pattern: ThomPattern,
    tau=None,
    weights=None,
    r_max=4,
):
    """Exact squared Hausdorff distances between the jiggled cell through a
    fixed point and the vertical fiber segment over it, for r = 1..r_max.

    Descends lazily through the folding tower (only the cell chain containing
    the point is subdivided), so r_max=4 stays cheap.  The affine
    identification at each level orders vertices by coordinates, a
    deterministic choice equivalent to relabeling.
    """
    if tau is None:
        tau = T.top_simplices()[0]
    n = len(tau) - 1
    if weights is None:
        raw = [Fraction(2**i) for i in range(n + 1)]  # generic, tie-free
        total = sum(raw, ZERO)
        weights = [w / total for w in raw]
    tau_pts = T.lifted_points(tau)
    x = tuple(
        sum((w * p[i] for w, p in zip(weights, tau_pts)), ZERO)
        for i in range(T.ambient_dim)
    )
    fiber_pts = [x + vsub(p, x) for p in tau_pts]
    std_pts = [pattern.delta.point(i) for i in range(pattern.n + 1)]
    sigma_img = pattern.sigma.vertex_images
    chain = [(p, p) for p in tau_pts]  # (position, fold image)
    profile = []
    for r in range(1, r_max + 1):
        ordered = sorted(chain, key=lambda pi: pi[0])
        amap = _affine_vertex_map(std_pts, [p for p, _ in ordered])
        found = None
        for cell in pattern.complex.simplices_of_dim(pattern.n):
            piece = []
            for pv in cell:
                q = amap(pattern.complex.point(pv))
                img = ordered[sigma_img[pv]][1]
                piece.append((q, img))
            if _contains_point(piece, x):
                found = piece
                break
        if found is None:
            raise DimensionMismatch("point escaped the subdivision chain")
        chain = found
        graph_pts = [q + vsub(img, q) for q, img in chain]
        d2 = _hausdorff_sq(graph_pts, fiber_pts)
        diam2 = max(
            vdot(vsub(a[0], b[0]), vsub(a[0], b[0]))
            for i, a in enumerate(chain)
            for b in chain[i + 1:]
        )
        profile.append({"r": r, "hausdorff_sq": d2, "cell_diam_sq": diam2})
    return profile


def _contains_point(piece, x):
    pts = [p for p, _ in piece]
    base = pts[0]
    cols = [vsub(p, base) for p in pts[1:]]
    matrix = [[col[i] for col in cols] for i in range(len(base))]
    sol = solve(matrix, list(vsub(x, base)))
    if sol is None:
        return False
    lam = [ONE - sum(sol, ZERO)] + list(sol)
    return all(c >= 0 for c in lam)


def _hausdorff_sq(pts_a, pts_b):
    best = ZERO
    for p in pts_a:
        d = sq_distance_point_simplex(p, pts_b)
        if d > best:
            best = d
    for p in pts_b:
        d = sq_distance_point_simplex(p, pts_a)
        if d > best:
            best = d
    return best
