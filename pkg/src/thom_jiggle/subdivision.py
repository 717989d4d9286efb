"""Thom's simplex subdivision pattern, folding towers, and prism subdivisions.

The n-pattern subdivides the standard simplex with an inverted interior copy
and comes with a simplicial folding map that is surjective on every top cell
and hereditary on facets.  Applying it repeatedly to a complex produces
arbitrarily fine subdivisions together with the composed folding map.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations

from ._rational import (
    ONE,
    ZERO,
    barycenter,
    convex,
    edge_matrix,
    frac,
    mat_rank,
    solve,
    vadd,
    vdot,
    vscale,
    vsub,
)
from .core import (
    SimplicialComplex,
    SimplicialMap,
    build_complex,
    find_isomorphism,
    tiling_check,
)
from .errors import (
    DiameterTooLarge,
    DimensionMismatch,
    GluingConflict,
    InvalidParams,
    InvalidTime,
    TilingFailure,
)

DEFAULT_T = Fraction(1, 4)
DEFAULT_U1 = Fraction(1, 3)
DEFAULT_U0 = Fraction(2, 3)

# fallback shrink factors tried when a higher-dimensional realization fails
T_GRID = (Fraction(1, 5), Fraction(1, 6), Fraction(1, 8), Fraction(1, 10))

_PATTERN_CACHE = {}


def standard_simplex_complex(n: int) -> SimplicialComplex:
    """conv(0, e_1, ..., e_n) in R^n with vertex ids 0..n."""
    verts = {}
    for i in range(n + 1):
        verts[i] = tuple(ONE if j == i - 1 else ZERO for j in range(n))
    return build_complex(n, verts, [tuple(range(n + 1))])


def _normalize_params(params):
    params = dict(params or {})
    return {
        "t": frac(params.get("t", DEFAULT_T)),
        "u1": frac(params.get("u1", DEFAULT_U1)),
        "u0": frac(params.get("u0", DEFAULT_U0)),
    }


@dataclass(frozen=True)
class ThomPattern:
    """The pair (pattern complex inside the standard simplex, folding map).

    Corner ids 0..n are shared between the pattern and its target simplex;
    sigma fixes them.
    """

    n: int
    complex: SimplicialComplex
    sigma: SimplicialMap
    params: dict
    delta: SimplicialComplex
    delta_vertex_ids: tuple = ()

    def top_count(self):
        return len(self.complex.simplices_of_dim(self.n))


def thom_pattern(n: int, params=None) -> ThomPattern:
    """Construct and fully verify the n-dimensional pattern.

    For n >= 3 a failed tiling triggers a retry over a small grid of shrink
    factors; an exhausted grid raises TilingFailure with the certificate.
    """
    if n < 0:
        raise InvalidParams("pattern dimension must be >= 0")
    params = _normalize_params(params)
    t, u1, u0 = params["t"], params["u1"], params["u0"]
    if not (0 < t < 1):
        raise InvalidParams(f"shrink factor t={t} outside (0, 1)")
    if not (0 < u1 < u0 < 1):
        raise InvalidParams(f"edge positions u1={u1}, u0={u0} must satisfy 0<u1<u0<1")
    key = (n, t, u1, u0)
    if key in _PATTERN_CACHE:
        return _PATTERN_CACHE[key]

    candidates = [t] if n < 3 else [t] + [g for g in T_GRID if g != t]
    last_report = None
    for t_try in candidates:
        p = _build_pattern(n, {"t": t_try, "u1": u1, "u0": u0})
        report = verify_pattern(p)
        if report.passed:
            _PATTERN_CACHE[key] = p
            return p
        last_report = report
    raise TilingFailure(
        f"pattern n={n} does not tile for t in {candidates}",
        certificate=last_report.tiling.first_violation() if last_report else None,
    )


def _build_pattern(n, params):
    delta = standard_simplex_complex(n)
    if n == 0:
        return ThomPattern(0, delta, SimplicialMap.identity(delta), params, delta,
                           (0,))
    prev = thom_pattern(n - 1, params)
    v_pts = [delta.point(i) for i in range(n + 1)]
    coords = {i: v_pts[i] for i in range(n + 1)}
    by_coord = {v_pts[i]: i for i in range(n + 1)}
    sigma_img = {i: i for i in range(n + 1)}
    next_id = n + 1
    bd_simplices = set()

    prev_std_pts = [prev.delta.point(i) for i in range(n)]
    for i in range(n + 1):
        idxs = [j for j in range(n + 1) if j != i]
        fpts = [v_pts[j] for j in idxs]
        amap = _affine_vertex_map(prev_std_pts, fpts)
        local = {}
        for pv in sorted(prev.complex.vertices):
            q = amap(prev.complex.point(pv))
            vid = by_coord.get(q)
            if vid is None:
                vid = next_id
                next_id += 1
                coords[vid] = q
                by_coord[q] = vid
            target = idxs[prev.sigma.vertex_images[pv]]
            if sigma_img.get(vid, target) != target:
                raise GluingConflict(
                    f"facet patterns disagree on folding target at {q}"
                )
            sigma_img[vid] = target
            local[pv] = vid
        for s in prev.complex.simplices:
            bd_simplices.add(tuple(sorted(local[v] for v in s)))

    c = barycenter(v_pts)
    w_ids = []
    t = params["t"]
    for i in range(n + 1):
        if n == 1:
            w = (params["u0"],) if i == 0 else (params["u1"],)
        else:
            w = vadd(c, vscale(-t, vsub(v_pts[i], c)))
        vid = next_id
        next_id += 1
        coords[vid] = w
        by_coord[w] = vid
        sigma_img[vid] = i
        w_ids.append(vid)

    support = {vid: _bary_support(coords[vid]) for vid in coords}
    simplex_support = {
        s: frozenset().union(*(support[v] for v in s)) for s in bd_simplices
    }
    tops = []
    for size in range(1, n + 2):
        for subset in combinations(range(n + 1), size):
            phi = [w_ids[i] for i in subset]
            face = frozenset(range(n + 1)) - set(subset)
            if not face:
                tops.append(tuple(sorted(phi)))
                continue
            want = len(face)
            for s in bd_simplices:
                if len(s) == want and simplex_support[s] <= face:
                    tops.append(tuple(sorted(phi + list(s))))
    pattern = build_complex(n, coords, tops)
    sigma = SimplicialMap(pattern, delta, sigma_img)
    return ThomPattern(n, pattern, sigma, params, delta, tuple(range(n + 1)))


def _bary_support(x):
    lam0 = ONE - sum(x, ZERO)
    sup = set()
    if lam0 > 0:
        sup.add(0)
    for i, xi in enumerate(x):
        if xi > 0:
            sup.add(i + 1)
    return frozenset(sup)


def _affine_vertex_map(src_pts, dst_pts):
    """Affine map determined by the vertex correspondence src[i] -> dst[i].

    Works for simplices of any dimension via barycentric weights computed
    exactly from the Gram system of the source edges.
    """
    base = src_pts[0]
    edges = [vsub(q, base) for q in src_pts[1:]]
    if edges:
        gram = [[vdot(e, f) for f in edges] for e in edges]

    def f(p):
        if not edges:
            return dst_pts[0]
        rhs = [vdot(vsub(p, base), e) for e in edges]
        w = solve(gram, rhs)
        lam = (ONE - sum(w, ZERO),) + tuple(w)
        return convex(dst_pts, lam)

    return f


# --- verification -----------------------------------------------------------------


@dataclass
class PatternReport:
    surjectivity_failures: list = field(default_factory=list)
    heredity_failures: list = field(default_factory=list)
    tiling: object = None
    top_count: int = 0

    @property
    def passed(self):
        return (
            not self.surjectivity_failures
            and not self.heredity_failures
            and (self.tiling is None or self.tiling.passed)
        )


def verify_pattern(p: ThomPattern) -> PatternReport:
    """Re-check sigma surjectivity per top cell, facet heredity, and exact tiling."""
    report = PatternReport(top_count=p.top_count())
    n = p.n
    for s in p.complex.simplices_of_dim(n):
        image = {p.sigma.vertex_images[v] for v in s}
        if len(image) != n + 1:
            report.surjectivity_failures.append(
                {"simplex": s, "image": tuple(sorted(image))}
            )
    if n >= 1:
        prev = thom_pattern(n - 1, p.params)
        for i in range(n + 1):
            fail = _heredity_failure(p, prev, i)
            if fail is not None:
                report.heredity_failures.append(fail)
    region = [p.delta.point(i) for i in range(n + 1)]
    report.tiling = tiling_check(p.complex, region)
    return report


def _heredity_failure(p, prev, facet_index):
    n = p.n
    idxs = [j for j in range(n + 1) if j != facet_index]
    support = {
        v: _bary_support(p.complex.point(v)) for v in p.complex.vertices
    }
    face_set = frozenset(idxs)
    members = [
        s
        for s in p.complex.simplices
        if all(support[v] <= face_set for v in s)
    ]
    if not members:
        return {"facet": facet_index, "reason": "empty restriction"}
    fpts = [p.delta.point(j) for j in idxs]
    prev_std_pts = [prev.delta.point(i) for i in range(n)]
    inv = _affine_vertex_map(fpts, prev_std_pts)
    vids = sorted({v for s in members for v in s})
    try:
        facet_complex = build_complex(
            n - 1, {v: inv(p.complex.point(v)) for v in vids}, members
        )
    except Exception as exc:  # degenerate restriction is a heredity failure
        return {"facet": facet_index, "reason": f"invalid restriction: {exc}"}
    iso = find_isomorphism(facet_complex, prev.complex)
    if iso is None:
        return {"facet": facet_index, "reason": "no simplicial isomorphism"}
    # sigma compatibility along the coordinate identification
    prev_by_coord = {prev.complex.point(v): v for v in prev.complex.vertices}
    for v in vids:
        q = inv(p.complex.point(v))
        pv = prev_by_coord.get(q)
        if pv is None:
            return {"facet": facet_index, "reason": f"unmatched vertex at {q}"}
        expected = idxs[prev.sigma.vertex_images[pv]]
        if p.sigma.vertex_images[v] != expected:
            return {
                "facet": facet_index,
                "reason": f"sigma mismatch at vertex {v}",
            }
    return None


# --- applying the pattern -----------------------------------------------------------


def thom_subdivide(T: SimplicialComplex, p: ThomPattern):
    """Subdivide every maximal cell of T by the (hereditary) pattern.

    Returns the subdivision and the glued folding map onto T.  T may contain
    maximal cells below dimension p.n; they receive the lower pattern.
    """
    n = p.n
    maxs = T.maximal_simplices()
    if any(len(s) - 1 > n for s in maxs):
        raise DimensionMismatch(
            f"complex has cells above pattern dimension {n}"
        )
    if T.periods is not None:
        for s in maxs:
            if T.sq_diameter(s) * 4 >= 1:
                raise DiameterTooLarge(
                    f"cell {s} too large for coherent periodic lifting"
                )
    lower = {}
    for s in maxs:
        d = len(s) - 1
        if d < n and d not in lower:
            lower[d] = thom_pattern(d, p.params)

    coords = dict(T.vertices)
    by_coord = {}
    for vid in sorted(T.vertices):
        by_coord.setdefault(T.vertices[vid], vid)
    next_id = max(T.vertices) + 1 if T.vertices else 0
    sigma_img = {}
    tops = []
    for tau in maxs:
        d = len(tau) - 1
        pat = p if d == n else lower[d]
        src_pts = [pat.delta.point(i) for i in range(d + 1)]
        amap = _affine_vertex_map(src_pts, T.lifted_points(tau))
        local = {}
        for pv in sorted(pat.complex.vertices):
            q = amap(pat.complex.point(pv))
            if T.periods is not None:
                q = _wrap_coords(q, T.periods)
            vid = by_coord.get(q)
            if vid is None:
                vid = next_id
                next_id += 1
                coords[vid] = q
                by_coord[q] = vid
            target = tau[pat.sigma.vertex_images[pv]]
            if sigma_img.get(vid, target) != target:
                raise GluingConflict(
                    f"inconsistent folding target at {q} (cells sharing a face)"
                )
            sigma_img[vid] = target
            local[pv] = vid
        for s in pat.complex.simplices_of_dim(d):
            tops.append(tuple(sorted(local[v] for v in s)))
    out = build_complex(T.ambient_dim, coords, tops, None, T.periods)
    return out, SimplicialMap(out, T, sigma_img)


def _wrap_coords(p, periods):
    out = []
    for x, per in zip(p, periods):
        if per is None:
            out.append(x)
        else:
            per = frac(per)
            out.append(x - per * (x / per).__floor__())
    return tuple(out)


@dataclass(frozen=True)
class FoldingTower:
    """Iterated pattern applications T = T^0 <- T^1 <- ... <- T^r with the
    composed folding map T^r -> T."""

    base: SimplicialComplex
    pattern: ThomPattern
    levels: tuple  # of (complex, map to previous level)
    composed: SimplicialMap

    @property
    def order(self):
        return len(self.levels)

    @property
    def top_complex(self):
        return self.levels[-1][0] if self.levels else self.base


def iterate_fold(T: SimplicialComplex, p: ThomPattern, r: int) -> FoldingTower:
    if r < 0:
        raise InvalidParams("folding order must be >= 0")
    levels = []
    composed = SimplicialMap.identity(T)
    cur = T
    for _ in range(r):
        nxt, m = thom_subdivide(cur, p)
        levels.append((nxt, m))
        composed = composed.compose(m)
        cur = nxt
    return FoldingTower(T, p, tuple(levels), composed)


def fold_bijective_on_top(tower: FoldingTower):
    """Exact check that the composed map is an affine bijection on every top cell.

    Both source and image cells are non-degenerate by complex validity, so
    bijectivity reduces to the vertex images being pairwise distinct.
    """
    top = tower.top_complex
    fails = []
    for s in top.top_simplices():
        img = [tower.composed.vertex_images[v] for v in s]
        if len(set(img)) != len(img):
            fails.append(s)
            continue
        pts = tower.base.lifted_points(tuple(sorted(set(img))))
        if mat_rank(edge_matrix(pts)) != len(pts) - 1:
            fails.append(s)
    return fails


# --- unfolding homotopy ------------------------------------------------------------


@dataclass(frozen=True)
class UnfoldingSnapshot:
    """Time-s piecewise-affine map from the (deformed) pattern to the simplex.

    Domain vertices and their images move simultaneously; at s=0 the map is
    exactly the folding map, at s=1 interior cells collapse to barycenters.
    """

    pattern: ThomPattern
    s: Fraction
    domain_coords: dict
    image_coords: dict

    def top_rank_failures(self, skip_collapsed=True):
        n = self.pattern.n
        fails = []
        for simplex in self.pattern.complex.simplices_of_dim(n):
            dom = [self.domain_coords[v] for v in simplex]
            if skip_collapsed and mat_rank(edge_matrix(dom)) < n:
                continue
            img = [self.image_coords[v] for v in simplex]
            if mat_rank(edge_matrix(img)) < n:
                fails.append(simplex)
        return fails


def unfolding_homotopy(p: ThomPattern, s) -> UnfoldingSnapshot:
    """Snapshot of the homotopy from the folding map toward the identity.

    Every subdivision vertex shrinks toward the barycenter of the face of the
    simplex owning it while its image interpolates toward the same barycenter.
    """
    s = frac(s)
    if not (0 <= s <= 1):
        raise InvalidTime(f"homotopy time {s} outside [0, 1]")
    n = p.n
    v_pts = [p.delta.point(i) for i in range(n + 1)]
    dom = {}
    img = {}
    for v in p.complex.vertices:
        x = p.complex.point(v)
        owner = sorted(_bary_support(x))
        b = barycenter([v_pts[i] for i in owner])
        dom[v] = vadd(vscale(ONE - s, x), vscale(s, b))
        target = v_pts[p.sigma.vertex_images[v]]
        img[v] = vadd(vscale(ONE - s, target), vscale(s, b))
    return UnfoldingSnapshot(p, s, dom, img)


# --- Whitney standard subdivision of prisms ---------------------------------------


def whitney_prism_subdivide(base: SimplicialComplex, t0, t1, vertex_order=None):
    """Triangulate base x [t0, t1] by the order-determined staircase rule.

    Each prism tau x [t0, t1] with tau = (w_0 < ... < w_k) splits into the
    k+1 simplices ((w_0,t0),...,(w_i,t0),(w_i,t1),...,(w_k,t1)); adjacent
    prisms agree on shared faces because the order is global.
    """
    t0, t1 = frac(t0), frac(t1)
    if not t0 < t1:
        raise InvalidParams(f"need t0 < t1, got {t0}, {t1}")
    if vertex_order is None:
        vertex_order = sorted(base.vertices)
    pos = {v: i for i, v in enumerate(vertex_order)}
    if sorted(pos) != sorted(base.vertices):
        raise InvalidParams("vertex_order must enumerate the base vertices")
    ids = sorted(base.vertices)
    bottom = {v: i for i, v in enumerate(ids)}
    top = {v: i + len(ids) for i, v in enumerate(ids)}
    coords = {}
    for v in ids:
        coords[bottom[v]] = base.vertices[v] + (t0,)
        coords[top[v]] = base.vertices[v] + (t1,)
    cells = []
    for tau in base.maximal_simplices():
        ordered = sorted(tau, key=lambda v: pos[v])
        k = len(ordered) - 1
        for i in range(k + 1):
            cell = [bottom[w] for w in ordered[: i + 1]] + [top[w] for w in ordered[i:]]
            cells.append(tuple(sorted(cell)))
    periods = base.periods + (None,) if base.periods is not None else None
    return build_complex(base.ambient_dim + 1, coords, cells, None, periods)
