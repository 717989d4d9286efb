"""Exact-arithmetic geometric simplicial complexes and their basic operators.

Complexes carry rational vertex coordinates and are immutable after
construction; every operation returns fresh values.  An optional per-axis
`periods` tuple supports flat-torus geometry: all geometric predicates then
work on minimal-norm lifts of edge vectors.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations

from ._rational import (
    ONE,
    ZERO,
    barycenter,
    bary_coords,
    edge_matrix,
    fm_feasible,
    frac,
    mat_rank,
    minimal_norm_rep,
    simplex_halfspaces,
    simplex_volume,
    solve,
    vadd,
    vdot,
    vec,
    vsub,
)
from .errors import (
    DanglingVertexId,
    DegenerateSimplex,
    DimensionMismatch,
    ImproperColoring,
    SizeLimitExceeded,
    UnknownSimplex,
)

ISO_SIMPLEX_CAP = 10_000


def _faces(simplex):
    """Every nonempty face of a simplex (including itself)."""
    out = []
    for k in range(1, len(simplex) + 1):
        out.extend(combinations(simplex, k))
    return out


def face_closure(simplices):
    closed = set()
    for s in simplices:
        closed.update(_faces(tuple(sorted(s))))
    return frozenset(closed)


@dataclass(frozen=True)
class SimplicialComplex:
    """Geometric simplicial complex with exact rational vertex coordinates.

    simplices holds sorted vertex-id tuples of every dimension (face-closed).
    """

    ambient_dim: int
    vertices: dict
    simplices: frozenset
    coloring: dict | None = None
    periods: tuple | None = None

    # -- structure ------------------------------------------------------------

    @property
    def dim(self) -> int:
        return max((len(s) - 1 for s in self.simplices), default=-1)

    def simplices_of_dim(self, k):
        return sorted(s for s in self.simplices if len(s) == k + 1)

    def top_simplices(self):
        return self.simplices_of_dim(self.dim)

    def maximal_simplices(self):
        out = []
        by_len = sorted(self.simplices, key=len, reverse=True)
        seen = set()
        for s in by_len:
            if s not in seen:
                out.append(s)
            seen.update(_faces(s))
        return sorted(out)

    def f_vector(self):
        counts = [0] * (self.dim + 1)
        for s in self.simplices:
            counts[len(s) - 1] += 1
        return tuple(counts)

    def euler_characteristic(self):
        return sum((-1) ** k * c for k, c in enumerate(self.f_vector()))

    # -- geometry ---------------------------------------------------------------

    def point(self, vid):
        return self.vertices[vid]

    def points(self, simplex):
        return tuple(self.vertices[v] for v in simplex)

    def lifted_points(self, simplex):
        """Vertex coordinates lifted coherently around the first vertex.

        On periodic complexes each later vertex is placed at the minimal-norm
        representative of its offset from the first vertex; otherwise this is
        just `points`.
        """
        pts = self.points(simplex)
        if self.periods is None:
            return pts
        base = pts[0]
        out = [base]
        for p in pts[1:]:
            out.append(vadd(base, minimal_norm_rep(vsub(p, base), self.periods)))
        return tuple(out)

    def simplex_volume(self, simplex):
        return simplex_volume(self.lifted_points(simplex))

    def sq_diameter(self, simplex):
        pts = self.lifted_points(simplex)
        best = ZERO
        for a, b in combinations(pts, 2):
            d = vsub(a, b)
            if self.periods is not None:
                d = minimal_norm_rep(d, self.periods)
            s = vdot(d, d)
            if s > best:
                best = s
        return best

    def __eq__(self, other):
        if not isinstance(other, SimplicialComplex):
            return NotImplemented
        return (
            self.ambient_dim == other.ambient_dim
            and self.vertices == other.vertices
            and self.simplices == other.simplices
            and self.coloring == other.coloring
            and self.periods == other.periods
        )


@dataclass(frozen=True)
class SimplicialMap:
    """Vertex-assignment map between complexes; simpliciality is validated."""

    source: SimplicialComplex
    target: SimplicialComplex
    vertex_images: dict

    def __post_init__(self):
        for v in self.source.vertices:
            if v not in self.vertex_images:
                raise DanglingVertexId(f"no image for source vertex {v}")
        for s in self.source.simplices:
            img = tuple(sorted({self.vertex_images[v] for v in s}))
            if img not in self.target.simplices:
                raise DanglingVertexId(
                    f"image {img} of simplex {s} is not a target simplex"
                )

    def image_simplex(self, simplex):
        return tuple(sorted({self.vertex_images[v] for v in simplex}))

    def compose(self, other: "SimplicialMap") -> "SimplicialMap":
        """self o other, requiring other.target is self.source by identity."""
        if other.target is not self.source:
            raise DimensionMismatch("maps are not composable (reference mismatch)")
        images = {v: self.vertex_images[w] for v, w in other.vertex_images.items()}
        return SimplicialMap(other.source, self.target, images)

    @staticmethod
    def identity(c: SimplicialComplex) -> "SimplicialMap":
        return SimplicialMap(c, c, {v: v for v in c.vertices})


@dataclass(frozen=True)
class Subcomplex:
    parent: SimplicialComplex
    simplices: frozenset

    def __post_init__(self):
        for s in self.simplices:
            if s not in self.parent.simplices:
                raise UnknownSimplex(f"{s} not in parent complex")
            for f in _faces(s):
                if f not in self.simplices:
                    raise UnknownSimplex(f"subcomplex not face-closed at {f}")

    def as_complex(self) -> SimplicialComplex:
        vids = sorted({v for s in self.simplices for v in s})
        verts = {v: self.parent.vertices[v] for v in vids}
        coloring = None
        if self.parent.coloring is not None:
            coloring = {v: self.parent.coloring[v] for v in vids}
        return SimplicialComplex(
            self.parent.ambient_dim, verts, frozenset(self.simplices), coloring,
            self.parent.periods,
        )


def build_complex(ambient_dim, vertices, simplices, coloring=None, periods=None):
    """Validated constructor; face closure is completed automatically.

    vertices maps id -> coordinate iterable (exact rationals); simplices lists
    at least the top cells.
    """
    verts = {}
    for vid, coords in vertices.items():
        cv = vec(coords)
        if len(cv) != ambient_dim:
            raise DimensionMismatch(
                f"vertex {vid} has {len(cv)} coordinates, expected {ambient_dim}"
            )
        verts[vid] = cv
    cells = set()
    for s in simplices:
        t = tuple(sorted(s))
        if len(set(t)) != len(t):
            raise DegenerateSimplex(t, f"repeated vertex in simplex {t}")
        for v in t:
            if v not in verts:
                raise DanglingVertexId(f"simplex {t} references unknown vertex {v}")
        cells.add(t)
    closed = face_closure(cells)
    c = SimplicialComplex(ambient_dim, verts, closed, dict(coloring) if coloring else None,
                          tuple(periods) if periods else None)
    validate_complex(c)
    return c


def validate_complex(c: SimplicialComplex):
    """Assert face closure, exact non-degeneracy of maximal simplices, and a
    proper coloring when present."""
    for s in c.simplices:
        for f in _faces(s):
            if f not in c.simplices:
                raise DanglingVertexId(f"missing face {f} of {s}")
    for s in c.maximal_simplices():
        if len(s) == 1:
            continue
        pts = c.lifted_points(s)
        edges = edge_matrix(pts)
        if mat_rank(edges) != len(edges):
            raise DegenerateSimplex(s)
    if c.coloring is not None:
        for v in c.vertices:
            if v not in c.coloring:
                raise ImproperColoring(f"vertex {v} has no color")
        for s in c.simplices_of_dim(1):
            if c.coloring[s[0]] == c.coloring[s[1]]:
                raise ImproperColoring(
                    f"edge {s} has repeated color {c.coloring[s[0]]}"
                )


def star_link(c: SimplicialComplex, s):
    """Closed star and link of a simplex, as subcomplexes."""
    s = tuple(sorted(s))
    if s not in c.simplices:
        raise UnknownSimplex(f"{s} not in complex")
    star_core = [t for t in c.simplices if set(s) <= set(t)]
    star = face_closure(star_core)
    link = frozenset(t for t in star if not set(t) & set(s))
    return Subcomplex(c, star), Subcomplex(c, link)


def barycentric_subdivide(c: SimplicialComplex):
    """First barycentric subdivision, colored by originating dimension.

    Returns the subdivision and the simplicial map sending each barycenter to
    the lowest-id vertex of its simplex.
    """
    order = sorted(c.simplices, key=lambda s: (len(s), s))
    new_id = {}
    coords = {}
    by_coord = {}
    coloring = {}
    images = {}
    for s in order:
        b = barycenter(c.lifted_points(s))
        if c.periods is not None:
            b = _wrap(b, c.periods)
        # wraparound can collide barycenters of identified simplices
        vid = by_coord.get(b)
        if vid is None:
            vid = len(coords)
            coords[vid] = b
            by_coord[b] = vid
        new_id[s] = vid
        coloring[vid] = len(s) - 1
        images[vid] = min(s)

    flags_memo = {}

    def flags(s):
        if len(s) == 1:
            return [(s,)]
        if s in flags_memo:
            return flags_memo[s]
        out = []
        for facet in combinations(s, len(s) - 1):
            for fl in flags(facet):
                out.append(fl + (s,))
        flags_memo[s] = out
        return out

    cells = set()
    for s in c.maximal_simplices():
        for fl in flags(s):
            cells.add(tuple(sorted(new_id[f] for f in fl)))
    sub = build_complex(c.ambient_dim, coords, cells, coloring, c.periods)
    return sub, SimplicialMap(sub, c, images)


def _wrap(p, periods):
    out = []
    for x, per in zip(p, periods):
        if per is None:
            out.append(x)
        else:
            per = frac(per)
            out.append(x - per * (x / per).__floor__())
    return tuple(out)


# --- tiling verification -------------------------------------------------------


@dataclass
class TilingReport:
    passed: bool
    total_volume: Fraction
    region_volume: Fraction
    failures: list = field(default_factory=list)

    def first_violation(self):
        return self.failures[0] if self.failures else None


def tiling_check(c: SimplicialComplex, region) -> TilingReport:
    """Exactly verify that the top simplices of `c` tile the region simplex.

    Checks containment, exact volume sum, pairwise interior disjointness with
    common-face certificates (Fourier-Motzkin over Q), and facet conformity.
    """
    region_pts = tuple(vec(p) for p in region)
    n = c.ambient_dim
    if len(region_pts) != n + 1 or any(len(p) != n for p in region_pts):
        raise DimensionMismatch("region must be a full-dimensional simplex")
    if c.dim != n:
        raise DimensionMismatch(f"complex of dim {c.dim} cannot tile a {n}-region")
    if c.periods is not None:
        raise DimensionMismatch("tiling_check does not apply to periodic complexes")

    failures = []
    tops = c.top_simplices()
    # containment
    for s in tops:
        for p in c.points(s):
            lam = bary_coords(region_pts, p)
            if lam is None or any(x < 0 for x in lam):
                failures.append({"kind": "outside_region", "simplex": s, "point": p})
    # exact volume
    total = sum((c.simplex_volume(s) for s in tops), ZERO)
    region_vol = simplex_volume(region_pts)
    if total != region_vol:
        failures.append({"kind": "volume_mismatch", "total": total, "region": region_vol})
    # pairwise interiors + shared-face certificates
    boxes = {s: _bbox(c.points(s)) for s in tops}
    for a, b in combinations(tops, 2):
        if not _bbox_touch(boxes[a], boxes[b]):
            continue
        fail = _pair_violation(c, a, b)
        if fail is not None:
            failures.append(fail)
    # facet conformity
    failures.extend(_facet_conformity(c, tops, region_pts))
    return TilingReport(not failures, total, region_vol, failures)


def _bbox(pts):
    lo = tuple(min(p[i] for p in pts) for i in range(len(pts[0])))
    hi = tuple(max(p[i] for p in pts) for i in range(len(pts[0])))
    return lo, hi


def _bbox_touch(a, b):
    return all(a[0][i] <= b[1][i] and b[0][i] <= a[1][i] for i in range(len(a[0])))


def _pair_violation(c, a, b):
    pa, pb = c.points(a), c.points(b)
    nvars = c.ambient_dim
    overlap, witness = fm_feasible(
        simplex_halfspaces(pa, True) + simplex_halfspaces(pb, True), nvars, witness=True
    )
    if overlap:
        return {"kind": "interior_overlap", "pair": (a, b), "witness": witness}
    shared = sorted(set(a) & set(b))
    weak = simplex_halfspaces(pa, False) + simplex_halfspaces(pb, False)
    if not shared:
        touching = fm_feasible(weak, nvars)
        if touching:
            return {"kind": "non_face_contact", "pair": (a, b)}
        return None
    w_pts = c.points(tuple(shared))
    for coeffs, rhs, label in _conv_hull_cuts(w_pts, nvars):
        if fm_feasible(weak + [(coeffs, rhs, True)], nvars):
            return {"kind": "intersection_beyond_face", "pair": (a, b),
                    "shared": tuple(shared), "cut": label}
    return None


def _conv_hull_cuts(w_pts, n):
    """Strict inequality cuts whose joint infeasibility with a region means the
    region is contained in conv(w_pts)."""
    cuts = []
    base = w_pts[0]
    edges = [vsub(q, base) for q in w_pts[1:]]
    # conormal directions: x in aff(W) iff m.(x - base) = 0
    for m in _nullspace(edges, n):
        off = vdot(m, base)
        cuts.append((m, off, "aff+"))               # m.x < off violates aff(W)
        cuts.append((tuple(-y for y in m), -off, "aff-"))
    if edges:
        gram = [[vdot(e, f) for f in edges] for e in edges]
        # extended barycentric functionals via the Gram system
        inv_rows = []
        for i in range(len(edges)):
            rhs = [ONE if j == i else ZERO for j in range(len(edges))]
            inv_rows.append(solve(gram, rhs))
        # lambda_i(x) = sum_j inv[i][j] * <x - base, e_j>, i >= 1
        for i in range(len(edges)):
            coeffs = tuple(
                sum(inv_rows[i][j] * edges[j][k] for j in range(len(edges)))
                for k in range(n)
            )
            off = vdot(coeffs, base)
            # lambda_i(x) < 0  <=>  coeffs.x < off
            cuts.append((coeffs, off, f"bary{i + 1}<0"))
        # lambda_0 = 1 - sum lambda_i < 0  <=>  sum coeffs.x > off_total + 1 ...
        total = [ZERO] * n
        off_total = ZERO
        for coeffs, off, _ in cuts[-len(edges):]:
            total = [t + cc for t, cc in zip(total, coeffs)]
            off_total += off
        # sum_i lambda_i(x) > 1  <=>  -total.x < -(off_total + 1)
        cuts.append((tuple(-t for t in total), -(off_total + ONE), "bary0<0"))
    return cuts


def _nullspace(rows, n):
    """Exact basis of {x : rows . x = 0} in R^n."""
    m = [list(r) for r in rows]
    pivots = []
    row = 0
    for col in range(n):
        piv = next((r for r in range(row, len(m)) if m[r][col] != 0), None)
        if piv is None:
            continue
        m[row], m[piv] = m[piv], m[row]
        inv = ONE / m[row][col]
        m[row] = [x * inv for x in m[row]]
        for r in range(len(m)):
            if r != row and m[r][col] != 0:
                f = m[r][col]
                m[r] = [x - f * y for x, y in zip(m[r], m[row])]
        pivots.append(col)
        row += 1
    basis = []
    free = [c for c in range(n) if c not in pivots]
    for fc in free:
        v = [ZERO] * n
        v[fc] = ONE
        for r, pc in enumerate(pivots):
            v[pc] = -m[r][fc]
        basis.append(tuple(v))
    return basis


def _facet_conformity(c, tops, region_pts):
    failures = []
    n = c.ambient_dim
    counts = {}
    for s in tops:
        for facet in combinations(s, n):
            counts[facet] = counts.get(facet, 0) + 1
    for facet, k in sorted(counts.items()):
        if k > 2:
            failures.append({"kind": "overused_facet", "facet": facet, "count": k})
        elif k == 1 and not _on_region_boundary(c.points(facet), region_pts):
            failures.append({"kind": "unmatched_interior_facet", "facet": facet})
    return failures


def _on_region_boundary(pts, region_pts):
    for i in range(len(region_pts)):
        zero = True
        for p in pts:
            lam = bary_coords(region_pts, p)
            if lam is None or lam[i] != 0:
                zero = False
                break
        if zero:
            return True
    return False


# --- isomorphism search ----------------------------------------------------------


def find_isomorphism(a: SimplicialComplex, b: SimplicialComplex, cap=ISO_SIMPLEX_CAP):
    """Deterministic backtracking search for a simplicial isomorphism.

    Returns a vertex bijection dict or None.  Intended for pattern-sized
    complexes; raises SizeLimitExceeded above the cap.
    """
    if len(a.simplices) > cap or len(b.simplices) > cap:
        raise SizeLimitExceeded(f"complex larger than {cap} simplices")
    if len(a.vertices) != len(b.vertices):
        return None
    fa, fb = a.f_vector(), b.f_vector()
    if fa != fb:
        return None

    def signatures(c):
        sig = {v: [0] * (c.dim + 1) for v in c.vertices}
        for s in c.simplices:
            for v in s:
                sig[v][len(s) - 1] += 1
        return {v: tuple(t) for v, t in sig.items()}

    sig_a, sig_b = signatures(a), signatures(b)
    if sorted(sig_a.values()) != sorted(sig_b.values()):
        return None
    by_sig_b = {}
    for v, s in sorted(sig_b.items()):
        by_sig_b.setdefault(s, []).append(v)
    # most constrained source vertices first
    order = sorted(a.vertices, key=lambda v: (len(by_sig_b[sig_a[v]]), sig_a[v], v))
    a_simplices_by_vertex = {v: [] for v in a.vertices}
    for s in a.simplices:
        for v in s:
            a_simplices_by_vertex[v].append(s)

    assign = {}
    used = set()

    def consistent(v, w):
        for s in a_simplices_by_vertex[v]:
            if all(u == v or (u in assign) for u in s):
                img = tuple(sorted(assign.get(u, w) for u in s))
                if len(set(img)) != len(img) or img not in b.simplices:
                    return False
        return True

    def backtrack(i):
        if i == len(order):
            return True
        v = order[i]
        for w in by_sig_b[sig_a[v]]:
            if w in used:
                continue
            if not consistent(v, w):
                continue
            assign[v] = w
            used.add(w)
            if backtrack(i + 1):
                return True
            del assign[v]
            used.discard(w)
        return False

    if not backtrack(0):
        return None
    # both-ways check: counts match and the image set is exactly b.simplices
    image = {tuple(sorted(assign[u] for u in s)) for s in a.simplices}
    if image != set(b.simplices):
        return None
    return dict(assign)
