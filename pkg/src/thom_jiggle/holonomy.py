"""Kernel distributions of closed 2-forms, leafwise holonomy transport,
box systems over colored triangulations, and the combinatorial area cocycle.

The closed 2-form is always represented as Omega = Omega_0 + dLambda where
Omega_0 is the pullback of the constant fiber symplectic form and Lambda a
user-supplied primitive of the perturbation, so closedness and exactness are
structural.  The base is a simplicial surface (flat torus chart or an
embedded polyhedral sphere); every integration or transport path stays inside
one flat cell.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations

import numpy as np

from ._rational import (
    ONE,
    ZERO,
    barycenter,
    fm_feasible,
    frac,
    minimal_norm_rep,
    solve,
    vadd,
    vdot,
    vscale,
    vsub,
)
from .core import SimplicialComplex, barycentric_subdivide, build_complex, star_link
from .errors import (
    DegenerateFiberForm,
    DimensionMismatch,
    InvalidParams,
    LeftDomain,
    QuadratureFailure,
    StepUnderflow,
    UnsupportedDimension,
)
from .jiggling import PLSection

FD_STEP = 1e-5
ODE_TOL = 1e-10
QUAD_ORDER = 16


# --- one- and two-form fields ----------------------------------------------------------


@dataclass(frozen=True)
class OneFormField:
    """Covector field on base x fiber space, with optional analytic derivative.

    evaluator(point) returns a covector of length base_dim + fiber_dim; the
    optional d_evaluator returns the antisymmetric matrix of its exterior
    derivative.  When absent, central finite differences (step 1e-5) are used.
    """

    evaluator: object
    base_dim: int
    fiber_dim: int
    d_evaluator: object = None
    vertical_vanishing: bool = False
    check_points: tuple = ()

    def __post_init__(self):
        dim = self.base_dim + self.fiber_dim
        for p in self.check_points:
            p = np.asarray(p, dtype=float)
            v = np.asarray(self.evaluator(p), dtype=float)
            if v.shape != (dim,):
                raise DimensionMismatch(f"covector length {v.shape} != {dim}")
            if self.d_evaluator is not None:
                analytic = np.asarray(self.d_evaluator(p), dtype=float)
                fd = _finite_difference_d(self.evaluator, p)
                if not np.allclose(analytic, fd, atol=1e-6, rtol=1e-4):
                    raise InvalidParams(
                        "analytic exterior derivative disagrees with finite differences"
                    )
            if self.vertical_vanishing:
                vertical = v[self.base_dim:]
                if not np.allclose(vertical, 0.0, atol=1e-9):
                    raise InvalidParams("vertical_vanishing flag violated at a probe")

    def value(self, point):
        return np.asarray(self.evaluator(np.asarray(point, dtype=float)), dtype=float)

    def d_matrix(self, point):
        point = np.asarray(point, dtype=float)
        if self.d_evaluator is not None:
            return np.asarray(self.d_evaluator(point), dtype=float)
        return _finite_difference_d(self.evaluator, point)


def _finite_difference_d(evaluator, point, h=FD_STEP):
    dim = len(point)
    jac = np.zeros((dim, dim))
    for i in range(dim):
        e = np.zeros(dim)
        e[i] = h
        jac[i, :] = (
            np.asarray(evaluator(point + e), dtype=float)
            - np.asarray(evaluator(point - e), dtype=float)
        ) / (2 * h)
    return jac - jac.T  # d(lambda)_{ij} = d_i lambda_j - d_j lambda_i


def zero_one_form(base_dim, fiber_dim):
    dim = base_dim + fiber_dim
    return OneFormField(lambda p: np.zeros(dim), base_dim, fiber_dim,
                        lambda p: np.zeros((dim, dim)), True)


@dataclass(frozen=True)
class SinusoidalTerm:
    """amp * sin(freq . xi + phase) d(xi_axis); exact exterior derivative."""

    amp: float
    freq: tuple
    phase: float
    axis: int

    def value(self, p, out):
        out[self.axis] += self.amp * np.sin(np.dot(self.freq, p) + self.phase)

    def d_matrix(self, p, out):
        g = self.amp * np.cos(np.dot(self.freq, p) + self.phase)
        for i, fi in enumerate(self.freq):
            if fi:
                out[i, self.axis] += g * fi
                out[self.axis, i] -= g * fi


def one_form_from_terms(terms, base_dim, fiber_dim, vertical_vanishing=False,
                        check_points=()):
    dim = base_dim + fiber_dim
    terms = tuple(terms)

    def ev(p):
        out = np.zeros(dim)
        for t in terms:
            t.value(p, out)
        return out

    def dev(p):
        out = np.zeros((dim, dim))
        for t in terms:
            t.d_matrix(p, out)
        return out

    return OneFormField(ev, base_dim, fiber_dim, dev, vertical_vanishing,
                        tuple(check_points))


def random_fiber_one_form(seed, base_dim, fiber_dim, scale=0.02, n_terms=4,
                          periodic_base=True):
    """Random primitive with only fiber (dv) components: the base-fiber block
    of its derivative drives nontrivial holonomy while horizontal polygon
    integrals cancel on closed hosts."""
    rng = np.random.default_rng(seed)
    dim = base_dim + fiber_dim
    terms = []
    for _ in range(n_terms):
        freq = np.zeros(dim)
        if periodic_base:
            freq[:base_dim] = 2 * np.pi * rng.integers(-2, 3, size=base_dim)
        else:
            freq[:base_dim] = rng.normal(0, 1.5, size=base_dim)
        freq[base_dim:] = rng.normal(0, 1.5, size=fiber_dim)
        axis = int(base_dim + rng.integers(0, fiber_dim))
        terms.append(
            SinusoidalTerm(
                float(scale * rng.normal()), tuple(freq),
                float(rng.uniform(0, 2 * np.pi)), axis,
            )
        )
    return one_form_from_terms(terms, base_dim, fiber_dim)


def standard_symplectic_matrix(n):
    if n % 2:
        raise DimensionMismatch("fiber symplectic form needs even rank")
    J = np.zeros((n, n))
    for k in range(0, n, 2):
        J[k, k + 1] = 1.0
        J[k + 1, k] = -1.0
    return J


@dataclass(frozen=True)
class TwoFormField:
    """Omega = pullback of the standard fiber form plus d(Lambda)."""

    lam: OneFormField
    probe_points: tuple = ()

    def __post_init__(self):
        for p in self.probe_points:
            M = self.fiber_block(p)
            sv = np.linalg.svd(M, compute_uv=False)
            if sv[-1] < 1e-8:
                raise DegenerateFiberForm(
                    "fiber restriction nearly degenerate at a probe point"
                )

    @property
    def base_dim(self):
        return self.lam.base_dim

    @property
    def fiber_dim(self):
        return self.lam.fiber_dim

    def omega0(self):
        d, n = self.base_dim, self.fiber_dim
        M = np.zeros((d + n, d + n))
        M[d:, d:] = standard_symplectic_matrix(n)
        return M

    def matrix(self, point):
        return self.omega0() + self.lam.d_matrix(point)

    def fiber_block(self, point):
        d = self.base_dim
        return self.matrix(point)[d:, d:]


def kernel_map(omega: TwoFormField, point):
    """Matrix A with ker(Omega) = {(u, A.u)} over horizontal directions.

    Returns a fiber_dim x base_dim matrix (square for equal dimensions); the
    residual |Omega((u, Au), (0, w))| is machine-size by construction.
    """
    d = omega.base_dim
    M = omega.matrix(point)
    M_bv = M[:d, d:]
    M_vv = M[d:, d:]
    sv = np.linalg.svd(M_vv, compute_uv=False)
    if sv[-1] < 1e-10 * max(1.0, sv[0]):
        raise DegenerateFiberForm(f"fiber form degenerate at {point}")
    return -np.linalg.solve(M_vv.T, M_bv.T)


# --- adaptive transport ------------------------------------------------------------------


def _rk4_step(rhs, s, y, h):
    k1 = rhs(s, y)
    k2 = rhs(s + h / 2, y + h / 2 * k1)
    k3 = rhs(s + h / 2, y + h / 2 * k2)
    k4 = rhs(s + h, y + h * k3)
    return y + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)


def _rk4_adaptive(rhs, y0, tol=ODE_TOL, floor=1e-12, monitor=None):
    """Integrate y' = rhs(s, y) over s in [0, 1] with step doubling.

    The local error estimate per step stays below tol * (1 + |y|); the step
    policy is deterministic.  `monitor(y)` may raise to abort (domain exit).
    """
    s = 0.0
    y = np.asarray(y0, dtype=float)
    h = 0.5
    while s < 1.0:
        h = min(h, 1.0 - s)
        full = _rk4_step(rhs, s, y, h)
        half = _rk4_step(rhs, s, y, h / 2)
        two = _rk4_step(rhs, s + h / 2, half, h / 2)
        err = float(np.max(np.abs(two - full))) / 15.0
        scale = tol * (1.0 + float(np.max(np.abs(y))))
        if err <= scale:
            s += h
            y = two
            if monitor is not None:
                monitor(y)
            if err < scale / 64 and h < 0.5:
                h *= 2
        else:
            h /= 2
            if h < floor:
                raise StepUnderflow(f"step underflow at s={s}")
    return y


def holonomy_transport(omega: TwoFormField, path, v0, tol=ODE_TOL, radius=None):
    """Transport fiber point(s) along a base polyline inside the kernel leaves.

    v0 may be one fiber vector or a batch (rows); returns the same shape.
    Raises LeftDomain when a transported point exits the disk bundle.
    """
    V = np.asarray(v0, dtype=float)
    single = V.ndim == 1
    if single:
        V = V[None, :]
    n = omega.fiber_dim
    path = [np.asarray(p, dtype=float) for p in path]

    def monitor(yflat):
        if radius is not None:
            W = yflat.reshape(-1, n)
            if np.any(np.einsum("ij,ij->i", W, W) > float(radius) ** 2):
                raise LeftDomain("transport exited the disk bundle")

    for a, b in zip(path[:-1], path[1:]):
        dx = b - a

        def rhs(s, yflat, a=a, dx=dx):
            W = yflat.reshape(-1, n)
            Wdot = _batched_kernel_apply(omega, a + s * dx, W, dx)
            return Wdot.reshape(-1)

        V = _rk4_adaptive(rhs, V.reshape(-1), tol, monitor=monitor).reshape(-1, n)
    return V[0] if single else V


def _batched_kernel_apply(omega, x, W, u):
    """Rows of W transported: returns A(x, W_j) . u for each j."""
    d, n = omega.base_dim, omega.fiber_dim
    m = W.shape[0]
    Mvv = np.empty((m, n, n))
    rhs = np.empty((m, n))
    for j in range(m):
        M = omega.matrix(np.concatenate([x, W[j]]))
        Mvv[j] = M[d:, d:].T
        rhs[j] = M[:d, d:].T @ u
    return -np.linalg.solve(Mvv, rhs[..., None])[..., 0]


def symplectic_defect(omega: TwoFormField, base_loop, probe, samples=96,
                      tol=ODE_TOL):
    """Relative area defect of a probe fiber triangle around a closed base loop.

    The probe boundary is sampled densely, transported as a batch, and the
    enclosed fiber area measured by the shoelace rule before and after.
    """
    probe = [np.asarray(p, dtype=float) for p in probe]
    if len(probe) != 3 or omega.fiber_dim != 2:
        raise UnsupportedDimension("probe areas implemented for fiber dimension 2")
    pts = []
    per_side = samples // 3
    for i in range(3):
        a, b = probe[i], probe[(i + 1) % 3]
        for k in range(per_side):
            pts.append(a + (b - a) * (k / per_side))
    P = np.asarray(pts)
    area0 = _shoelace(P)
    Q = holonomy_transport(omega, base_loop, P, tol=tol)
    area1 = _shoelace(Q)
    return abs(area1 - area0) / abs(area0)


def _shoelace(P):
    x, y = P[:, 0], P[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))


# --- cochains ---------------------------------------------------------------------------


@dataclass
class Cochain:
    """Real simplicial cochain stored on ascending-vertex-id orientations."""

    complex: SimplicialComplex
    degree: int
    values: dict

    def norm_inf(self):
        return max((abs(v) for v in self.values.values()), default=0.0)

    def coboundary(self):
        out = {}
        for s in self.complex.simplices_of_dim(self.degree + 1):
            acc = 0.0
            for i in range(len(s)):
                face = s[:i] + s[i + 1:]
                acc += (-1) ** i * self.values.get(face, 0.0)
            out[s] = acc
        return Cochain(self.complex, self.degree + 1, out)

    def as_rows(self):
        return [(s, self.values[s]) for s in sorted(self.values)]


def coboundary_matrix(c: SimplicialComplex, degree: int):
    rows = c.simplices_of_dim(degree + 1)
    cols = c.simplices_of_dim(degree)
    col_index = {s: j for j, s in enumerate(cols)}
    D = np.zeros((len(rows), len(cols)))
    for i, s in enumerate(rows):
        for k in range(len(s)):
            face = s[:k] + s[k + 1:]
            D[i, col_index[face]] = (-1) ** k
    return rows, cols, D


@dataclass
class CoboundaryResult:
    alpha: Cochain
    residual: float
    relative: float
    ok: bool


def coboundary_solve(mu: Cochain, tol=1e-6) -> CoboundaryResult:
    """Least-squares solve of (coboundary of alpha) = mu over 1-cochains.

    The minimum-norm solution is returned; a relative residual above tol
    flags a harmonic obstruction (mu pairs nontrivially with a 2-cycle).
    """
    if mu.degree != 2:
        raise DimensionMismatch("solver expects a degree-2 cochain")
    rows, cols, D = coboundary_matrix(mu.complex, 1)
    b = np.array([mu.values.get(s, 0.0) for s in rows])
    if len(cols) == 0:
        return CoboundaryResult(Cochain(mu.complex, 1, {}), float(np.linalg.norm(b)),
                                float(np.linalg.norm(b)), np.linalg.norm(b) <= tol)
    sol, _, _, _ = np.linalg.lstsq(D, b, rcond=None)
    resid = float(np.linalg.norm(D @ sol - b))
    rel = resid / (1.0 + float(np.linalg.norm(b)))
    alpha = Cochain(mu.complex, 1, {s: float(v) for s, v in zip(cols, sol)})
    return CoboundaryResult(alpha, resid, rel, rel <= tol)


def orientation_cocycle(c: SimplicialComplex):
    """Coherent orientation signs (per ascending-id triangle) of an oriented
    surface, from the sign of the lifted chart determinant."""
    out = {}
    for s in c.simplices_of_dim(2):
        pts = [np.array([float(x) for x in p]) for p in c.lifted_points(s)]
        if len(pts[0]) == 2:
            det = np.linalg.det(np.array([pts[1] - pts[0], pts[2] - pts[0]]))
        else:
            # embedded surface: orient by outward normal (radial for our hosts)
            nrm = np.cross(pts[1] - pts[0], pts[2] - pts[0])
            det = float(np.dot(nrm, (pts[0] + pts[1] + pts[2]) / 3.0))
        out[s] = 1.0 if det > 0 else -1.0
    return Cochain(c, 2, out)


# --- hosts -----------------------------------------------------------------------------


def octahedron_sphere_host() -> SimplicialComplex:
    """Colored triangulation of the 2-sphere: barycentric subdivision of the
    octahedron boundary, embedded in R^3 with exact rational coordinates."""
    verts = {
        0: (1, 0, 0), 1: (-1, 0, 0),
        2: (0, 1, 0), 3: (0, -1, 0),
        4: (0, 0, 1), 5: (0, 0, -1),
    }
    faces = []
    for x in (0, 1):
        for y in (2, 3):
            for z in (4, 5):
                faces.append((x, y, z))
    octa = build_complex(3, verts, faces)
    sub, _ = barycentric_subdivide(octa)
    return sub


# --- epsilon-neighborhood systems and boxes ----------------------------------------------


def _cross_polytope_2d(eps):
    eps = frac(eps)
    return [(eps, ZERO), (ZERO, eps), (-eps, ZERO), (ZERO, -eps)]


def _convex_hull_2d(points):
    pts = sorted(set(points))
    if len(pts) <= 2:
        return pts

    def cross(o, a, b):
        return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])

    lower = []
    for p in pts:
        while len(lower) >= 2 and cross(lower[-2], lower[-1], p) <= 0:
            lower.pop()
        lower.append(p)
    upper = []
    for p in reversed(pts):
        while len(upper) >= 2 and cross(upper[-2], upper[-1], p) <= 0:
            upper.pop()
        upper.append(p)
    return lower[:-1] + upper[:-1]


def _polygon_halfspaces(hull, strict):
    cons = []
    m = len(hull)
    for i in range(m):
        a, b = hull[i], hull[(i + 1) % m]
        # inward normal for a counterclockwise hull
        normal = (-(b[1] - a[1]), b[0] - a[0])
        off = normal[0] * a[0] + normal[1] * a[1]
        cons.append(((-normal[0], -normal[1]), -off, strict))
    return cons


def _point_in_hull(hull, p, strict=False):
    for coeffs, rhs, _ in _polygon_halfspaces(hull, strict):
        v = coeffs[0] * p[0] + coeffs[1] * p[1]
        if strict and not v < rhs:
            return False
        if not strict and not v <= rhs:
            return False
    return True


def _clip_polygons(hull_a, hull_b):
    """Sutherland-Hodgman intersection of convex polygons, exact."""
    poly = list(hull_a)
    for i in range(len(hull_b)):
        a, b = hull_b[i], hull_b[(i + 1) % len(hull_b)]
        nx, ny = -(b[1] - a[1]), b[0] - a[0]  # inside: n.(p - a) >= 0
        out = []
        for j in range(len(poly)):
            p, q = poly[j], poly[(j + 1) % len(poly)]
            dp = nx * (p[0] - a[0]) + ny * (p[1] - a[1])
            dq = nx * (q[0] - a[0]) + ny * (q[1] - a[1])
            if dp >= 0:
                out.append(p)
            if (dp > 0 and dq < 0) or (dp < 0 and dq > 0):
                t = dp / (dp - dq)
                out.append((p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])))
        poly = out
        if not poly:
            return []
    return poly


def minkowski_neighborhood(face_pts, eps):
    """Exact polytopal eps-neighborhood: Minkowski sum with a cross-polytope."""
    if len(face_pts[0]) != 2:
        raise UnsupportedDimension("polytopal neighborhoods implemented for n=2")
    pts = []
    for a in face_pts:
        for c in _cross_polytope_2d(eps):
            pts.append((a[0] + c[0], a[1] + c[1]))
    return _convex_hull_2d(pts)


@dataclass
class NeighborhoodReport:
    passed: bool
    failures: list = field(default_factory=list)


def neighborhood_system_check(target_pts, eps, ball_radius=1) -> NeighborhoodReport:
    """Exactly verify the three separation conditions of the neighborhood
    system around a colored simplex: disjoint faces get disjoint
    neighborhoods, meeting non-nested faces intersect inside the neighborhood
    of their common face, and everything stays inside the ball."""
    target_pts = [tuple(frac(x) for x in p) for p in target_pts]
    n = len(target_pts) - 1
    if n != 2:
        raise UnsupportedDimension("neighborhood systems implemented for n=2")
    eps = [frac(e) for e in eps]
    if len(eps) != n:
        raise InvalidParams(f"need {n} epsilon values, got {len(eps)}")
    if any(e <= 0 for e in eps) or any(eps[i] <= eps[i + 1] for i in range(n - 1)):
        raise InvalidParams("epsilon sequence must be strictly decreasing and positive")
    failures = []
    idx = list(range(n + 1))
    faces = [f for k in range(1, n + 1) for f in combinations(idx, k)]
    hulls = {
        f: minkowski_neighborhood([target_pts[i] for i in f], eps[len(f) - 1])
        for f in faces
    }
    # (1) disjoint faces
    for a, b in combinations(faces, 2):
        if set(a) & set(b):
            continue
        if _hulls_intersect(hulls[a], hulls[b]):
            failures.append({"kind": "disjoint_faces_meet", "faces": (a, b)})
    # (2) meeting, non-nested
    for a, b in combinations(faces, 2):
        common = tuple(sorted(set(a) & set(b)))
        if not common or set(a) <= set(b) or set(b) <= set(a):
            continue
        inter = _clip_polygons(hulls[a], hulls[b])
        for p in inter:
            if not _point_in_hull(hulls[common], p, strict=True):
                failures.append(
                    {"kind": "not_interior_to_common", "faces": (a, b), "point": p}
                )
                break
    # (3) containment in the ball
    R2 = frac(ball_radius) ** 2
    for f in faces:
        for p in hulls[f]:
            if p[0] * p[0] + p[1] * p[1] > R2:
                failures.append({"kind": "outside_ball", "face": f, "point": p})
                break
    for p in target_pts:
        if p[0] * p[0] + p[1] * p[1] > R2:
            failures.append({"kind": "outside_ball", "face": "simplex", "point": p})
    return NeighborhoodReport(not failures, failures)


def _hulls_intersect(ha, hb):
    cons = _polygon_halfspaces(ha, False) + _polygon_halfspaces(hb, False)
    return fm_feasible(cons, 2)


@dataclass(frozen=True)
class BoxSystem:
    """Per-simplex box data over a colored host triangulation.

    host is the subdivided complex whose simplices index boxes (the base of
    the jiggled section); coloring assigns target colors to its vertices
    (inherited through the folding map for subdivided hosts).  target maps
    color index -> fiber vertex; eps and eta control the fiber polytopes and
    the reduced-box shrinkage.
    """

    host: SimplicialComplex
    coloring: dict
    section: PLSection | None
    target: tuple
    eps: tuple
    eta: Fraction
    ball_radius: Fraction

    def color(self, v):
        return self.coloring[v]

    def perp_face(self, simplex):
        return tuple(sorted(self.color(v) for v in simplex))

    def perp_polytope(self, simplex):
        f = self.perp_face(simplex)
        if len(f) == len(self.target):
            return _convex_hull_2d([tuple(p) for p in self.target])
        return minkowski_neighborhood([self.target[i] for i in f], self.eps[len(f) - 1])

    def color_ordered(self, triangle):
        return tuple(sorted(triangle, key=self.color))


def tower_coloring(tower, base_coloring):
    """Colors of a subdivided complex through the composed folding map; proper
    because the fold is injective on the vertices of every cell."""
    return {
        v: base_coloring[img] for v, img in tower.composed.vertex_images.items()
    }


def build_box_system(host, coloring, section, target, eps, eta,
                     ball_radius=1) -> BoxSystem:
    coloring = dict(coloring)
    for v in host.vertices:
        if v not in coloring:
            raise InvalidParams(f"host vertex {v} is uncolored")
    target = tuple(tuple(frac(x) for x in p) for p in target)
    rep = neighborhood_system_check(target, eps, ball_radius)
    if not rep.passed:
        raise InvalidParams(f"neighborhood system fails: {rep.failures[:3]}")
    return BoxSystem(host, coloring, section, target, tuple(frac(e) for e in eps),
                     frac(eta), frac(ball_radius))


# --- the area cocycle --------------------------------------------------------------------


def _gl_nodes(order):
    x, w = np.polynomial.legendre.leggauss(order)
    return (x + 1) / 2, w / 2  # on [0, 1]


def _segment_integral(form_value, p0, p1, order=QUAD_ORDER):
    """Gauss-Legendre integral of a 1-form along the straight segment."""
    p0 = np.asarray(p0, dtype=float)
    p1 = np.asarray(p1, dtype=float)
    xs, ws = _gl_nodes(order)
    dp = p1 - p0
    total = 0.0
    for t, w in zip(xs, ws):
        v = form_value(p0 + t * dp)
        if not np.all(np.isfinite(v)):
            raise QuadratureFailure("non-finite integrand value")
        total += w * float(np.dot(v, dp))
    return total


def _polyline_integral(form_value, pts):
    """Composite integral of a 1-form along a polyline (GL-4 per chord)."""
    total = 0.0
    for a, b in zip(pts[:-1], pts[1:]):
        total += _segment_integral(form_value, a, b, order=4)
    return total


def _triangle_frame(system: BoxSystem, triangle):
    """Color-ordered vertices, lifted base chart, edge midpoints, fiber vertices."""
    host = system.host
    ordered = system.color_ordered(triangle)
    pts = {v: p for v, p in zip(triangle, host.lifted_points(triangle))}
    base = [pts[v] for v in ordered]
    # oriented edges e_j = [v_{j-1}, v_j]
    mids = []
    for j in range(3):
        a, b = base[(j - 1) % 3], base[j]
        mids.append(barycenter([a, b]))
    perp = [tuple(system.target[system.color(v)]) for v in ordered]
    return ordered, base, mids, perp


def mu_cocycle(lam: OneFormField, system: BoxSystem, order=QUAD_ORDER) -> Cochain:
    """Degree-2 cochain from line integrals of the primitive along the
    hexagonal loop of fiber segments over edge midpoints and horizontal
    segments between consecutive midpoints."""
    host = system.host
    values = {}
    for tri in host.simplices_of_dim(2):
        val = _mu_value_color_order(lam, system, tri, order)
        values[tri] = _color_parity(system, tri) * val
    return Cochain(host, 2, values)


def _color_parity(system, tri):
    ordered = system.color_ordered(tri)
    perm = [tri.index(v) for v in ordered]
    sign = 1.0
    for i in range(len(perm)):
        for j in range(i + 1, len(perm)):
            if perm[i] > perm[j]:
                sign = -sign
    return sign


def _mu_value_color_order(lam, system, tri, order=QUAD_ORDER):
    _, base, mids, perp = _triangle_frame(system, tri)
    total = 0.0
    for i in range(3):
        b_i = [float(x) for x in mids[i]]
        b_next = [float(x) for x in mids[(i + 1) % 3]]
        v_prev = [float(x) for x in perp[(i - 1) % 3]]
        v_i = [float(x) for x in perp[i]]
        # vertical segment {b(e_i)} x [v_{i-1}, v_i]
        total += _segment_integral(lam.value, b_i + v_prev, b_i + v_i, order)
        # horizontal segment [b(e_i), b(e_{i+1})] x {v_i}
        total += _segment_integral(lam.value, b_i + v_i, b_next + v_i, order)
    return total


def swept_area_mu(omega: TwoFormField, system: BoxSystem, tri, x_weights=None,
                  arc_samples=64, tol=ODE_TOL, order=QUAD_ORDER):
    """Independent route to the cocycle value on one triangle: transport each
    fiber edge segment from its edge midpoint to a common interior point and
    integrate the swept fiber area, with exact boundary-track corrections.

    Returns the value on the color orientation (compare against the
    line-integral route before parity correction).
    """
    lam = omega.lam
    _, base, mids, perp = _triangle_frame(system, tri)
    if x_weights is None:
        x_weights = (Fraction(1, 3), Fraction(1, 3), Fraction(1, 3))
    x = tuple(
        sum((w * p[k] for w, p in zip(x_weights, base)), ZERO)
        for k in range(len(base[0]))
    )
    xf = np.array([float(c) for c in x])
    lam0 = _fiber_primitive(omega)
    total = 0.0
    for i in range(3):
        b_i = np.array([float(c) for c in mids[i]])
        b_next = np.array([float(c) for c in mids[(i + 1) % 3]])
        v_prev = np.array([float(c) for c in perp[(i - 1) % 3]])
        v_i = np.array([float(c) for c in perp[i]])
        arc = np.array(
            [v_prev + (v_i - v_prev) * (k / arc_samples) for k in range(arc_samples + 1)]
        )
        final, tr = _transport_with_tracks(omega, b_i, xf, arc, lam, lam0, tol)
        gamma_lam = _polyline_integral(lam.value, [np.concatenate([xf, q]) for q in final])
        gamma_lam0 = _polyline_integral(
            lam0, [np.concatenate([xf, q]) for q in final]
        )
        a_lam0 = _segment_integral(
            lam0, np.concatenate([b_i, v_prev]), np.concatenate([b_i, v_i]), order
        )
        # int_{C_i} Omega_0 by Stokes with the fiber primitive
        c_omega0 = tr["start_lam0"] + gamma_lam0 - tr["end_lam0"] - a_lam0
        # int over the vertical segment A_i, reconstructed through transport
        a_i = c_omega0 + tr["start_lam"] - tr["end_lam"] + gamma_lam
        h_i = _segment_integral(
            lam.value, np.concatenate([b_i, v_i]), np.concatenate([b_next, v_i]), order
        )
        total += a_i + h_i
    return total


def _fiber_primitive(omega):
    """Primitive of the constant fiber form: sum of v_{2k} dv_{2k+1}."""
    d, n = omega.base_dim, omega.fiber_dim

    def val(p):
        out = np.zeros(d + n)
        for k in range(0, n, 2):
            out[d + k + 1] = p[d + k]
        return out

    return val


def _transport_with_tracks(omega, b, x, arc, lam, lam0, tol):
    """Batch transport of an arc from fiber(b) to fiber(x) along the straight
    segment, accumulating Lambda and fiber-primitive integrals along the two
    endpoint tracks."""
    n = omega.fiber_dim
    m = arc.shape[0]
    dx = x - b

    def rhs(s, yflat):
        W = yflat[: m * n].reshape(m, n)
        Wdot = _batched_kernel_apply(omega, b + s * dx, W, dx)
        point0 = np.concatenate([b + s * dx, W[0]])
        point1 = np.concatenate([b + s * dx, W[-1]])
        vel0 = np.concatenate([dx, Wdot[0]])
        vel1 = np.concatenate([dx, Wdot[-1]])
        extras = np.array(
            [
                float(np.dot(lam.value(point0), vel0)),
                float(np.dot(lam.value(point1), vel1)),
                float(np.dot(lam0(point0), vel0)),
                float(np.dot(lam0(point1), vel1)),
            ]
        )
        return np.concatenate([Wdot.reshape(-1), extras])

    y0 = np.concatenate([arc.reshape(-1), np.zeros(4)])
    y1 = _rk4_adaptive(rhs, y0, tol)
    final = y1[: m * n].reshape(m, n)
    tracks = {
        "start_lam": float(y1[m * n]),
        "end_lam": float(y1[m * n + 1]),
        "start_lam0": float(y1[m * n + 2]),
        "end_lam0": float(y1[m * n + 3]),
    }
    return final, tracks


# --- box coverage -------------------------------------------------------------------------


@dataclass
class BoxCoverReport:
    passed: bool
    uncovered: list
    disjointness_violations: list


def box_cover(system: BoxSystem, omega: TwoFormField, section: PLSection,
              tol=ODE_TOL) -> BoxCoverReport:
    """Check that section sample points lie in at least one reduced box, and
    spot-check disjointness of reduced boxes over disjoint simplices."""
    base = section.base
    if base is not system.host:
        raise InvalidParams("section must live over the box-system host")
    uncovered = []
    placements = {}
    for cell in base.maximal_simplices():
        pts = base.lifted_points(cell)
        chart = dict(zip(cell, pts))
        samples = [(v, pts[i]) for i, v in enumerate(cell)]
        samples.append((None, barycenter(pts)))
        for tag, p in samples:
            fiber = _section_value_at(section, cell, pts, p)
            hit = None
            for k in range(1, len(cell) + 1):
                for tau in combinations(cell, k):
                    if _in_reduced_box(system, omega, tau, chart, p, fiber, tol):
                        hit = tau
                        break
                if hit:
                    break
            if hit is None:
                uncovered.append({"cell": cell, "sample": tag})
            else:
                placements.setdefault(hit, []).append((cell, p, fiber))
    violations = []
    taus = sorted(placements)
    for a, b in zip(taus, taus[1:]):
        if set(a) & set(b):
            continue
        for cell, p, fiber in placements[a][:2]:
            chart = dict(zip(cell, section.base.lifted_points(cell)))
            if set(b) <= set(cell) and _in_reduced_box(
                system, omega, b, chart, p, fiber, tol
            ):
                violations.append({"boxes": (a, b), "point": p})
    return BoxCoverReport(not uncovered and not violations, uncovered, violations)


def _section_value_at(section, cell, pts, p):
    lam = _bary_weights(pts, p)
    out = np.zeros(len(next(iter(section.lift.values()))))
    for w, v in zip(lam, cell):
        out += float(w) * np.array([float(c) for c in section.lift[v]])
    return out


def _bary_weights(pts, p):
    base = pts[0]
    rows = [vsub(q, base) for q in pts[1:]]
    if not rows:
        return [ONE]
    gram = [[vdot(a, b) for b in rows] for a in rows]
    rhs = [vdot(vsub(p, base), r) for r in rows]
    w = solve(gram, rhs)
    if w is None:
        return None
    return [ONE - sum(w, ZERO)] + list(w)


def _in_reduced_box(system: BoxSystem, omega, tau, chart, p, fiber, tol):
    """Membership of the point (p, fiber) in the eta-reduced box of tau.

    chart gives coherent lifted coordinates for the vertices of the cell the
    sample came from; the star of tau is lifted around b(tau) consistently.
    """
    host = system.host
    if tau not in host.simplices:
        return False
    b_tau = barycenter([chart[v] for v in tau])
    scale = ONE / (ONE - system.eta)
    expanded = vadd(b_tau, vscale(scale, vsub(p, b_tau)))
    star, _ = star_link(host, tau)
    inside = False
    for s in star.simplices:
        if len(s) - 1 != host.dim:
            continue
        pts = host.lifted_points(s)
        if host.periods is not None:
            pts = [vadd(b_tau, minimal_norm_rep(vsub(q, b_tau), host.periods))
                   for q in pts]
        if _contains(pts, expanded):
            inside = True
            break
    if not inside:
        return False
    hull = system.perp_polytope(tau)
    bt = np.array([float(c) for c in b_tau])
    pf = np.array([float(c) for c in p])
    moved = holonomy_transport(omega, [pf, bt], fiber, tol=tol)
    return _point_in_hull_float(hull, moved)


def _contains(pts, p):
    lam = _bary_weights(pts, p)
    if lam is None:
        return False
    # the gram projection must reproduce p exactly for genuine membership
    proj = pts[0]
    for w, row in zip(lam[1:], [vsub(q, pts[0]) for q in pts[1:]]):
        proj = vadd(proj, vscale(w, row))
    return proj == tuple(p) and all(w >= 0 for w in lam)


def _point_in_hull_float(hull, p, slack=1e-9):
    m = len(hull)
    for i in range(m):
        a, b = hull[i], hull[(i + 1) % m]
        nx, ny = -(float(b[1]) - float(a[1])), float(b[0]) - float(a[0])
        if nx * (p[0] - float(a[0])) + ny * (p[1] - float(a[1])) < -slack:
            return False
    return True
