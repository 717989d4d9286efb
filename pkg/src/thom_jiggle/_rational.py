"""Exact linear algebra and polyhedral predicates over the rationals.

Everything here works on tuples of fractions.Fraction and is deliberately
small-scale: pattern complexes, desk-size meshes, Fourier-Motzkin systems
with a handful of variables.
"""

from __future__ import annotations

from fractions import Fraction
from math import factorial

Vec = tuple  # tuple of Fraction
ZERO = Fraction(0)
ONE = Fraction(1)


def frac(x) -> Fraction:
    return x if isinstance(x, Fraction) else Fraction(x)


def vec(items) -> Vec:
    return tuple(frac(x) for x in items)


def vsub(a: Vec, b: Vec) -> Vec:
    return tuple(x - y for x, y in zip(a, b))


def vadd(a: Vec, b: Vec) -> Vec:
    return tuple(x + y for x, y in zip(a, b))


def vscale(c, a: Vec) -> Vec:
    c = frac(c)
    return tuple(c * x for x in a)


def vdot(a: Vec, b: Vec) -> Fraction:
    return sum((x * y for x, y in zip(a, b)), ZERO)


def sqnorm(a: Vec) -> Fraction:
    return vdot(a, a)


def convex(points, weights) -> Vec:
    out = tuple(ZERO for _ in points[0])
    for p, w in zip(points, weights):
        out = vadd(out, vscale(w, p))
    return out


def barycenter(points) -> Vec:
    w = Fraction(1, len(points))
    return convex(points, [w] * len(points))


def mat_rank(rows) -> int:
    """Rank by fraction-exact Gaussian elimination."""
    m = [list(r) for r in rows]
    if not m:
        return 0
    nrows, ncols = len(m), len(m[0])
    rank = 0
    row = 0
    for col in range(ncols):
        piv = next((r for r in range(row, nrows) if m[r][col] != 0), None)
        if piv is None:
            continue
        m[row], m[piv] = m[piv], m[row]
        inv = ONE / m[row][col]
        m[row] = [x * inv for x in m[row]]
        for r in range(nrows):
            if r != row and m[r][col] != 0:
                f = m[r][col]
                m[r] = [x - f * y for x, y in zip(m[r], m[row])]
        rank += 1
        row += 1
        if row == nrows:
            break
    return rank


def mat_det(rows) -> Fraction:
    m = [list(r) for r in rows]
    n = len(m)
    if n == 0:
        return ONE
    det = ONE
    for col in range(n):
        piv = next((r for r in range(col, n) if m[r][col] != 0), None)
        if piv is None:
            return ZERO
        if piv != col:
            m[col], m[piv] = m[piv], m[col]
            det = -det
        det *= m[col][col]
        inv = ONE / m[col][col]
        for r in range(col + 1, n):
            if m[r][col] != 0:
                f = m[r][col] * inv
                m[r] = [x - f * y for x, y in zip(m[r], m[col])]
    return det


def solve(rows, rhs):
    """Solve a square system exactly; returns None when singular."""
    n = len(rows)
    m = [list(r) + [b] for r, b in zip(rows, rhs)]
    for col in range(n):
        piv = next((r for r in range(col, n) if m[r][col] != 0), None)
        if piv is None:
            return None
        m[col], m[piv] = m[piv], m[col]
        inv = ONE / m[col][col]
        m[col] = [x * inv for x in m[col]]
        for r in range(n):
            if r != col and m[r][col] != 0:
                f = m[r][col]
                m[r] = [x - f * y for x, y in zip(m[r], m[col])]
    return tuple(m[r][n] for r in range(n))


def edge_matrix(points):
    """Edge vectors of a simplex relative to its first vertex, as rows."""
    return [vsub(p, points[0]) for p in points[1:]]


def simplex_nondegenerate(points) -> bool:
    edges = edge_matrix(points)
    return mat_rank(edges) == len(edges)


def simplex_volume(points) -> Fraction:
    """Euclidean k-volume of a full-dimensional simplex (k = ambient dim)."""
    edges = edge_matrix(points)
    k = len(edges)
    if k == 0:
        return ONE
    return abs(mat_det(edges)) / factorial(k)


def bary_coords(simplex_points, p):
    """Barycentric coordinates of p w.r.t. a full-dimensional simplex.

    Returns None when the simplex matrix is singular.
    """
    n = len(p)
    rows = [[simplex_points[j][i] for j in range(len(simplex_points))] for i in range(n)]
    rows.append([ONE] * len(simplex_points))
    rhs = list(p) + [ONE]
    return solve(rows, rhs)


def point_in_simplex(simplex_points, p, strict=False):
    lam = bary_coords(simplex_points, p)
    if lam is None:
        return False
    if strict:
        return all(x > 0 for x in lam)
    return all(x >= 0 for x in lam)


def affine_map_from_simplices(src_points, dst_points):
    """Return f(p) mapping the source simplex onto the target vertex-by-vertex.

    Points of the source affine hull are expressed in barycentric coordinates
    and pushed to the target; exact for full-dimensional source simplices.
    """
    def f(p):
        lam = bary_coords(src_points, p)
        if lam is None:
            raise ValueError("source simplex is degenerate")
        return convex(dst_points, lam)
    return f


# --- Fourier-Motzkin feasibility ----------------------------------------------

def _fm_canonical(coeffs, rhs, strict):
    """Scale a constraint by a positive factor so equal half-spaces compare equal."""
    scale = next((abs(c) for c in coeffs if c != 0), None)
    if scale is None:
        return tuple(coeffs), rhs, strict
    return tuple(c / scale for c in coeffs), rhs / scale, strict


def fm_feasible(constraints, nvars, witness=False):
    """Decide feasibility of a system of linear inequalities over Q.

    Each constraint is (coeffs, rhs, strict) meaning coeffs . x < rhs when
    strict else <=.  Returns bool, or (bool, point-or-None) when witness.
    """
    system = [(list(vec(c)), frac(r), bool(s)) for c, r, s in constraints]
    stages = []  # (var index, constraints before eliminating it)
    live = list(range(nvars))
    while live:
        # cheapest variable first keeps the combination count down
        def cost(v):
            np_ = sum(1 for c, _, _ in system if c[v] > 0)
            nn = sum(1 for c, _, _ in system if c[v] < 0)
            return np_ * nn - np_ - nn

        var = min(live, key=cost)
        stages.append((var, [c for c in system]))
        pos, neg, rest = [], [], []
        for coeffs, rhs, strict in system:
            a = coeffs[var]
            if a > 0:
                pos.append((coeffs, rhs, strict))
            elif a < 0:
                neg.append((coeffs, rhs, strict))
            else:
                rest.append((coeffs, rhs, strict))
        seen = {}
        for coeffs, rhs, strict in rest:
            key, r, s = _fm_canonical(coeffs, rhs, strict)
            old = seen.get(key)
            # keep the tightest version of duplicate half-spaces
            if old is None or r < old[0] or (r == old[0] and s and not old[1]):
                seen[key] = (r, s)
        for cp, rp, sp in pos:
            ap = cp[var]
            for cn, rn, sn in neg:
                an = cn[var]
                coeffs = [cp[i] / ap - cn[i] / an for i in range(nvars)]
                rhs = rp / ap - rn / an
                key, r, s = _fm_canonical(coeffs, rhs, sp or sn)
                if all(c == 0 for c in key):
                    if (s and not r > 0) or (not s and not r >= 0):
                        return (False, None) if witness else False
                    continue
                old = seen.get(key)
                if old is None or r < old[0] or (r == old[0] and s and not old[1]):
                    seen[key] = (r, s)
        system = [(list(k), r, s) for k, (r, s) in seen.items()]
        live.remove(var)
    for coeffs, rhs, strict in system:
        if strict and not rhs > 0:
            return (False, None) if witness else False
        if not strict and not rhs >= 0:
            return (False, None) if witness else False
    if not witness:
        return True
    # back-substitute a witness point
    point = [ZERO] * nvars
    for var, cons in reversed(stages):
        lo, hi = None, None
        lo_strict = hi_strict = False
        for coeffs, rhs, strict in cons:
            a = coeffs[var]
            if a == 0:
                continue
            val = rhs - sum(coeffs[i] * point[i] for i in range(nvars) if i != var)
            bound = val / a
            if a > 0:
                if hi is None or bound < hi or (bound == hi and strict):
                    hi, hi_strict = bound, strict
            else:
                if lo is None or bound > lo or (bound == lo and strict):
                    lo, lo_strict = bound, strict
        if lo is None and hi is None:
            point[var] = ZERO
        elif lo is None:
            point[var] = hi - ONE if hi_strict else hi
        elif hi is None:
            point[var] = lo + ONE if lo_strict else lo
        else:
            point[var] = (lo + hi) / 2
    return True, tuple(point)


def simplex_halfspaces(points, strict):
    """Inequality system describing a full-dimensional simplex (its interior
    when strict)."""
    n = len(points[0])
    cons = []
    for i in range(len(points)):
        opposite = [p for j, p in enumerate(points) if j != i]
        normal = _facet_normal(opposite, n)
        inside = vdot(normal, points[i])
        offset = vdot(normal, opposite[0])
        if inside < offset:
            coeffs, rhs = normal, offset
        else:
            coeffs, rhs = tuple(-x for x in normal), -offset
        cons.append((coeffs, rhs, strict))
    return cons


def _facet_normal(points, n):
    """A nonzero vector orthogonal to the affine hull of n points in R^n."""
    edges = edge_matrix(points)
    # Solve edges . x = 0 with a normalization row chosen to be consistent.
    for k in range(n):
        rows = [list(e) for e in edges]
        rows.append([ONE if i == k else ZERO for i in range(n)])
        sol = solve(rows, [ZERO] * len(edges) + [ONE])
        if sol is not None:
            return sol
    raise ValueError("degenerate facet")


def simplices_interiors_overlap(points_a, points_b, witness=False):
    """Exact test whether two full-dimensional simplices share interior volume."""
    n = len(points_a[0])
    cons = simplex_halfspaces(points_a, strict=True) + simplex_halfspaces(points_b, strict=True)
    # convert a.x < b to a.x - b < 0 form: fm_feasible expects coeffs.x < rhs
    return fm_feasible(cons, n, witness=witness)


def sq_distance_point_segment(p, a, b) -> Fraction:
    d = vsub(b, a)
    dd = sqnorm(d)
    if dd == 0:
        return sqnorm(vsub(p, a))
    t = vdot(vsub(p, a), d) / dd
    if t < 0:
        t = ZERO
    elif t > 1:
        t = ONE
    proj = vadd(a, vscale(t, d))
    return sqnorm(vsub(p, proj))


def sq_distance_point_simplex(p, points) -> Fraction:
    """Exact squared Euclidean distance from p to a simplex of any dimension."""
    best = None
    k = len(points)
    for mask in range(1, 1 << k):
        face = [points[i] for i in range(k) if mask >> i & 1]
        d2 = _sq_distance_point_face(p, face)
        if d2 is not None and (best is None or d2 < best):
            best = d2
    return best


def _sq_distance_point_face(p, face):
    """Squared distance to the affine hull of `face` when the projection has
    nonnegative barycentric coordinates there, else None."""
    base = face[0]
    edges = [vsub(q, base) for q in face[1:]]
    if not edges:
        return sqnorm(vsub(p, base))
    gram = [[vdot(e, f) for f in edges] for e in edges]
    rhs = [vdot(vsub(p, base), e) for e in edges]
    sol = solve(gram, rhs)
    if sol is None:
        return None
    if any(c < 0 for c in sol) or sum(sol) > 1:
        return None
    proj = base
    for c, e in zip(sol, edges):
        proj = vadd(proj, vscale(c, e))
    return sqnorm(vsub(p, proj))


def minimal_norm_rep(v: Vec, periods) -> Vec:
    """Reduce v modulo the per-axis periods to the minimal-norm representative.

    Componentwise reduction is exact for axis-aligned lattices; ties at half a
    period break toward the lexicographically smaller (negative) value.
    """
    out = []
    for x, per in zip(v, periods):
        if per is None:
            out.append(x)
            continue
        per = frac(per)
        y = x - per * (x / per).__floor__()
        # y in [0, per); shift to (-per/2, per/2], then break the tie downward
        if y > per / 2:
            y -= per
        elif y == per / 2:
            y = -y
        out.append(y)
    return tuple(out)
