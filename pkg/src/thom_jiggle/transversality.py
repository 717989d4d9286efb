"""Plane-field evaluators and quantitative transversality certificates.

A plane field is stored in graph form: at each point an h-dimensional plane
in ambient space spanned over designated horizontal axes, with the vertical
component given by a matrix.  Graph form makes fiber transversality
structural.  Certificates sample cells on a barycentric lattice and measure
singular-value or principal-angle margins.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from .core import SimplicialComplex
from .errors import DimensionMismatch, DomainMismatch, OrderExhausted
from .jiggling import FlatModel, PLSection, jiggle_exp
from .subdivision import ThomPattern, iterate_fold

DEFAULT_MARGIN_THRESHOLD = 1e-6
DEFAULT_SAMPLES = 4


@dataclass(frozen=True)
class PlaneField:
    """Plane distribution {(u, L.u)} graphed over the horizontal axes.

    matrix_fn maps an ambient point (1-d numpy array) to the vertical-by-
    horizontal matrix L; it must be deterministic and safe for concurrent
    read-only calls.
    """

    matrix_fn: object
    horizontal_idx: tuple
    vertical_idx: tuple
    ambient_dim: int
    domain: dict = field(default_factory=dict)

    @property
    def plane_dim(self):
        return len(self.horizontal_idx)

    def matrix(self, point):
        L = np.asarray(self.matrix_fn(np.asarray(point, dtype=float)), dtype=float)
        expected = (len(self.vertical_idx), len(self.horizontal_idx))
        if L.shape != expected:
            raise DimensionMismatch(f"field matrix shape {L.shape}, expected {expected}")
        return L

    def basis(self, point):
        """Ambient-by-plane_dim matrix of spanning columns at the point."""
        L = self.matrix(point)
        B = np.zeros((self.ambient_dim, self.plane_dim))
        for col, ax in enumerate(self.horizontal_idx):
            B[ax, col] = 1.0
        for row, ax in enumerate(self.vertical_idx):
            B[ax, :] = L[row, :]
        return B


def graph_field(L, base_dim=None, fiber_dim=None, domain=None) -> PlaneField:
    """Wrap a constant matrix or a callable into a fiber-transverse plane field."""
    if callable(L):
        probe = None
        fn = L
        if base_dim is None or fiber_dim is None:
            raise DimensionMismatch("callable fields need explicit dimensions")
    else:
        M = np.asarray(L, dtype=float)
        if fiber_dim is None:
            fiber_dim = M.shape[0]
        if base_dim is None:
            base_dim = M.shape[1]
        fn = lambda p, _M=M: _M
    ambient = base_dim + fiber_dim
    return PlaneField(
        fn,
        tuple(range(base_dim)),
        tuple(range(base_dim, ambient)),
        ambient,
        dict(domain or {}),
    )


def horizontal_field(n: int) -> PlaneField:
    return graph_field(np.zeros((n, n)))


def exp_tangent_field(n: int) -> PlaneField:
    """Tangent planes of the exponential foliation of a flat model: the
    leaves {x + v = const} have graph matrix -identity."""
    return graph_field(-np.eye(n))


def interpolate_fields(P: PlaneField, Q: PlaneField, t) -> PlaneField:
    """Pointwise convex combination; endpoints reproduce the inputs exactly."""
    if (P.horizontal_idx, P.vertical_idx, P.ambient_dim) != (
        Q.horizontal_idx,
        Q.vertical_idx,
        Q.ambient_dim,
    ):
        raise DomainMismatch("plane fields live on different domains")
    t = float(t)
    if t == 0.0:
        return P
    if t == 1.0:
        return Q

    def fn(point, _P=P, _Q=Q, _t=t):
        return (1.0 - _t) * _P.matrix(point) + _t * _Q.matrix(point)

    return PlaneField(fn, P.horizontal_idx, P.vertical_idx, P.ambient_dim, dict(P.domain))


def field_schedule(field0: PlaneField, field1: PlaneField, t0: float, t1: float):
    """Time-indexed family: field0 up to t0, field1 from t1 on, convex
    interpolation in between."""
    if not t0 < t1:
        raise DomainMismatch("schedule needs t0 < t1")

    def at(t):
        if t <= t0:
            return field0
        if t >= t1:
            return field1
        return interpolate_fields(field0, field1, (t - t0) / (t1 - t0))

    return at


# --- certification ------------------------------------------------------------------


@dataclass
class TransversalityReport:
    entries: list
    min_margin: float
    passed: bool
    threshold: float
    samples_per_simplex: int

    def as_dict(self):
        return {
            "min_margin": self.min_margin,
            "passed": bool(self.passed),
            "threshold": self.threshold,
            "samples_per_simplex": self.samples_per_simplex,
            "cells": [
                {"simplex": list(s), "dim": d, "margin": m}
                for s, d, m in self.entries
            ],
        }


def _barycentric_lattice(k, degree):
    if k == 0:
        return [(1.0,)]
    out = []

    def rec(prefix, remaining, slots):
        if slots == 1:
            out.append(prefix + (remaining,))
            return
        for a in range(remaining + 1):
            rec(prefix + (a,), remaining - a, slots - 1)

    rec((), degree, k + 1)
    return [tuple(a / degree for a in w) for w in out]


def _embedded_cells(obj):
    if isinstance(obj, SimplicialComplex):
        for s in obj.maximal_simplices():
            yield s, [tuple(map(float, p)) for p in obj.lifted_points(s)]
        return
    cells = getattr(obj, "embedded_cells", None)
    if cells is None:
        raise DimensionMismatch(f"cannot embed object of type {type(obj)!r}")
    for s, rows in cells():
        yield s, [tuple(map(float, r)) for r in rows]


def _unit_columns(M):
    norms = np.linalg.norm(M, axis=0)
    norms[norms == 0] = 1.0
    return M / norms


def cell_margin(pts, fld: PlaneField, degree: int):
    """Margin of one embedded cell against the field, minimized over samples.

    Cells of codimension at least the plane dimension use the spanning
    test (smallest singular value of the combined unit-column matrix); lower
    cells use the smallest principal angle to detect tangencies.
    """
    P = np.asarray(pts, dtype=float)
    k = P.shape[0] - 1
    ambient = P.shape[1]
    if k == 0:
        return None
    T = (P[1:] - P[0]).T  # ambient x k
    Tn = _unit_columns(T)
    spanning = k + fld.plane_dim >= ambient
    margin = np.inf
    for w in _barycentric_lattice(k, degree):
        point = np.asarray(w) @ P
        B = fld.basis(point)
        if not np.all(np.isfinite(B)):
            return -1.0
        Bn = _unit_columns(B)
        if spanning:
            sv = np.linalg.svd(np.hstack([Tn, Bn]), compute_uv=False)
            m = float(sv[ambient - 1]) if len(sv) >= ambient else 0.0
        else:
            qt, _ = np.linalg.qr(Tn)
            qb, _ = np.linalg.qr(Bn)
            sv = np.linalg.svd(qt.T @ qb, compute_uv=False)
            cos = min(1.0, float(sv[0])) if len(sv) else 0.0
            m = float(np.arccos(cos))
        margin = min(margin, m)
    return margin


def certify_transversality(
    obj,
    fld: PlaneField,
    samples_per_simplex: int = DEFAULT_SAMPLES,
    threshold: float = DEFAULT_MARGIN_THRESHOLD,
) -> TransversalityReport:
    """Per-cell transversality/quasi-transversality margins of an embedded
    section or complex against a plane field.

    Vertices are vacuous (a point cannot be tangent) and are skipped.
    """
    entries = []
    for s, pts in _embedded_cells(obj):
        if len(pts[0]) != fld.ambient_dim:
            raise DimensionMismatch(
                f"embedded dimension {len(pts[0])} vs field ambient {fld.ambient_dim}"
            )
        m = cell_margin(pts, fld, samples_per_simplex)
        if m is None:
            continue
        entries.append((s, len(s) - 1, m))
    min_margin = min((m for _, _, m in entries), default=np.inf)
    passed = bool(entries) and all(m > threshold for _, _, m in entries)
    return TransversalityReport(entries, float(min_margin), passed, threshold,
                                samples_per_simplex)


def min_transversal_order(
    T: SimplicialComplex,
    pattern: ThomPattern,
    model: FlatModel,
    fields,
    r_max: int,
    samples_per_simplex: int = DEFAULT_SAMPLES,
    threshold: float = DEFAULT_MARGIN_THRESHOLD,
    bundle_radius=None,
) -> int:
    """Least folding order r in 1..r_max whose jiggled section is transverse
    to every field in the family; raises OrderExhausted with per-order best
    margins otherwise."""
    fields = list(fields)
    if not fields:
        raise DomainMismatch("empty field family")
    best = {}
    for r in range(1, r_max + 1):
        tower = iterate_fold(T, pattern, r)
        section = jiggle_exp(tower, model, bundle_radius)
        margins = []
        ok = True
        for fld in fields:
            rep = certify_transversality(section, fld, samples_per_simplex, threshold)
            margins.append(rep.min_margin)
            if not rep.passed:
                ok = False
        best[r] = min(margins)
        if ok:
            return r
    raise OrderExhausted(
        f"no transversal order found up to r_max={r_max}", best_margins=best
    )
