"""Control-set descriptions for every classification cell, the node-case
two-parameter chart map with its inversion, boundary tracing and membership
tests.

Region variants (canonical coordinates unless noted):

* ``WholePlane``      -- singular drift, zero trace, 0 interior to the range.
* ``Strip``           -- singular drift, nonzero trace: an x-interval times R.
* ``SaddleBox``       -- det A < 0: open x-interval times closed y-interval.
* ``NodeRegion``      -- det A > 0: image of the two-parameter bang-bang
                         endpoint map, in original coordinates.
* ``PointFamily``     -- a line of one-point control sets (empty interior).
* ``NoControlSet``    -- no control set exists.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
from matplotlib.path import Path as _MplPath

from .dynamics import flow_time_batch
from .errors import WrongCase, WrongVariant
from .system_model import (
    CanonicalForm,
    Sign,
    SystemSpec,
    ZeroPosition,
    canonicalize,
)

__all__ = [
    "Membership",
    "ControlSetDescription",
    "WholePlane",
    "Strip",
    "SaddleBox",
    "NodeRegion",
    "PointFamily",
    "NoControlSet",
    "control_set",
    "f_map",
    "f_jacobian",
    "invert_f",
    "boundary_polyline",
    "contains",
]

DEFAULT_TOL_BAND = 1e-6
_POLYLINE_N = 1024


class Membership(enum.Enum):
    INSIDE = "inside"
    BOUNDARY = "boundary"
    OUTSIDE = "outside"


class ControlSetDescription:
    """Base class for the tagged union of control-set shapes."""

    variant: str = "abstract"

    def to_report(self) -> dict:
        return {"variant": self.variant}


@dataclass
class WholePlane(ControlSetDescription):
    variant = "whole_plane"


@dataclass
class Strip(ControlSetDescription):
    """x-interval (canonical coordinates) times the whole y-axis.
    Both x-edges are open exactly when the nonzero eigenvalue is positive."""

    x_interval: tuple[float, float]
    x_open: tuple[bool, bool]
    variant = "strip"

    def to_report(self) -> dict:
        return {
            "variant": self.variant,
            "x_interval": list(self.x_interval),
            "x_open": list(self.x_open),
        }


@dataclass
class SaddleBox(ControlSetDescription):
    """Open x-interval times closed y-interval, canonical coordinates."""

    x_interval: tuple[float, float]
    y_interval: tuple[float, float]
    y_closed: bool = True
    variant = "saddle_box"

    def to_report(self) -> dict:
        return {
            "variant": self.variant,
            "x_interval": list(self.x_interval),
            "y_interval": list(self.y_interval),
            "y_closed": self.y_closed,
        }


@dataclass
class NodeRegion(ControlSetDescription):
    """Region bounded by the two extreme-control arcs joining the extreme
    equilibria (original coordinates).  ``epsilon`` is +1 for negative trace
    (flows run forward) and -1 for positive trace (flows run backward);
    the set is closed exactly when the trace is negative."""

    u_minus: float
    u_plus: float
    epsilon: int
    closed: bool
    variant = "node_region"

    def to_report(self) -> dict:
        return {
            "variant": self.variant,
            "u_minus": self.u_minus,
            "u_plus": self.u_plus,
            "epsilon": self.epsilon,
            "closed": self.closed,
        }


@dataclass
class PointFamily(ControlSetDescription):
    """A line of one-point control sets: base + R * direction, original
    coordinates.  Has empty interior; membership is never Inside."""

    base: np.ndarray
    direction: np.ndarray
    variant = "point_family"

    def to_report(self) -> dict:
        return {
            "variant": self.variant,
            "base": list(map(float, self.base)),
            "direction": list(map(float, self.direction)),
        }


@dataclass
class NoControlSet(ControlSetDescription):
    variant = "no_control_set"


def _sorted_interval(a: float, b: float) -> tuple[float, float]:
    return (a, b) if a <= b else (b, a)


def control_set(spec: SystemSpec) -> ControlSetDescription:
    """Construct the control-set description dictated by the classification.

    Raises LarcViolated / ComplexEigenvalues via classification.
    """
    canon = canonicalize(spec)
    tag = canon.tag
    lo, hi = spec.omega_min, spec.omega_max

    if canon.is_nilpotent:
        if tag.zero_position is ZeroPosition.INTERIOR:
            return WholePlane()
        if tag.zero_position is ZeroPosition.BOUNDARY:
            d = spec.A @ spec.zeta
            return PointFamily(np.zeros(2), d / np.linalg.norm(d))
        return NoControlSet()

    if canon.is_rank_one:
        if tag.zero_position is ZeroPosition.OUTSIDE:
            return NoControlSet()
        if tag.zero_position is ZeroPosition.BOUNDARY:
            d = canon.P[:, 1]
            return PointFamily(np.zeros(2), d / np.linalg.norm(d))
        mu = canon.A_can[0, 0]
        c = -canon.zeta_can[0] / mu
        return Strip(_sorted_interval(c * lo, c * hi), (mu > 0.0, mu > 0.0))

    if canon.is_saddle:
        mu, lam = canon.A_can[0, 0], canon.A_can[1, 1]
        z1, z2 = canon.zeta_can
        return SaddleBox(
            _sorted_interval(-z1 / mu * lo, -z1 / mu * hi),
            _sorted_interval(-z2 / lam * lo, -z2 / lam * hi),
        )

    # node: det > 0, trace cannot vanish for real eigenvalues
    eps = 1 if tag.trsign is Sign.NEGATIVE else -1
    return NodeRegion(lo, hi, eps, closed=(eps == 1))


# ---------------------------------------------------------------------------
# node-case chart map f and its inversion
# ---------------------------------------------------------------------------


def _require_node(canon: CanonicalForm) -> None:
    if not canon.is_node:
        raise WrongCase("operation requires det A > 0 with real eigenvalues")


def _expm_can(canon: CanonicalForm, t: float) -> np.ndarray:
    """exp(t * A_can) in closed form."""
    A = canon.A_can
    if A[1, 0] == 0.0 and A[0, 1] != 0.0 and A[0, 0] == A[1, 1]:
        lam = A[0, 0]
        return np.exp(lam * t) * np.array([[1.0, t], [0.0, 1.0]])
    return np.diag([np.exp(A[0, 0] * t), np.exp(A[1, 1] * t)])


def equilibrium_canonical(canon: CanonicalForm, u: float) -> np.ndarray:
    """Constant-control equilibrium in canonical coordinates (det A != 0)."""
    return np.linalg.solve(canon.A_can, -u * canon.zeta_can)


def equilibrium_original(canon: CanonicalForm, u: float) -> np.ndarray:
    return canon.from_canonical(equilibrium_canonical(canon, u))


def f_map(canon: CanonicalForm, u1: float, u2: float, s: float, t: float) -> np.ndarray:
    """Two-parameter bang-bang endpoint map of the node case.

    Starting at the u1-equilibrium, apply control u2 for time t, then
    control u1 for time s.  Negative s, t realize the time-reversed map
    used when the trace is positive.  Returned in original coordinates.
    """
    _require_node(canon)
    if not u1 < u2:
        raise WrongCase(f"need u1 < u2, got {u1} >= {u2}")
    Ainv_z = np.linalg.solve(canon.A_can, canon.zeta_can)
    core = _expm_can(canon, s) @ (_expm_can(canon, t) - np.eye(2)) @ canon.zeta_can
    vc = (u2 - u1) * np.linalg.solve(canon.A_can, core) - u1 * Ainv_z
    return canon.from_canonical(vc)


def f_jacobian(canon: CanonicalForm, u1: float, u2: float, s: float, t: float) -> np.ndarray:
    """Columns are the partial derivatives of ``f_map`` w.r.t. s and t.

    The determinant is nonzero for all s, t != 0 whenever the rank
    condition holds, which makes the map a diffeomorphism onto its image.
    """
    _require_node(canon)
    if not u1 < u2:
        raise WrongCase(f"need u1 < u2, got {u1} >= {u2}")
    Es = _expm_can(canon, s)
    Et = _expm_can(canon, t)
    d_s = (u2 - u1) * (Es @ (Et - np.eye(2)) @ canon.zeta_can)
    d_t = (u2 - u1) * (Es @ Et @ canon.zeta_can)
    return canon.P @ np.column_stack([d_s, d_t])


def _node_epsilon(canon: CanonicalForm) -> int:
    return 1 if float(np.trace(canon.A_can)) < 0.0 else -1


def invert_f(
    canon: CanonicalForm,
    u1: float,
    u2: float,
    p,
    tol: float = 1e-10,
) -> tuple[float, float] | None:
    """Invert the chart map: find s, t > 0 with f(eps*s, eps*t) = p.

    eps follows the trace sign, so the recovered parameters always describe
    the control-set interior.  Returns None when p is not in the open
    image: the damped-Newton multistart must fail *and* the boundary
    polyline test must agree that p is outside (or within tol of the
    degenerate corner equilibria).
    """
    _require_node(canon)
    if not u1 < u2:
        raise WrongCase(f"need u1 < u2, got {u1} >= {u2}")
    p = np.asarray(p, dtype=float).reshape(2)
    eps = _node_epsilon(canon)

    # the corner equilibria are reached only in the limits t -> 0 / t -> inf,
    # so they are never in the open image
    scale = 1.0 + np.linalg.norm(p)
    for u_corner in (u1, u2):
        v_corner = equilibrium_original(canon, u_corner)
        if np.linalg.norm(p - v_corner) <= max(tol, 1e-12 * scale):
            return None

    def residual(ls: float, lt: float) -> np.ndarray:
        return f_map(canon, u1, u2, eps * np.exp(ls), eps * np.exp(lt)) - p

    def newton(ls: float, lt: float) -> tuple[float, float] | None:
        r = residual(ls, lt)
        rn = float(np.linalg.norm(r))
        for _ in range(64):
            if rn <= tol:
                # polish: keep stepping while the residual still drops
                for _ in range(3):
                    step = _newton_step(ls, lt, r)
                    if step is None:
                        break
                    nls, nlt, nr, nrn = step
                    if nrn >= rn:
                        break
                    ls, lt, r, rn = nls, nlt, nr, nrn
                return (float(np.exp(ls)), float(np.exp(lt)))
            step = _newton_step(ls, lt, r)
            if step is None:
                return None
            nls, nlt, nr, nrn = step
            if not nrn < rn * (1.0 - 1e-6):
                return None
            ls, lt, r, rn = nls, nlt, nr, nrn
        return None

    def _newton_step(ls, lt, r):
        s_signed, t_signed = eps * np.exp(ls), eps * np.exp(lt)
        J = f_jacobian(canon, u1, u2, s_signed, t_signed)
        # chain rule for the log parametrization
        J = J * np.array([s_signed, t_signed])
        try:
            dz = np.linalg.solve(J, -r)
        except np.linalg.LinAlgError:
            return None
        nd = float(np.max(np.abs(dz)))
        if nd > 3.0:
            dz *= 3.0 / nd
        best = None
        for alpha in (1.0, 0.5, 0.25, 0.125, 0.0625):
            nls = float(np.clip(ls + alpha * dz[0], -45.0, 45.0))
            nlt = float(np.clip(lt + alpha * dz[1], -45.0, 45.0))
            nr = residual(nls, nlt)
            nrn = float(np.linalg.norm(nr))
            if best is None or nrn < best[3]:
                best = (nls, nlt, nr, nrn)
            if nrn < float(np.linalg.norm(r)):
                return (nls, nlt, nr, nrn)
        return best

    ln2 = np.log(2.0)
    ks = range(-6, 7)
    for shell in range(0, 7):
        for i in ks:
            for j in ks:
                if max(abs(i), abs(j)) != shell:
                    continue
                got = newton(i * ln2, j * ln2)
                if got is not None:
                    return got

    # Newton found nothing; require the boundary test to agree
    ring = _node_polyline_cached(canon, u1, u2, eps, _POLYLINE_N)
    path = _MplPath(ring["points"])
    if path.contains_point(p) and _dist_to_polyline(ring["points"], p) > tol:
        # disagreement: one denser retry before giving up
        for i in range(-9, 10):
            for j in range(-9, 10):
                got = newton(i * 0.5 * ln2, j * 0.5 * ln2)
                if got is not None:
                    return got
    return None


# ---------------------------------------------------------------------------
# boundary tracing
# ---------------------------------------------------------------------------


def _slowest_rate(canon: CanonicalForm) -> float:
    l1, l2 = canon.eigen.eigenvalues
    return min(abs(l1), abs(l2))


def _node_arc(
    canon: CanonicalForm,
    u_from: float,
    u_to: float,
    eps: int,
    n: int,
) -> np.ndarray:
    """Arc t -> flow(eps*t, v(u_from), u_to), resampled by chord length to n
    points, with the exact equilibria pinned at both ends (original coords)."""
    v0 = equilibrium_canonical(canon, u_from)
    v1 = equilibrium_canonical(canon, u_to)
    rate = _slowest_rate(canon)
    t_max = 36.0 / rate

    n_dense = max(8 * n, 256)
    sigma = np.linspace(0.0, 1.0 - np.exp(-rate * t_max), n_dense)
    ts = -np.log1p(-sigma) / rate
    pts = flow_time_batch(canon, eps * ts, v0, u_to)
    pts[0] = v0

    # equalize chord lengths, then re-evaluate the flow at the resampled
    # times so every vertex lies exactly on the arc
    seg = np.linalg.norm(np.diff(pts, axis=0), axis=1)
    arclen = np.concatenate([[0.0], np.cumsum(seg)])
    targets = np.linspace(0.0, arclen[-1], n - 1)
    ts_out = np.interp(targets, arclen, ts)
    out = flow_time_batch(canon, eps * ts_out, v0, u_to)
    out[0] = v0
    out = np.vstack([out, v1])
    return out @ canon.P.T


def _chord_deviation(points: np.ndarray) -> float:
    """Midpoint deviation of interior vertices: a discretization-error proxy
    for a polyline sampled from a smooth arc."""
    if len(points) < 3:
        return 0.0
    mid = 0.5 * (points[:-2] + points[2:])
    return float(np.max(np.linalg.norm(points[1:-1] - mid, axis=1)))


def _node_polyline_cached(
    canon: CanonicalForm, u1: float, u2: float, eps: int, n: int
) -> dict:
    cache = canon.cache
    key = ("node_ring", u1, u2, eps, n)
    if key in cache:
        return cache[key]
    half = max(n // 2 + 1, 8)
    arc1 = _node_arc(canon, u1, u2, eps, half)
    arc2 = _node_arc(canon, u2, u1, eps, half)
    points = np.vstack([arc1, arc2[1:]])  # closed ring: last == first
    # discretization error per smooth arc; the seam is a genuine corner and
    # must not widen the uncertainty band
    sagitta = max(_chord_deviation(arc1), _chord_deviation(arc2))
    cache[key] = {"points": points, "sagitta": sagitta}
    return cache[key]


def _rectangle_ring(
    canon: CanonicalForm,
    x_int: tuple[float, float],
    y_int: tuple[float, float],
    n: int,
) -> np.ndarray:
    per_edge = max(n // 4, 1)
    corners = [
        (x_int[0], y_int[0]),
        (x_int[1], y_int[0]),
        (x_int[1], y_int[1]),
        (x_int[0], y_int[1]),
    ]
    pts = []
    for a, b in zip(corners, corners[1:] + corners[:1]):
        frac = np.linspace(0.0, 1.0, per_edge + 1)[:-1]
        pts.extend(
            (a[0] + f * (b[0] - a[0]), a[1] + f * (b[1] - a[1])) for f in frac
        )
    pts.append(corners[0])  # explicit closure
    return np.array(pts) @ canon.P.T


def boundary_polyline(
    spec: SystemSpec,
    desc: ControlSetDescription,
    n: int = 512,
    extent: float = 10.0,
) -> np.ndarray:
    """Ordered boundary points of the control set, original coordinates.

    NodeRegion: the two extreme-control arcs joined at the extreme
    equilibria, arc-length adaptive, returned as a closed ring (first point
    repeated at the end).  Strip / SaddleBox: rectangle rings, with
    unbounded directions clipped to [-extent, extent].  PointFamily: the
    segment base +- extent * direction.

    Raises
    ------
    WrongVariant
        For WholePlane / NoControlSet (no boundary to trace).
    """
    canon = canonicalize(spec)
    if isinstance(desc, NodeRegion):
        ring = _node_polyline_cached(
            canon, desc.u_minus, desc.u_plus, desc.epsilon, n
        )
        return ring["points"].copy()
    if isinstance(desc, Strip):
        return _rectangle_ring(canon, desc.x_interval, (-extent, extent), n)
    if isinstance(desc, SaddleBox):
        y_lo = max(desc.y_interval[0], -extent)
        y_hi = min(desc.y_interval[1], extent)
        x_lo = max(desc.x_interval[0], -extent)
        x_hi = min(desc.x_interval[1], extent)
        return _rectangle_ring(canon, (x_lo, x_hi), (y_lo, y_hi), n)
    if isinstance(desc, PointFamily):
        m = max(n, 2)
        frac = np.linspace(-extent, extent, m)
        return desc.base[None, :] + frac[:, None] * desc.direction[None, :]
    raise WrongVariant(f"{desc.variant} has no boundary polyline")


# ---------------------------------------------------------------------------
# membership
# ---------------------------------------------------------------------------


def _dist_to_polyline(pts: np.ndarray, p: np.ndarray) -> float:
    a, b = pts[:-1], pts[1:]
    d = b - a
    L2 = np.einsum("ij,ij->i", d, d)
    L2 = np.where(L2 == 0.0, 1.0, L2)
    t = np.clip(np.einsum("ij,ij->i", p - a, d) / L2, 0.0, 1.0)
    proj = a + t[:, None] * d
    return float(np.sqrt(np.min(np.einsum("ij,ij->i", proj - p, proj - p))))


def _interval_membership(
    x: float, lo: float, hi: float, band: float
) -> Membership:
    if min(abs(x - lo), abs(x - hi)) <= band:
        return Membership.BOUNDARY
    return Membership.INSIDE if lo < x < hi else Membership.OUTSIDE


def contains(
    spec: SystemSpec,
    desc: ControlSetDescription,
    p,
    tol_band: float = DEFAULT_TOL_BAND,
) -> Membership:
    """Membership of a point in the described control set.

    Interval variants test canonical coordinates and report Boundary within
    ``tol_band`` of an edge (the open/closed flags stay metadata).  The node
    region combines a crossing-number test against the cached boundary
    polyline with chart-map inversion near the boundary, so the polyline
    discretization cannot flip the answer.  PointFamily has empty interior
    and never reports Inside.
    """
    p = np.asarray(p, dtype=float).reshape(2)

    if isinstance(desc, WholePlane):
        return Membership.INSIDE
    if isinstance(desc, NoControlSet):
        return Membership.OUTSIDE
    if isinstance(desc, PointFamily):
        offset = p - desc.base
        perp = offset - np.dot(offset, desc.direction) * desc.direction
        return (
            Membership.BOUNDARY
            if np.linalg.norm(perp) <= tol_band
            else Membership.OUTSIDE
        )

    canon = canonicalize(spec)
    pc = canon.to_canonical(p)

    if isinstance(desc, Strip):
        return _interval_membership(pc[0], *desc.x_interval, tol_band)

    if isinstance(desc, SaddleBox):
        mx = _interval_membership(pc[0], *desc.x_interval, tol_band)
        my = _interval_membership(pc[1], *desc.y_interval, tol_band)
        if mx is Membership.OUTSIDE or my is Membership.OUTSIDE:
            # near-corner points within the band of both edges are boundary
            dx = max(desc.x_interval[0] - pc[0], pc[0] - desc.x_interval[1], 0.0)
            dy = max(desc.y_interval[0] - pc[1], pc[1] - desc.y_interval[1], 0.0)
            if np.hypot(dx, dy) <= tol_band:
                return Membership.BOUNDARY
            return Membership.OUTSIDE
        if mx is Membership.BOUNDARY or my is Membership.BOUNDARY:
            return Membership.BOUNDARY
        return Membership.INSIDE

    if isinstance(desc, NodeRegion):
        ring = _node_polyline_cached(
            canon, desc.u_minus, desc.u_plus, desc.epsilon, _POLYLINE_N
        )
        pts = ring["points"]
        d = _dist_to_polyline(pts, p)
        if d <= tol_band:
            return Membership.BOUNDARY
        # the crossing test can only be wrong between the ring and the true
        # arcs, i.e. within the discretization error of the ring
        if d <= 3.0 * ring["sagitta"]:
            got = invert_f(canon, desc.u_minus, desc.u_plus, p, tol=0.5 * d)
            return Membership.INSIDE if got is not None else Membership.OUTSIDE
        inside = _MplPath(pts).contains_point(p)
        return Membership.INSIDE if inside else Membership.OUTSIDE

    raise WrongVariant(f"unknown control-set variant: {desc!r}")
