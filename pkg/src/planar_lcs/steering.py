"""Constructive trajectory planners, one per classification cell.

* Nilpotent, 0 interior: two-stage parabola concatenation with closed-form
  switch times (quadratic solves on the conserved-parabola level sets).
* Rank-one, 0 interior: exponential transit between equilibrium fibers plus
  dwell segments whose opposite-signed drift rates absorb the y-error.
* Saddle: closed bang-bang orbits through two prescribed points, with
  switch points found on conserved-level curves (bracketed monotone scalar
  solves; all segment times are then logarithms of coordinate ratios).
* Node, negative trace: relax toward the anchor equilibrium under the
  contraction norm, then replay the inverted chart-map parameters.  The
  result is tolerance-accurate by construction, never exact.

Every planner replays its schedule through ``propagate`` before returning,
so the reported endpoint error is an independent re-execution, not a claim.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .core_algebra import adapted_norm
from .dynamics import Schedule, flow_canonical, invariant_F, propagate
from .errors import (
    NoSteeringPossible,
    PointOutside,
    TargetNotInInterior,
    TargetOutsideControlSet,
    WrongCase,
)
from .control_sets import (
    Membership,
    NodeRegion,
    PointFamily,
    SaddleBox,
    Strip,
    WholePlane,
    contains,
    control_set,
    invert_f,
)
from .system_model import (
    SystemSpec,
    ZeroPosition,
    canonicalize,
    equilibrium,
)

__all__ = [
    "SteeringResult",
    "steer_nilpotent",
    "steer_rank1",
    "closed_orbit_saddle",
    "steer_node",
    "steer",
]


@dataclass
class SteeringResult:
    """A schedule plus its independently replayed endpoint error and the
    intermediate construction points (original coordinates)."""

    schedule: Schedule
    endpoint_error: float
    witness: list = field(default_factory=list)
    start: np.ndarray | None = None
    target: np.ndarray | None = None


def _finish(spec, v0, target, segments, witness) -> SteeringResult:
    sched = Schedule(tuple(segments)).without_empty_segments()
    endpoint = propagate(spec, v0, sched).endpoint
    return SteeringResult(
        schedule=sched,
        endpoint_error=float(np.linalg.norm(endpoint - np.asarray(target, float))),
        witness=[np.asarray(w, float) for w in witness],
        start=np.asarray(v0, float),
        target=np.asarray(target, float),
    )


def _positive_root(a: float, b: float, c: float) -> float:
    """Positive root of a t^2 + b t + c with a > 0, c <= 0 (one exists)."""
    disc = b * b - 4.0 * a * c
    sq = np.sqrt(max(disc, 0.0))
    if b >= 0.0:
        q = -0.5 * (b + sq)
        # roots are q/a (<=0) and c/q (>=0); q == 0 only when b == c == 0
        return 0.0 if q == 0.0 else c / q
    return (-b + sq) / (2.0 * a)


# ---------------------------------------------------------------------------
# nilpotent case
# ---------------------------------------------------------------------------


def steer_nilpotent(spec: SystemSpec, v0, v1) -> SteeringResult:
    """Exact transfer for the controllable singular case (det=tr=0, 0 in the
    interior of the range).

    Stage 1 pushes the vertical coordinate positive with the maximal
    control, then drifts with the zero control until strictly inside the
    target's parabola sublevel region.  Stage 2 rides the minimal-control
    parabola onto the target's level set and finishes along one or two
    extreme-control arcs; all times are closed-form quadratic roots.
    """
    canon = canonicalize(spec)
    if not (canon.is_nilpotent and canon.tag.zero_position is ZeroPosition.INTERIOR):
        raise WrongCase(
            "planner requires det A = tr A = 0 with 0 interior to the range"
        )
    v0 = np.asarray(v0, dtype=float)
    v1 = np.asarray(v1, dtype=float)
    if np.linalg.norm(v1 - v0) == 0.0:
        return _finish(spec, v0, v1, (), [])

    u0, u1 = spec.omega_min, spec.omega_max  # u0 < 0 < u1
    a = canon.to_canonical(v0)
    b = canon.to_canonical(v1)
    segments: list[tuple[float, float]] = []
    witness = []

    # stage 1a: maximal control until y is safely positive
    t0 = max(0.0, (1.0 - a[1]) / u1)
    w = flow_canonical(canon, t0, a, u1)
    segments.append((u1, t0))

    # stage 1b: zero control; the level value decreases linearly at rate
    # 2*u1*y, so the strict sublevel entry time is explicit
    F_target = invariant_F(u1, b)
    margin = 1.0 + 1e-3 * abs(F_target)
    t1 = max(0.0, (invariant_F(u1, w) - (F_target - margin)) / (2.0 * u1 * w[1]))
    v0p = flow_canonical(canon, t1, w, 0.0)
    segments.append((0.0, t1))
    witness.append(canon.from_canonical(v0p))

    # stage 2a: minimal control until the trajectory meets the target's
    # maximal-control parabola
    d = u0 - u1
    c0 = invariant_F(u1, v0p) - F_target  # < -margin/2 by stage 1b
    t2 = _positive_root(u0 * d, 2.0 * d * v0p[1], c0)
    v0pp = flow_canonical(canon, t2, v0p, u0)
    segments.append((u0, t2))
    witness.append(canon.from_canonical(v0pp))

    if v0pp[1] <= b[1]:
        # ride the maximal-control parabola up to the target
        t3 = (b[1] - v0pp[1]) / u1
        segments.append((u1, t3))
    else:
        # overshoot in y: meet the minimal-control parabola of the target,
        # then ride it down
        c2 = invariant_F(u0, v0pp) - invariant_F(u0, b)
        t3 = _positive_root(u1 * (u1 - u0), 2.0 * (u1 - u0) * v0pp[1], min(c2, 0.0))
        wstar = flow_canonical(canon, t3, v0pp, u1)
        t4 = max(0.0, (b[1] - wstar[1]) / u0)
        segments.append((u1, t3))
        segments.append((u0, t4))
        witness.append(canon.from_canonical(wstar))

    return _finish(spec, v0, v1, segments, witness)


# ---------------------------------------------------------------------------
# rank-one case
# ---------------------------------------------------------------------------


def steer_rank1(spec: SystemSpec, v0, v1) -> SteeringResult:
    """Exact transfer between interior points of the strip control set
    (det=0, tr!=0, 0 interior to the range).

    The x-coordinate is steered by exponential transit toward extreme-
    control fibers (times are logarithms of affine ratios); the y-error is
    absorbed on equilibrium fibers whose drift rates have opposite signs.
    """
    canon = canonicalize(spec)
    if not (canon.is_rank_one and canon.tag.zero_position is ZeroPosition.INTERIOR):
        raise WrongCase(
            "planner requires det A = 0, tr A != 0 with 0 interior to the range"
        )
    v0 = np.asarray(v0, dtype=float)
    v1 = np.asarray(v1, dtype=float)

    mu = canon.A_can[0, 0]
    z1, z2 = canon.zeta_can
    c = -z1 / mu
    lo, hi = sorted((c * spec.omega_min, c * spec.omega_max))
    a = canon.to_canonical(v0)
    b = canon.to_canonical(v1)

    edge = 1e-12 * (1.0 + abs(lo) + abs(hi))
    for name, point in (("start", a), ("target", b)):
        if not (lo + edge < point[0] < hi - edge):
            raise TargetOutsideControlSet(
                f"{name} x-coordinate {point[0]:.6g} is not interior to the "
                f"strip [{lo:.6g}, {hi:.6g}] (canonical coordinates)"
            )
    if np.linalg.norm(v1 - v0) == 0.0:
        return _finish(spec, v0, v1, (), [])

    def fiber_x(u: float) -> float:
        return c * u

    def transit(x_from: float, x_to: float) -> tuple[float, float] | None:
        """Extreme control and duration moving the x-coordinate exactly from
        x_from to x_to; None when no motion is needed."""
        if x_to == x_from:
            return None
        going_up = x_to > x_from
        if mu < 0.0:
            # converge toward a fiber beyond the destination
            pick_hi = going_up
        else:
            # diverge away from a fiber behind the origin of the move
            pick_hi = not going_up
        if pick_hi:
            w = spec.omega_max if fiber_x(spec.omega_max) == hi else spec.omega_min
        else:
            w = spec.omega_min if fiber_x(spec.omega_min) == lo else spec.omega_max
        xw = fiber_x(w)
        tau = np.log((x_to - xw) / (x_from - xw)) / mu
        return (w, float(tau))

    # strong interior dwell fibers keep the y-adjustment dwells short, which
    # bounds the rounding amplification on unstable fibers (mu > 0)
    g = 0.9 * min(-spec.omega_min, spec.omega_max)

    def plan(dwell_fibers: tuple[float, ...]):
        """Route a -> dwell fibers -> target fiber; the y-error is absorbed
        by one dwell whose drift rate matches its sign.  The final segment is
        always a transit, so the x-arrival is a stable closed form."""
        segments: list[tuple[float, float]] = []
        witness = []
        state = a.copy()
        dwell_index: dict[int, float] = {}
        for u_d in dwell_fibers:
            tr = transit(state[0], fiber_x(u_d))
            if tr is not None:
                segments.append(tr)
                state = flow_canonical(canon, tr[1], state, tr[0])
            witness.append(canon.from_canonical(state))
            dwell_index[len(segments)] = u_d
            segments.append((u_d, 0.0))
        tr = transit(state[0], b[0])
        if tr is not None:
            segments.append(tr)
            state = flow_canonical(canon, tr[1], state, tr[0])
        delta = b[1] - state[1]
        if delta == 0.0:
            return segments, witness
        for k, u_d in dwell_index.items():
            rate = u_d * z2
            if rate != 0.0 and np.sign(delta) == np.sign(rate):
                segments[k] = (u_d, float(delta / rate))
                return segments, witness
        return None

    got = plan((g,)) or plan((-g,)) or plan((g, -g))
    if got is None:
        raise TargetOutsideControlSet(
            "no admissible dwell rate matches the required y-adjustment"
        )
    segments, witness = got
    return _finish(spec, v0, v1, segments, witness)


# ---------------------------------------------------------------------------
# saddle case
# ---------------------------------------------------------------------------


class _SaddleFrame:
    """Fiber coordinates for the saddle: p, q in (u-, u+) parametrize the
    open box, one equilibrium fiber per axis.  Both coordinates evolve as
    scalar exponentials under constant controls."""

    def __init__(self, spec: SystemSpec):
        canon = canonicalize(spec)
        if not canon.is_saddle:
            raise WrongCase("saddle machinery requires det A < 0")
        self.canon = canon
        self.mu = canon.A_can[0, 0]
        self.lam = canon.A_can[1, 1]
        self.z1, self.z2 = canon.zeta_can
        self.um, self.up = spec.omega_min, spec.omega_max
        self.L = self.up - self.um

    def to_fiber(self, v) -> np.ndarray:
        xc = self.canon.to_canonical(v)
        return np.array(
            [-self.mu * xc[0] / self.z1, -self.lam * xc[1] / self.z2]
        )

    def from_fiber(self, pq) -> np.ndarray:
        xc = np.array(
            [-pq[0] * self.z1 / self.mu, -pq[1] * self.z2 / self.lam]
        )
        return self.canon.from_canonical(xc)

    def require_interior(self, pq, label: str) -> None:
        edge = 1e-12 * (1.0 + self.L)
        if not (
            self.um + edge < pq[0] < self.up - edge
            and self.um + edge < pq[1] < self.up - edge
        ):
            raise PointOutside(
                f"{label} is not interior to the saddle control set "
                f"(fiber coordinates {pq})"
            )

    def flow(self, tau: float, pq, u: float) -> np.ndarray:
        return np.array(
            [
                u + np.exp(self.mu * tau) * (pq[0] - u),
                u + np.exp(self.lam * tau) * (pq[1] - u),
            ]
        )

    def log_g_minus(self, pq) -> float:
        return -self.lam * np.log(pq[0] - self.um) + self.mu * np.log(
            pq[1] - self.um
        )

    def log_g_plus(self, pq) -> float:
        return -self.lam * np.log(self.up - pq[0]) + self.mu * np.log(
            self.up - pq[1]
        )

    def crossings(self, pq, ln_alpha: float) -> tuple[float, float]:
        """Times (tau_left <= 0 <= tau_right is NOT required) at which the
        minimal-control orbit through pq meets the level
        log_g_plus = ln_alpha.  Requires log_g_plus(pq) >= ln_alpha.

        The level function along the orbit tends to -inf at both box exits
        and has a single interior maximum, so each side is solved with a
        bracketed scalar root find in a coordinate that removes the
        logarithmic singularity (the tail is asymptotically linear).
        """
        mu, lam, L = self.mu, self.lam, self.L
        P0, Q0 = pq[0] - self.um, pq[1] - self.um
        tau_m = np.log(Q0 / P0) / (mu - lam)
        Pm = P0 * np.exp(mu * tau_m)
        hm = (mu - lam) * np.log(L - Pm) - ln_alpha
        if hm <= 0.0:
            # tangency (or rounding slightly below): both crossings coincide
            return (tau_m, tau_m)

        ym = np.log(L - Pm)

        def h_right(y: float) -> float:
            P = L - np.exp(y)
            Q = Q0 * (P / P0) ** (lam / mu)
            return -lam * y + mu * np.log(L - Q) - ln_alpha

        def h_left(z: float) -> float:
            Q = L - np.exp(z)
            P = P0 * (Q / Q0) ** (mu / lam)
            return -lam * np.log(L - P) + mu * z - ln_alpha

        def solve(hfun, top: float) -> float:
            step = 1.0
            lo = top - step
            for _ in range(200):
                if hfun(lo) < 0.0:
                    break
                step *= 2.0
                lo = top - step
            else:
                raise RuntimeError("level-crossing bracket not found")
            return brentq(hfun, lo, top, xtol=1e-15, rtol=8.9e-16, maxiter=200)

        y_star = solve(h_right, ym)
        z_star = solve(h_left, ym)
        tau_right = np.log((L - np.exp(y_star)) / P0) / mu
        tau_left = np.log((L - np.exp(z_star)) / Q0) / lam
        return (float(tau_left), float(tau_right))

    def time_minus(self, p_from: float, p_to: float) -> float:
        """Minimal-control travel time between two p-values (log of ratio)."""
        return max(0.0, np.log((p_to - self.um) / (p_from - self.um)) / self.mu)

    def time_plus(self, p_from: float, p_to: float) -> float:
        """Maximal-control travel time between two p-values (log of ratio)."""
        return max(0.0, np.log((self.up - p_to) / (self.up - p_from)) / self.mu)


def _saddle_loop(spec: SystemSpec, v, w):
    """Closed bang-bang orbit through v and w.

    Returns (arcs, pos_v, pos_w) where arcs is a cyclic list of
    (control, start_pq, duration) and pos_* = (arc index, time into arc).
    """
    fr = _SaddleFrame(spec)
    pv = fr.to_fiber(v)
    pw = fr.to_fiber(w)
    fr.require_interior(pv, "first point")
    fr.require_interior(pw, "second point")

    gm_v, gp_v = fr.log_g_minus(pv), fr.log_g_plus(pv)
    gm_w, gp_w = fr.log_g_minus(pw), fr.log_g_plus(pw)

    def two_arc(pa, pb, pos_tag_swap):
        """Loop with pa on the minimal-control arc and pb on the maximal:
        feasible when gp(pa) >= gp(pb) and gm(pb) >= gm(pa)."""
        alpha = fr.log_g_plus(pb)
        tau_l, tau_r = fr.crossings(pa, alpha)
        s0 = fr.flow(tau_l, pa, fr.um)  # small p switch
        s1 = fr.flow(tau_r, pa, fr.um)  # large p switch
        T_minus = tau_r - tau_l
        T_plus = fr.time_plus(s1[0], s0[0])
        arcs = [(fr.um, s0, T_minus), (fr.up, s1, T_plus)]
        pos_a = (0, -tau_l)
        pos_b = (1, fr.time_plus(s1[0], pb[0]))
        if pos_tag_swap:
            return arcs, pos_b, pos_a
        return arcs, pos_a, pos_b

    eps = 0.0
    if gp_v >= gp_w - eps and gm_w >= gm_v - eps:
        arcs, pos_v, pos_w = two_arc(pv, pw, pos_tag_swap=False)
    elif gp_w >= gp_v and gm_v >= gm_w:
        arcs, pos_w, pos_v = two_arc(pw, pv, pos_tag_swap=False)
    else:
        # one point dominates both level values: four-arc orbit, all switch
        # points on the maximal-control level of the dominated point
        if gp_v >= gp_w and gm_v >= gm_w:
            dom, sub = pv, pw
            dom_is_v = True
        else:
            dom, sub = pw, pv
            dom_is_v = False
        alpha = fr.log_g_plus(sub)
        tl_d, tr_d = fr.crossings(dom, alpha)
        da = fr.flow(tl_d, dom, fr.um)
        db = fr.flow(tr_d, dom, fr.um)
        tl_s, tr_s = fr.crossings(sub, alpha)
        sa = fr.flow(tl_s, sub, fr.um)
        sb = fr.flow(tr_s, sub, fr.um)
        arcs = [
            (fr.um, da, tr_d - tl_d),
            (fr.up, db, fr.time_plus(db[0], sa[0])),
            (fr.um, sa, tr_s - tl_s),
            (fr.up, sb, fr.time_plus(sb[0], da[0])),
        ]
        pos_dom = (0, -tl_d)
        pos_sub = (2, -tl_s)
        pos_v, pos_w = (pos_dom, pos_sub) if dom_is_v else (pos_sub, pos_dom)

    return fr, arcs, pos_v, pos_w


def _rotate_loop(arcs, pos):
    """Schedule running once around the loop starting at (arc i, time t)."""
    i, t_in = pos
    n = len(arcs)
    segs = [(arcs[i][0], arcs[i][2] - t_in)]
    for k in range(1, n):
        u, _, T = arcs[(i + k) % n]
        segs.append((u, T))
    segs.append((arcs[i][0], t_in))
    return segs


def _loop_prefix(arcs, pos_from, pos_to):
    """Schedule along the loop from one marked position to another."""
    (i, ti), (j, tj) = pos_from, pos_to
    n = len(arcs)
    if i == j and tj >= ti:
        return [(arcs[i][0], tj - ti)]
    segs = [(arcs[i][0], arcs[i][2] - ti)]
    k = (i + 1) % n
    while k != j:
        segs.append((arcs[k][0], arcs[k][2]))
        k = (k + 1) % n
    segs.append((arcs[j][0], tj))
    return segs


def closed_orbit_saddle(spec: SystemSpec, v, w) -> SteeringResult:
    """Closed orbit of extreme controls through two interior points of the
    saddle control set, starting and ending at the first point.

    The orbit has two arcs when the conserved-level values of the points
    are oppositely ordered, four arcs otherwise; endpoint error measures
    the closure defect after independent replay.
    """
    v = np.asarray(v, dtype=float)
    w = np.asarray(w, dtype=float)
    if np.linalg.norm(w - v) == 0.0:
        fr = _SaddleFrame(spec)
        fr.require_interior(fr.to_fiber(v), "point")
        return _finish(spec, v, v, (), [v])

    fr, arcs, pos_v, pos_w = _saddle_loop(spec, v, w)
    segs = _rotate_loop(arcs, pos_v)
    witness = [fr.from_fiber(a[1]) for a in arcs] + [w]
    return _finish(spec, v, v, segs, witness)


# ---------------------------------------------------------------------------
# node case
# ---------------------------------------------------------------------------


def steer_node(
    spec: SystemSpec,
    v0,
    v1,
    tol: float = 1e-6,
    relax_time: float | None = None,
) -> SteeringResult:
    """Tolerance-accurate transfer for the stable node (det>0, tr<0).

    Relax with the minimal control until the state is within the error
    budget of the anchor equilibrium (duration from the contraction norm),
    then replay the chart-map parameters of the target.  The transfer is
    approximate by design; the replayed error is reported honestly.

    Raises WrongCase for positive trace (callers steer the reversed system)
    and TargetNotInInterior when the target is not in the open image.
    """
    canon = canonicalize(spec)
    if not canon.is_node:
        raise WrongCase("planner requires det A > 0")
    if float(np.trace(canon.A_can)) >= 0.0:
        raise WrongCase(
            "positive-trace node: steer the time-reversed system instead"
        )
    v0 = np.asarray(v0, dtype=float)
    v1 = np.asarray(v1, dtype=float)

    inv = invert_f(
        canon, spec.omega_min, spec.omega_max, v1, tol=min(0.5 * tol, 1e-10)
    )
    if inv is None:
        raise TargetNotInInterior(
            "target is not in the interior of the node control set"
        )
    s_par, t_par = inv

    anchor = equilibrium(spec, spec.omega_min)
    norm_A = adapted_norm(spec.A)
    dist = norm_A(v0 - anchor)
    if relax_time is None:
        if dist == 0.0:
            relax_time = 0.0
        else:
            blowup = float(np.linalg.norm(np.linalg.inv(norm_A.transform), 2))
            relax_time = max(
                0.0, np.log(blowup * dist / (0.5 * tol)) / norm_A.delta
            )

    segments = [
        (spec.omega_min, float(relax_time)),
        (spec.omega_max, float(t_par)),
        (spec.omega_min, float(s_par)),
    ]
    return _finish(spec, v0, v1, segments, [anchor])


# ---------------------------------------------------------------------------
# dispatcher
# ---------------------------------------------------------------------------


def steer(spec: SystemSpec, v0, v1, tol: float = 1e-6) -> SteeringResult:
    """Plan a transfer from v0 to v1, dispatching on the classification.

    Raises NoSteeringPossible when the system admits no control set (or
    only one-point control sets) and the request is not the trivial stay-
    at-an-equilibrium; WrongCase for the positive-trace node (handled by
    time reversal at the CLI layer); the per-planner errors otherwise.
    """
    v0 = np.asarray(v0, dtype=float)
    v1 = np.asarray(v1, dtype=float)
    desc = control_set(spec)

    if isinstance(desc, WholePlane):
        return steer_nilpotent(spec, v0, v1)
    if isinstance(desc, Strip):
        return steer_rank1(spec, v0, v1)
    if isinstance(desc, SaddleBox):
        if np.linalg.norm(v1 - v0) == 0.0:
            fr = _SaddleFrame(spec)
            fr.require_interior(fr.to_fiber(v0), "point")
            return _finish(spec, v0, v1, (), [])
        fr, arcs, pos_v, pos_w = _saddle_loop(spec, v0, v1)
        segs = _loop_prefix(arcs, pos_v, pos_w)
        witness = [fr.from_fiber(a[1]) for a in arcs]
        return _finish(spec, v0, v1, segs, witness)
    if isinstance(desc, NodeRegion):
        if desc.epsilon < 0:
            raise WrongCase(
                "positive-trace node: steer the time-reversed system instead"
            )
        return steer_node(spec, v0, v1, tol)
    if isinstance(desc, PointFamily):
        same = np.linalg.norm(v1 - v0) == 0.0
        if same and contains(spec, desc, v0) is not Membership.OUTSIDE:
            return _finish(spec, v0, v1, (), [])
        raise NoSteeringPossible(
            "only one-point control sets exist (zero control on the range "
            "boundary): no transfer between distinct points"
        )
    raise NoSteeringPossible(
        "the system admits no control set (zero control outside the range): "
        "no point is recurrent"
    )
