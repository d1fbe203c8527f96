"""Exact solutions for constant and piecewise-constant controls, plus the
conserved quantities of the singular (det A = 0) and saddle cases.

All flows are evaluated in canonical coordinates with case-specific closed
forms and mapped back, so repeated propagation does not accumulate
integrator error.  Negative times are allowed everywhere; they realize the
backward orbits.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidSchedule, WrongCase
from .system_model import CanonicalForm, SystemSpec, canonicalize

__all__ = [
    "Schedule",
    "Trajectory",
    "solve_constant",
    "propagate",
    "invariant_F",
    "invariant_G",
    "flow_canonical",
    "flow_points",
    "flow_batch",
    "flow_time_batch",
]


@dataclass(frozen=True)
class Schedule:
    """Piecewise-constant control: ordered (control value, duration) pairs.

    Durations are nonnegative; controls must lie in the system's range
    (checked by ``propagate``).  The empty schedule is the identity.
    """

    segments: tuple[tuple[float, float], ...] = ()

    def __post_init__(self):
        cleaned = tuple(
            (float(u), float(dt)) for u, dt in self.segments
        )
        object.__setattr__(self, "segments", cleaned)

    def __len__(self) -> int:
        return len(self.segments)

    def __iter__(self):
        return iter(self.segments)

    @property
    def total_duration(self) -> float:
        return float(sum(dt for _, dt in self.segments))

    def concat(self, other: "Schedule") -> "Schedule":
        return Schedule(self.segments + other.segments)

    def without_empty_segments(self, min_dt: float = 0.0) -> "Schedule":
        return Schedule(tuple(s for s in self.segments if s[1] > min_dt))

    def to_json_obj(self) -> list[dict]:
        return [{"u": u, "dt": dt} for u, dt in self.segments]

    @classmethod
    def from_json_obj(cls, obj) -> "Schedule":
        try:
            return cls(tuple((float(s["u"]), float(s["dt"])) for s in obj))
        except (TypeError, KeyError) as exc:
            raise InvalidSchedule(f"malformed schedule entry: {exc}") from exc


def flow_canonical(canon: CanonicalForm, t: float, vc, u: float) -> np.ndarray:
    """Constant-control flow in canonical coordinates.

    ``vc`` may be a single point of shape (2,) or a batch of shape (n, 2);
    the result has the same shape.  ``t`` may be negative.
    """
    vc = np.asarray(vc, dtype=float)
    x, y = vc[..., 0], vc[..., 1]
    z1, z2 = canon.zeta_can

    if canon.is_nilpotent:
        # zeta_can = (0, 1) by construction of the basis
        out = np.empty_like(vc)
        out[..., 0] = x + t * y + 0.5 * u * t * t
        out[..., 1] = y + u * t
        return out

    A = canon.A_can
    if canon.is_rank_one:
        mu = A[0, 0]
        c1 = u * z1 / mu
        out = np.empty_like(vc)
        out[..., 0] = np.exp(mu * t) * (x + c1) - c1
        out[..., 1] = y + u * z2 * t
        return out

    if A[1, 0] == 0.0 and A[0, 1] != 0.0 and A[0, 0] == A[1, 1]:
        # Jordan block [[l, 1], [0, l]]
        lam = A[0, 0]
        vu1 = -u * (lam * z1 - z2) / (lam * lam)
        vu2 = -u * z2 / lam
        d1, d2 = x - vu1, y - vu2
        e = np.exp(lam * t)
        out = np.empty_like(vc)
        out[..., 0] = e * (d1 + t * d2) + vu1
        out[..., 1] = e * d2 + vu2
        return out

    # diagonal with both eigenvalues nonzero (saddle or node)
    a, b = A[0, 0], A[1, 1]
    c1 = u * z1 / a
    c2 = u * z2 / b
    out = np.empty_like(vc)
    out[..., 0] = np.exp(a * t) * (x + c1) - c1
    out[..., 1] = np.exp(b * t) * (y + c2) - c2
    return out


def flow_points(spec: SystemSpec, t: float, points, u: float) -> np.ndarray:
    """Constant-control flow of a batch of points in original coordinates."""
    canon = canonicalize(spec)
    pc = np.asarray(points, dtype=float) @ canon.P_inv.T
    return flow_canonical(canon, t, pc, u) @ canon.P.T


def flow_batch(canon: CanonicalForm, ts, vcs, us) -> np.ndarray:
    """Flow of a batch of canonical points, each with its own duration and
    control: ts, us broadcast against the rows of vcs (n, 2)."""
    ts = np.asarray(ts, dtype=float)
    us = np.asarray(us, dtype=float)
    vcs = np.asarray(vcs, dtype=float)
    x, y = vcs[..., 0], vcs[..., 1]
    z1, z2 = canon.zeta_can
    out = np.empty_like(vcs)

    if canon.is_nilpotent:
        out[..., 0] = x + ts * y + 0.5 * us * ts * ts
        out[..., 1] = y + us * ts
        return out

    A = canon.A_can
    if canon.is_rank_one:
        mu = A[0, 0]
        c1 = us * z1 / mu
        out[..., 0] = np.exp(mu * ts) * (x + c1) - c1
        out[..., 1] = y + us * z2 * ts
        return out

    if A[1, 0] == 0.0 and A[0, 1] != 0.0 and A[0, 0] == A[1, 1]:
        lam = A[0, 0]
        vu1 = -us * (lam * z1 - z2) / (lam * lam)
        vu2 = -us * z2 / lam
        d1, d2 = x - vu1, y - vu2
        e = np.exp(lam * ts)
        out[..., 0] = e * (d1 + ts * d2) + vu1
        out[..., 1] = e * d2 + vu2
        return out

    a, b = A[0, 0], A[1, 1]
    c1, c2 = us * z1 / a, us * z2 / b
    out[..., 0] = np.exp(a * ts) * (x + c1) - c1
    out[..., 1] = np.exp(b * ts) * (y + c2) - c2
    return out


def flow_time_batch(canon: CanonicalForm, ts, vc, u: float) -> np.ndarray:
    """Flow of one canonical point evaluated at an array of times.

    Returns shape (len(ts), 2).  Same closed forms as ``flow_canonical``,
    vectorized over time instead of points.
    """
    ts = np.asarray(ts, dtype=float)
    x, y = float(vc[0]), float(vc[1])
    z1, z2 = canon.zeta_can
    out = np.empty((ts.size, 2))

    if canon.is_nilpotent:
        out[:, 0] = x + ts * y + 0.5 * u * ts * ts
        out[:, 1] = y + u * ts
        return out

    A = canon.A_can
    if canon.is_rank_one:
        mu = A[0, 0]
        c1 = u * z1 / mu
        out[:, 0] = np.exp(mu * ts) * (x + c1) - c1
        out[:, 1] = y + u * z2 * ts
        return out

    if A[1, 0] == 0.0 and A[0, 1] != 0.0 and A[0, 0] == A[1, 1]:
        lam = A[0, 0]
        vu1 = -u * (lam * z1 - z2) / (lam * lam)
        vu2 = -u * z2 / lam
        d1, d2 = x - vu1, y - vu2
        e = np.exp(lam * ts)
        out[:, 0] = e * (d1 + ts * d2) + vu1
        out[:, 1] = e * d2 + vu2
        return out

    a, b = A[0, 0], A[1, 1]
    c1, c2 = u * z1 / a, u * z2 / b
    out[:, 0] = np.exp(a * ts) * (x + c1) - c1
    out[:, 1] = np.exp(b * ts) * (y + c2) - c2
    return out


def solve_constant(spec: SystemSpec, t: float, v, u: float) -> np.ndarray:
    """Endpoint of the constant-control flow after time t (t may be negative).

    For invertible A this equals ``exp(tA)(v - v(u)) + v(u)`` with v(u) the
    control-u equilibrium; the singular cases use their polynomial and
    mixed exponential-affine closed forms.
    """
    canon = canonicalize(spec)
    vc = canon.to_canonical(v)
    return canon.from_canonical(flow_canonical(canon, float(t), vc, float(u)))


class Trajectory:
    """Piecewise solution for a schedule: start point, cached endpoint, and a
    continuous sampler over [0, total duration]."""

    def __init__(self, spec: SystemSpec, start, schedule: Schedule):
        self.spec = spec
        self.start = np.asarray(start, dtype=float).copy()
        self.schedule = schedule
        canon = canonicalize(spec)
        self._canon = canon

        knots = [canon.to_canonical(self.start)]
        times = [0.0]
        for u, dt in schedule:
            knots.append(flow_canonical(canon, dt, knots[-1], u))
            times.append(times[-1] + dt)
        self._knots = np.array(knots)
        self._times = np.array(times)
        self.endpoint = canon.from_canonical(self._knots[-1])

    @property
    def total_duration(self) -> float:
        return float(self._times[-1])

    def at(self, t: float) -> np.ndarray:
        """Point on the trajectory at time t in [0, total duration]."""
        t = float(t)
        if not -1e-12 <= t <= self.total_duration + 1e-12:
            raise ValueError(
                f"time {t} outside [0, {self.total_duration}]"
            )
        t = min(max(t, 0.0), self.total_duration)
        i = int(np.searchsorted(self._times, t, side="right") - 1)
        i = min(i, len(self.schedule.segments) - 1) if len(self.schedule) else 0
        if len(self.schedule) == 0:
            return self.start.copy()
        u, _ = self.schedule.segments[i]
        vc = flow_canonical(self._canon, t - self._times[i], self._knots[i], u)
        return self._canon.from_canonical(vc)

    def __call__(self, t: float) -> np.ndarray:
        return self.at(t)

    def sample(self, n: int) -> np.ndarray:
        """Uniform samples: array of rows (t, x, y), n >= 2."""
        ts = np.linspace(0.0, self.total_duration, max(int(n), 2))
        pts = np.array([self.at(t) for t in ts])
        return np.column_stack([ts, pts])


def propagate(spec: SystemSpec, v, sched: Schedule) -> Trajectory:
    """Run a schedule from v: validates segments, returns the trajectory.

    Raises
    ------
    InvalidSchedule
        If a control falls outside the range or a duration is negative.
    """
    for k, (u, dt) in enumerate(sched):
        if not np.isfinite(u) or not np.isfinite(dt):
            raise InvalidSchedule(f"segment {k}: non-finite entry ({u}, {dt})")
        if dt < 0.0:
            raise InvalidSchedule(f"segment {k}: negative duration {dt}")
        if not spec.contains_control(u):
            raise InvalidSchedule(
                f"segment {k}: control {u} outside range "
                f"[{spec.omega_min}, {spec.omega_max}]"
            )
    return Trajectory(spec, v, sched)


def invariant_F(u: float, v) -> float:
    """Parabolic conserved quantity of the nilpotent case, y^2 - 2 u x,
    in nilpotent canonical coordinates."""
    v = np.asarray(v, dtype=float)
    return float(v[..., 1] ** 2 - 2.0 * u * v[..., 0])


def invariant_G(canon: CanonicalForm, u: float, v) -> float:
    """Power-product conserved quantity of the saddle case, in canonical
    coordinates: |x + u z1/mu|^(-lam) * |y + u z2/lam|^mu.

    Raises
    ------
    WrongCase
        If the canonical form is not a saddle.
    """
    if not canon.is_saddle:
        raise WrongCase("conserved power product is defined for det A < 0 only")
    mu, lam = canon.A_can[0, 0], canon.A_can[1, 1]
    z1, z2 = canon.zeta_can
    v = np.asarray(v, dtype=float)
    f1 = np.abs(v[..., 0] + u * z1 / mu)
    f2 = np.abs(v[..., 1] + u * z2 / lam)
    return f1 ** (-lam) * f2 ** mu
