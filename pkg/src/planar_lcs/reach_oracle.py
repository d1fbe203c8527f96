"""Brute-force ground truth: approximate forward orbits with randomized
piecewise-constant controls, epsilon-mutual-reachability tests, and grid
classification of the plane for cross-validating the symbolic control sets.

Randomness is counter-based: every trial draws from its own Philox stream
keyed by (seed, trial index), so results are bitwise reproducible, a prefix
of the trials is independent of the total count, and parallel evaluation
order cannot change anything.  Every reported point is the exact endpoint
of a replayable schedule prefix.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from .control_sets import (
    Membership,
    NodeRegion,
    SaddleBox,
    Strip,
    WholePlane,
    contains,
    control_set,
)
from .dynamics import flow_batch, flow_time_batch
from .errors import NoProbeAvailable
from .system_model import SystemSpec, canonicalize, equilibrium

__all__ = [
    "ReachConfig",
    "GridSpec",
    "GridEstimate",
    "sample_reachable",
    "mutually_reachable",
    "estimate_control_set",
    "probe_point",
]

LABEL_IN = "in"
LABEL_OUT = "out"
LABEL_UNKNOWN = "unknown"


@dataclass(frozen=True)
class ReachConfig:
    """Sampling parameters for the reachability oracle.

    Durations are exponential with mean horizon/segments; each segment uses
    an extreme control with probability ``bang_bias`` (the constructive
    transfers are bang-bang, so biasing finds witnesses much faster) and a
    uniform control otherwise.  ``subsamples`` interior points per segment
    are also checked when testing passage near a target.
    """

    horizon: float = 10.0
    segments_per_trial: int = 8
    trials: int = 400
    seed: int = 0
    epsilon: float = 1e-2
    bang_bias: float = 0.5
    subsamples: int = 4

    def __post_init__(self):
        if self.horizon <= 0 or self.trials <= 0:
            raise ValueError("horizon and trials must be > 0")
        if self.segments_per_trial < 0:
            raise ValueError("segments_per_trial must be >= 0")
        if self.epsilon <= 0:
            raise ValueError("epsilon must be > 0")
        if not 0.0 <= self.bang_bias <= 1.0:
            raise ValueError("bang_bias must be a probability")
        if self.subsamples < 1:
            raise ValueError("subsamples must be >= 1")


@dataclass(frozen=True)
class GridSpec:
    """Rectangle plus resolution for plane classification."""

    xmin: float
    xmax: float
    ymin: float
    ymax: float
    nx: int
    ny: int

    def __post_init__(self):
        if not (self.xmin < self.xmax and self.ymin < self.ymax):
            raise ValueError("grid rectangle is empty")
        if self.nx < 1 or self.ny < 1:
            raise ValueError("grid resolution must be >= 1")

    def centers(self) -> np.ndarray:
        """Cell centers, row-major over y then x, shape (nx*ny, 2)."""
        dx = (self.xmax - self.xmin) / self.nx
        dy = (self.ymax - self.ymin) / self.ny
        xs = self.xmin + dx * (np.arange(self.nx) + 0.5)
        ys = self.ymin + dy * (np.arange(self.ny) + 0.5)
        X, Y = np.meshgrid(xs, ys)
        return np.column_stack([X.ravel(), Y.ravel()])

    @property
    def cell_diagonal(self) -> float:
        return float(
            np.hypot(
                (self.xmax - self.xmin) / self.nx,
                (self.ymax - self.ymin) / self.ny,
            )
        )


@dataclass
class GridEstimate:
    """Oracle classification of a grid: one label per cell center."""

    grid: GridSpec
    centers: np.ndarray
    labels: np.ndarray  # array of LABEL_* strings
    probe: np.ndarray

    def to_csv_rows(self):
        for (x, y), lab in zip(self.centers, self.labels):
            yield f"{float(x)!r},{float(y)!r},{lab}"


def _trial_controls(spec: SystemSpec, cfg: ReachConfig, trial: int):
    """Deterministic (controls, durations) for one trial: own Philox stream
    keyed by (seed, trial), draws in a fixed order."""
    key = np.array(
        [np.uint64(cfg.seed & 0xFFFFFFFFFFFFFFFF), np.uint64(trial)],
        dtype=np.uint64,
    )
    rng = np.random.Generator(np.random.Philox(key=key))
    n = cfg.segments_per_trial
    if n == 0:
        return np.empty(0), np.empty(0)
    dts = rng.exponential(cfg.horizon / n, n)
    bang = rng.random(n) < cfg.bang_bias
    picks = rng.integers(0, 2, n)
    uniform = rng.uniform(spec.omega_min, spec.omega_max, n)
    extremes = np.where(picks == 0, spec.omega_min, spec.omega_max)
    return np.where(bang, extremes, uniform), dts


def _all_trial_controls(spec: SystemSpec, cfg: ReachConfig):
    us = np.empty((cfg.trials, cfg.segments_per_trial))
    dts = np.empty((cfg.trials, cfg.segments_per_trial))
    for k in range(cfg.trials):
        us[k], dts[k] = _trial_controls(spec, cfg, k)
    return us, dts


def sample_reachable(spec: SystemSpec, v, cfg: ReachConfig) -> np.ndarray:
    """Forward-orbit point cloud from v: for each trial the start point and
    the endpoint after each schedule prefix, trials*(segments+1) rows."""
    canon = canonicalize(spec)
    us, dts = _all_trial_controls(spec, cfg)
    states = np.tile(canon.to_canonical(np.asarray(v, float)), (cfg.trials, 1))
    points = [states.copy()]
    for j in range(cfg.segments_per_trial):
        states = flow_batch(canon, dts[:, j], states, us[:, j])
        points.append(states.copy())
    cloud = np.stack(points, axis=1).reshape(-1, 2)
    return cloud @ canon.P.T


def _segment_hits(canon, states, dt, u, target, eps, subsamples) -> np.ndarray:
    """Rows of the batch whose next constant-control arc passes within eps
    of target (original coordinates).

    Coarse checkpoints first; rows whose closest checkpoint comes within
    half of its local checkpoint gap of a hit get a fine resampling of the
    bracketing window, so passes between checkpoints are not missed.
    dt, u may be scalars or per-row arrays.
    """
    n = len(states)
    dt = np.broadcast_to(np.asarray(dt, dtype=float), (n,))
    u = np.broadcast_to(np.asarray(u, dtype=float), (n,))
    fracs = (np.arange(subsamples) + 1.0) / subsamples

    prev = states @ canon.P.T
    best_d = np.linalg.norm(prev - target, axis=1)
    best_f = np.zeros(n)
    local_gap = np.zeros(n)
    at_best = np.ones(n, dtype=bool)  # rows whose best checkpoint is `prev`
    for f in fracs:
        pts = flow_batch(canon, f * dt, states, u) @ canon.P.T
        chord = np.linalg.norm(pts - prev, axis=1)
        d = np.linalg.norm(pts - target, axis=1)
        # outgoing chord of the current best checkpoint
        local_gap = np.where(at_best, np.maximum(local_gap, chord), local_gap)
        better = d < best_d
        local_gap = np.where(better, chord, local_gap)
        best_d = np.where(better, d, best_d)
        best_f = np.where(better, f, best_f)
        at_best = better
        prev = pts

    hits = best_d <= eps
    cand = np.where(~hits & (best_d <= eps + 0.5 * local_gap))[0]
    if cand.size:
        df = 1.0 / subsamples
        lo = np.maximum(best_f[cand] - df, 0.0) * dt[cand]
        hi = np.minimum(best_f[cand] + df, 1.0) * dt[cand]
        m = int(np.clip(4.0 * np.max(local_gap[cand]) / eps, 33, 513))
        grid = np.arange(m) / (m - 1.0)
        taus = lo[:, None] + (hi - lo)[:, None] * grid[None, :]
        reps = np.repeat(states[cand], m, axis=0)
        u_rep = np.repeat(u[cand], m)
        pts = flow_batch(canon, taus.ravel(), reps, u_rep) @ canon.P.T
        d = np.linalg.norm(pts - target, axis=1).reshape(cand.size, m)
        hits[cand] = np.min(d, axis=1) <= eps
    return hits


def _passes_near(
    spec: SystemSpec, start, target, cfg: ReachConfig
) -> bool:
    """True when some sampled trajectory from start passes within epsilon of
    target along a segment arc."""
    canon = canonicalize(spec)
    start = np.asarray(start, dtype=float)
    target = np.asarray(target, dtype=float)
    if np.linalg.norm(start - target) <= cfg.epsilon:
        return True
    us, dts = _all_trial_controls(spec, cfg)
    states = np.tile(canon.to_canonical(start), (cfg.trials, 1))
    for j in range(cfg.segments_per_trial):
        if np.any(
            _segment_hits(
                canon, states, dts[:, j], us[:, j], target, cfg.epsilon,
                cfg.subsamples,
            )
        ):
            return True
        states = flow_batch(canon, dts[:, j], states, us[:, j])
    return False


def mutually_reachable(spec: SystemSpec, v, w, cfg: ReachConfig) -> bool:
    """Epsilon-witnessed mutual reachability: some sampled trajectory from v
    passes within epsilon of w and vice versa."""
    return _passes_near(spec, v, w, cfg) and _passes_near(spec, w, v, cfg)


def probe_point(spec: SystemSpec, desc=None) -> np.ndarray:
    """A point in the interior of the control set, used as the oracle's
    mutual-reachability anchor.

    Raises
    ------
    NoProbeAvailable
        When the control set is absent or has empty interior.
    """
    if desc is None:
        desc = control_set(spec)
    canon = canonicalize(spec)

    candidates = []
    if isinstance(desc, WholePlane):
        candidates.append(np.zeros(2))
    elif isinstance(desc, Strip):
        mid = 0.5 * (desc.x_interval[0] + desc.x_interval[1])
        candidates.append(canon.from_canonical(np.array([mid, 0.0])))
    elif isinstance(desc, SaddleBox):
        candidates.append(
            canon.from_canonical(
                np.array(
                    [
                        0.5 * (desc.x_interval[0] + desc.x_interval[1]),
                        0.5 * (desc.y_interval[0] + desc.y_interval[1]),
                    ]
                )
            )
        )
    elif isinstance(desc, NodeRegion):
        from .control_sets import f_map  # local import keeps module load light

        u_mid = 0.5 * (desc.u_minus + desc.u_plus)
        candidates.append(equilibrium(spec, u_mid))
        e = desc.epsilon
        for s, t in ((1.0, 1.0), (0.5, 2.0), (2.0, 0.5)):
            candidates.append(
                f_map(canon, desc.u_minus, desc.u_plus, e * s, e * t)
            )
    else:
        raise NoProbeAvailable(
            f"control set variant {desc.variant!r} has no interior to probe"
        )

    for cand in candidates:
        if contains(spec, desc, cand) is Membership.INSIDE:
            return np.asarray(cand, dtype=float)
    raise NoProbeAvailable("no candidate probe point landed in the interior")


def estimate_control_set(
    spec: SystemSpec, grid: GridSpec, cfg: ReachConfig
) -> GridEstimate:
    """Classify every grid cell center by epsilon-mutual reachability with a
    fixed interior probe point.

    ``in``: witnesses found in both directions; ``unknown``: exactly one
    direction witnessed within the budget; ``out``: neither.
    """
    desc = control_set(spec)
    probe = probe_point(spec, desc)
    canon = canonicalize(spec)
    centers = grid.centers()
    n_cells = len(centers)
    us, dts = _all_trial_controls(spec, cfg)
    fracs = (np.arange(cfg.subsamples) + 1.0) / cfg.subsamples
    eps = cfg.epsilon

    # forward: every cell runs the same trial schedules; check passage near
    # the probe along every segment arc, dropping cells once witnessed
    fwd = np.linalg.norm(centers - probe, axis=1) <= eps
    centers_can = centers @ canon.P_inv.T
    remaining = np.where(~fwd)[0]
    for k in range(cfg.trials):
        if remaining.size == 0:
            break
        states = centers_can[remaining]
        hit = np.zeros(remaining.size, dtype=bool)
        for j in range(cfg.segments_per_trial):
            hit |= _segment_hits(
                canon, states, dts[k, j], us[k, j], probe, eps, cfg.subsamples
            )
            states = flow_batch(canon, dts[k, j], states, us[k, j])
        fwd[remaining[hit]] = True
        remaining = remaining[~hit]

    # reverse: one trajectory cloud from the probe, sampled densely enough
    # that consecutive points are closer than the hit tolerance, then a
    # nearest-neighbour query for every cell
    probe_can = canon.to_canonical(probe)
    states = np.tile(probe_can, (cfg.trials, 1))
    cloud = [probe_can[None, :]]
    for j in range(cfg.segments_per_trial):
        # arc-length estimate per trial from the coarse checkpoints
        prev = states @ canon.P.T
        arclen = np.zeros(cfg.trials)
        for f in fracs:
            pts = flow_batch(canon, f * dts[:, j], states, us[:, j]) @ canon.P.T
            arclen += np.linalg.norm(pts - prev, axis=1)
            prev = pts
        counts = np.clip(
            np.ceil(arclen / (0.5 * eps)).astype(int), cfg.subsamples, 256
        )
        for k in range(cfg.trials):
            ts = np.linspace(0.0, dts[k, j], counts[k] + 1)[1:]
            cloud.append(flow_time_batch(canon, ts, states[k], us[k, j]))
        states = flow_batch(canon, dts[:, j], states, us[:, j])
    cloud_orig = np.vstack(cloud) @ canon.P.T
    lo = np.array([grid.xmin, grid.ymin]) - eps
    hi = np.array([grid.xmax, grid.ymax]) + eps
    keep = np.all((cloud_orig >= lo) & (cloud_orig <= hi), axis=1)
    if np.any(keep):
        tree = cKDTree(cloud_orig[keep])
        dist, _ = tree.query(centers, k=1)
        rev = dist <= eps
    else:
        rev = np.zeros(n_cells, dtype=bool)

    labels = np.full(n_cells, LABEL_OUT, dtype=object)
    labels[fwd & rev] = LABEL_IN
    labels[fwd ^ rev] = LABEL_UNKNOWN
    return GridEstimate(grid=grid, centers=centers, labels=labels, probe=probe)
