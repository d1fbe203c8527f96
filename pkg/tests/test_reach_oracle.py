import numpy as np
import pytest

from planar_lcs import (
    Membership,
    Schedule,
    contains,
    control_set,
    equilibrium,
    propagate,
)
from planar_lcs.errors import NoProbeAvailable
from planar_lcs.reach_oracle import (
    GridSpec,
    ReachConfig,
    _all_trial_controls,
    estimate_control_set,
    mutually_reachable,
    probe_point,
    sample_reachable,
)

from conftest import make_s1, make_s2, make_s3, make_s4


CFG = ReachConfig(horizon=16.0, segments_per_trial=16, trials=400, seed=3,
                  epsilon=0.12, bang_bias=0.5, subsamples=8)


class TestSampling:
    def test_no_motion(self, s1):
        cfg = ReachConfig(trials=1, segments_per_trial=0, seed=0)
        pts = sample_reachable(s1, [0.3, -0.7], cfg)
        assert pts.shape == (1, 2)
        assert np.allclose(pts[0], [0.3, -0.7])

    def test_deterministic(self, s3):
        a = sample_reachable(s3, [0, 0], CFG)
        b = sample_reachable(s3, [0, 0], CFG)
        assert np.array_equal(a, b)

    def test_trial_prefix_monotone(self, s3):
        small = sample_reachable(s3, [0, 0], ReachConfig(trials=50, seed=9))
        big = sample_reachable(s3, [0, 0], ReachConfig(trials=100, seed=9))
        assert np.array_equal(big[: len(small)], small)

    def test_points_replay_through_propagate(self, s3):
        cfg = ReachConfig(trials=5, segments_per_trial=6, seed=1)
        pts = sample_reachable(s3, [0.1, 0.2], cfg)
        us, dts = _all_trial_controls(s3, cfg)
        per = cfg.segments_per_trial + 1
        for k in range(cfg.trials):
            for j in range(per):
                sched = Schedule(tuple(zip(us[k][:j], dts[k][:j])))
                endpoint = propagate(s3, [0.1, 0.2], sched).endpoint
                assert np.allclose(pts[k * per + j], endpoint, atol=1e-12)

    def test_near_equilibrium_with_pinched_range(self, s4):
        # contracting system: a pinched control range keeps every sampled
        # point essentially at the equilibrium
        v = equilibrium(s4, 0.5)
        spec = make_s4(omega=(0.5 - 1e-9, 0.5 + 1e-9))
        pts = sample_reachable(spec, v, ReachConfig(trials=20, seed=2))
        assert np.max(np.linalg.norm(pts - v, axis=1)) <= 1e-6

    def test_saddle_vertical_band_invariance(self, s3):
        pts = sample_reachable(s3, [0, 0], CFG)
        frac = np.mean(np.abs(pts[:, 1]) <= 1.0 + CFG.epsilon)
        assert frac >= 0.99


class TestMutualReachability:
    def test_identical_points(self, s3):
        assert mutually_reachable(s3, [0.2, 0.2], [0.2, 0.2], CFG)

    def test_saddle_interior_witness(self, s3):
        cfg = ReachConfig(horizon=16.0, segments_per_trial=16, trials=4000,
                          seed=7, epsilon=1e-2, bang_bias=0.5, subsamples=8)
        assert mutually_reachable(s3, [0.0, 0.0], [0.3, -0.2], cfg)

    def test_monotone_case_never_returns(self):
        spec = make_s1(omega=(1.0, 2.0))
        rng = np.random.default_rng(50)
        for _ in range(10):
            v = rng.uniform(-3, 3, 2)
            w = v + [rng.uniform(-1, 1), -rng.uniform(0.5, 2.0)]
            assert not mutually_reachable(spec, v, w, CFG)


class TestProbe:
    def test_whole_plane_probe(self, s1):
        assert np.allclose(probe_point(s1), [0, 0])

    def test_interior_probes(self, s2, s3, s4):
        for spec in (s2, s3, s4):
            p = probe_point(spec)
            assert contains(spec, control_set(spec), p) is Membership.INSIDE

    def test_no_probe_for_empty_variants(self):
        with pytest.raises(NoProbeAvailable):
            probe_point(make_s1(omega=(1.0, 2.0)))
        with pytest.raises(NoProbeAvailable):
            probe_point(make_s1(omega=(0.0, 1.0)))


class TestGridEstimate:
    def test_whole_plane_mostly_in(self, s1):
        # long, rarely-switching segments suit the polynomial flows: reaching
        # far cells needs sustained drifts, not rapid switching
        cfg = ReachConfig(horizon=25.0, segments_per_trial=5, trials=1200,
                          seed=5, epsilon=0.25, bang_bias=0.8, subsamples=8)
        est = estimate_control_set(s1, GridSpec(-5, 5, -5, 5, 20, 20), cfg)
        assert np.mean(est.labels == "in") >= 0.95

    def test_deterministic(self, s3):
        grid = GridSpec(-2, 2, -2, 2, 12, 12)
        a = estimate_control_set(s3, grid, CFG)
        b = estimate_control_set(s3, grid, CFG)
        assert np.array_equal(a.labels, b.labels)

    def test_saddle_agreement(self, s3):
        grid = GridSpec(-2, 2, -2, 2, 30, 30)
        est = estimate_control_set(s3, grid, CFG)
        desc = control_set(s3)
        band = max(2 * CFG.epsilon, grid.cell_diagonal)
        agree = total = 0
        for center, label in zip(est.centers, est.labels):
            m = contains(s3, desc, center, tol_band=band)
            if m is Membership.BOUNDARY:
                continue
            total += 1
            agree += int((m is Membership.INSIDE) == (label == "in"))
        assert agree / total >= 0.95

    def test_csv_rows(self, s3):
        est = estimate_control_set(s3, GridSpec(-1, 1, -1, 1, 2, 2), CFG)
        rows = list(est.to_csv_rows())
        assert len(rows) == 4
        x, y, lab = rows[0].split(",")
        float(x), float(y)
        assert lab in {"in", "out", "unknown"}
