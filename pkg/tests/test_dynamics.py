import numpy as np
import pytest

from planar_lcs import (
    Schedule,
    canonicalize,
    equilibrium,
    invariant_F,
    invariant_G,
    propagate,
    solve_constant,
)
from planar_lcs.errors import InvalidSchedule, WrongCase

from conftest import (
    random_nilpotent,
    random_node,
    random_rank1,
    random_saddle,
    rk4_endpoint,
)

ALL_GENS = [
    random_nilpotent,
    random_rank1,
    random_saddle,
    lambda r: random_node(r, -1),
    lambda r: random_node(r, 1),
]


class TestSolveConstant:
    def test_nilpotent_parabola(self, s1):
        got = solve_constant(s1, 2.0, [0, 0], 1.0)
        assert np.allclose(got, [2.0, 2.0], atol=1e-14)
        assert np.linalg.norm(got - rk4_endpoint(s1, 2.0, [0, 0], 1.0)) <= 1e-6

    def test_zero_time_identity(self):
        rng = np.random.default_rng(20)
        for gen in ALL_GENS:
            spec = gen(rng)
            v = rng.uniform(-3, 3, 2)
            u = rng.uniform(spec.omega_min, spec.omega_max)
            assert np.allclose(solve_constant(spec, 0.0, v, u), v, atol=1e-14)

    def test_equilibrium_is_fixed(self, s3):
        v = equilibrium(s3, 1.0)
        for t in (0.3, 2.0, -1.5):
            assert np.allclose(solve_constant(s3, t, v, 1.0), v, atol=1e-12)

    def test_matches_rk4_all_cases(self):
        rng = np.random.default_rng(21)
        for gen in ALL_GENS:
            for _ in range(12):
                spec = gen(rng)
                v = rng.uniform(-3, 3, 2)
                u = rng.uniform(spec.omega_min, spec.omega_max)
                t = rng.uniform(0.0, 5.0)
                ours = solve_constant(spec, t, v, u)
                ref = rk4_endpoint(spec, t, v, u)
                assert np.linalg.norm(ours - ref) <= 1e-6

    def test_time_reversal(self):
        rng = np.random.default_rng(22)
        for gen in ALL_GENS:
            for _ in range(20):
                spec = gen(rng)
                v = rng.uniform(-3, 3, 2)
                u = rng.uniform(spec.omega_min, spec.omega_max)
                t = rng.uniform(0.0, 5.0)
                there = solve_constant(spec, t, v, u)
                back = solve_constant(spec, -t, there, u)
                assert np.linalg.norm(back - v) <= 1e-10 * (1 + np.linalg.norm(v))


class TestPropagate:
    def test_empty_schedule(self, s1):
        traj = propagate(s1, [1.0, 2.0], Schedule())
        assert np.array_equal(traj.endpoint, [1.0, 2.0])
        assert np.array_equal(traj.at(0.0), [1.0, 2.0])

    def test_single_segment_matches_solve_constant(self, s3):
        traj = propagate(s3, [0.2, -0.1], Schedule(((0.5, 1.7),)))
        assert np.allclose(
            traj.endpoint, solve_constant(s3, 1.7, [0.2, -0.1], 0.5), atol=1e-14
        )

    def test_vertical_coordinate_sums_impulses(self, s1):
        traj = propagate(s1, [0.0, 0.0], Schedule(((1.0, 1.0), (-1.0, 2.0))))
        assert abs(traj.endpoint[1] - (-1.0)) <= 1e-14

    def test_cocycle(self):
        rng = np.random.default_rng(23)
        for gen in ALL_GENS:
            for _ in range(10):
                spec = gen(rng)
                v = rng.uniform(-2, 2, 2)
                segs1 = tuple(
                    (rng.uniform(spec.omega_min, spec.omega_max), rng.uniform(0, 1.5))
                    for _ in range(3)
                )
                segs2 = tuple(
                    (rng.uniform(spec.omega_min, spec.omega_max), rng.uniform(0, 1.5))
                    for _ in range(3)
                )
                joint = propagate(spec, v, Schedule(segs1 + segs2)).endpoint
                mid = propagate(spec, v, Schedule(segs1)).endpoint
                split = propagate(spec, mid, Schedule(segs2)).endpoint
                assert np.linalg.norm(joint - split) <= 1e-10 * (
                    1 + np.linalg.norm(joint)
                )

    def test_det_zero_second_coordinate_closed_form(self):
        rng = np.random.default_rng(24)
        for gen in (random_nilpotent, random_rank1):
            for _ in range(25):
                spec = gen(rng)
                canon = canonicalize(spec)
                z2 = canon.zeta_can[1]
                v = rng.uniform(-3, 3, 2)
                segs = tuple(
                    (rng.uniform(spec.omega_min, spec.omega_max), rng.uniform(0, 2))
                    for _ in range(4)
                )
                traj = propagate(spec, v, Schedule(segs))
                y0 = canon.to_canonical(v)[1]
                expected = y0 + z2 * sum(u * dt for u, dt in segs)
                got = canon.to_canonical(traj.endpoint)[1]
                assert abs(got - expected) <= 1e-12 * (1.0 + abs(expected))

    def test_sampler_continuity_at_joins(self, s3):
        sched = Schedule(((1.0, 0.8), (-1.0, 1.2), (0.3, 0.5)))
        traj = propagate(s3, [0.1, 0.2], sched)
        knots = np.cumsum([0.8, 1.2])
        for tk in knots:
            left = traj.at(tk - 1e-13)
            right = traj.at(tk + 1e-13)
            assert np.linalg.norm(left - right) <= 1e-11

    def test_invalid_schedules_rejected(self, s1):
        with pytest.raises(InvalidSchedule):
            propagate(s1, [0, 0], Schedule(((2.0, 1.0),)))  # control outside
        with pytest.raises(InvalidSchedule):
            propagate(s1, [0, 0], Schedule(((0.5, -0.1),)))  # negative time

    def test_sample_rows(self, s1):
        traj = propagate(s1, [0, 0], Schedule(((1.0, 2.0),)))
        rows = traj.sample(5)
        assert rows.shape == (5, 3)
        assert rows[0, 0] == 0.0 and rows[-1, 0] == 2.0
        assert np.allclose(rows[-1, 1:], traj.endpoint)


class TestInvariantF:
    def test_substitution(self):
        assert invariant_F(1.0, [2.0, 2.0]) == 0.0
        assert invariant_F(0.0, [3.0, -2.0]) == 4.0

    def test_conserved_along_flow(self, s1):
        rng = np.random.default_rng(25)
        for _ in range(300):
            v = rng.uniform(-5, 5, 2)
            u = rng.uniform(-1, 1)
            t = rng.uniform(-5, 5)
            before = invariant_F(u, v)
            after = invariant_F(u, solve_constant(s1, t, v, u))
            assert abs(after - before) <= 1e-9 * (1.0 + abs(before))

    def test_origin_level_set(self, s1):
        for t in np.linspace(-5, 5, 41):
            assert abs(invariant_F(1.0, solve_constant(s1, t, [0, 0], 1.0))) <= 1e-9


class TestInvariantG:
    def test_substitution(self, s3):
        canon = canonicalize(s3)
        assert invariant_G(canon, 1.0, [0.0, 0.0]) == pytest.approx(1.0)

    def test_zero_at_equilibrium(self, s3):
        canon = canonicalize(s3)
        v = canon.to_canonical(equilibrium(s3, 0.7))
        assert invariant_G(canon, 0.7, v) == pytest.approx(0.0, abs=1e-12)

    def test_wrong_case(self, s1):
        with pytest.raises(WrongCase):
            invariant_G(canonicalize(s1), 0.5, [0, 0])

    def test_conserved_along_flow(self):
        rng = np.random.default_rng(26)
        for _ in range(40):
            spec = random_saddle(rng)
            canon = canonicalize(spec)
            for _ in range(25):
                v = rng.uniform(-2, 2, 2)
                u = rng.uniform(spec.omega_min, spec.omega_max)
                t = rng.uniform(-3, 3)
                before = invariant_G(canon, u, canon.to_canonical(v))
                after = invariant_G(
                    canon, u, canon.to_canonical(solve_constant(spec, t, v, u))
                )
                assert abs(after - before) <= 1e-9 * (1.0 + abs(before))
