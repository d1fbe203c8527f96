import numpy as np
import pytest

from planar_lcs import (
    Sign,
    SystemSpec,
    ZeroPosition,
    canonicalize,
    check_larc,
    classify,
    equilibrium,
)
from planar_lcs.errors import ComplexEigenvalues, LarcViolated, SingularMatrix

from conftest import (
    make_s1,
    make_s3,
    random_basis,
    random_nilpotent,
    random_node,
    random_rank1,
    random_saddle,
)


def test_spec_validation():
    with pytest.raises(ValueError):
        SystemSpec(A=np.eye(2), zeta=[0, 0], omega_min=-1, omega_max=1)
    with pytest.raises(ValueError):
        SystemSpec(A=np.eye(2), zeta=[1, 0], omega_min=1, omega_max=1)
    with pytest.raises(ValueError):
        SystemSpec(A=[[np.inf, 0], [0, 1]], zeta=[1, 0], omega_min=0, omega_max=1)


class TestLarc:
    def test_nilpotent_canonical(self, s1):
        assert check_larc(s1) == -1.0

    def test_eigenvector_fails(self):
        spec = SystemSpec(A=np.diag([1.0, -1.0]), zeta=[1, 0],
                          omega_min=-1, omega_max=1)
        assert check_larc(spec) == 0.0
        with pytest.raises(LarcViolated):
            classify(spec)

    def test_generic_direction(self):
        spec = SystemSpec(A=np.diag([1.0, -1.0]), zeta=[1, 1],
                          omega_min=-1, omega_max=1)
        assert check_larc(spec) == -2.0

    def test_zero_exactly_on_eigenvectors(self):
        # build A with prescribed eigenvectors; zeta along one of them
        rng = np.random.default_rng(10)
        for _ in range(100):
            P = random_basis(rng)
            A = P @ np.diag([1.5, -0.5]) @ np.linalg.inv(P)
            spec = SystemSpec(A=A, zeta=P[:, 0], omega_min=-1, omega_max=1)
            scale = np.linalg.norm(A) * np.dot(spec.zeta, spec.zeta)
            assert abs(check_larc(spec)) <= 1e-12 * scale


class TestClassify:
    def test_nilpotent_interior(self, s1):
        tag = classify(s1)
        assert (tag.detsign, tag.trsign) == (Sign.ZERO, Sign.ZERO)
        assert tag.zero_position is ZeroPosition.INTERIOR

    def test_saddle_boundary_zero(self):
        spec = SystemSpec(A=np.diag([1.0, -1.0]), zeta=[1, 1],
                          omega_min=0.0, omega_max=2.0)
        tag = classify(spec)
        assert tag.detsign is Sign.NEGATIVE
        assert tag.trsign is Sign.ZERO
        assert tag.zero_position is ZeroPosition.BOUNDARY

    def test_unstable_node_outside_zero(self):
        spec = SystemSpec(A=np.diag([2.0, 1.0]), zeta=[1, 1],
                          omega_min=0.5, omega_max=2.0)
        tag = classify(spec)
        assert tag.detsign is Sign.POSITIVE
        assert tag.trsign is Sign.POSITIVE
        assert tag.zero_position is ZeroPosition.OUTSIDE

    def test_complex_rejected(self):
        spec = SystemSpec(A=[[0, 1], [-1, 0]], zeta=[1, 0],
                          omega_min=-1, omega_max=1)
        with pytest.raises(ComplexEigenvalues):
            classify(spec)

    def test_invariant_under_conjugation(self):
        rng = np.random.default_rng(11)
        gens = [random_nilpotent, random_rank1, random_saddle,
                lambda r: random_node(r, -1), lambda r: random_node(r, 1)]
        for gen in gens:
            for _ in range(10):
                spec = gen(rng)
                P = random_basis(rng)
                Pinv = np.linalg.inv(P)
                conj = SystemSpec(
                    A=Pinv @ spec.A @ P, zeta=Pinv @ spec.zeta,
                    omega_min=spec.omega_min, omega_max=spec.omega_max,
                )
                assert classify(conj) == classify(spec)


class TestCanonicalize:
    def test_nilpotent_template(self, s1):
        canon = canonicalize(s1)
        assert np.array_equal(canon.P, np.eye(2))
        assert np.array_equal(canon.A_can, [[0, 1], [0, 0]])
        assert np.array_equal(canon.zeta_can, [0, 1])

    def test_rank_one_already_canonical(self):
        spec = SystemSpec(A=np.diag([-1.0, 0.0]), zeta=[1, 1],
                          omega_min=-1, omega_max=1)
        canon = canonicalize(spec)
        assert np.allclose(canon.A_can, np.diag([-1.0, 0.0]))
        assert np.allclose(canon.zeta_can, [1, 1])

    def test_conjugated_saddle_recovers_diagonal(self):
        rng = np.random.default_rng(12)
        for _ in range(100):
            P = random_basis(rng)
            A = P @ np.diag([1.0, -1.0]) @ np.linalg.inv(P)
            spec = SystemSpec(A=A, zeta=P @ np.array([1.0, 1.0]),
                              omega_min=-1, omega_max=1)
            canon = canonicalize(spec)
            assert np.linalg.norm(canon.A_can - np.diag([1.0, -1.0])) <= 1e-10

    def test_templates_and_roundtrip(self):
        rng = np.random.default_rng(13)
        gens = [random_nilpotent, random_rank1, random_saddle,
                lambda r: random_node(r, -1), lambda r: random_node(r, 1)]
        for gen in gens:
            for _ in range(20):
                spec = gen(rng)
                canon = canonicalize(spec)
                # conjugation residual against the claimed template
                res = canon.P_inv @ spec.A @ canon.P - canon.A_can
                assert np.linalg.norm(res) <= 1e-10 * (
                    1.0 + np.linalg.norm(spec.A)
                )
                if canon.is_saddle:
                    assert canon.A_can[1, 1] < 0.0 < canon.A_can[0, 0]
                if canon.is_rank_one:
                    assert canon.A_can[1, 1] == 0.0 and canon.A_can[0, 0] != 0.0
                    # rank condition shows up as both components nonzero
                    assert np.all(np.abs(canon.zeta_can) > 1e-12)
                # round-trip of random points through the basis
                v = rng.uniform(-5, 5, 2)
                back = canon.from_canonical(canon.to_canonical(v))
                assert np.linalg.norm(back - v) <= 1e-12 * (1 + np.linalg.norm(v))


class TestEquilibrium:
    def test_saddle_example(self, s3):
        assert np.allclose(equilibrium(s3, 1.0), [-1.0, 1.0])

    def test_zero_control(self, s3):
        assert np.array_equal(equilibrium(s3, 0.0), [0.0, 0.0])

    def test_jordan_example(self, s4):
        assert np.allclose(equilibrium(s4, 1.0), [1.0, 1.0])

    def test_singular_rejected(self, s1):
        with pytest.raises(SingularMatrix):
            equilibrium(s1, 0.5)

    def test_residual_bound(self):
        rng = np.random.default_rng(14)
        for _ in range(1000):
            spec = random_saddle(rng) if rng.random() < 0.5 else random_node(
                rng, int(rng.choice([-1, 1]))
            )
            u = rng.uniform(spec.omega_min, spec.omega_max)
            v = equilibrium(spec, u)
            res = np.linalg.norm(spec.A @ v + u * spec.zeta)
            assert res <= 1e-12 * (1.0 + abs(u) * np.linalg.norm(spec.zeta))


def test_open_range_reading_of_rank_one_case():
    # the tr != 0 subcase applies whenever the trace is nonzero
    spec = make_s1()
    assert classify(spec).trsign is Sign.ZERO
    rank1 = SystemSpec(A=[[-1, 0], [0, 0]], zeta=[1, 1], omega_min=-1, omega_max=1)
    assert classify(rank1).trsign is Sign.NEGATIVE
