"""Shared fixtures: worked systems, random-system generators with bounded
conditioning, and the RK4 integration oracle (tests only, never used by the
library)."""

import numpy as np
import pytest

from planar_lcs import SystemSpec


def make_s1(omega=(-1.0, 1.0)) -> SystemSpec:
    """Nilpotent drift in canonical position."""
    return SystemSpec(A=[[0, 1], [0, 0]], zeta=[0, 1],
                      omega_min=omega[0], omega_max=omega[1])


def make_s2(omega=(-1.0, 1.0)) -> SystemSpec:
    """Rank-one drift, stable nonzero eigenvalue."""
    return SystemSpec(A=[[-1, 0], [0, 0]], zeta=[1, 1],
                      omega_min=omega[0], omega_max=omega[1])


def make_s3(omega=(-1.0, 1.0)) -> SystemSpec:
    """Saddle."""
    return SystemSpec(A=[[1, 0], [0, -1]], zeta=[1, 1],
                      omega_min=omega[0], omega_max=omega[1])


def make_s4(omega=(-1.0, 1.0)) -> SystemSpec:
    """Stable node, Jordan block."""
    return SystemSpec(A=[[-1, 1], [0, -1]], zeta=[0, 1],
                      omega_min=omega[0], omega_max=omega[1])


def make_s5(omega=(-1.0, 1.0)) -> SystemSpec:
    """Unstable node, Jordan block (time reversal of S4)."""
    return SystemSpec(A=[[1, 1], [0, 1]], zeta=[0, 1],
                      omega_min=omega[0], omega_max=omega[1])


@pytest.fixture
def s1():
    return make_s1()


@pytest.fixture
def s2():
    return make_s2()


@pytest.fixture
def s3():
    return make_s3()


@pytest.fixture
def s4():
    return make_s4()


@pytest.fixture
def s5():
    return make_s5()


# ---------------------------------------------------------------------------
# random system generators
# ---------------------------------------------------------------------------


def random_basis(rng, cond_cap=20.0) -> np.ndarray:
    """Random invertible 2x2 change of basis with bounded condition number."""
    while True:
        P = rng.uniform(-1.0, 1.0, (2, 2))
        s = np.linalg.svd(P, compute_uv=False)
        if s[-1] > 1e-2 and s[0] / s[-1] < cond_cap:
            return P


def _nonzero(rng, lo=0.3, hi=2.0):
    return rng.choice([-1.0, 1.0]) * rng.uniform(lo, hi)


def random_nilpotent(rng, omega=(-1.0, 1.0)) -> SystemSpec:
    P = random_basis(rng)
    A_can = np.array([[0.0, 1.0], [0.0, 0.0]])
    zeta_can = np.array([rng.uniform(-1, 1), _nonzero(rng)])
    return SystemSpec(
        A=P @ A_can @ np.linalg.inv(P), zeta=P @ zeta_can,
        omega_min=omega[0], omega_max=omega[1],
    )


def random_rank1(rng, omega=(-1.0, 1.0)) -> SystemSpec:
    P = random_basis(rng)
    A_can = np.diag([_nonzero(rng), 0.0])
    zeta_can = np.array([_nonzero(rng), _nonzero(rng)])
    return SystemSpec(
        A=P @ A_can @ np.linalg.inv(P), zeta=P @ zeta_can,
        omega_min=omega[0], omega_max=omega[1],
    )


def random_saddle(rng, omega=None) -> SystemSpec:
    P = random_basis(rng)
    A_can = np.diag([rng.uniform(0.3, 2.0), -rng.uniform(0.3, 2.0)])
    zeta_can = np.array([_nonzero(rng), _nonzero(rng)])
    if omega is None:
        lo = rng.uniform(-2.0, 1.0)
        omega = (lo, lo + rng.uniform(0.5, 2.0))
    return SystemSpec(
        A=P @ A_can @ np.linalg.inv(P), zeta=P @ zeta_can,
        omega_min=omega[0], omega_max=omega[1],
    )


def random_node(rng, trace_sign=-1, omega=None, jordan=None) -> SystemSpec:
    P = random_basis(rng)
    if jordan is None:
        jordan = rng.random() < 0.3
    if jordan:
        lam = trace_sign * rng.uniform(0.3, 2.0)
        A_can = np.array([[lam, 1.0], [0.0, lam]])
        # eigenvector is e1: any control direction with a second component
        zeta_can = np.array([rng.uniform(-1, 1), _nonzero(rng)])
    else:
        a = rng.uniform(0.3, 2.0)
        b = a + rng.uniform(0.2, 1.5)
        A_can = np.diag([trace_sign * a, trace_sign * b])
        zeta_can = np.array([_nonzero(rng), _nonzero(rng)])
    if omega is None:
        lo = rng.uniform(-2.0, 1.0)
        omega = (lo, lo + rng.uniform(0.5, 2.0))
    return SystemSpec(
        A=P @ A_can @ np.linalg.inv(P), zeta=P @ zeta_can,
        omega_min=omega[0], omega_max=omega[1],
    )


def random_real_eig_matrix(rng) -> np.ndarray:
    """Random matrix with real eigenvalues, any case."""
    kind = rng.integers(0, 4)
    if kind == 0:
        return random_nilpotent(rng).A
    if kind == 1:
        return random_rank1(rng).A
    if kind == 2:
        return random_saddle(rng).A
    return random_node(rng, trace_sign=int(rng.choice([-1, 1]))).A


# ---------------------------------------------------------------------------
# RK4 oracle (tests only)
# ---------------------------------------------------------------------------


def rk4_endpoints(As, zetas, us, v0s, Ts, h_max=1e-4) -> np.ndarray:
    """Batched classical RK4 for v' = A v + u zeta.

    Each sample integrates over its own horizon with a uniform step no
    larger than h_max.  Shapes: As (n,2,2), zetas (n,2), us (n,), v0s (n,2),
    Ts (n,).
    """
    As = np.asarray(As, float)
    zetas = np.asarray(zetas, float)
    us = np.asarray(us, float)
    Ts = np.asarray(Ts, float)
    v = np.asarray(v0s, float).copy()
    n_steps = max(1, int(np.ceil(np.max(Ts) / h_max)))
    h = (Ts / n_steps)[:, None]
    b = us[:, None] * zetas

    def f(x):
        return np.einsum("nij,nj->ni", As, x) + b

    for _ in range(n_steps):
        k1 = f(v)
        k2 = f(v + 0.5 * h * k1)
        k3 = f(v + 0.5 * h * k2)
        k4 = f(v + h * k3)
        v = v + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    return v


def rk4_endpoint(spec: SystemSpec, t: float, v0, u: float, h_max=1e-4):
    """Single-sample RK4 endpoint (negative t integrates the reversed field)."""
    A, zeta = spec.A, spec.zeta
    if t < 0:
        A, zeta, t = -A, -zeta, -t
    return rk4_endpoints(
        A[None], zeta[None], np.array([u]), np.asarray(v0, float)[None],
        np.array([t]), h_max,
    )[0]
