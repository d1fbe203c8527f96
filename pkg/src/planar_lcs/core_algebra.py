"""Exact 2x2 real linear algebra: rotation, eigendecomposition, closed-form
matrix exponentials and adapted contraction norms.

Matrices and vectors are plain float64 numpy arrays of shape (2, 2) and (2,).
Everything here is closed form; no series truncation, so downstream
conservation checks are limited only by rounding.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .errors import ComplexEigenvalues, NotStable

__all__ = [
    "EigKind",
    "EigenDecomposition",
    "AdaptedNorm",
    "as_vec2",
    "as_mat2",
    "rotate_quarter",
    "eig2",
    "expm2",
    "adapted_norm",
]

# Discriminant within this (scale-aware) band of zero counts as a repeated
# eigenvalue; below the band the eigenvalues are complex and rejected.
TOL_COMPLEX = 1e-9


def as_vec2(v) -> np.ndarray:
    """Coerce to a finite float64 vector of shape (2,)."""
    arr = np.asarray(v, dtype=float).reshape(2)
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"vector entries must be finite, got {arr}")
    return arr


def as_mat2(m) -> np.ndarray:
    """Coerce to a finite float64 matrix of shape (2, 2)."""
    arr = np.asarray(m, dtype=float).reshape(2, 2)
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"matrix entries must be finite, got {arr}")
    return arr


def rotate_quarter(v) -> np.ndarray:
    """Counter-clockwise quarter-turn rotation: (x, y) -> (-y, x).

    Exact in floating point (only negation and swap); applying it twice
    negates the argument exactly.
    """
    v = np.asarray(v, dtype=float)
    return np.array([-v[1], v[0]])


class EigKind(enum.Enum):
    DISTINCT_REAL = "distinct_real"
    REPEATED_DIAGONALIZABLE = "repeated_diagonalizable"
    JORDAN = "jordan"


@dataclass(frozen=True)
class EigenDecomposition:
    """Real eigen-structure of a 2x2 matrix.

    ``eigenvalues`` is sorted descending.  ``basis`` columns are the
    eigenvectors (or the eigenvector and generalized eigenvector for the
    Jordan kind) in the same order, and satisfy
    ``basis @ J @ inv(basis) == A`` for the canonical block ``J``.
    """

    kind: EigKind
    eigenvalues: tuple[float, float]
    basis: np.ndarray

    @property
    def basis_inv(self) -> np.ndarray:
        return np.linalg.inv(self.basis)

    def block(self) -> np.ndarray:
        """Canonical block: diag for diagonalizable kinds, Jordan block else."""
        l1, l2 = self.eigenvalues
        if self.kind is EigKind.JORDAN:
            return np.array([[l1, 1.0], [0.0, l1]])
        return np.diag([l1, l2])


def _kernel_direction(m: np.ndarray) -> np.ndarray:
    """Unit vector spanning the kernel of a (numerically) singular 2x2 matrix."""
    norms = np.hypot(m[:, 0], m[:, 1])
    i = int(np.argmax(norms))
    if norms[i] == 0.0:  # m is the zero matrix; any direction works
        return np.array([1.0, 0.0])
    # the rows of a singular matrix are parallel; the quarter-turn of the
    # better-conditioned one spans the kernel
    v = rotate_quarter(m[i] / norms[i])
    # sign convention: largest-magnitude component positive
    if v[int(np.argmax(np.abs(v)))] < 0.0:
        v = -v
    return v


def eig2(A) -> EigenDecomposition:
    """Real eigendecomposition of a 2x2 matrix.

    Eigenvalues are returned sorted descending.  The kind is ``JORDAN``
    exactly when the discriminant vanishes (within a scale-aware band) and
    the matrix is not a multiple of the identity.

    Raises
    ------
    ComplexEigenvalues
        If the discriminant is negative beyond the tolerance band.
    """
    A = as_mat2(A)
    tr = A[0, 0] + A[1, 1]
    det = A[0, 0] * A[1, 1] - A[0, 1] * A[1, 0]
    disc = tr * tr - 4.0 * det
    band = TOL_COMPLEX * (1.0 + tr * tr)

    if disc < -band:
        raise ComplexEigenvalues(
            f"discriminant {disc:.3e} < 0: eigenvalues are complex"
        )

    if abs(disc) <= band:
        lam = 0.5 * tr
        N = A - lam * np.eye(2)
        off_identity = float(np.linalg.norm(N))
        if off_identity <= 1e-12 * (1.0 + abs(lam)):
            return EigenDecomposition(
                EigKind.REPEATED_DIAGONALIZABLE, (lam, lam), np.eye(2)
            )
        # Jordan chain: w spans ker N (treat N as nilpotent), g solves N g = w.
        w = _kernel_direction(N)
        g = np.linalg.pinv(N) @ w
        return EigenDecomposition(EigKind.JORDAN, (lam, lam), np.column_stack([w, g]))

    root = np.sqrt(disc)
    l1 = 0.5 * (tr + root)
    l2 = 0.5 * (tr - root)
    v1 = _kernel_direction(A - l1 * np.eye(2))
    v2 = _kernel_direction(A - l2 * np.eye(2))
    return EigenDecomposition(EigKind.DISTINCT_REAL, (l1, l2), np.column_stack([v1, v2]))


def expm2(A, t: float) -> np.ndarray:
    """Closed-form matrix exponential exp(t*A) for real-eigenvalue A.

    Diagonalizable: ``B diag(e^{l1 t}, e^{l2 t}) B^-1``.  Jordan with
    eigenvalue ``l``: ``e^{l t} (I + t N)`` where ``N = A - l I`` is
    nilpotent.  ``t == 0`` returns the identity exactly.
    """
    A = as_mat2(A)
    if t == 0.0:
        return np.eye(2)
    eig = eig2(A)
    l1, l2 = eig.eigenvalues
    if eig.kind is EigKind.JORDAN:
        N = A - l1 * np.eye(2)
        return np.exp(l1 * t) * (np.eye(2) + t * N)
    if eig.kind is EigKind.REPEATED_DIAGONALIZABLE:
        return np.exp(l1 * t) * np.eye(2)
    B = eig.basis
    return B @ np.diag([np.exp(l1 * t), np.exp(l2 * t)]) @ np.linalg.inv(B)


@dataclass(frozen=True)
class AdaptedNorm:
    """Norm |v| = ||transform @ v||_2 in which the stable flow contracts.

    For the matrix it was built from, ``|exp(tA) v| <= exp(-delta*t) |v|``
    for all t > 0.
    """

    transform: np.ndarray
    delta: float

    def __call__(self, v) -> float:
        return float(np.linalg.norm(self.transform @ np.asarray(v, dtype=float)))


def adapted_norm(A) -> AdaptedNorm:
    """Build a contraction norm for a strictly stable matrix.

    Diagonalizable case: transform is the inverse eigenbasis and the rate is
    the smallest eigenvalue magnitude.  Jordan case with eigenvalue l < 0:
    the generalized basis vector is shrunk by eps = |l|/2, which makes the
    off-diagonal coupling small enough to prove rate |l|/2.

    Raises
    ------
    NotStable
        If some eigenvalue is >= 0.
    """
    A = as_mat2(A)
    eig = eig2(A)
    l1, l2 = eig.eigenvalues
    if l1 >= 0.0:
        raise NotStable(f"eigenvalue {l1} is not strictly negative")

    if eig.kind is EigKind.JORDAN:
        eps = 0.5 * abs(l1)
        B = eig.basis.copy()
        B[:, 1] *= eps
        return AdaptedNorm(np.linalg.inv(B), 0.5 * abs(l1))
    if eig.kind is EigKind.REPEATED_DIAGONALIZABLE:
        return AdaptedNorm(np.eye(2), abs(l1))
    return AdaptedNorm(np.linalg.inv(eig.basis), min(abs(l1), abs(l2)))
