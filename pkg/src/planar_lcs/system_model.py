"""Problem statement, rank condition, case classification and canonical
coordinates for planar linear control systems  v' = A v + u * zeta,
u in [omega_min, omega_max].

The case grid is (sign of det A) x (sign of tr A) x (position of the control
value 0 in the range).  Each cell has its own canonical basis in which the
closed-form flow and control-set formulas live.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .core_algebra import (
    EigKind,
    EigenDecomposition,
    as_mat2,
    as_vec2,
    eig2,
    rotate_quarter,
)
from .errors import LarcViolated, SingularMatrix

__all__ = [
    "SystemSpec",
    "Sign",
    "ZeroPosition",
    "CaseTag",
    "CanonicalForm",
    "check_larc",
    "classify",
    "canonicalize",
    "equilibrium",
]

TOL_LARC = 1e-9
# det counts as zero below 1e-9*(1+||A||^2), tr below 1e-9*(1+||A||); the
# classification is discontinuous, so the bands make it deterministic.
TOL_DET = 1e-9
TOL_TR = 1e-9
TOL_OMEGA_BOUNDARY = 1e-12


@dataclass(eq=False)
class SystemSpec:
    """A planar linear control system: drift A, control direction zeta,
    control range [omega_min, omega_max]."""

    A: np.ndarray
    zeta: np.ndarray
    omega_min: float
    omega_max: float
    _canonical: "CanonicalForm | None" = field(
        default=None, repr=False, compare=False
    )

    def __post_init__(self):
        self.A = as_mat2(self.A)
        self.zeta = as_vec2(self.zeta)
        self.omega_min = float(self.omega_min)
        self.omega_max = float(self.omega_max)
        if not (np.isfinite(self.omega_min) and np.isfinite(self.omega_max)):
            raise ValueError("control range endpoints must be finite")
        if not self.omega_min < self.omega_max:
            raise ValueError(
                f"control range is empty: [{self.omega_min}, {self.omega_max}]"
            )
        if np.linalg.norm(self.zeta) == 0.0:
            raise ValueError("control direction zeta must be nonzero")
        self.A.flags.writeable = False
        self.zeta.flags.writeable = False

    @property
    def omega(self) -> tuple[float, float]:
        return (self.omega_min, self.omega_max)

    def contains_control(self, u: float, tol: float = 1e-12) -> bool:
        slack = tol * (1.0 + abs(self.omega_min) + abs(self.omega_max))
        return self.omega_min - slack <= u <= self.omega_max + slack


class Sign(enum.Enum):
    NEGATIVE = "negative"
    ZERO = "zero"
    POSITIVE = "positive"


class ZeroPosition(enum.Enum):
    INTERIOR = "interior"
    BOUNDARY = "boundary"
    OUTSIDE = "outside"


@dataclass(frozen=True)
class CaseTag:
    """Classification cell: det sign, trace sign, and where the zero control
    sits relative to the range (the latter only matters when det A = 0)."""

    detsign: Sign
    trsign: Sign
    zero_position: ZeroPosition


@dataclass(eq=False)
class CanonicalForm:
    """Change of basis P (columns = canonical basis) with A_can = P^-1 A P in
    the template shape for the case, and zeta_can = P^-1 zeta."""

    tag: CaseTag
    P: np.ndarray
    A_can: np.ndarray
    zeta_can: np.ndarray
    eigen: EigenDecomposition

    def __post_init__(self):
        self.P_inv = np.linalg.inv(self.P)
        self.cache: dict = {}  # deterministic rebuildable artifacts (polylines)

    def to_canonical(self, v) -> np.ndarray:
        return self.P_inv @ np.asarray(v, dtype=float)

    def from_canonical(self, v) -> np.ndarray:
        return self.P @ np.asarray(v, dtype=float)

    @property
    def is_nilpotent(self) -> bool:
        return (
            self.tag.detsign is Sign.ZERO and self.tag.trsign is Sign.ZERO
        )

    @property
    def is_rank_one(self) -> bool:
        return (
            self.tag.detsign is Sign.ZERO and self.tag.trsign is not Sign.ZERO
        )

    @property
    def is_saddle(self) -> bool:
        return self.tag.detsign is Sign.NEGATIVE

    @property
    def is_node(self) -> bool:
        return self.tag.detsign is Sign.POSITIVE


def check_larc(spec: SystemSpec) -> float:
    """Rank-condition scalar <A zeta, rot90 zeta>.

    Zero exactly when zeta is an eigenvector of A.  Callers reject the
    system when |value| <= 1e-9 * ||A|| * ||zeta||^2.
    """
    return float(np.dot(spec.A @ spec.zeta, rotate_quarter(spec.zeta)))


def _larc_ok(spec: SystemSpec) -> bool:
    scale = np.linalg.norm(spec.A) * float(np.dot(spec.zeta, spec.zeta))
    return abs(check_larc(spec)) > TOL_LARC * scale


def _require_larc(spec: SystemSpec) -> None:
    if not _larc_ok(spec):
        raise LarcViolated(
            "control direction is an eigenvector of A "
            f"(<A zeta, rot90 zeta> = {check_larc(spec):.3e})"
        )


def _sign_with_tol(value: float, tol: float) -> Sign:
    if abs(value) <= tol:
        return Sign.ZERO
    return Sign.POSITIVE if value > 0.0 else Sign.NEGATIVE


def zero_position_of(omega_min: float, omega_max: float) -> ZeroPosition:
    band = TOL_OMEGA_BOUNDARY
    if abs(omega_min) <= band or abs(omega_max) <= band:
        return ZeroPosition.BOUNDARY
    if omega_min < 0.0 < omega_max:
        return ZeroPosition.INTERIOR
    return ZeroPosition.OUTSIDE


def classify(spec: SystemSpec) -> CaseTag:
    """Classify the system into its case-grid cell.

    Raises
    ------
    LarcViolated
        If the rank condition fails within tolerance.
    ComplexEigenvalues
        If A has complex eigenvalues (propagated from the eigensolver).
    """
    _require_larc(spec)
    eig2(spec.A)  # rejects complex eigenvalues
    A = spec.A
    det = float(np.linalg.det(A))
    tr = float(np.trace(A))
    norm = float(np.linalg.norm(A))
    detsign = _sign_with_tol(det, TOL_DET * (1.0 + norm * norm))
    trsign = _sign_with_tol(tr, TOL_TR * (1.0 + norm))
    return CaseTag(detsign, trsign, zero_position_of(spec.omega_min, spec.omega_max))


def canonicalize(spec: SystemSpec) -> CanonicalForm:
    """Build the canonical coordinates for the system's case.

    Basis choice per case:

    * det = tr = 0 (nilpotent): basis {A zeta, zeta}, giving
      A_can = [[0,1],[0,0]] and zeta_can = (0, 1) exactly.
    * det = 0, tr != 0: eigenbasis with the nonzero eigenvalue first,
      A_can = diag(mu, 0).
    * det < 0 (saddle): eigenbasis, positive eigenvalue first, so
      A_can = diag(mu, lam) with lam < 0 < mu.
    * det > 0 (node): eigenbasis sorted descending, or the Jordan basis with
      A_can = [[lam,1],[0,lam]] for a repeated eigenvalue.

    The result is cached on the spec instance.
    """
    if spec._canonical is not None:
        return spec._canonical

    tag = classify(spec)
    eig = eig2(spec.A)

    if tag.detsign is Sign.ZERO and tag.trsign is Sign.ZERO:
        P = np.column_stack([spec.A @ spec.zeta, spec.zeta])
        A_can = np.array([[0.0, 1.0], [0.0, 0.0]])
        zeta_can = np.array([0.0, 1.0])
    elif tag.detsign is Sign.ZERO:
        # order eigenvectors so the nonzero eigenvalue comes first
        l1, l2 = eig.eigenvalues
        if abs(l1) >= abs(l2):
            P = eig.basis.copy()
            mu = l1
        else:
            P = eig.basis[:, ::-1].copy()
            mu = l2
        A_can = np.diag([mu, 0.0])
        zeta_can = np.linalg.solve(P, spec.zeta)
    elif eig.kind is EigKind.JORDAN:
        P = eig.basis.copy()
        A_can = eig.block()
        zeta_can = np.linalg.solve(P, spec.zeta)
    else:
        # descending order puts the positive eigenvalue first in the saddle
        P = eig.basis.copy()
        A_can = np.diag(list(eig.eigenvalues))
        zeta_can = np.linalg.solve(P, spec.zeta)

    form = CanonicalForm(tag=tag, P=P, A_can=A_can, zeta_can=zeta_can, eigen=eig)
    spec._canonical = form
    return form


def equilibrium(spec: SystemSpec, u: float) -> np.ndarray:
    """Rest point of the constant-control flow: the solution of A v = -u zeta.

    Raises
    ------
    SingularMatrix
        If det A is zero within the classification tolerance.
    """
    A = spec.A
    det = float(np.linalg.det(A))
    norm = float(np.linalg.norm(A))
    if abs(det) <= TOL_DET * (1.0 + norm * norm):
        raise SingularMatrix(f"det A = {det:.3e} is zero within tolerance")
    return np.linalg.solve(A, -u * spec.zeta)
