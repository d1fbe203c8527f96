"""Planar linear control systems with real eigenvalues: classification,
exact flows, control sets, constructive steering and a brute-force
reachability oracle."""

from .core_algebra import (
    AdaptedNorm,
    EigKind,
    EigenDecomposition,
    adapted_norm,
    eig2,
    expm2,
    rotate_quarter,
)
from .system_model import (
    CanonicalForm,
    CaseTag,
    Sign,
    SystemSpec,
    ZeroPosition,
    canonicalize,
    check_larc,
    classify,
    equilibrium,
)
from .dynamics import (
    Schedule,
    Trajectory,
    invariant_F,
    invariant_G,
    propagate,
    solve_constant,
)
from .control_sets import (
    ControlSetDescription,
    Membership,
    NoControlSet,
    NodeRegion,
    PointFamily,
    SaddleBox,
    Strip,
    WholePlane,
    boundary_polyline,
    contains,
    control_set,
    f_jacobian,
    f_map,
    invert_f,
)
from .steering import (
    SteeringResult,
    closed_orbit_saddle,
    steer,
    steer_nilpotent,
    steer_node,
    steer_rank1,
)
from .reach_oracle import (
    GridSpec,
    ReachConfig,
    estimate_control_set,
    mutually_reachable,
    sample_reachable,
)
from . import errors

__version__ = "0.1.0"
