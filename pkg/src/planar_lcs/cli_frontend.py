"""Command-line front end: classification reports, boundary CSVs,
simulation, steering, oracle verification and SVG phase portraits.

Exit codes: 0 success, 1 malformed config, 2 case rejection (complex
eigenvalues or rank-condition failure), 3 infeasible request, 4 oracle
verification failure.  All outputs are bit-stable for fixed inputs.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import replace

import numpy as np

from .control_sets import (
    Membership,
    NodeRegion,
    NoControlSet,
    PointFamily,
    SaddleBox,
    Strip,
    WholePlane,
    boundary_polyline,
    contains,
    control_set,
)
from .dynamics import Schedule, propagate
from .errors import (
    ComplexEigenvalues,
    InvalidSchedule,
    LarcViolated,
    NoProbeAvailable,
    NoSteeringPossible,
    PointOutside,
    TargetNotInInterior,
    TargetOutsideControlSet,
    WrongCase,
    WrongVariant,
)
from .reach_oracle import (
    GridSpec,
    ReachConfig,
    estimate_control_set,
    mutually_reachable,
    probe_point,
    sample_reachable,
)
from .steering import SteeringResult, steer
from .system_model import (
    Sign,
    SystemSpec,
    canonicalize,
    check_larc,
    classify,
    equilibrium,
)

EXIT_OK = 0
EXIT_BAD_CONFIG = 1
EXIT_CASE_REJECTED = 2
EXIT_INFEASIBLE = 3
EXIT_VERIFY_FAILED = 4

_INFEASIBLE_ERRORS = (
    NoSteeringPossible,
    TargetOutsideControlSet,
    TargetNotInInterior,
    PointOutside,
    NoProbeAvailable,
    WrongVariant,
    WrongCase,
    InvalidSchedule,
)


class ConfigError(Exception):
    pass


def _reject_constant(token):
    raise ConfigError(f"non-finite number {token!r} in config")


def load_config(path: str) -> SystemSpec:
    """Parse a system config file: {"A": [[..]], "zeta": [..], "omega": [lo, hi]}.

    NaN/Infinity tokens and malformed shapes are rejected.
    """
    try:
        with open(path) as fh:
            doc = json.load(fh, parse_constant=_reject_constant)
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigError("config must be a JSON object")
    missing = {"A", "zeta", "omega"} - set(doc)
    if missing:
        raise ConfigError(f"config is missing keys: {sorted(missing)}")
    try:
        A = np.asarray(doc["A"], dtype=float)
        zeta = np.asarray(doc["zeta"], dtype=float)
        omega = [float(x) for x in doc["omega"]]
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"config entries are not numeric: {exc}") from exc
    if A.shape != (2, 2):
        raise ConfigError(f"A must be 2x2, got shape {A.shape}")
    if zeta.shape != (2,):
        raise ConfigError(f"zeta must have 2 entries, got shape {zeta.shape}")
    if len(omega) != 2:
        raise ConfigError("omega must be [min, max]")
    try:
        return SystemSpec(A=A, zeta=zeta, omega_min=omega[0], omega_max=omega[1])
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _parse_point(text: str) -> np.ndarray:
    try:
        parts = [float(x) for x in text.split(",")]
    except ValueError as exc:
        raise ConfigError(f"cannot parse point {text!r}: {exc}") from exc
    if len(parts) != 2:
        raise ConfigError(f"point must be 'x,y', got {text!r}")
    return np.array(parts)


def _json_dump(obj, stream) -> None:
    json.dump(obj, stream, indent=2, sort_keys=True)
    stream.write("\n")


def _write_or_stdout(text: str, path: str | None) -> None:
    if path is None:
        sys.stdout.write(text)
    else:
        with open(path, "w") as fh:
            fh.write(text)


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def _report(spec: SystemSpec) -> dict:
    tag = classify(spec)
    canon = canonicalize(spec)
    desc = control_set(spec)
    report = {
        "larc_value": check_larc(spec),
        "case": {
            "det_sign": tag.detsign.value,
            "tr_sign": tag.trsign.value,
            "zero_position": tag.zero_position.value,
        },
        "control_set": desc.to_report(),
        "canonical": {
            "basis": canon.P.tolist(),
            "A": canon.A_can.tolist(),
            "zeta": canon.zeta_can.tolist(),
        },
    }
    if tag.detsign is not Sign.ZERO:
        report["equilibria"] = {
            "u_minus": equilibrium(spec, spec.omega_min).tolist(),
            "u_plus": equilibrium(spec, spec.omega_max).tolist(),
        }
    return report


def cmd_classify(args) -> int:
    spec = load_config(args.config)
    import io

    buf = io.StringIO()
    _json_dump(_report(spec), buf)
    _write_or_stdout(buf.getvalue(), args.output)
    return EXIT_OK


def _polyline_csv(points: np.ndarray, closed: bool) -> str:
    lines = [f"# closed: {'true' if closed else 'false'}", "x,y"]
    lines += [f"{float(x)!r},{float(y)!r}" for x, y in points]
    return "\n".join(lines) + "\n"


def cmd_control_set(args) -> int:
    spec = load_config(args.config)
    desc = control_set(spec)
    summary = {"control_set": desc.to_report()}
    if isinstance(desc, (WholePlane, NoControlSet)):
        summary["boundary"] = None
        _json_dump(summary, sys.stdout)
        return EXIT_OK
    pts = boundary_polyline(spec, desc, n=args.points, extent=args.extent)
    closed = not isinstance(desc, PointFamily)
    out = args.output or "control_set_boundary.csv"
    _write_or_stdout(_polyline_csv(pts, closed), out)
    summary["boundary"] = {"file": out, "points": len(pts), "closed": closed}
    _json_dump(summary, sys.stdout)
    return EXIT_OK


def cmd_simulate(args) -> int:
    spec = load_config(args.config)
    v0 = _parse_point(args.init)
    try:
        with open(args.schedule) as fh:
            sched = Schedule.from_json_obj(
                json.load(fh, parse_constant=_reject_constant)
            )
    except OSError as exc:
        raise ConfigError(f"cannot read schedule: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"schedule is not valid JSON: {exc}") from exc
    traj = propagate(spec, v0, sched)
    rows = traj.sample(args.samples)
    lines = ["t,x,y"] + [
        f"{float(t)!r},{float(x)!r},{float(y)!r}" for t, x, y in rows
    ]
    _write_or_stdout("\n".join(lines) + "\n", args.output)
    return EXIT_OK


def _steer_with_reversal(spec: SystemSpec, v0, v1, tol: float):
    """Dispatcher plus the positive-trace node route: plan on the
    time-reversed system (a stable node) and replay the reversed schedule.

    The reversed-system transfer v1 -> v0 meets the tolerance; the forward
    replay error is reported honestly and can be large, because open-loop
    errors grow at the expansion rate of the positive-trace flow.
    """
    canon = canonicalize(spec)
    if canon.is_node and float(np.trace(spec.A)) > 0.0:
        reversed_spec = SystemSpec(
            A=-spec.A,
            zeta=-spec.zeta,
            omega_min=spec.omega_min,
            omega_max=spec.omega_max,
        )
        rev = steer(reversed_spec, v1, v0, tol)
        sched = Schedule(tuple(reversed(rev.schedule.segments)))
        endpoint = propagate(spec, v0, sched).endpoint
        result = SteeringResult(
            schedule=sched,
            endpoint_error=float(np.linalg.norm(endpoint - np.asarray(v1, float))),
            witness=rev.witness,
            start=np.asarray(v0, float),
            target=np.asarray(v1, float),
        )
        return result, rev.endpoint_error
    return steer(spec, v0, v1, tol), None


def cmd_steer(args) -> int:
    spec = load_config(args.config)
    v0 = _parse_point(args.start)
    v1 = _parse_point(args.to)
    result, reverse_error = _steer_with_reversal(spec, v0, v1, args.tol)
    doc = {
        "schedule": result.schedule.to_json_obj(),
        "endpoint_error": result.endpoint_error,
        "total_duration": result.schedule.total_duration,
        "witness": [list(map(float, w)) for w in result.witness],
    }
    if reverse_error is not None:
        doc["time_reversed"] = True
        doc["reverse_endpoint_error"] = reverse_error
    if args.output:
        with open(args.output, "w") as fh:
            _json_dump(result.schedule.to_json_obj(), fh)
    _json_dump(doc, sys.stdout)
    return EXIT_OK


def cmd_verify(args) -> int:
    spec = load_config(args.config)
    seed = args.seed
    env_seed = os.environ.get("PLANAR_LCS_SEED")
    if env_seed is not None:
        seed = int(env_seed)
    cfg = ReachConfig(
        horizon=args.horizon,
        segments_per_trial=8,
        trials=args.trials,
        seed=seed,
        epsilon=args.epsilon,
        bang_bias=0.6,
    )
    results, grid_estimate = run_verification(spec, cfg, grid_n=args.grid)
    for name, ok, detail in results:
        print(f"{'PASS' if ok else 'FAIL'} {name}: {detail}")
    if args.output and grid_estimate is not None:
        rows = ["x,y,label"] + list(grid_estimate.to_csv_rows())
        with open(args.output, "w") as fh:
            fh.write("\n".join(rows) + "\n")
    if args.figure and grid_estimate is not None:
        render_grid_figure(spec, grid_estimate, args.figure)
    return EXIT_OK if all(ok for _, ok, _ in results) else EXIT_VERIFY_FAILED


def run_verification(spec: SystemSpec, cfg: ReachConfig, grid_n: int = 24):
    """Oracle cross-validation: returns ([(property, ok, detail)], grid)."""
    desc = control_set(spec)
    results = []
    grid_estimate = None
    rng = np.random.Generator(np.random.Philox(key=np.uint64(cfg.seed)))

    if isinstance(desc, (PointFamily, NoControlSet)):
        # no interior: mutual reachability must fail for distinct points
        fails = 0
        trials = 20
        for _ in range(trials):
            a = rng.uniform(-3, 3, 2)
            b = rng.uniform(-3, 3, 2)
            if not mutually_reachable(spec, a, b, cfg):
                fails += 1
        ok = fails == trials
        results.append(
            (
                "no_mutual_reachability",
                ok,
                f"{fails}/{trials} random pairs correctly unreachable",
            )
        )
        return results, None

    probe = probe_point(spec, desc)

    # property 1: grid agreement between the oracle and the membership test;
    # the hit tolerance is kept at the scale of a grid cell
    if isinstance(desc, WholePlane):
        grid = GridSpec(-5, 5, -5, 5, grid_n, grid_n)
    else:
        pts = boundary_polyline(spec, desc, n=256, extent=3.0)
        lo = pts.min(axis=0) - 1.0
        hi = pts.max(axis=0) + 1.0
        grid = GridSpec(lo[0], hi[0], lo[1], hi[1], grid_n, grid_n)
    if cfg.epsilon < 0.5 * grid.cell_diagonal:
        cfg = replace(cfg, epsilon=0.5 * grid.cell_diagonal)
    grid_estimate = estimate_control_set(spec, grid, cfg)
    band = max(2.0 * cfg.epsilon, grid.cell_diagonal)
    agree = total = 0
    for center, label in zip(grid_estimate.centers, grid_estimate.labels):
        m = contains(spec, desc, center, tol_band=band)
        if m is Membership.BOUNDARY:
            continue  # tolerance ring
        total += 1
        if (m is Membership.INSIDE) == (label == "in"):
            agree += 1
    frac = agree / max(total, 1)
    results.append(
        (
            "oracle_grid_agreement",
            frac >= 0.95,
            f"{agree}/{total} cells agree ({100 * frac:.1f}%)",
        )
    )

    # property 2: forward samples from the probe stay out of the exterior
    # (skipped for the controllable case, where there is no exterior)
    if not isinstance(desc, WholePlane):
        cloud = sample_reachable(spec, probe, cfg)
        bad = sum(
            1
            for p in cloud[:: max(1, len(cloud) // 200)]
            if contains(spec, desc, p, tol_band=1e-6) is Membership.OUTSIDE
        )
        results.append(
            (
                "forward_invariance",
                bad == 0,
                f"{bad} sampled forward points escaped the control set",
            )
        )

    # property 3: a steering plan replays to its reported error
    try:
        target = probe + 0.05 * np.array([1.0, -1.0])
        res, _ = _steer_with_reversal(spec, probe, target, tol=1e-6)
        replay = propagate(spec, probe, res.schedule).endpoint
        drift = float(np.linalg.norm(replay - target))
        ok = abs(drift - res.endpoint_error) <= 1e-9
        if float(np.trace(spec.A)) <= 0.0:
            ok = ok and drift <= 1e-4
        results.append(
            ("steer_replay", ok, f"endpoint error {drift:.2e} on replay")
        )
    except _INFEASIBLE_ERRORS as exc:
        results.append(("steer_replay", True, f"skipped: {exc}"))

    return results, grid_estimate


def render_grid_figure(spec: SystemSpec, est, output: str) -> None:
    """Render the oracle grid classification next to the symbolic boundary."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    plt.rcParams["svg.hashsalt"] = "planar-lcs"
    fig, ax = plt.subplots(figsize=(6, 6))
    colors = {"in": "#2ca02c", "out": "#d62728", "unknown": "#ff7f0e"}
    for label, color in colors.items():
        mask = est.labels == label
        if np.any(mask):
            ax.scatter(est.centers[mask, 0], est.centers[mask, 1], s=6,
                       c=color, label=label, linewidths=0)
    desc = control_set(spec)
    if not isinstance(desc, (WholePlane, NoControlSet)):
        ring = boundary_polyline(spec, desc, n=512, extent=6.0)
        ax.plot(ring[:, 0], ring[:, 1], color="#1f77b4", lw=1.5,
                label="symbolic boundary")
    ax.plot(est.probe[0], est.probe[1], "k*", ms=10, label="probe")
    ax.set_title("oracle mutual-reachability classification", fontsize=9)
    ax.legend(loc="lower right", fontsize=7)
    ax.set_aspect("equal", adjustable="box")
    fig.savefig(output, metadata={"Date": None})
    plt.close(fig)


def cmd_plot(args) -> int:
    spec = load_config(args.config)
    return render_plot(
        spec,
        output=args.output,
        extent=args.extent,
        points=args.points,
        trajectories=args.trajectories or [],
        canonical=args.canonical,
    )


def render_plot(
    spec: SystemSpec,
    output: str,
    extent: float = 5.0,
    points: int = 512,
    trajectories: list[str] | None = None,
    canonical: bool = False,
) -> int:
    """Render the control set, boundary, equilibria and optional
    trajectories to a static figure (format chosen by file extension)."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    plt.rcParams["svg.hashsalt"] = "planar-lcs"

    canon = canonicalize(spec)
    desc = control_set(spec)

    def tx(pts: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(pts)
        return pts @ canon.P_inv.T if canonical else pts

    fig, ax = plt.subplots(figsize=(6, 6))
    title = f"control set: {desc.variant}"
    if canonical:
        title += f"  [canonical basis {np.round(canon.P, 6).tolist()}]"

    if isinstance(desc, (WholePlane, NoControlSet)):
        lo, hi = -extent, extent
        ax.set_xlim(lo, hi)
        ax.set_ylim(lo, hi)
        if isinstance(desc, WholePlane):
            ax.axhspan(lo, hi, facecolor="#9ecae1", alpha=0.5)
            ax.annotate("controllable: whole plane", (0.02, 0.97),
                        xycoords="axes fraction", va="top")
        else:
            ax.annotate("no control set", (0.02, 0.97),
                        xycoords="axes fraction", va="top")
    else:
        ring = tx(boundary_polyline(spec, desc, n=points, extent=extent))
        if isinstance(desc, PointFamily):
            ax.plot(ring[:, 0], ring[:, 1], "--", color="#d62728",
                    label="one-point control sets")
        else:
            ax.fill(ring[:, 0], ring[:, 1], facecolor="#9ecae1", alpha=0.5,
                    edgecolor="none")
            ax.plot(ring[:, 0], ring[:, 1], color="#1f77b4", lw=1.5,
                    label="boundary")
        lo = ring.min(axis=0)
        hi = ring.max(axis=0)
        margin = 0.2 * (hi - lo + 1e-9)
        ax.set_xlim(lo[0] - margin[0], hi[0] + margin[0])
        ax.set_ylim(lo[1] - margin[1], hi[1] + margin[1])

    if classify(spec).detsign is not Sign.ZERO:
        for u, marker in ((spec.omega_min, "v"), (spec.omega_max, "^")):
            e = tx(equilibrium(spec, u))[0]
            ax.plot(e[0], e[1], marker, color="#2ca02c", ms=8,
                    label=f"equilibrium u={u:g}")

    for path in trajectories or []:
        data = np.loadtxt(path, delimiter=",", skiprows=1)
        pts = tx(data[:, 1:3])
        ax.plot(pts[:, 0], pts[:, 1], color="#ff7f0e", lw=1.0)

    ax.set_title(title, fontsize=9)
    ax.set_xlabel("x")
    ax.set_ylabel("y")
    ax.legend(loc="lower right", fontsize=7)
    ax.set_aspect("equal", adjustable="box")
    fig.savefig(output, metadata={"Date": None})
    plt.close(fig)
    print(json.dumps({"figure": output}))
    return EXIT_OK


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="planar-lcs",
        description=(
            "Analyze, steer and verify planar linear control systems with "
            "real eigenvalues."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("classify", help="case tag + control set report (JSON)")
    p.add_argument("config")
    p.add_argument("--output", default=None)
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("control-set", help="boundary polyline CSV + summary")
    p.add_argument("config")
    p.add_argument("--output", default=None, help="CSV path")
    p.add_argument("--points", type=int, default=512)
    p.add_argument("--extent", type=float, default=10.0)
    p.set_defaults(func=cmd_control_set)

    p = sub.add_parser("simulate", help="run a schedule, emit trajectory CSV")
    p.add_argument("config")
    p.add_argument("--init", required=True, help="start point 'x,y'")
    p.add_argument("--schedule", required=True, help="JSON schedule file")
    p.add_argument("--samples", type=int, default=201)
    p.add_argument("--output", default=None)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("steer", help="plan a transfer, emit schedule JSON")
    p.add_argument("config")
    p.add_argument("--from", dest="start", required=True, help="'x,y'")
    p.add_argument("--to", required=True, help="'x,y'")
    p.add_argument("--tol", type=float, default=1e-6)
    p.add_argument("--output", default=None, help="schedule JSON path")
    p.set_defaults(func=cmd_steer)

    p = sub.add_parser("verify", help="oracle cross-validation report")
    p.add_argument("config")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--trials", type=int, default=200)
    p.add_argument("--grid", type=int, default=24)
    p.add_argument("--horizon", type=float, default=10.0)
    p.add_argument("--epsilon", type=float, default=5e-2)
    p.add_argument("--output", default=None, help="grid CSV path")
    p.add_argument("--figure", default=None,
                   help="render the grid classification to this file")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("plot", help="phase portrait (SVG by extension)")
    p.add_argument("config")
    p.add_argument("--output", default="phase_portrait.svg")
    p.add_argument("--extent", type=float, default=5.0)
    p.add_argument("--points", type=int, default=512)
    p.add_argument("--trajectories", nargs="*", default=None,
                   help="trajectory CSV files to overlay")
    p.add_argument("--canonical", action="store_true",
                   help="render in canonical coordinates")
    p.set_defaults(func=cmd_plot)

    return parser


def run(argv: list[str]) -> int:
    """Entry point returning an exit code (never raises for expected errors)."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BAD_CONFIG
    except (LarcViolated, ComplexEigenvalues) as exc:
        print(f"case rejected: {exc}", file=sys.stderr)
        return EXIT_CASE_REJECTED
    except _INFEASIBLE_ERRORS as exc:
        print(f"infeasible request: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE


def main() -> None:
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()
