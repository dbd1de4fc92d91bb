"""Command-line front end: fk, ik, sweep and optimize.

Exit codes: 0 success, 2 malformed input or config, 3 target out of reach of
the original robot, 4 optimization ended without an Optimal status.
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from pathlib import Path

import numpy as np

from .geometry import EulerPose, Frame, euler_to_frame, rot_x
from .ik import BranchSingular, OutOfReach, ik_original, wcp_target_from_tcp
from .placement import VARIABLE_NAMES, BoxSpec, PlacementProblem, PlacementVariables
from .robot import DEG, RobotModel, fk_tcp, fk_virtual_tcp, fk_virtual_wcp, fk_wcp, load_model
from .solver import SolverOptions, minimize
from .virtual import NO_SMOOTHING, TOOL_DOWN, SmoothingParams, boundary_crossing, ik_virtual, sweep_line

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_OUT_OF_REACH = 3
EXIT_NOT_OPTIMAL = 4

SWEEP_DEFAULTS = {
    "L0": [500.0, 0.0, 215.0],
    "L1": [1300.0, 0.0, 215.0],
    "Q": TOOL_DOWN.tolist(),
    "configuration": 0,
    "samples": 801,
    "smoothing": {"enabled": False, "epsilon": 0.01},
}


class ConfigError(ValueError):
    pass


def _frame_json(f: Frame) -> dict:
    return {"position": [float(v) for v in f.position], "rotation": f.rotation.tolist()}


def _read_json(path) -> dict:
    try:
        data = json.loads(Path(path).read_text())
    except OSError as e:
        raise ConfigError(f"cannot read {path}: {e.strerror}") from e
    except json.JSONDecodeError as e:
        raise ConfigError(f"{path}: invalid JSON ({e})") from e
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be an object")
    return data


def _model_from(spec, base: Path | None, override: str | None) -> RobotModel:
    """Model from ``--model``, a path (relative to the config file) or an inline object."""
    if override:
        return load_model(override)
    if spec is None:
        return RobotModel()
    if isinstance(spec, str):
        path = Path(spec)
        if not path.is_absolute() and base is not None:
            path = base / path
        if not path.exists():
            raise ConfigError(f"robot model file not found: {path}")
        return load_model(path)
    if isinstance(spec, dict):
        return RobotModel.from_dict(spec)
    raise ConfigError("'model' must be a path or an object")


def _smoothing(spec) -> SmoothingParams:
    spec = spec or {}
    if isinstance(spec, bool):
        return SmoothingParams(enabled=spec)
    return SmoothingParams(float(spec.get("epsilon", 0.01)), bool(spec.get("enabled", False)))


def _rotation(spec) -> np.ndarray:
    r = np.asarray(spec, dtype=float)
    if r.shape != (3, 3) or np.max(np.abs(r.T @ r - np.eye(3))) > 1e-9 or abs(np.linalg.det(r) - 1) > 1e-9:
        raise ConfigError("orientation must be a 3x3 rotation matrix")
    return r


def _angles(values, deg: bool) -> list[float]:
    return [v * DEG for v in values] if deg else list(values)


def _emit(payload: dict, as_json: bool, lines: list[str]):
    if as_json:
        print(json.dumps(payload, indent=2))
    else:
        print("\n".join(lines))


def cmd_fk(args) -> int:
    model = _model_from(None, None, args.model)
    n = 7 if args.virtual else 6
    if len(args.joints) != n:
        raise ConfigError(f"fk expects {n} joint values{' (q1 q2 q3 v q4 q5 q6)' if args.virtual else ''}, "
                          f"got {len(args.joints)}")
    vals = list(args.joints)
    if args.deg:
        idx = [0, 1, 2, 4, 5, 6] if args.virtual else range(6)
        for i in idx:
            vals[i] *= DEG
    if args.virtual:
        wcp, tcp = fk_virtual_wcp(model, vals), fk_virtual_tcp(model, vals)
    else:
        wcp, tcp = fk_wcp(model, vals), fk_tcp(model, vals)
    payload = {"joints": vals, "virtual": args.virtual, "wcp": _frame_json(wcp), "tcp": _frame_json(tcp)}
    fmt = lambda p: " ".join(f"{v:.6f}" for v in p)
    _emit(payload, args.json, [f"WCP position: {fmt(wcp.position)}", f"TCP position: {fmt(tcp.position)}"])
    return EXIT_OK


def cmd_ik(args) -> int:
    model = _model_from(None, None, args.model)
    if not 0 <= args.config <= 7:
        raise ConfigError("--config must be in 0..7")
    x, y, z, a, b, c = args.frame[:3] + _angles(args.frame[3:], args.deg)
    target = euler_to_frame(EulerPose(x, y, z, a, b, c))
    wcp = target if args.wcp else wcp_target_from_tcp(model, target)
    payload = {"target": _frame_json(target), "target_is": "wcp" if args.wcp else "tcp",
               "configuration": args.config, "wcp": _frame_json(wcp)}
    if args.virtual:
        smoothing = NO_SMOOTHING if args.epsilon is None else SmoothingParams(args.epsilon, True)
        sol = ik_virtual(model, wcp, args.config, smoothing)
        payload.update({"q": sol.q.tolist(), "v": sol.v, "q_tilde": sol.as_array().tolist()})
        _emit(payload, args.json, [f"q: {' '.join(f'{v:.9f}' for v in sol.q)}", f"v: {sol.v:.9f}"])
        return EXIT_OK
    try:
        sol = ik_original(model, wcp, args.config, allow_singular=True)
    except OutOfReach as e:
        payload.update({"error": "OutOfReach", "defect": e.defect})
        _emit(payload, args.json, [f"out of reach: defect {e.defect:.9f} mm"])
        return EXIT_OUT_OF_REACH
    except BranchSingular as e:
        payload.update({"error": "BranchSingular", "kind": e.kind})
        _emit(payload, args.json, [str(e)])
        return EXIT_OUT_OF_REACH
    payload.update({"q": sol.q.tolist(), "limit_ok": sol.limit_ok.tolist(), "v": 0.0})
    _emit(payload, args.json, [f"q: {' '.join(f'{v:.9f}' for v in sol.q)}",
                               f"within limits: {sol.within_limits}"])
    return EXIT_OK


def sweep_config(data: dict) -> dict:
    unknown = set(data) - set(SWEEP_DEFAULTS) - {"model"}
    if unknown:
        raise ConfigError(f"unknown sweep keys: {sorted(unknown)}")
    cfg = {**SWEEP_DEFAULTS, **data}
    for key in ("L0", "L1"):
        p = np.asarray(cfg[key], dtype=float)
        if p.shape != (3,) or not np.all(np.isfinite(p)):
            raise ConfigError(f"{key} must be 3 finite numbers")
    if int(cfg["samples"]) < 2:
        raise ConfigError("samples must be >= 2")
    if not 0 <= int(cfg["configuration"]) <= 7:
        raise ConfigError("configuration must be in 0..7")
    _rotation(cfg["Q"])
    return cfg


def run_sweep(model: RobotModel, cfg: dict):
    q = _rotation(cfg["Q"])
    table = sweep_line(model, cfg["L0"], cfg["L1"], q, int(cfg["configuration"]),
                       int(cfg["samples"]), _smoothing(cfg["smoothing"]))
    crossing = boundary_crossing(model, cfg["L0"], cfg["L1"], q)
    return table, crossing


def cmd_sweep(args) -> int:
    path = Path(args.config)
    data = _read_json(path)
    model = _model_from(data.get("model"), path.parent, args.model)
    cfg = sweep_config(data)
    table, crossing = run_sweep(model, cfg)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "sweep.csv").write_text(table.to_csv())
    summary = {
        "config": {k: v for k, v in cfg.items() if k != "model"},
        "model": model.to_dict(),
        "samples": len(table.x),
        "boundary_crossing": None if crossing is None else crossing.tolist(),
        "boundary_x": None if crossing is None else float(crossing[0]),
        "v_max": float(np.max(table.v)),
    }
    (out / "sweep.json").write_text(json.dumps(summary, indent=2))
    where = "none" if crossing is None else f"{crossing[0]:.6f}"
    print(f"wrote {out / 'sweep.csv'} ({len(table.x)} rows); boundary crossing x = {where}")
    return EXIT_OK


def _pose(spec) -> EulerPose:
    if isinstance(spec, dict):
        unknown = set(spec) - set(VARIABLE_NAMES)
        if unknown:
            raise ConfigError(f"unknown pose keys: {sorted(unknown)}")
        return EulerPose(**{k: float(v) for k, v in spec.items()})
    vals = [float(v) for v in spec]
    if len(vals) != 6:
        raise ConfigError("pose needs 6 values x y z alpha beta gamma")
    return EulerPose(*vals)


def build_scene(data: dict, base: Path | None = None, model_override: str | None = None):
    """Scene file -> ``(PlacementProblem, SolverOptions, gradient mode, start poses)``."""
    model = _model_from(data.get("model"), base, model_override)
    try:
        box_d = dict(data["box"])
        start = _pose(data["start"])
    except KeyError as e:
        raise ConfigError(f"scene is missing {e.args[0]!r}") from e
    pick = box_d.pop("pick_orientation", None)
    box = BoxSpec(int(box_d.pop("bx")), int(box_d.pop("by")), float(box_d.pop("dx")), float(box_d.pop("dy")),
                  rot_x(math.pi) if pick is None else _rotation(pick), int(box_d.pop("configuration", 0)))
    if box_d:
        raise ConfigError(f"unknown box keys: {sorted(box_d)}")
    if not 0 <= box.configuration <= 7:
        raise ConfigError("configuration must be in 0..7")
    free = data.get("free", list(VARIABLE_NAMES))
    if free and isinstance(free[0], str):
        bad = set(free) - set(VARIABLE_NAMES)
        if bad:
            raise ConfigError(f"unknown free variables: {sorted(bad)}")
        free = [n in free for n in VARIABLE_NAMES]
    lower, upper = np.full(6, -np.inf), np.full(6, np.inf)
    for name, (lo, hi) in data.get("bounds", {}).items():
        if name not in VARIABLE_NAMES:
            raise ConfigError(f"unknown bound variable {name!r}")
        i = VARIABLE_NAMES.index(name)
        lower[i] = -np.inf if lo is None else float(lo)
        upper[i] = np.inf if hi is None else float(hi)
    variables = PlacementVariables(start, tuple(free), lower, upper)
    smoothing = _smoothing(data.get("smoothing", {"enabled": True, "epsilon": 0.01}))
    opts = SolverOptions.from_dict(data.get("solver", {}))
    problem = PlacementProblem(model, box, variables, smoothing, fd_step=opts.fd_step)
    mode = data.get("gradient", "finite-difference")
    if mode not in ("finite-difference", "analytic-distance"):
        raise ConfigError(f"unknown gradient mode {mode!r}")
    starts = [start] + [_pose(s) for s in data.get("starts", [])]
    n_random = int(data.get("random_starts", 0))
    if n_random:
        rng = np.random.default_rng(int(data.get("seed", 0)))
        spread = np.asarray(data.get("start_spread", [100.0, 100.0, 100.0, 0.3, 0.3, 0.3]), dtype=float)
        for _ in range(n_random):
            starts.append(EulerPose.from_array(start.as_array() + spread * rng.uniform(-1.0, 1.0, 6)))
    return problem, opts, mode, starts


def run_scene(problem: PlacementProblem, opts: SolverOptions, mode: str, starts):
    """Solve from every start; best is the lowest objective among Optimal runs, else overall."""
    nlp = problem.to_nlp(mode)
    mask = problem.variables.mask
    runs = [minimize(nlp, s.as_array()[mask], opts) for s in starts]
    best = min(range(len(runs)), key=lambda i: (not runs[i].optimal, runs[i].objective, i))
    return runs, best


def cmd_optimize(args) -> int:
    path = Path(args.scene)
    data = _read_json(path)
    problem, opts, mode, starts = build_scene(data, path.parent, args.model)
    if args.method:
        opts = SolverOptions.from_dict({**data.get("solver", {}), "method": args.method})
    runs, best = run_scene(problem, opts, mode, starts)
    report = runs[best]
    ev = problem.evaluate(report.x)
    full = problem.variables.full(report.x)
    free_names = [n for n, f in zip(VARIABLE_NAMES, problem.variables.free) if f]

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    doc = report.to_dict()
    doc.update({
        "config": data,
        "model": problem.model.to_dict(),
        "variables": free_names,
        "corner": dict(zip(VARIABLE_NAMES, map(float, full))),
        "v": ev.v.tolist(),
        "start_index": best,
        "starts": [{"status": r.status.value, "objective": r.objective, "iterations": r.iterations}
                   for r in runs],
    })
    (out / "report.json").write_text(json.dumps(doc, indent=2))
    with open(out / "iterations.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["iteration"] + free_names + ["objective", "max_violation"])
        for k, (x, f, g) in enumerate(zip(report.iterates, report.objective_trajectory, report.violation_trajectory)):
            w.writerow([k] + [repr(float(v)) for v in x] + [repr(float(f)), repr(float(g))])
    with open(out / "points.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["k", "l", "wcp_x", "wcp_y", "wcp_z", "v", "limits_ok"])
        wcp = problem.wcp_positions(full)
        box = problem.box
        m = problem.model
        for i, (p, v, q) in enumerate(zip(wcp, ev.v, ev.q)):
            ok = bool(np.all((q >= m.q_min) & (q <= m.q_max)))
            w.writerow([i // box.by, i % box.by] + [repr(float(c)) for c in p] + [repr(float(v)), int(ok)])
    print(f"{report.status.value}: objective {report.objective:.6g} mm^2, max violation "
          f"{report.max_violation:.3g}, {report.iterations} iterations, {report.wall_time:.2f} s")
    return EXIT_OK if report.optimal else EXIT_NOT_OPTIMAL


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="virtual-axis", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    fk = sub.add_parser("fk", help="forward kinematics to WCP and TCP")
    fk.add_argument("joints", nargs="+", type=float, help="q1..q6, or q1 q2 q3 v q4 q5 q6 with --virtual")
    fk.add_argument("--virtual", action="store_true", help="7-joint chain with the virtual axis")
    fk.set_defaults(func=cmd_fk)

    ik = sub.add_parser("ik", help="backward transform for a frame x y z alpha beta gamma")
    ik.add_argument("frame", nargs=6, type=float, metavar="X")
    ik.add_argument("--config", "-s", type=int, default=0, help="configuration 0..7")
    ik.add_argument("--virtual", action="store_true", help="total transform with the virtual axis")
    ik.add_argument("--wcp", action="store_true", help="frame is the WCP rather than the TCP")
    ik.add_argument("--epsilon", type=float, default=None, help="enable elbow smoothing with this epsilon")
    ik.set_defaults(func=cmd_ik)

    for cmd in (fk, ik):
        cmd.add_argument("--deg", action="store_true", help="angles in degrees")
        cmd.add_argument("--json", action="store_true", help="print JSON only")

    sw = sub.add_parser("sweep", help="straight TCP line through the workspace boundary")
    sw.add_argument("config", help="sweep config JSON")
    sw.add_argument("--out", default=".", help="output directory")
    sw.set_defaults(func=cmd_sweep)

    op = sub.add_parser("optimize", help="optimal box placement for a scene")
    op.add_argument("scene", help="scene JSON")
    op.add_argument("--out", default=".", help="output directory")
    op.add_argument("--method", choices=("sqp", "augmented-lagrangian"), default=None)
    op.set_defaults(func=cmd_optimize)

    for cmd in (fk, ik, sw, op):
        cmd.add_argument("--model", default=None, help="robot model JSON")
        cmd.set_defaults(usage=cmd.format_usage().rstrip())
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, ValueError, TypeError, KeyError) as e:
        print(args.usage, file=sys.stderr)
        print(f"{parser.prog} {args.command}: error: {e}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
