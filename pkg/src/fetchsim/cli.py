"""Command-line interface.

Subcommands: run (trial batches), perceive (box fit on a cloud file),
plan-arm (deterministic grasp plan), bench-planners (deterministic planner
vs sampling baseline), eval-localization (deviation metrics of an estimated
track against ground truth).  Exit codes: 0 success, 1 validation error,
2 runtime failure.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from . import __version__
from .arm_planner import (
    ArmTrajectory,
    ee_path_positions,
    plan_arm_sampling_baseline,
    plan_arm_trajectory,
    verify_collision_free,
)
from .config import (
    ConfigError,
    default_config_path,
    load_camera,
    load_config,
)
from .executor import default_grasp_scenario, derive_seed
from .fileio import (
    load_planar_track,
    load_point_cloud,
    save_arm_trajectory,
)
from .geometry import Pose3D
from .harness import emit_report, run_trials
from .kinematics import ArmModel, base_to_shoulder
from .metrics import EePath, TrajectoryPair, deviation_avg, deviation_max, path_length_manhattan
from .perception import PerceptionParams, Roi2D, estimate_box


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fetchsim",
        description="Deterministic drink-fetch pipeline simulator",
    )
    parser.add_argument("--version", action="version", version=f"fetchsim {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a batch of simulated fetch episodes")
    p_run.add_argument("--config", default=None, help="config YAML (default: shipped scenario)")
    p_run.add_argument("--trials", type=int, default=20)
    p_run.add_argument("--seed", type=int, default=0)
    p_run.add_argument("--request", default="cola")
    p_run.add_argument("--report", required=True, help="output report JSON path")

    p_perc = sub.add_parser("perceive", help="fit a 3D box from a cloud file and RoI")
    p_perc.add_argument("--cloud", required=True, help="point cloud text file")
    p_perc.add_argument("--roi", required=True, help='"x,y,w,h,label"')
    p_perc.add_argument("--camera", default=None, help="camera YAML (default: head camera)")
    p_perc.add_argument("--height", type=float, required=True, help="known object height (m)")
    p_perc.add_argument("--max-range", type=float, default=1.5)
    p_perc.add_argument("--seed", type=int, default=0)

    p_arm = sub.add_parser("plan-arm", help="plan a deterministic grasp trajectory")
    p_arm.add_argument("--config", default=None)
    p_arm.add_argument("--target", required=True, help='"x,y,z" in the base frame (m)')
    p_arm.add_argument("--arm", choices=("left", "right"), default="right")
    p_arm.add_argument("--out", default=None, help="write the sampled arm trajectory here")

    p_bench = sub.add_parser(
        "bench-planners", help="compare the deterministic planner with the sampling baseline"
    )
    p_bench.add_argument("--config", default=None)
    p_bench.add_argument("--seeds", type=int, default=50)
    p_bench.add_argument("--budget", type=float, default=5000.0, help="per-query budget (ms)")

    p_loc = sub.add_parser("eval-localization", help="deviation metrics for two tracks")
    p_loc.add_argument("--est", required=True, help="estimated track (trajectory format)")
    p_loc.add_argument("--truth", required=True, help="ground-truth track (trajectory format)")
    p_loc.add_argument("--tick", type=float, default=0.005, help="matching tolerance base (s)")
    return parser


def _cmd_run(args) -> int:
    config = args.config or default_config_path()
    report = run_trials(config, trials=args.trials, seed=args.seed, request=args.request)
    emit_report(report, args.report)
    rates = " ".join(f"{k}={v:.2f}" for k, v in sorted(report.per_state_rates.items()))
    print(f"trials={report.trials} success={report.overall_success_rate}")
    if report.mean_total_time is not None:
        print(
            f"mean_time={report.mean_total_time:.1f}s "
            f"human_ratio={report.human_time_ratio:.2f}"
        )
    print(f"per-state: {rates}")
    print(f"report written to {args.report}")
    return 0


def _parse_roi(text: str) -> Roi2D:
    parts = text.split(",")
    if len(parts) != 5:
        raise ConfigError('RoI must be "x,y,w,h,label"')
    x, y, w, h = (float(v) for v in parts[:4])
    return Roi2D(x=x, y=y, w=w, h=h, label=parts[4])


def _cmd_perceive(args) -> int:
    cloud = load_point_cloud(args.cloud)
    roi = _parse_roi(args.roi)
    camera = load_camera(args.camera)
    params = PerceptionParams(max_range=args.max_range)
    box = estimate_box(cloud, roi, camera, args.height, params, args.seed)
    c = box.center
    print(f"label {box.label}")
    print(f"center {c[0]:.6f} {c[1]:.6f} {c[2]:.6f}")
    for corner in box.corners:
        print(f"corner {corner[0]:.6f} {corner[1]:.6f} {corner[2]:.6f}")
    return 0


def _cmd_plan_arm(args) -> int:
    config = args.config or default_config_path()
    _, robot, _ = load_config(config)
    model = ArmModel.from_config(robot)
    xyz = tuple(float(v) for v in args.target.split(","))
    if len(xyz) != 3:
        raise ConfigError('target must be "x,y,z"')
    target = base_to_shoulder(model, args.arm, Pose3D(xyz))
    traj = plan_arm_trajectory(model, robot.arm_home, target, robot)
    path = EePath(traj.times, ee_path_positions(model, traj))
    print(f"samples {len(traj)}")
    print(f"duration {traj.duration:.3f}")
    if len(traj) > 1:
        print(f"manhattan_length {path_length_manhattan(path):.4f}")
    if args.out:
        save_arm_trajectory(traj, args.out)
        print(f"trajectory written to {args.out}")
    return 0


def _traj_manhattan(model: ArmModel, traj: ArmTrajectory) -> float:
    path = EePath(traj.times, ee_path_positions(model, traj))
    return path_length_manhattan(path)


def _cmd_bench(args) -> int:
    config = args.config or default_config_path()
    world, robot, _ = load_config(config)
    model, q_start, target, base, arm = default_grasp_scenario(world, robot)
    budget_s = args.budget / 1000.0

    det = plan_arm_trajectory(model, q_start, target, robot)
    det_len = _traj_manhattan(model, det)
    contacts = verify_collision_free(det, model, world, base, side=arm,
                                     radius=robot.capsule_radius)
    print(f"deterministic: duration={det.duration:.3f}s manhattan={det_len:.4f}m "
          f"contacts={len(contacts)}")

    lengths = []
    failures = 0
    for i in range(args.seeds):
        traj = plan_arm_sampling_baseline(
            model, q_start, target, world, budget_s, derive_seed(1234, i),
            base_pose=base, side=arm, radius=robot.capsule_radius,
            tick=robot.control_tick, swivel=robot.swivel,
        )
        if traj is None:
            failures += 1
        else:
            lengths.append(_traj_manhattan(model, traj))
    n = len(lengths)
    rate = n / args.seeds
    print(f"baseline: seeds={args.seeds} success_rate={rate:.2f}")
    if lengths:
        arr = np.array(lengths)
        print(f"baseline: manhattan mean={arr.mean():.4f}m std={arr.std():.4f}m "
              f"min={arr.min():.4f}m max={arr.max():.4f}m")
    return 0


def _cmd_eval_localization(args) -> int:
    est = load_planar_track(args.est)
    truth = load_planar_track(args.truth)
    pair = TrajectoryPair.align(est, truth, args.tick)
    if len(pair) == 0:
        print("no samples matched within the tick tolerance", file=sys.stderr)
        return 1
    print(f"matched_samples {len(pair)}")
    print(f"dev_max {deviation_max(pair):.6f}")
    print(f"dev_avg {deviation_avg(pair):.6f}")
    return 0


_HANDLERS = {
    "run": _cmd_run,
    "perceive": _cmd_perceive,
    "plan-arm": _cmd_plan_arm,
    "bench-planners": _cmd_bench,
    "eval-localization": _cmd_eval_localization,
}


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return _HANDLERS[args.command](args)
    except (ConfigError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (RuntimeError, OSError) as exc:
        print(f"failure: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
