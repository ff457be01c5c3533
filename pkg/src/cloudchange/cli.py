"""Command-line interface.

Subcommands::

    synth      scene spec JSON (or defaults) -> scene directory
    register   two epoch directories (+ joint directory or --oracle) ->
               relative transform + run report JSON
    detect     aligned inputs or a register output -> colored change PLYs
               + statistics
    eval       run report + scene ground truth -> metrics JSON
    ablate     scene directory + keyframe budgets -> CSV table

Exit codes: 0 on success, 1 on usage errors, 2 on data errors.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
import time
from pathlib import Path

from . import bundles
from .changes import colorize
from .cloud import PointCloud
from .errors import CloudChangeError
from .geometry import apply_transform
from .metrics import MetricsReport, ablation_sweep, ate, combine_trajectories, rte, transform_error
from .pipeline import PipelineConfig, RunReport, detect_changes, register_epochs
from .synthetic import ChangeSpec, SceneSpec, generate_scene

USAGE_ERROR = 1
DATA_ERROR = 2


class _Parser(argparse.ArgumentParser):
    """argparse exits with status 2 on usage errors; we reserve 2 for data."""

    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(USAGE_ERROR)


def _add_config_flags(parser: argparse.ArgumentParser):
    parser.add_argument("--k", type=int, default=5, help="keyframe budget per epoch")
    parser.add_argument("--cap", type=int, default=5000, help="correspondence cap per epoch")
    parser.add_argument("--alpha", type=float, default=3.0, help="static-set threshold multiplier")
    parser.add_argument("--grid", type=int, default=200, help="voxel grid resolution")
    parser.add_argument("--tau-ratio", type=float, default=0.01, help="change threshold fraction")
    parser.add_argument("--seed", type=int, default=0, help="subsampling seed")
    parser.add_argument("--mode", choices=("coarse_only", "full"), default="full")


def _config_from_args(args) -> PipelineConfig:
    return PipelineConfig(
        k_keyframes=args.k,
        correspondence_cap=args.cap,
        alpha=args.alpha,
        grid_resolution=args.grid,
        tau_ratio=args.tau_ratio,
        seed=args.seed,
        mode=args.mode,
    )


def _build_parser() -> _Parser:
    parser = _Parser(prog="cloudchange", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p_synth = sub.add_parser("synth", help="generate a synthetic scene directory")
    p_synth.add_argument("--spec", type=Path, help="scene spec JSON (defaults used if omitted)")
    p_synth.add_argument("--seed", type=int, help="override the spec seed")
    p_synth.add_argument("--out", type=Path, required=True, help="output scene directory")
    p_synth.add_argument("--joint-sigma", type=float, default=0.0,
                         help="Gaussian perturbation of the exported joint clouds")
    p_synth.add_argument("--joint-warp", type=float, default=0.0,
                         help="systematic warp amplitude of the exported joint clouds")

    p_reg = sub.add_parser("register", help="estimate the relative transform between two epochs")
    p_reg.add_argument("--t1", type=Path, required=True, help="epoch 1 directory")
    p_reg.add_argument("--t2", type=Path, required=True, help="epoch 2 directory")
    p_reg.add_argument("--joint", type=Path, help="joint keyframe cloud directory")
    p_reg.add_argument("--oracle", action="store_true",
                       help="synthesize the joint clouds from the scene's gt.json")
    p_reg.add_argument("--gt", type=Path, help="gt.json path (default: next to the epoch dirs)")
    p_reg.add_argument("--report", type=Path, help="write the run report JSON here")
    _add_config_flags(p_reg)

    p_det = sub.add_parser("detect", help="compute the 3D change map")
    p_det.add_argument("--t1", type=Path, help="epoch 1 directory (with --report)")
    p_det.add_argument("--t2", type=Path, help="epoch 2 directory (with --report)")
    p_det.add_argument("--report", type=Path, help="register output holding the transform")
    p_det.add_argument("--aligned-ply", type=Path, help="already-aligned epoch 1 cloud")
    p_det.add_argument("--target-ply", type=Path, help="epoch 2 cloud for --aligned-ply")
    p_det.add_argument("--tau-ratio", type=float, default=0.01)
    p_det.add_argument(
        "--no-filter-confidence",
        action="store_true",
        help="score the raw clouds instead of dropping below-median-confidence points first",
    )
    p_det.add_argument("--out", type=Path, required=True, help="output directory")

    p_eval = sub.add_parser("eval", help="trajectory metrics against ground truth")
    p_eval.add_argument("--report", type=Path, required=True, help="register run report")
    p_eval.add_argument("--scene", type=Path, required=True, help="scene directory with gt")
    p_eval.add_argument("--out", type=Path, help="metrics JSON (default: scene metrics.json)")

    p_abl = sub.add_parser("ablate", help="keyframe-budget sweep on a scene directory")
    p_abl.add_argument("--scene", type=Path, required=True)
    p_abl.add_argument("--k-list", type=str, required=True,
                       help="comma-separated keyframe budgets, e.g. 2,3,5,9")
    p_abl.add_argument("--out", type=Path, required=True, help="output CSV")
    p_abl.add_argument("--modes", type=str, default="coarse_only,full")
    p_abl.add_argument("--joint-sigma", type=float, default=0.0)
    p_abl.add_argument("--joint-warp", type=float, default=0.0)
    p_abl.add_argument("--seed", type=int, default=0)

    return parser


def _load_scene_spec(path: Path, seed_override) -> SceneSpec:
    defaults = {
        "seed": 0,
        "n_static": 10000,
        "n_frames_per_epoch": 30,
        "change_spec": [
            {"kind": "added", "n_points": 500, "displacement": [0.0, 0.0, 0.0]},
            {"kind": "removed", "n_points": 400, "displacement": [0.0, 0.0, 0.0]},
            {"kind": "moved", "n_points": 600, "displacement": [1.0, 0.8, 0.3]},
        ],
        "noise_sigma": 0.002,
        "edge_noise_fraction": 0.15,
        "edge_noise_elongation": 0.3,
    }
    if path is not None:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
        defaults.update(data)
    if seed_override is not None:
        defaults["seed"] = seed_override
    changes = tuple(ChangeSpec(**c) for c in defaults["change_spec"])
    return SceneSpec(
        seed=int(defaults["seed"]),
        n_static=int(defaults["n_static"]),
        n_frames_per_epoch=int(defaults["n_frames_per_epoch"]),
        change_spec=changes,
        noise_sigma=float(defaults["noise_sigma"]),
        edge_noise_fraction=float(defaults["edge_noise_fraction"]),
        edge_noise_elongation=float(defaults["edge_noise_elongation"]),
    )


def _cmd_synth(args) -> int:
    spec = _load_scene_spec(args.spec, args.seed)
    scene = generate_scene(spec)
    bundles.write_scene_dir(
        scene, args.out, joint_sigma=args.joint_sigma, warp_amplitude=args.joint_warp
    )
    print(f"wrote scene (seed {spec.seed}, {len(scene.cloud_t1)} + {len(scene.cloud_t2)} points) to {args.out}")
    return 0


def _cmd_register(args) -> int:
    config = _config_from_args(args)
    frames1 = bundles.read_epoch_dir(args.t1)
    frames2 = bundles.read_epoch_dir(args.t2)
    if args.oracle:
        gt_path = args.gt if args.gt is not None else Path(args.t1).parent / "gt.json"
        joint = bundles.oracle_joint_from_files((args.t1, args.t2), gt_path)
    elif args.joint is not None:
        joint = bundles.read_joint_dir(args.joint)
    else:
        print("register: error: provide --joint DIR or --oracle", file=sys.stderr)
        return USAGE_ERROR

    result = register_epochs(frames1, frames2, joint, config)
    report = RunReport.from_registration(
        result, inputs={"t1": str(args.t1), "t2": str(args.t2), "joint_provenance": joint.provenance}
    )
    if args.report is not None:
        report.write(args.report)
    final = result.final_transform
    print(
        f"relative transform: scale {final.scale:.6g}, "
        f"translation [{final.translation[0]:.6g}, {final.translation[1]:.6g}, "
        f"{final.translation[2]:.6g}], registration {result.timings['registration_s']:.3f}s"
    )
    return 0


def _cmd_detect(args) -> int:
    report = None
    if args.aligned_ply is not None or args.target_ply is not None:
        if args.aligned_ply is None or args.target_ply is None:
            print("detect: error: --aligned-ply and --target-ply go together", file=sys.stderr)
            return USAGE_ERROR
        from .ply import read_ply

        aligned_t1 = read_ply(args.aligned_ply)
        t2 = read_ply(args.target_ply)
    elif args.t1 is not None and args.t2 is not None and args.report is not None:
        report = RunReport.read(args.report)
        transform = report.final_sim3()
        t1 = PointCloud.concatenate(bundles.read_epoch_dir(args.t1))
        t2 = PointCloud.concatenate(bundles.read_epoch_dir(args.t2))
        aligned_t1 = apply_transform(transform, t1)
    else:
        print(
            "detect: error: provide --t1/--t2/--report or --aligned-ply/--target-ply",
            file=sys.stderr,
        )
        return USAGE_ERROR

    if not args.no_filter_confidence:
        # Low-confidence points are dominated by edge-flying depth noise and
        # would be scored as spurious changes.
        from .cloud import filter_by_median_confidence

        aligned_t1 = filter_by_median_confidence(aligned_t1)
        t2 = filter_by_median_confidence(t2)

    start = time.perf_counter()
    change_map, stats = detect_changes(aligned_t1, t2, tau_ratio=args.tau_ratio)
    elapsed = time.perf_counter() - start
    colored_t1, colored_t2 = colorize(change_map, aligned_t1, t2)

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    from .ply import write_ply

    write_ply(colored_t1, out / "changes_t1.ply")
    write_ply(colored_t2, out / "changes_t2.ply")
    with open(out / "change_stats.json", "w", encoding="utf-8") as handle:
        json.dump(stats, handle, sort_keys=True, indent=2)
        handle.write("\n")
    if report is not None and args.report is not None:
        report.record_changes(stats, elapsed=elapsed)
        report.write(args.report)
    print(
        f"changed: {stats['n_forward_changed']} forward + {stats['n_backward_changed']} backward "
        f"of {stats['n_t1_points'] + stats['n_t2_points']} points (tau {stats['tau']:.4g})"
    )
    return 0


def _cmd_eval(args) -> int:
    report = RunReport.read(args.report)
    scene_dir = Path(args.scene)
    gt = bundles.read_ground_truth(scene_dir / "gt.json")
    pred1 = bundles.read_trajectory(scene_dir / "e1" / "trajectory.json")
    pred2 = bundles.read_trajectory(scene_dir / "e2" / "trajectory.json")
    gt1 = bundles.read_trajectory(scene_dir / "gt_trajectories" / "e1.json")
    gt2 = bundles.read_trajectory(scene_dir / "gt_trajectories" / "e2.json")

    estimated = report.final_sim3()
    predicted = combine_trajectories(pred1, pred2, estimated)
    from .metrics import Trajectory

    ground_truth = Trajectory(gt1.poses + gt2.poses, gt1.epoch_ids + gt2.epoch_ids)
    metrics = MetricsReport(
        ate_m=ate(predicted, ground_truth),
        rte_m=rte(predicted, ground_truth),
        transform_error=transform_error(estimated, gt["gt_relative"]),
        registration_time_s=(report.timing or {}).get("registration_s", 0.0),
        config=report.config,
    )
    out = args.out if args.out is not None else scene_dir / "metrics.json"
    with open(out, "w", encoding="utf-8") as handle:
        json.dump(metrics.to_dict(), handle, sort_keys=True, indent=2)
        handle.write("\n")
    report.record_metrics(metrics)
    report.write(args.report)
    print(f"ATE {metrics.ate_m:.6g}  RTE {metrics.rte_m:.6g}  -> {out}")
    return 0


def _cmd_ablate(args) -> int:
    scene = bundles.read_scene_dir(args.scene)
    try:
        k_values = [int(tok) for tok in args.k_list.split(",") if tok.strip()]
    except ValueError:
        print(f"ablate: error: bad --k-list {args.k_list!r}", file=sys.stderr)
        return USAGE_ERROR
    modes = tuple(tok.strip() for tok in args.modes.split(",") if tok.strip())
    config = PipelineConfig(seed=args.seed)
    rows = ablation_sweep(
        scene,
        k_values,
        modes=modes,
        config=config,
        joint_sigma=args.joint_sigma,
        warp_amplitude=args.joint_warp,
    )
    fields = ["k", "ate_coarse", "ate_full", "delta_pct", "time_coarse_s", "time_full_s"]
    with open(args.out, "w", encoding="utf-8", newline="") as handle:
        writer = csv.DictWriter(handle, fieldnames=fields)
        writer.writeheader()
        writer.writerows(rows)
    print(f"wrote {len(rows)} sweep rows to {args.out}")
    return 0


_COMMANDS = {
    "synth": _cmd_synth,
    "register": _cmd_register,
    "detect": _cmd_detect,
    "eval": _cmd_eval,
    "ablate": _cmd_ablate,
}


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if exc.code is not None else USAGE_ERROR
    try:
        return _COMMANDS[args.command](args)
    except (CloudChangeError, FileNotFoundError, NotADirectoryError, json.JSONDecodeError) as exc:
        print(f"{args.command}: error: {exc}", file=sys.stderr)
        return DATA_ERROR


if __name__ == "__main__":
    sys.exit(main())
