"""Command line entry point: ``vinenav generate|run|replay|eval``.

Exit status is 0 on success, 1 when a mission ends in Fault, 2 on a bad
configuration or unreadable input.
"""
from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

from .config import ConfigError, RunConfig, dump_config, load_config
from .evaluation import (EvaluationError, format_table, load_run_log, metrics_report, trajectory_svg,
                         write_csv, write_in_row_csv)
from .runner import RunResult, replay, run_mission, to_run_log
from .scan import read_scan_log, write_scan_log
from .simulator import generate_world, load_world, save_world

EXIT_OK, EXIT_FAULT, EXIT_CONFIG = 0, 1, 2


def _config(args) -> RunConfig:
    cfg = load_config(args.config) if args.config else RunConfig()
    if args.seed is not None:
        cfg = cfg.with_seed(args.seed)
    if getattr(args, "out", None):
        cfg = replace(cfg, output_dir=args.out)
    return cfg


def _dump_json(obj, path: Path) -> None:
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def write_run(res: RunResult, out: Path, svg: bool = False) -> dict:
    """Write every artifact of a run into ``out`` and return the metrics."""
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.json").write_text(dump_config(res.config))
    save_world(res.world, out / "world.json")
    write_scan_log(out / "scans.jsonl", res.scans)
    write_csv(out / "trajectory.csv", ["t", "x", "y", "heading"], res.trajectory)
    write_csv(out / "odometry.csv", ["t", "x", "y", "heading"], res.odometry)
    write_csv(out / "commands.csv", ["t", "phase", "v", "omega"], res.commands)
    write_in_row_csv(out / "inrow.csv", res.in_row)
    with open(out / "events.jsonl", "w") as fh:
        for ev in res.events:
            fh.write(json.dumps(ev, sort_keys=True) + "\n")
    log = to_run_log(res)
    extra = {"outcome": res.outcome, "fault_reason": res.fault_reason, "collisions": res.collisions,
             "phases": res.phases}
    metrics = metrics_report(log, res.world, extra)
    _dump_json(metrics, out / "metrics.json")
    (out / "report.txt").write_text(format_table(metrics))
    if svg:
        (out / "trajectory.svg").write_text(trajectory_svg(log, res.world))
    return metrics


def cmd_generate(args) -> int:
    cfg = _config(args)
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    world = generate_world(cfg.world)
    save_world(world, out / "world.json")
    print(f"wrote {out / 'world.json'}: {len(world.corridor_centers)} corridors, "
          f"{world.config.row_length:g} m rows, {len(world.vegetation)} plants")
    return EXIT_OK


def cmd_run(args) -> int:
    cfg = _config(args)
    world = load_world(args.world) if args.world else None
    res = run_mission(cfg, world)
    metrics = write_run(res, Path(cfg.output_dir), svg=args.svg)
    print(format_table(metrics), end="")
    if res.outcome != "Done":
        print(f"mission fault: {res.fault_reason} (last phase {res.phases[-2] if len(res.phases) > 1 else '-'})",
              file=sys.stderr)
        return EXIT_FAULT
    return EXIT_OK


def cmd_replay(args) -> int:
    cfg = _config(args)
    scans = list(read_scan_log(args.scans))
    rows = replay(scans, cfg)
    out = Path(args.out) if args.out else None
    if out is None:
        write_csv(sys.stdout, ["t", "phase", "v", "omega"], rows)
    else:
        out.mkdir(parents=True, exist_ok=True)
        write_csv(out / "replay_commands.csv", ["t", "phase", "v", "omega"], rows)
        print(f"replayed {len(scans)} scans into {len(rows)} commands")
    return EXIT_OK


def cmd_eval(args) -> int:
    run_dir = Path(args.run_dir)
    world_path = Path(args.world) if args.world else run_dir / "world.json"
    if not world_path.exists():
        print(f"error: world file {world_path} not found", file=sys.stderr)
        return EXIT_CONFIG
    world = load_world(world_path)
    log = load_run_log(run_dir, world)
    metrics = metrics_report(log, world)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        _dump_json(metrics, out / "metrics.json")
        (out / "report.txt").write_text(format_table(metrics))
        if args.svg:
            (out / "trajectory.svg").write_text(trajectory_svg(log, world))
    print(format_table(metrics), end="")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="vinenav", description="Map-free vineyard navigation simulator.")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", help="JSON run configuration (defaults if omitted)")
        sp.add_argument("--seed", type=int, help="override every random seed")
        sp.add_argument("--out", help="output directory")

    g = sub.add_parser("generate", help="write a seeded vineyard world")
    common(g)
    g.set_defaults(func=cmd_generate)

    r = sub.add_parser("run", help="closed-loop mission in simulation")
    common(r)
    r.add_argument("--world", help="use this world file instead of generating one")
    r.add_argument("--svg", action="store_true", help="also write trajectory.svg")
    r.set_defaults(func=cmd_run)

    rp = sub.add_parser("replay", help="drive the navigator from a scan log")
    common(rp)
    rp.add_argument("scans", help="scans.jsonl from a run")
    rp.set_defaults(func=cmd_replay)

    e = sub.add_parser("eval", help="metrics for a run directory")
    e.add_argument("run_dir")
    e.add_argument("--world", help="world file (default: RUN_DIR/world.json)")
    e.add_argument("--out", help="write metrics.json and report.txt here")
    e.add_argument("--svg", action="store_true")
    e.set_defaults(func=cmd_eval)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (OSError, EvaluationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
