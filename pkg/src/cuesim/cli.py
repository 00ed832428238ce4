"""Command-line front end.

Exit codes: 0 success, 1 runtime invariant violation, 2 invalid configuration.
"""

from __future__ import annotations

import argparse
import sys

from cuesim.config import load_config, with_overrides
from cuesim.errors import InvariantViolation, ValidationError
from cuesim.runner import build_rig, compare_pipelines, export_track, run_scenario

EXIT_OK, EXIT_RUNTIME, EXIT_CONFIG = 0, 1, 2


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="YAML run configuration (defaults used when omitted)")
    p.add_argument("--out", help="output directory (overrides run.output_dir)")
    p.add_argument("--seed", type=int, help="overrides run.seed")
    p.add_argument("--duration", type=float, help="simulated seconds (overrides run.duration_s)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cuesim", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    _common(sub.add_parser("run", help="run one scenario, write telemetry.csv and metrics.json"))
    _common(sub.add_parser("compare-pipelines",
                           help="run both frame pipelines, write comparison.json"))
    _common(sub.add_parser("validate", help="check a configuration and exit"))
    track = sub.add_parser("track", help="track utilities")
    track_sub = track.add_subparsers(dest="track_command", required=True)
    _common(track_sub.add_parser("export", help="write track.json (segments + 1 m centerline)"))
    return parser


def _load(args):
    cfg = load_config(args.config)
    overrides = {}
    if args.seed is not None:
        overrides["run.seed"] = args.seed
    if args.duration is not None:
        overrides["run.duration_s"] = args.duration
    if args.out is not None:
        overrides["run.output_dir"] = args.out
    return with_overrides(cfg, overrides) if overrides else cfg


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = _load(args)
        if args.command == "validate":
            build_rig(cfg)
            print("config ok")
        elif args.command == "run":
            telemetry, metrics = run_scenario(cfg)
            print(f"wrote {telemetry} and {metrics}")
        elif args.command == "compare-pipelines":
            path, report = compare_pipelines(cfg)
            for mode, r in report.items():
                lat = r["latency"] or {}
                print(f"{mode}: mean input latency {lat.get('mean_input_latency_ms', float('nan')):.3f} ms, "
                      f"mismatch on {100 * lat.get('mismatch_nonzero_fraction', 0.0):.1f}% of frames")
            print(f"wrote {path}")
        else:
            print(f"wrote {export_track(cfg)}")
    except ValidationError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except InvariantViolation as exc:
        print(f"invariant violation: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
