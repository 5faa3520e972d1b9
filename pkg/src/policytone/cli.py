"""Command-line entry point: one subcommand per pipeline stage."""

import argparse
import sys

from .config import ConfigError, load_config, validate_paths
from .pipeline import STAGE_ORDER, PipelineError, run_stage


def build_parser():
    parser = argparse.ArgumentParser(
        prog="policytone",
        description="Topic-tagged sentiment panels from central-bank "
                    "communications and local-projection market responses.")
    sub = parser.add_subparsers(dest="command", required=True)
    for stage in STAGE_ORDER + ("run-all",):
        help_text = ("run every stage in order" if stage == "run-all"
                     else f"run the {stage} stage")
        p = sub.add_parser(stage, help=help_text)
        p.add_argument("--config", required=True,
                       help="path to the YAML/JSON pipeline config")
        p.add_argument("--seed", type=int, default=None,
                       help="override the config's global seed")
        p.add_argument("--force", action="store_true",
                       help="run despite stale upstream artifacts")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config, seed=args.seed)
        stages = (list(STAGE_ORDER) if args.command == "run-all"
                  else [args.command])
        validate_paths(cfg, stages=stages)
        for stage in stages:
            outputs = run_stage(stage, cfg, force=args.force)
            print(f"[{stage}] wrote {len(outputs)} artifact(s) to "
                  f"{cfg.output_dir}")
    except (ConfigError, PipelineError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
