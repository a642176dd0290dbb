"""Command line front-end: ``mmqss run | validate | replay``.

Exit status: 0 on success, 1 when a run broke key agreement (or crashed) or a
replay diverged, 2 for unusable input files.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace

from .experiment import (
    REPORT_PATH_ENV,
    emit_report,
    load_spec,
    render_report,
    resolve_report_path,
    run_experiment,
)
from .protocol import ConfigError, replay_transcript
from .transcript import Transcript


def _load(path):
    try:
        return load_spec(path)
    except ConfigError as exc:
        print(f"{path}: {exc}", file=sys.stderr)
    except OSError as exc:
        print(f"{path}: {exc.strerror}", file=sys.stderr)
    return None


def cmd_validate(args) -> int:
    spec = _load(args.spec)
    if spec is None:
        return 2
    configs = spec.configurations()
    print(f"ok: {len(configs)} configuration(s) x {spec.num_runs} run(s)")
    return 0


def cmd_run(args) -> int:
    spec = _load(args.spec)
    if spec is None:
        return 2
    changes = {}
    if args.seed is not None:
        changes["seed_base"] = args.seed
    if args.runs is not None:
        changes["num_runs"] = args.runs
    if args.jobs is not None:
        changes["jobs"] = args.jobs
    try:
        spec = replace(spec, **changes)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    report, _ = run_experiment(spec, transcript_dir=args.transcripts)
    path = args.out or resolve_report_path(spec)
    if path:
        emit_report(report, path, args.format)
    sys.stdout.write(render_report(report, args.format))
    if report.correctness_failure:
        print("correctness failure: see report", file=sys.stderr)
        return 1
    return 0


def cmd_replay(args) -> int:
    try:
        logged = Transcript.load(args.transcript)
    except (OSError, ValueError) as exc:
        print(f"{args.transcript}: {exc}", file=sys.stderr)
        return 2
    identical, diff, fresh = replay_transcript(logged)
    if identical:
        print(f"identical: {len(fresh)} events reproduced")
        return 0
    print(f"diverged at event {diff}", file=sys.stderr)
    return 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mmqss", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run an experiment file")
    run.add_argument("spec")
    run.add_argument("--seed", type=int, help="override seed_base")
    run.add_argument("--runs", type=int, help="override the number of runs per configuration")
    run.add_argument("--jobs", type=int, help="worker processes")
    run.add_argument("--format", choices=("table", "json"), default="table")
    run.add_argument("--out", help=f"report file (default: ${REPORT_PATH_ENV} or report_path)")
    run.add_argument("--transcripts", metavar="DIR", help="write one transcript per run into DIR")
    run.set_defaults(func=cmd_run)

    validate = sub.add_parser("validate", help="check an experiment file without running it")
    validate.add_argument("spec")
    validate.set_defaults(func=cmd_validate)

    replay = sub.add_parser("replay", help="re-execute a logged run and compare event by event")
    replay.add_argument("transcript")
    replay.set_defaults(func=cmd_replay)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
