"""Command line entry point: ``pardg {gen,run,verify,summary}``."""

import argparse
import json
import sys
from dataclasses import asdict
from pathlib import Path

from pardg import harness
from pardg.oracles import InvalidInput


def _epsilons(text):
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad epsilon list {text!r}")


def _build_parser():
    parser = argparse.ArgumentParser(prog="pardg", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", type=Path, help="JSON experiment config")
        p.add_argument("--seed", type=int, help="override the config seed")
        p.add_argument("--epsilon", type=_epsilons, help="comma-separated epsilon list")
        p.add_argument("--out", help="output directory")
        p.add_argument("--strict", action="store_true", help="nonzero exit if any check fails")
        p.add_argument("--jobs", type=int, help="worker processes")

    p = sub.add_parser("gen", help="write instance files")
    common(p)
    p = sub.add_parser("run", help="run the configured experiment")
    common(p)
    p.add_argument("--verify", action="store_true", help="also write traces and check reports")
    p.add_argument("--timing", action="store_true", help="include wall_time in results.csv")
    p = sub.add_parser("verify", help="property checks on generated instances and solver traces")
    common(p)
    p.add_argument("--samples", type=int, default=100)
    p = sub.add_parser("summary", help="summarise an existing results.csv")
    p.add_argument("results", type=Path)
    p.add_argument("--out", help="write summary.json here")
    return parser


def _load_config(args):
    d = json.loads(args.config.read_text()) if args.config else {}
    for key in ("seed", "out", "jobs"):
        if getattr(args, key, None) is not None:
            d[key] = getattr(args, key)
    if getattr(args, "epsilon", None) is not None:
        d["epsilons"] = args.epsilon
    for flag in ("strict", "verify", "timing"):
        if getattr(args, flag, False):
            d[flag] = True
    return harness.ExperimentConfig.from_dict(d)


def _report_lines(reports):
    failed = 0
    for r in reports:
        if not r.passed:
            failed += 1
            print(r.line())
    print(f"{len(reports) - failed}/{len(reports)} checks passed")
    return failed


def main(argv=None):
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "summary":
            rows = harness.read_results_csv(args.results.read_text())
            text, summary = harness.emit_summary(rows)
            sys.stdout.write(text)
            if args.out:
                Path(args.out).write_text(json.dumps(summary, sort_keys=True, indent=1) + "\n")
            return 0

        config = _load_config(args)
        if args.command == "gen":
            paths = harness.write_instances(config)
            print(f"wrote {len(paths)} instances to {Path(config.out) / 'instances'}")
            return 0
        if args.command == "run":
            rows, reports = harness.run_experiment(config)
            if rows:
                sys.stdout.write(harness.emit_summary(rows)[0])
            failed = _report_lines(reports) if config.verify else 0
            return 1 if (config.strict and failed) else 0
        # verify
        reports = harness.verify_suite(config, samples=args.samples)
        out = Path(config.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "verify.jsonl").write_text("".join(r.to_json() + "\n" for r in reports))
        (out / "config.json").write_text(json.dumps(asdict(config), sort_keys=True, indent=1) + "\n")
        failed = _report_lines(reports)
        return 1 if (config.strict and failed) else 0
    except (InvalidInput, json.JSONDecodeError, OSError) as exc:
        print(f"pardg: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
