"""Command line entry point: ``visdecode {run,synth,validate,render}``."""

from __future__ import annotations

import argparse
import dataclasses
import logging
import sys
from pathlib import Path

import yaml

from .core import DecodingError, validate_dataset
from .evaluation import run_experiment
from .io import (
    load_dataset,
    parse_config,
    read_results_csv,
    render_results,
    save_dataset,
    write_outputs,
)
from .synth import SynthSpec, gen_dataset, gen_noise_only

log = logging.getLogger("visdecode")


def _fail(kind: str, message: str) -> int:
    # single line, "error: <kind>: <message>", for scripts to parse
    print(f"error: {kind}: {' '.join(str(message).split())}", file=sys.stderr)
    return 1


def cmd_run(args) -> int:
    cfg = parse_config(args.config)
    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.jobs is not None:
        overrides["n_jobs"] = args.jobs
    if args.output is not None:
        overrides["output"] = args.output
    cfg = dataclasses.replace(cfg, **overrides)
    d = load_dataset(cfg.dataset)
    table = run_experiment(cfg, d)
    paths = write_outputs(table, cfg.output)
    failed = [r for r in table if r.status != "ok"]
    for r in failed:
        log.warning("failed cell %s/%s/%s: %s", r.roi, r.model, r.metric, r.reason)
    print(paths["csv"])
    return 0


def cmd_synth(args) -> int:
    raw = yaml.safe_load(Path(args.spec).read_text(encoding="utf-8")) or {}
    if not isinstance(raw, dict):
        raise DecodingError("synth spec must be a mapping")
    if args.seed is not None:
        raw["seed"] = args.seed
    if raw.pop("noise_only", False):
        keep = ("seed", "n_classes", "train_per_class", "test_per_class", "n_inputs", "n_targets")
        unknown = sorted(set(raw) - set(keep))
        if unknown:
            raise DecodingError(f"noise-only synth spec does not accept {unknown}")
        d = gen_noise_only(**raw)
    else:
        d, _ = gen_dataset(SynthSpec.from_dict(raw))
    save_dataset(d, args.out, args.format)
    print(args.out)
    return 0


def cmd_validate(args) -> int:
    try:
        d = load_dataset(args.data, validate=False)
    except (DecodingError, OSError) as exc:
        print(f"violation: {exc}")
        return _fail("validation", "dataset could not be loaded")
    report = validate_dataset(d)
    print(report)
    if not report.ok:
        return _fail("validation", f"{len(report.violations)} violation(s)")
    return 0


def cmd_render(args) -> int:
    table = read_results_csv(args.input)
    text = render_results(table, args.format, args.out)
    if args.out is None:
        sys.stdout.write(text)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="visdecode",
        description="Decode visual feature representations from brain activity and "
                    "benchmark regressors per region, model and similarity metric.",
    )
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    p = sub.add_parser("run", help="run an experiment sweep from a config file")
    p.add_argument("--config", required=True)
    p.add_argument("--seed", type=int)
    p.add_argument("--jobs", type=int, help="parallel cells (results do not depend on it)")
    p.add_argument("--output", help="output directory, overrides the config")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("synth", help="write a synthetic dataset directory")
    p.add_argument("--spec", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--format", choices=("csv", "binary"), default="csv")
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("validate", help="check a dataset directory")
    p.add_argument("--data", required=True)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("render", help="re-render a results CSV")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--format", choices=("md", "csv"), default="md")
    p.add_argument("--out")
    p.set_defaults(func=cmd_render)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except DecodingError as exc:
        return _fail(type(exc).__name__, exc)
    except (OSError, ValueError) as exc:
        return _fail(type(exc).__name__, exc)


if __name__ == "__main__":
    sys.exit(main())
