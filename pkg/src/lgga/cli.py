"""Command-line entry point.

Subcommands: fit, augment, bench, gen-data, equiv. Results go to stdout,
diagnostics to stderr. Exit status 1 means unreadable input (CSV, truth
DSL or expression syntax), 2 means a bad configuration or argument.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .bench import (
    data_efficiency_sweep,
    experiment1_table,
    experiment_classic_vs_lgga,
    get_problem,
    registry,
    table2_csv,
)
from .dataset import Dataset, DatasetError, sample_from_oracle
from .engine import ConfigError, RunConfig, run, write_reports
from .expr import Alphabet, ParseError, parse, semantically_equivalent, to_text
from .expr.nodes import DEFAULT_BINARY, DEFAULT_UNARY
from .truths import TruthSyntaxError, parse_truths

log = logging.getLogger("lgga")


class UsageError(Exception):
    """Bad configuration or arguments (exit status 2)."""


class InputError(Exception):
    """Unparseable input file or expression (exit status 1)."""


def _ops(text, default):
    if text is None:
        return default
    return tuple(t.strip() for t in text.split(",") if t.strip())


def _config(args) -> RunConfig:
    try:
        cfg = RunConfig.from_json(args.config) if args.config else RunConfig()
        changes = {}
        if args.seed is not None:
            changes["seed"] = args.seed
        if getattr(args, "mode", None):
            changes["mode"] = args.mode
        if getattr(args, "lam", None) is not None:
            changes["lambda_truth"] = args.lam
        if getattr(args, "generations", None) is not None:
            changes["num_generations"] = args.generations
        if getattr(args, "timeout_secs", None) is not None:
            changes["timeout_secs"] = args.timeout_secs
        return cfg.replace(**changes) if changes else cfg
    except FileNotFoundError as exc:
        raise UsageError(f"config file not found: {exc.filename}") from None
    except ConfigError as exc:
        raise UsageError(str(exc)) from None


def _load_inputs(args, cfg: RunConfig):
    if not Path(args.data).is_file():
        raise UsageError(f"data file not found: {args.data}")
    try:
        data = Dataset.load_csv(args.data)
    except DatasetError as exc:
        raise InputError(f"{args.data}: {exc}") from None
    try:
        alphabet = Alphabet(data.var_names, _ops(args.unary, DEFAULT_UNARY), _ops(args.binary, DEFAULT_BINARY))
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    truths = []
    if args.truths:
        path = Path(args.truths)
        if not path.is_file():
            if cfg.mode != "classic":
                raise UsageError(f"truths file not found: {args.truths}")
            log.warning("truths file %s missing; classic mode runs without truths", args.truths)
        else:
            try:
                truths = parse_truths(path.read_text(), alphabet)
            except TruthSyntaxError as exc:
                raise InputError(f"{args.truths}: {exc}") from None
    elif cfg.mode != "classic":
        log.info("no truths given; the run is equivalent to classic mode")
    return data, alphabet, truths


def _out_dir(args) -> Path | None:
    if not args.out:
        return None
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_fit(args) -> int:
    cfg = _config(args)
    data, alphabet, truths = _load_inputs(args, cfg)
    res = run(data, truths, alphabet, cfg)
    out = _out_dir(args)
    if out is not None:
        write_reports(res.reports, out / "reports.jsonl")
        res.dataset.save_csv(out / "augmented.csv", include_provenance=not args.strip_provenance)
        (out / "best.txt").write_text(to_text(res.best, alphabet) + "\n")
    print(to_text(res.best, alphabet))
    return 0


def cmd_augment(args) -> int:
    cfg = _config(args)
    if cfg.mode != "lgga_full":
        log.warning("augment always runs in lgga_full mode (config asked for %s)", cfg.mode)
        cfg = cfg.replace(mode="lgga_full")
    data, alphabet, truths = _load_inputs(args, cfg)
    res = run(data, truths, alphabet, cfg)
    text = res.dataset.to_csv_text(include_provenance=not args.strip_provenance)
    out = _out_dir(args)
    if out is None:
        sys.stdout.write(text)
        return 0
    path = out / "augmented.csv"
    path.write_text(text)
    meta = {
        "input": str(args.data),
        "initial_m": len(data),
        "final_m": len(res.dataset),
        "best_expression": to_text(res.best, alphabet),
        "generations": len(res.reports),
        "stop_reason": res.reports[-1].stop_reason,
        "config": cfg.to_dict(),
    }
    Path(str(path) + ".json").write_text(json.dumps(meta, indent=2) + "\n")
    print(path)
    return 0


def _problems(args) -> list:
    if args.problem:
        try:
            return [get_problem(args.problem)]
        except KeyError as exc:
            raise UsageError(exc.args[0]) from None
    return registry(include_optional=args.experiment == 2)


def cmd_bench(args) -> int:
    cfg = _config(args)
    problems = _problems(args)
    out = _out_dir(args)

    if args.experiment == 1:
        def progress(name, seed, lg, cl):
            log.info("%s seed %d: lgga %s (%d pts), classic %s", name, seed,
                     "solved" if lg.solved else "unsolved", lg.dataset_size,
                     "solved" if cl.solved else "unsolved")

        results = experiment_classic_vs_lgga(problems, seeds=args.seeds, m=args.m, config=cfg,
                                             workers=args.workers, progress=progress)
        table = experiment1_table(results)
        if out is not None:
            for r in results:
                (out / f"{r.problem}.exp1.json").write_text(r.to_json() + "\n")
            (out / "experiment1.csv").write_text(table)
        sys.stdout.write(table)
        return 0

    consumer = cfg.replace(mode="classic")
    results = []
    for p in problems:
        log.info("sweeping %s", p.name)
        r = data_efficiency_sweep(p, consumer, max_points=args.max_points, trials=args.trials,
                                  augment_config=cfg.replace(mode="lgga_full"), workers=args.workers)
        results.append(r)
        if out is not None:
            (out / f"{p.name}.exp2.json").write_text(r.to_json() + "\n")
    table = table2_csv(results)
    if out is not None:
        (out / "table2.csv").write_text(table)
    sys.stdout.write(table)
    return 0


def cmd_gen_data(args) -> int:
    try:
        p = get_problem(args.problem)
    except KeyError as exc:
        raise UsageError(exc.args[0]) from None
    if args.n < 1:
        raise UsageError("--n must be >= 1")
    seed = args.seed if args.seed is not None else 0
    ds = sample_from_oracle(p, args.n, np.random.default_rng(seed))
    text = ds.to_csv_text(include_provenance=not args.strip_provenance)
    if args.out:
        Path(args.out).write_text(text)
        print(args.out)
    else:
        sys.stdout.write(text)
    return 0


def _range(text: str) -> tuple:
    try:
        lo, hi = (float(v) for v in text.split(","))
    except ValueError:
        raise UsageError(f"bad range {text!r}, expected LO,HI") from None
    return lo, hi


def cmd_equiv(args) -> int:
    if args.problem:
        try:
            p = get_problem(args.problem)
        except KeyError as exc:
            raise UsageError(exc.args[0]) from None
        names, ranges = p.var_names, p.ranges
        other = args.b if args.b is not None else p.formula
    else:
        if not args.vars or args.b is None:
            raise UsageError("equiv needs --problem, or --vars together with two expressions")
        names = tuple(v.strip() for v in args.vars.split(","))
        ranges = [_range(r) for r in args.range] if args.range else [(1.0, 5.0)] * len(names)
        if len(ranges) == 1:
            ranges = ranges * len(names)
        if len(ranges) != len(names):
            raise UsageError("give one --range, or one per variable")
        other = args.b
    try:
        a, b = parse(args.a, names), parse(other, names)
    except ParseError as exc:
        raise InputError(str(exc)) from None
    seed = args.seed if args.seed is not None else 0
    try:
        same = semantically_equivalent(a, b, ranges, np.random.default_rng(seed), n=args.n, rtol=args.rtol)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    print("true" if same else "false")
    return 0


def _common(p: argparse.ArgumentParser, run_flags: bool = True) -> None:
    p.add_argument("--seed", type=int, help="random seed (overrides the config)")
    p.add_argument("--out", help="output directory (or file for gen-data)")
    p.add_argument("--strip-provenance", action="store_true",
                   help="omit the provenance column from written CSVs")
    if run_flags:
        p.add_argument("--config", help="RunConfig JSON file")
        p.add_argument("--mode", choices=("classic", "lgga_loss_only", "lgga_full"))
        p.add_argument("--lambda", dest="lam", type=float, help="truth-error weight")
        p.add_argument("--generations", type=int, help="generation limit")
        p.add_argument("--timeout-secs", type=float, help="wall-clock limit per run")


def _data_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--data", required=True, help="CSV: variables, y, optional provenance")
    p.add_argument("--truths", help="truth DSL file, one truth per line")
    p.add_argument("--unary", help=f"comma-separated unary ops (default {','.join(DEFAULT_UNARY)})")
    p.add_argument("--binary", help=f"comma-separated binary ops (default {','.join(DEFAULT_BINARY)})")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lgga", description="Truth-guided symbolic regression.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="count", default=0, help="more diagnostics on stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fit", help="search for an equation; prints it")
    _data_flags(p)
    _common(p)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("augment", help="grow a dataset with truth-derived points")
    _data_flags(p)
    _common(p)
    p.set_defaults(func=cmd_augment)

    p = sub.add_parser("bench", help="run the benchmark experiments")
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--suite", choices=("table1",))
    g.add_argument("--problem")
    p.add_argument("--experiment", type=int, choices=(1, 2), default=1)
    p.add_argument("--seeds", type=int, default=15, help="experiment 1: runs per problem")
    p.add_argument("--m", type=int, default=100, help="experiment 1: initial dataset size")
    p.add_argument("--trials", type=int, default=5, help="experiment 2: trials per problem")
    p.add_argument("--max-points", type=int, default=64, help="experiment 2: largest size tried")
    p.add_argument("--workers", type=int, default=1, help="parallel processes")
    _common(p)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("gen-data", help="sample labelled points from a benchmark problem")
    p.add_argument("--problem", required=True)
    p.add_argument("--n", type=int, default=100)
    _common(p, run_flags=False)
    p.set_defaults(func=cmd_gen_data)

    p = sub.add_parser("equiv", help="test two expressions for equivalence by sampling")
    p.add_argument("a", help="expression")
    p.add_argument("b", nargs="?", help="second expression (default: the problem's formula)")
    p.add_argument("--problem", help="take variables and ranges from a benchmark problem")
    p.add_argument("--vars", help="comma-separated variable names")
    p.add_argument("--range", action="append", help="LO,HI sampling range (repeat per variable)")
    p.add_argument("--n", type=int, default=1000, help="sample count")
    p.add_argument("--rtol", type=float, default=1e-6)
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_equiv)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.WARNING - 10 * min(args.verbose, 2),
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        return args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
