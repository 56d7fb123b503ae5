"""
Command-line entry point.

Subcommands
-----------
bench      run a JSON benchmark config and write the per-cell report
decompose  fit one decomposition to one IDX tensor with one optimizer
synth      write a synthetic exact-rank tensor as an IDX file

Exit codes: 0 success, 1 configuration or I/O error, 2 data-format error, 3 one
or more benchmark cells failed.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path
from typing import List, Optional, Sequence

from decompositions import Family, ModelSpecError
from solvers.config import OptimizerConfig
from tensors import frobenius_norm

from .datasets import batch_dataset, synthesize_tensor
from .errors import ConfigError, DataFormatError
from .idx import load_idx, write_idx
from .report import ReportFormat, emit_report, render_report, write_summary
from .runner import CellResult, DecompositionTemplate, TickClock, load_config, run_benchmark, run_cell

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_DATA = 2
EXIT_CELLS_FAILED = 3


def _configure_logging(verbose: bool, quiet: bool) -> None:
    level = logging.DEBUG if verbose else logging.WARNING if quiet else logging.INFO
    logging.basicConfig(
        format="[%(asctime)s] [%(levelname)s] %(message)s",
        datefmt="%H:%M:%S",
        level=level,
        force=True,
    )


def _positive_int(value: str) -> int:
    number = int(value)
    if number < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {value}")
    return number


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="vechgrad-bench",
        description="Tensor decomposition optimizers: VecHGrad, ALS and gradient baselines.",
    )
    parser.add_argument("--verbose", action="store_true", help="Log every iteration.")
    parser.add_argument("--quiet", action="store_true", help="Only log warnings and errors.")
    sub = parser.add_subparsers(dest="command", required=True)

    bench = sub.add_parser("bench", help="Run a benchmark config.")
    bench.add_argument("--config", required=True, help="Path to a JSON benchmark config.")
    bench.add_argument("--out", help="Report path (stdout when omitted).")
    bench.add_argument("--format", choices=[f.value for f in ReportFormat], default="csv")
    bench.add_argument("--workers", type=_positive_int, help="Cells run concurrently.")
    bench.add_argument("--seed", type=int, help="Run only this initialization seed.")
    bench.add_argument("--max-batches", type=_positive_int, help="Cap batches per dataset.")
    bench.add_argument("--histories", action="store_true", help="Include loss histories (JSON).")
    bench.add_argument("--summary", help="Write per-optimizer means to this .csv or .xlsx path.")
    bench.add_argument(
        "--fake-clock",
        action="store_true",
        help="Time runs with a deterministic tick clock (reproducible reports).",
    )

    decompose = sub.add_parser("decompose", help="Decompose one IDX tensor.")
    decompose.add_argument("--input", required=True, help="IDX tensor file.")
    decompose.add_argument("--family", choices=[f.value for f in Family], default="cp")
    decompose.add_argument(
        "--rank", type=_positive_int, nargs="+", help="R, or P Q for paratuck2 (default 10)."
    )
    decompose.add_argument("--optimizer", default="vechgrad", help="Optimizer family.")
    decompose.add_argument("--max-iter", type=int, help="Override the iteration budget.")
    decompose.add_argument("--seed", type=int, default=0)
    decompose.add_argument("--batch-size", type=_positive_int, help="Decompose only one batch.")
    decompose.add_argument("--batch-index", type=int, default=0)
    decompose.add_argument("--workers", type=_positive_int, help="Threads for FD gradients.")
    decompose.add_argument("--out", help="Report path (stdout when omitted).")
    decompose.add_argument("--format", choices=[f.value for f in ReportFormat], default="csv")
    decompose.add_argument("--histories", action="store_true")

    synth = sub.add_parser("synth", help="Write a synthetic tensor as IDX.")
    synth.add_argument("--dims", type=_positive_int, nargs=3, required=True, metavar=("I", "J", "K"))
    synth.add_argument("--family", choices=[f.value for f in Family], default="cp")
    synth.add_argument("--rank", type=_positive_int, nargs="+", default=[3])
    synth.add_argument("--noise", type=float, default=0.0, help="Gaussian noise std.")
    synth.add_argument("--seed", type=int, default=0)
    synth.add_argument("--dtype", choices=["double", "ubyte"], default="double")
    synth.add_argument("--out", required=True, help="Destination IDX file.")
    return parser


def _write(cells: Sequence[CellResult], args: argparse.Namespace) -> None:
    if args.out:
        emit_report(cells, args.format, args.out, histories=args.histories)
    else:
        sys.stdout.write(render_report(cells, args.format, histories=args.histories))


def cmd_bench(args: argparse.Namespace) -> int:
    cfg = load_config(args.config).with_overrides(
        workers=args.workers,
        max_batches=args.max_batches,
        seeds=None if args.seed is None else (args.seed,),
    )
    result = run_benchmark(cfg, clock_factory=TickClock if args.fake_clock else None)
    _write(result.cells, args)
    if args.summary:
        write_summary(result.aggregates, args.summary)
    if result.failed:
        for cell in result.failed:
            logger.error("cell %s: %s", cell.key, cell.error)
        return EXIT_CELLS_FAILED
    return EXIT_OK


def cmd_decompose(args: argparse.Namespace) -> int:
    tensor = load_idx(args.input)
    batch_index = 0
    if args.batch_size:
        batches = batch_dataset(tensor, args.batch_size)
        if not 0 <= args.batch_index < len(batches):
            raise ConfigError(f"batch index {args.batch_index} out of range (0..{len(batches) - 1})")
        batch_index, tensor = args.batch_index, batches[args.batch_index]

    try:
        ranks = tuple(args.rank) if args.rank else None
        template = DecompositionTemplate(Family.parse(args.family), ranks)
        optimizer = OptimizerConfig.for_family(
            args.optimizer, max_iter=args.max_iter, workers=args.workers
        )
    except ValueError as err:
        raise ConfigError(str(err)) from err

    cell = CellResult(
        dataset=Path(args.input).name,
        decomposition=template.label,
        optimizer=optimizer.name,
        seed=args.seed,
        batch_index=batch_index,
        target_norm=frobenius_norm(tensor),
    )
    try:
        cell.report = run_cell(tensor, template, optimizer, args.seed)
    except ModelSpecError as err:
        raise ConfigError(str(err)) from err
    _write([cell], args)
    return EXIT_OK


def cmd_synth(args: argparse.Namespace) -> int:
    try:
        tensor, _ = synthesize_tensor(args.dims, args.family, args.rank, args.noise, args.seed)
    except ModelSpecError as err:
        raise ConfigError(str(err)) from err
    write_idx(args.out, tensor, args.dtype)
    logger.info("wrote %s tensor %s to %s", args.family, tensor.dims, args.out)
    return EXIT_OK


_COMMANDS = {"bench": cmd_bench, "decompose": cmd_decompose, "synth": cmd_synth}


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    _configure_logging(args.verbose, args.quiet)
    try:
        return _COMMANDS[args.command](args)
    except ConfigError as err:
        logger.error("configuration error: %s", err)
        return EXIT_CONFIG
    except DataFormatError as err:
        logger.error("data format error: %s", err)
        return EXIT_DATA
    except FileNotFoundError as err:
        logger.error("file not found: %s", err)
        return EXIT_CONFIG
    except OSError as err:
        logger.error("I/O error: %s", err)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
