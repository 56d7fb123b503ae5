"""
The benchmark grid: every (dataset, decomposition, optimizer, seed) cell is
run on every batch of its dataset, independently and possibly concurrently.
Results come back sorted by cell key, never by completion order.
"""

from __future__ import annotations

import json
import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from decompositions import Family, ModelSpec, ModelSpecError, init_random, make_objective
from solvers.als import AlsStepper
from solvers.config import OptimizerConfig, OptimizerFamily, RunReport
from solvers.driver import Clock, solve
from tensors import DenseTensor, frobenius_norm

from .datasets import DatasetSpec, dataset_batches
from .errors import ConfigError
from .metrics import aggregate

logger = logging.getLogger(__name__)

DEFAULT_RANK = 10
ERROR_STATUS = "ERROR"
CELL_KEYS = ["dataset", "decomposition", "optimizer", "seed", "batch_index"]

ClockFactory = Callable[[], Clock]


class TickClock:
    """A fake monotonic clock advancing by ``step`` seconds on every read."""

    def __init__(self, step: float = 1.0) -> None:
        self.step = step
        self.now = 0.0

    def __call__(self) -> float:
        value = self.now
        self.now += self.step
        return value


@dataclass(frozen=True)
class DecompositionTemplate:
    """A decomposition family and its ranks; the target shape comes from each batch."""

    family: Family
    ranks: Optional[Tuple[int, ...]] = None

    def __post_init__(self) -> None:
        family = Family.parse(self.family)
        object.__setattr__(self, "family", family)
        ranks = self.ranks
        if ranks is None:
            ranks = (DEFAULT_RANK, DEFAULT_RANK) if family is Family.PARATUCK2 else (DEFAULT_RANK,)
        elif isinstance(ranks, int):
            ranks = (ranks,)
        object.__setattr__(self, "ranks", tuple(int(r) for r in ranks))

    @property
    def label(self) -> str:
        return f"{self.family.value}-" + "x".join(str(r) for r in self.ranks)

    def spec_for(self, dims: Sequence[int]) -> ModelSpec:
        return ModelSpec(self.family, tuple(dims), self.ranks)

    @classmethod
    def parse(cls, value: Union[str, Dict[str, Any], DecompositionTemplate]) -> DecompositionTemplate:
        if isinstance(value, DecompositionTemplate):
            return value
        try:
            if isinstance(value, str):
                return cls(Family.parse(value))
            data = dict(value)
            ranks = data.pop("ranks", data.pop("rank", None))
            family = data.pop("family")
            if data:
                raise ConfigError(f"unknown decomposition settings: {sorted(data)}")
            return cls(Family.parse(family), ranks)
        except (KeyError, TypeError, ValueError) as err:
            raise ConfigError(f"invalid decomposition {value!r}: {err}") from err


def _parse_optimizer(value: Union[str, Dict[str, Any], OptimizerConfig]) -> OptimizerConfig:
    if isinstance(value, OptimizerConfig):
        return value
    try:
        if isinstance(value, str):
            return OptimizerConfig.for_family(value)
        return OptimizerConfig.from_dict(value)
    except (TypeError, ValueError) as err:
        raise ConfigError(f"invalid optimizer {value!r}: {err}") from err


@dataclass(frozen=True)
class BenchmarkConfig:
    """
    The grid to run.

    Parameters
    ----------
    datasets : Tuple[DatasetSpec, ...]
    decompositions : Tuple[DecompositionTemplate, ...]
    optimizers : Tuple[OptimizerConfig, ...]
        Optimizer names (``OptimizerConfig.name``) must be unique.
    seeds : Tuple[int, ...]
        Initialization seeds; each one is a separate cell.
    max_batches : Optional[int]
        Cap on batches per dataset for desk-scale runs.
    workers : int
        Cells run concurrently on this many threads.
    """

    datasets: Tuple[DatasetSpec, ...]
    decompositions: Tuple[DecompositionTemplate, ...]
    optimizers: Tuple[OptimizerConfig, ...]
    seeds: Tuple[int, ...] = (0,)
    max_batches: Optional[int] = None
    workers: int = 1

    def __post_init__(self) -> None:
        for name in ("datasets", "decompositions", "optimizers", "seeds"):
            value = tuple(getattr(self, name))
            if not value:
                raise ConfigError(f"benchmark config needs at least one entry in {name!r}")
            object.__setattr__(self, name, value)
        names = [opt.name for opt in self.optimizers]
        if len(set(names)) != len(names):
            raise ConfigError(f"optimizer names must be unique, got {names}")
        labels = [d.label for d in self.decompositions]
        if len(set(labels)) != len(labels):
            raise ConfigError(f"decompositions must be distinct, got {labels}")
        datasets = [ds.name for ds in self.datasets]
        if len(set(datasets)) != len(datasets):
            raise ConfigError(f"dataset names must be unique, got {datasets}")
        if self.max_batches is not None and self.max_batches < 1:
            raise ConfigError("max_batches must be at least 1")
        if self.workers < 1:
            raise ConfigError("workers must be at least 1")

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> BenchmarkConfig:
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown benchmark settings: {sorted(unknown)}")
        try:
            return cls(
                datasets=tuple(
                    ds if isinstance(ds, DatasetSpec) else DatasetSpec.from_dict(ds)
                    for ds in data.get("datasets", ())
                ),
                decompositions=tuple(
                    DecompositionTemplate.parse(d) for d in data.get("decompositions", ())
                ),
                optimizers=tuple(_parse_optimizer(o) for o in data.get("optimizers", ())),
                seeds=tuple(int(s) for s in data.get("seeds", (0,))),
                max_batches=data.get("max_batches"),
                workers=int(data.get("workers", 1)),
            )
        except ConfigError:
            raise
        except (TypeError, ValueError) as err:
            raise ConfigError(f"invalid benchmark config: {err}") from err

    def with_overrides(self, **overrides: Any) -> BenchmarkConfig:
        return replace(self, **{k: v for k, v in overrides.items() if v is not None})


def load_config(path: Union[str, Path]) -> BenchmarkConfig:
    """Read a JSON benchmark config."""
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except json.JSONDecodeError as err:
        raise ConfigError(f"config file {path} is not valid JSON: {err}") from err
    if not isinstance(data, dict):
        raise ConfigError(f"config file {path} must hold a JSON object")
    return BenchmarkConfig.from_dict(data)


@dataclass
class CellResult:
    """One optimizer run on one batch; ``report`` is None when the cell failed."""

    dataset: str
    decomposition: str
    optimizer: str
    seed: int
    batch_index: int
    report: Optional[RunReport] = None
    error: str = ""
    target_norm: float = math.nan

    @property
    def key(self) -> Tuple[str, str, str, int, int]:
        return (self.dataset, self.decomposition, self.optimizer, self.seed, self.batch_index)

    @property
    def failed(self) -> bool:
        return self.report is None

    @property
    def stop_reason(self) -> str:
        return ERROR_STATUS if self.report is None else self.report.stop_reason.value

    @property
    def relative_error(self) -> Optional[float]:
        if self.report is None or not self.target_norm > 0:
            return None
        return self.report.final_loss / self.target_norm

    def as_row(self) -> Dict[str, Any]:
        report = self.report
        return {
            "dataset": self.dataset,
            "decomposition": self.decomposition,
            "optimizer": self.optimizer,
            "seed": self.seed,
            "batch_index": self.batch_index,
            "final_loss": None if report is None else report.final_loss,
            "iterations": None if report is None else report.iterations,
            "wall_time_s": None if report is None else report.wall_time_seconds,
            "q": None if report is None else report.convergence_rate_q,
            "stop_reason": self.stop_reason,
        }


REPORT_COLUMNS = CELL_KEYS + ["final_loss", "iterations", "wall_time_s", "q", "stop_reason"]


def cells_frame(cells: Sequence[CellResult]) -> pd.DataFrame:
    """One row per cell with the report columns."""
    return pd.DataFrame([cell.as_row() for cell in cells], columns=REPORT_COLUMNS)


@dataclass
class BenchmarkResult:
    cells: List[CellResult]
    aggregates: pd.DataFrame = field(default_factory=pd.DataFrame)

    @property
    def reports(self) -> List[RunReport]:
        return [cell.report for cell in self.cells if cell.report is not None]

    @property
    def failed(self) -> List[CellResult]:
        return [cell for cell in self.cells if cell.failed]


def orient_batch(family: Family, batch: DenseTensor) -> DenseTensor:
    """
    DEDICOM needs a square front. An (images x rows x cols) batch of square
    images is turned into (rows x cols x images) for it.
    """
    i, j, k = batch.dims
    if family is Family.DEDICOM and i != j and j == k:
        return DenseTensor.from_array(np.moveaxis(batch.array, 0, 2))
    return batch


def run_cell(
    batch: DenseTensor,
    template: DecompositionTemplate,
    optimizer: OptimizerConfig,
    seed: int,
    clock: Clock = time.perf_counter,
) -> RunReport:
    """Fit ``template`` to one batch with one optimizer from ``init_random(seed)``."""
    target = orient_batch(template.family, batch)
    spec = template.spec_for(target.dims)
    cfg = optimizer.with_overrides(seed=seed)
    f = make_objective(spec, target)
    stepper = AlsStepper(spec, target) if cfg.family is OptimizerFamily.ALS else None
    _, report = solve(f, init_random(spec, seed), cfg, stepper=stepper, clock=clock)
    return report


@dataclass(frozen=True)
class _Task:
    dataset: str
    template: DecompositionTemplate
    optimizer: OptimizerConfig
    seed: int
    batch_index: int
    batch: DenseTensor


def _load_batches(cfg: BenchmarkConfig) -> Dict[Tuple[str, str], List[DenseTensor]]:
    batches: Dict[Tuple[str, str], List[DenseTensor]] = {}
    for ds in cfg.datasets:
        for template in cfg.decompositions:
            try:
                batches[ds.name, template.label] = dataset_batches(
                    ds, template.family, template.ranks, cfg.max_batches
                )
            except ModelSpecError as err:
                raise ConfigError(f"dataset {ds.name!r} cannot be drawn for {template.label}: {err}") from err
            logger.info(
                "dataset %s: %d batch(es) for %s", ds.name, len(batches[ds.name, template.label]), template.label
            )
    return batches


def _run_task(task: _Task, clock_factory: ClockFactory) -> CellResult:
    cell = CellResult(
        dataset=task.dataset,
        decomposition=task.template.label,
        optimizer=task.optimizer.name,
        seed=task.seed,
        batch_index=task.batch_index,
        target_norm=frobenius_norm(task.batch),
    )
    try:
        cell.report = run_cell(task.batch, task.template, task.optimizer, task.seed, clock_factory())
    except Exception as err:
        cell.error = f"{type(err).__name__}: {err}"
        logger.warning("cell %s failed: %s", cell.key, cell.error)
    return cell


def _wall_clock() -> Clock:
    return time.perf_counter


def run_benchmark(
    cfg: BenchmarkConfig,
    *,
    clock_factory: Optional[ClockFactory] = None,
) -> BenchmarkResult:
    """
    Run every cell of the grid and aggregate the results.

    Parameters
    ----------
    cfg : BenchmarkConfig
        The grid.
    clock_factory : Optional[ClockFactory]
        Returns the clock for one cell (default: the wall clock). A fresh
        ``TickClock`` per cell makes whole reports reproducible.

    Returns
    -------
    BenchmarkResult
        Cells sorted by (dataset, decomposition, optimizer, seed, batch_index)
        and the per-(dataset, decomposition, optimizer) means.

    Raises
    ------
    ConfigError
        If a synthetic dataset cannot be drawn for a decomposition.
    DataFormatError
        If a dataset file is malformed.
    """
    if clock_factory is None:
        clock_factory = _wall_clock
    batches = _load_batches(cfg)
    tasks = [
        _Task(ds.name, template, optimizer, seed, index, batch)
        for ds in cfg.datasets
        for template in cfg.decompositions
        for index, batch in enumerate(batches[ds.name, template.label])
        for optimizer in cfg.optimizers
        for seed in cfg.seeds
    ]
    logger.info("running %d cell(s) on %d worker(s)", len(tasks), cfg.workers)

    if cfg.workers > 1:
        with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
            cells = list(pool.map(lambda task: _run_task(task, clock_factory), tasks))
    else:
        cells = [_run_task(task, clock_factory) for task in tasks]

    cells.sort(key=lambda cell: cell.key)
    result = BenchmarkResult(cells=cells, aggregates=aggregate(cells_frame(cells)))
    if result.failed:
        logger.warning("%d of %d cell(s) failed", len(result.failed), len(cells))
    return result
