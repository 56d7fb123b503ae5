"""
Dataset sources for the benchmark grid.

Image datasets are (images x rows x cols) tensors cut into batches along the
first mode; every batch is decomposed independently. Synthetic datasets are
exact-rank tensors drawn from one of the decomposition families, with
optional Gaussian noise.
"""

from __future__ import annotations

import json
import logging
import os
from dataclasses import dataclass, fields
from enum import Enum
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from decompositions import Family, ModelSpec, ParamVector, reconstruct
from tensors import DenseTensor

from .errors import ConfigError, DataFormatError
from .idx import load_idx

logger = logging.getLogger(__name__)

DATA_DIR_ENV = "VECHGRAD_DATA_DIR"
MANIFEST_NAME = "manifest.json"

# Batch sizes per known image collection: 64 for the 28-32 px sets, 32 for the 64 px sets.
KNOWN_DATASETS: Dict[str, int] = {
    "cifar10": 64,
    "cifar100": 64,
    "mnist": 64,
    "coco": 32,
    "lfw": 32,
}

# Second entropy word keeps ground-truth draws apart from init_random(seed).
_SYNTH_STREAM = 0x5E7


class DatasetSource(Enum):
    IDX_FILE = "idx"
    RAW_GRAY_DIR = "raw_gray_dir"
    SYNTHETIC = "synthetic"

    @classmethod
    def parse(cls, value: Union[str, DatasetSource]) -> DatasetSource:
        if isinstance(value, DatasetSource):
            return value
        normalized = str(value).strip().lower()
        for member in cls:
            if normalized in (member.value, member.name.lower()):
                return member
        raise ConfigError(f"unknown dataset source: {value!r}")


@dataclass(frozen=True)
class DatasetSpec:
    """
    Where a dataset comes from and how it is batched.

    Parameters
    ----------
    name : str
        Label used in reports; a known collection name (``mnist``, ``cifar10``,
        ``cifar100``, ``coco``, ``lfw``) selects its batch size.
    source : DatasetSource
        IDX file, directory of raw grayscale images, or synthetic.
    path : Optional[str]
        File or directory for the file-backed sources. Relative paths are
        resolved against ``$VECHGRAD_DATA_DIR`` when it is set.
    dims, family, true_rank, noise_sigma, seed
        Synthetic parameters. ``family=None`` draws the tensor from the
        decomposition being fitted (an exact-rank instance for every cell).
    batch_size : Optional[int]
        Images per batch; ``None`` uses the known preset, or keeps the whole
        tensor as one batch.
    """

    name: str
    source: DatasetSource = DatasetSource.SYNTHETIC
    path: Optional[str] = None
    dims: Optional[Tuple[int, int, int]] = None
    family: Optional[Family] = None
    true_rank: Optional[Tuple[int, ...]] = None
    noise_sigma: float = 0.0
    seed: int = 0
    batch_size: Optional[int] = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "source", DatasetSource.parse(self.source))
        if self.batch_size is None and self.name.lower() in KNOWN_DATASETS:
            object.__setattr__(self, "batch_size", KNOWN_DATASETS[self.name.lower()])
        if self.batch_size is not None and int(self.batch_size) < 1:
            raise ConfigError(f"dataset {self.name!r}: batch_size must be at least 1")

        if self.source is DatasetSource.SYNTHETIC:
            if self.dims is None or len(self.dims) != 3 or any(int(d) < 1 for d in self.dims):
                raise ConfigError(f"synthetic dataset {self.name!r} needs three positive dims")
            object.__setattr__(self, "dims", tuple(int(d) for d in self.dims))
            if self.noise_sigma < 0:
                raise ConfigError(f"dataset {self.name!r}: noise_sigma must be non-negative")
            if self.family is not None:
                object.__setattr__(self, "family", Family.parse(self.family))
                if self.true_rank is None:
                    raise ConfigError(f"dataset {self.name!r}: a fixed family needs true_rank")
            if self.true_rank is not None:
                rank = self.true_rank
                rank = (rank,) if isinstance(rank, int) else tuple(int(r) for r in rank)
                object.__setattr__(self, "true_rank", rank)
        elif not self.path:
            raise ConfigError(f"dataset {self.name!r} ({self.source.value}) needs a path")

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> DatasetSpec:
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown dataset settings: {sorted(unknown)}")
        try:
            return cls(**data)
        except (TypeError, ValueError) as err:
            raise ConfigError(f"invalid dataset {data.get('name')!r}: {err}") from err

    def resolved_path(self) -> Path:
        path = Path(self.path)
        base = os.environ.get(DATA_DIR_ENV)
        if base and not path.is_absolute():
            path = Path(base) / path
        return path


def load_raw_gray_dir(path: Union[str, Path]) -> DenseTensor:
    """
    Read a directory of raw 8-bit grayscale images.

    The directory holds a ``manifest.json`` sidecar with ``width`` and
    ``height`` and, optionally, the ordered ``files`` list; without it every
    ``*.raw`` file is read in name order. Pixels are scaled to [0, 1].
    """
    directory = Path(path)
    manifest_path = directory / MANIFEST_NAME
    try:
        manifest = json.loads(manifest_path.read_text())
        width, height = int(manifest["width"]), int(manifest["height"])
    except FileNotFoundError:
        raise DataFormatError(f"missing {MANIFEST_NAME} in {directory}") from None
    except (KeyError, TypeError, ValueError) as err:
        raise DataFormatError(f"malformed {manifest_path}: {err}") from err
    if width < 1 or height < 1:
        raise DataFormatError(f"{manifest_path}: width and height must be positive")

    names = manifest.get("files") or sorted(p.name for p in directory.glob("*.raw"))
    if not names:
        raise DataFormatError(f"no images listed or found in {directory}")

    images = np.empty((len(names), height, width))
    expected = width * height
    for slot, name in enumerate(names):
        raw = (directory / name).read_bytes()
        if len(raw) != expected:
            raise DataFormatError(
                f"{name}: expected {expected} bytes for {width}x{height}, got {len(raw)}",
                offset=min(len(raw), expected),
            )
        images[slot] = np.frombuffer(raw, dtype=np.uint8).reshape(height, width) / 255.0
    logger.debug("loaded %d raw images of %dx%d from %s", len(names), height, width, directory)
    return DenseTensor.from_array(images)


def synthesize_tensor(
    dims: Sequence[int],
    family: Union[str, Family],
    rank: Union[int, Sequence[int]],
    noise_sigma: float = 0.0,
    seed: int = 0,
) -> Tuple[DenseTensor, ParamVector]:
    """
    An exact-rank tensor of ``family`` plus i.i.d. Gaussian noise.

    Ground-truth parameters are uniform on [0, 1) and drawn from a stream
    separate from ``init_random(spec, seed)``.

    Returns
    -------
    Tuple[DenseTensor, ParamVector]
        The (noisy) tensor and the ground-truth parameters.
    """
    ranks = (rank,) if isinstance(rank, (int, np.integer)) else tuple(rank)
    spec = ModelSpec(Family.parse(family), tuple(dims), ranks)
    rng = np.random.default_rng((seed, _SYNTH_STREAM))
    truth = ParamVector(rng.random(spec.param_count), spec)
    clean = reconstruct(truth)
    if noise_sigma > 0:
        noise = rng.normal(0.0, noise_sigma, size=clean.size)
        return DenseTensor(clean.dims, clean.data + noise), truth
    return clean, truth


def batch_dataset(t: DenseTensor, batch_size: int) -> List[DenseTensor]:
    """Split along the first mode into ceil(count / batch_size) tensors, in order."""
    if batch_size < 1:
        raise ValueError(f"batch_size must be at least 1, got {batch_size}")
    array = t.array
    return [
        DenseTensor.from_array(array[start : start + batch_size])
        for start in range(0, t.dims[0], batch_size)
    ]


def load_dataset(
    spec: DatasetSpec,
    fit_family: Optional[Family] = None,
    fit_ranks: Optional[Tuple[int, ...]] = None,
) -> DenseTensor:
    """
    The full tensor of a dataset.

    ``fit_family`` and ``fit_ranks`` describe the decomposition being fitted;
    they fill in a synthetic dataset whose own family is left open.
    """
    if spec.source is DatasetSource.IDX_FILE:
        return load_idx(spec.resolved_path())
    if spec.source is DatasetSource.RAW_GRAY_DIR:
        return load_raw_gray_dir(spec.resolved_path())

    family, ranks = spec.family, spec.true_rank
    if family is None:
        if fit_family is None:
            raise ConfigError(f"synthetic dataset {spec.name!r} has no family to draw from")
        family, ranks = fit_family, ranks or fit_ranks
    tensor, _ = synthesize_tensor(spec.dims, family, ranks, spec.noise_sigma, spec.seed)
    return tensor


def dataset_batches(
    spec: DatasetSpec,
    fit_family: Optional[Family] = None,
    fit_ranks: Optional[Tuple[int, ...]] = None,
    max_batches: Optional[int] = None,
) -> List[DenseTensor]:
    tensor = load_dataset(spec, fit_family, fit_ranks)
    batches = batch_dataset(tensor, spec.batch_size) if spec.batch_size else [tensor]
    if max_batches is not None:
        batches = batches[:max_batches]
    return batches
