from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Dict, List, Mapping, NamedTuple, Sequence, Tuple, Union

import numpy as np


class ModelSpecError(ValueError):
    """A decomposition spec, factor set or parameter vector is malformed."""


class Family(Enum):
    """Decomposition families."""

    CP = "cp"
    DEDICOM = "dedicom"
    PARATUCK2 = "paratuck2"

    @classmethod
    def parse(cls, value: Union[str, Family]) -> Family:
        if isinstance(value, Family):
            return value
        try:
            return cls(str(value).strip().lower())
        except ValueError:
            raise ModelSpecError(f"unknown decomposition family: {value!r}") from None


class Block(NamedTuple):
    """
    One parameter block of the flat layout.

    ``order="F"`` blocks are matrices stored column by column; ``order="C"``
    blocks are stacks of K diagonals stored slice by slice.
    """

    name: str
    shape: Tuple[int, int]
    order: str

    @property
    def size(self) -> int:
        return self.shape[0] * self.shape[1]


@dataclass(frozen=True)
class ModelSpec:
    """
    A decomposition family with its target shape and ranks.

    Parameters
    ----------
    family : Family
        CP, DEDICOM or PARATUCK2.
    target_dims : Tuple[int, int, int]
        (I, J, K) of the tensor being decomposed; DEDICOM needs I == J.
    ranks : Tuple[int, ...]
        ``(R,)`` for CP and DEDICOM, ``(P, Q)`` for PARATUCK2.
    """

    family: Family
    target_dims: Tuple[int, int, int]
    ranks: Tuple[int, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "family", Family.parse(self.family))
        dims = tuple(int(d) for d in self.target_dims)
        ranks = tuple(int(r) for r in self.ranks)
        object.__setattr__(self, "target_dims", dims)
        object.__setattr__(self, "ranks", ranks)

        if len(dims) != 3 or any(d <= 0 for d in dims):
            raise ModelSpecError(f"target_dims must be three positive extents, got {dims}")
        expected = 2 if self.family is Family.PARATUCK2 else 1
        if len(ranks) != expected or any(r <= 0 for r in ranks):
            raise ModelSpecError(
                f"{self.family.name} needs {expected} positive rank(s), got {ranks}"
            )
        if self.family is Family.DEDICOM and dims[0] != dims[1]:
            raise ModelSpecError(f"DEDICOM needs a square front (I == J), got {dims}")

    @classmethod
    def cp(cls, dims: Sequence[int], rank: int) -> ModelSpec:
        return cls(Family.CP, tuple(dims), (rank,))

    @classmethod
    def dedicom(cls, dims: Sequence[int], rank: int) -> ModelSpec:
        return cls(Family.DEDICOM, tuple(dims), (rank,))

    @classmethod
    def paratuck2(cls, dims: Sequence[int], p: int, q: int) -> ModelSpec:
        return cls(Family.PARATUCK2, tuple(dims), (p, q))

    @property
    def label(self) -> str:
        return f"{self.family.value}-" + "x".join(str(r) for r in self.ranks)

    def blocks(self) -> List[Block]:
        i, j, k = self.target_dims
        if self.family is Family.CP:
            (r,) = self.ranks
            return [Block("A", (i, r), "F"), Block("B", (j, r), "F"), Block("C", (k, r), "F")]
        if self.family is Family.DEDICOM:
            (r,) = self.ranks
            return [Block("A", (i, r), "F"), Block("H", (r, r), "F"), Block("D", (k, r), "C")]
        p, q = self.ranks
        return [
            Block("A", (i, p), "F"),
            Block("DA", (k, p), "C"),
            Block("H", (p, q), "F"),
            Block("DB", (k, q), "C"),
            Block("B", (j, q), "F"),
        ]

    @property
    def param_count(self) -> int:
        return sum(block.size for block in self.blocks())


def param_count(spec: ModelSpec) -> int:
    return spec.param_count


@dataclass(frozen=True, eq=False)
class ParamVector:
    """Flat parameter vector laid out by ``spec.blocks()``."""

    values: np.ndarray
    spec: ModelSpec

    def __post_init__(self) -> None:
        values = np.array(self.values, dtype=np.float64).reshape(-1)
        if values.size != self.spec.param_count:
            raise ModelSpecError(
                f"{self.spec.label} expects {self.spec.param_count} parameters, got {values.size}"
            )
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    def __len__(self) -> int:
        return self.values.size

    def with_values(self, values: np.ndarray) -> ParamVector:
        return ParamVector(values, self.spec)


Factors = Dict[str, np.ndarray]


def pack_values(spec: ModelSpec, factors: Union[Mapping[str, np.ndarray], Sequence[np.ndarray]]) -> np.ndarray:
    blocks = spec.blocks()
    if not isinstance(factors, Mapping):
        factors = list(factors)
        if len(factors) != len(blocks):
            raise ModelSpecError(f"{spec.label} needs {len(blocks)} blocks, got {len(factors)}")
        factors = {block.name: f for block, f in zip(blocks, factors)}

    parts = []
    for block in blocks:
        if block.name not in factors:
            raise ModelSpecError(f"missing block {block.name!r} for {spec.label}")
        array = np.asarray(factors[block.name], dtype=np.float64)
        if array.shape != block.shape:
            raise ModelSpecError(
                f"block {block.name!r} has shape {array.shape}, expected {block.shape}"
            )
        parts.append(array.ravel(order=block.order))
    return np.concatenate(parts)


def unpack_batch(spec: ModelSpec, points: np.ndarray) -> Factors:
    """Split rows of ``points`` (n x d) into blocks with a leading batch axis."""
    points = np.atleast_2d(np.asarray(points, dtype=np.float64))
    if points.shape[1] != spec.param_count:
        raise ModelSpecError(
            f"{spec.label} expects {spec.param_count} parameters, got {points.shape[1]}"
        )
    n = points.shape[0]
    factors: Factors = {}
    offset = 0
    for block in spec.blocks():
        chunk = points[:, offset : offset + block.size]
        rows, cols = block.shape
        if block.order == "F":
            factors[block.name] = chunk.reshape(n, cols, rows).transpose(0, 2, 1)
        else:
            factors[block.name] = chunk.reshape(n, rows, cols)
        offset += block.size
    return factors
