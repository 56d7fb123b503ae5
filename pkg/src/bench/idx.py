"""
IDX tensor files (the MNIST container format).

Layout, big-endian::

    u8[2]  | zero
    u8     | element type (0x08 unsigned byte, 0x0E double)
    u8     | number of dimensions
    i32[n] | dimension sizes
    ...    | elements, last index fastest

Unsigned-byte images are scaled to [0, 1] by dividing by 255; doubles are
read unchanged. Only rank-3 files (count x rows x cols) are accepted.
"""

from __future__ import annotations

import logging
import struct
from pathlib import Path
from typing import Union

import numpy as np

from tensors import DenseTensor

from .errors import DataFormatError

logger = logging.getLogger(__name__)

IDX_UBYTE_RANK3 = 0x00000803
IDX_DOUBLE_RANK3 = 0x00000E03

_TYPE_UBYTE = 0x08
_TYPE_DOUBLE = 0x0E
_DTYPES = {_TYPE_UBYTE: np.dtype(">u1"), _TYPE_DOUBLE: np.dtype(">f8")}
_HEADER = struct.Struct(">BBBB")

PathLike = Union[str, Path]


def parse_idx(data: bytes) -> DenseTensor:
    """Decode an in-memory IDX image tensor."""
    if len(data) < _HEADER.size:
        raise DataFormatError("truncated IDX header: missing magic number", offset=len(data))
    zero_a, zero_b, type_code, ndim = _HEADER.unpack_from(data, 0)
    magic = (zero_a << 24) | (zero_b << 16) | (type_code << 8) | ndim
    if zero_a or zero_b or type_code not in _DTYPES:
        raise DataFormatError(f"bad IDX magic number 0x{magic:08X}", offset=0)
    if ndim != 3:
        raise DataFormatError(
            f"IDX magic 0x{magic:08X} has rank {ndim}; image tensors need rank 3", offset=3
        )

    header_end = _HEADER.size + 4 * ndim
    if len(data) < header_end:
        raise DataFormatError("truncated IDX header: missing dimension sizes", offset=len(data))
    dims = struct.unpack_from(f">{ndim}I", data, _HEADER.size)
    if any(d == 0 for d in dims):
        raise DataFormatError(f"IDX dimension sizes must be positive, got {dims}", offset=_HEADER.size)

    dtype = _DTYPES[type_code]
    expected = header_end + int(np.prod(dims)) * dtype.itemsize
    if len(data) < expected:
        raise DataFormatError(
            f"truncated IDX payload: expected {expected} bytes, got {len(data)}", offset=len(data)
        )
    if len(data) > expected:
        raise DataFormatError(f"{len(data) - expected} trailing bytes after IDX payload", offset=expected)

    values = np.frombuffer(data, dtype=dtype, count=int(np.prod(dims)), offset=header_end)
    values = values.astype(np.float64)
    if type_code == _TYPE_UBYTE:
        values /= 255.0
    return DenseTensor(dims=dims, data=values)


def load_idx(path: PathLike) -> DenseTensor:
    """
    Read a rank-3 IDX file as a (count x rows x cols) tensor.

    Raises
    ------
    DataFormatError
        On a bad magic number, a rank other than 3, or a truncated file. The
        error carries the byte offset where parsing stopped.
    """
    data = Path(path).read_bytes()
    tensor = parse_idx(data)
    logger.debug("loaded %s with shape %s", path, tensor.dims)
    return tensor


def encode_idx(tensor: DenseTensor, dtype: str = "double") -> bytes:
    """Encode a rank-3 tensor; ``dtype`` is ``"double"`` or ``"ubyte"`` (values in [0, 1])."""
    if tensor.order != 3:
        raise ValueError(f"IDX image tensors have rank 3, got {tensor.order}")
    if dtype == "double":
        type_code, payload = _TYPE_DOUBLE, tensor.data.astype(_DTYPES[_TYPE_DOUBLE]).tobytes()
    elif dtype == "ubyte":
        scaled = np.rint(np.clip(tensor.data, 0.0, 1.0) * 255.0)
        type_code, payload = _TYPE_UBYTE, scaled.astype(_DTYPES[_TYPE_UBYTE]).tobytes()
    else:
        raise ValueError(f"unknown IDX element type: {dtype!r}")
    header = _HEADER.pack(0, 0, type_code, 3) + struct.pack(">3I", *tensor.dims)
    return header + payload


def write_idx(path: PathLike, tensor: DenseTensor, dtype: str = "double") -> Path:
    path = Path(path)
    path.write_bytes(encode_idx(tensor, dtype))
    logger.debug("wrote %s with shape %s", path, tensor.dims)
    return path
