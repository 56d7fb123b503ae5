"""
IDX tensor files.

Groups:
    1. Decoding hand-built files
    2. Format errors and their byte offsets
    3. Writing
"""

import struct

import numpy as np
import pytest

from bench.errors import DataFormatError
from bench.idx import IDX_DOUBLE_RANK3, IDX_UBYTE_RANK3, encode_idx, load_idx, parse_idx, write_idx
from tensors import DenseTensor


def _ubyte_file(dims, payload: bytes) -> bytes:
    return struct.pack(">I", IDX_UBYTE_RANK3) + struct.pack(">3I", *dims) + payload


# ═══ Group 1: decoding ═══


def test_single_pixel_255_is_one():
    t = parse_idx(_ubyte_file((1, 1, 1), bytes([255])))
    assert t.dims == (1, 1, 1)
    assert t.data.tolist() == [1.0]


def test_three_two_by_two_images(tmp_path):
    pixels = list(range(0, 12 * 20, 20))
    path = tmp_path / "images-idx3-ubyte"
    path.write_bytes(_ubyte_file((3, 2, 2), bytes(pixels)))
    t = load_idx(path)
    assert t.dims == (3, 2, 2)
    np.testing.assert_allclose(t.array, np.array(pixels).reshape(3, 2, 2) / 255.0)
    assert t.array[1, 0, 1] == pytest.approx(100 / 255.0)


def test_double_payload_is_read_unchanged():
    values = np.array([0.5, -1.25, 3.0, 1e-9])
    data = struct.pack(">I", IDX_DOUBLE_RANK3) + struct.pack(">3I", 1, 2, 2) + values.astype(">f8").tobytes()
    np.testing.assert_array_equal(parse_idx(data).data, values)


# ═══ Group 2: format errors ═══


def test_empty_file():
    with pytest.raises(DataFormatError) as err:
        parse_idx(b"")
    assert err.value.offset == 0


def test_corrupt_magic():
    data = bytearray(_ubyte_file((1, 1, 1), b"\x00"))
    data[0] = 0x12
    with pytest.raises(DataFormatError) as err:
        parse_idx(bytes(data))
    assert err.value.offset == 0
    assert "magic" in str(err.value)


def test_unknown_element_type():
    data = struct.pack(">I", 0x00000B03) + struct.pack(">3I", 1, 1, 1) + b"\x00\x00"
    with pytest.raises(DataFormatError) as err:
        parse_idx(data)
    assert err.value.offset == 0


def test_label_file_is_rejected():
    data = struct.pack(">I", 0x00000801) + struct.pack(">I", 2) + b"\x01\x02"
    with pytest.raises(DataFormatError) as err:
        parse_idx(data)
    assert err.value.offset == 3


def test_truncated_dimensions():
    data = struct.pack(">I", IDX_UBYTE_RANK3) + struct.pack(">2I", 3, 2)
    with pytest.raises(DataFormatError) as err:
        parse_idx(data)
    assert err.value.offset == len(data)


def test_truncated_payload():
    data = _ubyte_file((3, 2, 2), bytes(11))
    with pytest.raises(DataFormatError) as err:
        parse_idx(data)
    assert err.value.offset == len(data)
    assert "(at byte 27)" in str(err.value)


def test_trailing_bytes():
    data = _ubyte_file((1, 1, 2), bytes(3))
    with pytest.raises(DataFormatError) as err:
        parse_idx(data)
    assert err.value.offset == 18


def test_zero_dimension():
    with pytest.raises(DataFormatError) as err:
        parse_idx(_ubyte_file((0, 2, 2), b""))
    assert err.value.offset == 4


# ═══ Group 3: writing ═══


def test_write_then_load_double(tmp_path, rng):
    t = DenseTensor.from_array(rng.standard_normal((2, 3, 4)))
    loaded = load_idx(write_idx(tmp_path / "t.idx", t))
    assert loaded.allclose(t, rtol=0.0)


def test_ubyte_encoding_quantizes_and_clips():
    t = DenseTensor.from_array(np.array([[[0.0, 1.0, 2.0, -1.0]]]))
    data = encode_idx(t, "ubyte")
    assert data[:4] == struct.pack(">I", IDX_UBYTE_RANK3)
    assert data[16:] == bytes([0, 255, 255, 0])


def test_encode_rejects_other_orders_and_types():
    with pytest.raises(ValueError):
        encode_idx(DenseTensor.from_array(np.zeros((2, 2))))
    with pytest.raises(ValueError):
        encode_idx(DenseTensor.zeros((1, 1, 1)), "float16")
