"""Tensor interchange format: golden bytes, round trips, rejection."""

import struct

import numpy as np
import pytest

from mdg import ParseError, VersionError
from mdg.tensorfile import read_sizes, read_tensor, write_sizes, write_tensor

GOLDEN_2X2 = bytes.fromhex(
    "4d44475401020200000002000000"
    "000000000000f03f"
    "0000000000000040"
    "0000000000000840"
    "000000000000e0bf"
)


class TestGolden:
    def test_frozen_encoding(self, tmp_path):
        p = tmp_path / "g.t"
        write_tensor(p, np.array([[1.0, 2.0], [3.0, -0.5]]))
        assert p.read_bytes() == GOLDEN_2X2

    def test_frozen_decoding(self, tmp_path):
        p = tmp_path / "g.t"
        p.write_bytes(GOLDEN_2X2)
        got = read_tensor(p)
        assert got.shape == (2, 2)
        assert np.array_equal(got, [[1.0, 2.0], [3.0, -0.5]])


class TestRoundTrip:
    @pytest.mark.parametrize("shape", [(7,), (3, 5), (2, 3, 4), (2, 3, 4, 5)])
    def test_ranks(self, tmp_path, shape):
        rng = np.random.default_rng(sum(shape))
        a = rng.standard_normal(shape)
        p = tmp_path / "t.t"
        write_tensor(p, a)
        b = read_tensor(p)
        assert b.shape == a.shape
        assert np.array_equal(a, b)
        assert b.dtype == np.float64

    def test_scalar_promotes_to_rank_one(self, tmp_path):
        p = tmp_path / "s.t"
        write_tensor(p, np.array(2.5))
        got = read_tensor(p)
        assert got.shape == (1,) and got[0] == 2.5

    def test_non_contiguous_input(self, tmp_path):
        a = np.arange(24.0).reshape(4, 6)[:, ::2]
        p = tmp_path / "v.t"
        write_tensor(p, a)
        assert np.array_equal(read_tensor(p), a)

    def test_rank_five_refused(self, tmp_path):
        with pytest.raises(ValueError, match="rank 5"):
            write_tensor(tmp_path / "x.t", np.zeros((1, 1, 1, 1, 1)))


class TestRejection:
    def write(self, tmp_path, blob):
        p = tmp_path / "bad.t"
        p.write_bytes(blob)
        return p

    def test_bad_magic(self, tmp_path):
        p = self.write(tmp_path, b"NOPE" + GOLDEN_2X2[4:])
        with pytest.raises(ParseError) as ei:
            read_tensor(p)
        assert ei.value.offset == 0

    def test_bad_version(self, tmp_path):
        blob = bytearray(GOLDEN_2X2)
        blob[4] = 9
        with pytest.raises(VersionError, match="version 9"):
            read_tensor(self.write(tmp_path, bytes(blob)))

    def test_rank_overflow(self, tmp_path):
        blob = bytearray(GOLDEN_2X2)
        blob[5] = 6
        with pytest.raises(ParseError) as ei:
            read_tensor(self.write(tmp_path, bytes(blob)))
        assert ei.value.offset == 5

    def test_truncated_header(self, tmp_path):
        with pytest.raises(ParseError, match="truncated"):
            read_tensor(self.write(tmp_path, GOLDEN_2X2[:5]))

    def test_truncated_dims(self, tmp_path):
        with pytest.raises(ParseError, match="truncated"):
            read_tensor(self.write(tmp_path, GOLDEN_2X2[:9]))

    def test_short_payload(self, tmp_path):
        with pytest.raises(ParseError, match="3 of 4"):
            read_tensor(self.write(tmp_path, GOLDEN_2X2[:-8]))

    def test_long_payload(self, tmp_path):
        blob = GOLDEN_2X2 + struct.pack("<d", 0.0)
        with pytest.raises(ParseError):
            read_tensor(self.write(tmp_path, blob))


class TestSizes:
    def test_round_trip(self, tmp_path):
        p = tmp_path / "sizes.txt"
        write_sizes(p, 64, 8)
        assert p.read_text() == "64 8\n"
        assert read_sizes(p) == (64, 8)

    def test_field_count(self, tmp_path):
        p = tmp_path / "sizes.txt"
        p.write_text("64 8 3\n")
        with pytest.raises(ParseError, match="two integers"):
            read_sizes(p)

    def test_non_numeric(self, tmp_path):
        p = tmp_path / "sizes.txt"
        p.write_text("64 eight\n")
        with pytest.raises(ParseError):
            read_sizes(p)
