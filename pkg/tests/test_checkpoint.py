"""Checkpoint format: golden bytes, round trips, and corruption detection."""

import struct

import numpy as np
import pytest

from gazefit.checkpoint import (
    CheckpointError,
    load_checkpoint,
    read_checkpoint,
    save_checkpoint,
    write_checkpoint,
)

# Frozen byte-level expectation, decoded by hand:
#   4e504643  magic "NPFC"
#   01000000  version 1
#   04000000 64656d6f              kind "demo"
#   02000000                        two tensors (sorted by name)
#   01000000 62  01000000 01000000  "b", rank 1, dim 1
#   0000003f                        0.5 as little-endian f32
#   01000000 77  02000000 01000000 02000000   "w", rank 2, dims (1,2)
#   0000803f 000000c0               1.0, -2.0
#   1a413ba4                        CRC32 of everything above
GOLDEN_HEX = (
    "4e504643010000000400000064656d6f02000000010000006201000000010000000000003f"
    "01000000770200000001000000020000000000803f000000c01a413ba4"
)


def demo_tensors():
    return {
        "w": np.array([[1.0, -2.0]], dtype=np.float32),
        "b": np.array([0.5], dtype=np.float32),
    }


class TestGoldenBytes:
    def test_exact_serialization(self):
        blob = save_checkpoint("demo", demo_tensors())
        assert blob.hex() == GOLDEN_HEX

    def test_golden_file_loads_anywhere(self):
        # the format is fixed little-endian, so these bytes must parse
        # identically regardless of platform endianness
        kind, tensors = load_checkpoint(bytes.fromhex(GOLDEN_HEX))
        assert kind == "demo"
        np.testing.assert_array_equal(tensors["w"], [[1.0, -2.0]])
        np.testing.assert_array_equal(tensors["b"], [0.5])


class TestRoundTrip:
    def test_bit_exact(self):
        rng = np.random.default_rng(0)
        tensors = {
            "conv.kernel": rng.normal(size=(3, 3, 2, 4)).astype(np.float32),
            "conv.bias": rng.normal(size=4).astype(np.float32),
            "bn.running_mean": rng.normal(size=4).astype(np.float32),
            "meta/bins": np.array(30.0, dtype=np.float32),
        }
        kind, loaded = load_checkpoint(save_checkpoint("scorer", tensors))
        assert kind == "scorer"
        assert set(loaded) == set(tensors)
        for name in tensors:
            assert loaded[name].dtype == np.float32
            np.testing.assert_array_equal(loaded[name], tensors[name])
            assert loaded[name].shape == tensors[name].shape

    def test_file_round_trip(self, tmp_path):
        path = tmp_path / "m.npfc"
        write_checkpoint(path, "demo", demo_tensors())
        kind, tensors = read_checkpoint(path)
        assert kind == "demo" and set(tensors) == {"w", "b"}

    def test_scalar_rank_zero(self):
        kind, loaded = load_checkpoint(save_checkpoint("m", {"s": np.array(7.0, dtype=np.float32)}))
        assert loaded["s"].shape == () and float(loaded["s"]) == 7.0


class TestCorruption:
    def test_bad_magic(self):
        blob = bytearray(save_checkpoint("demo", demo_tensors()))
        blob[0:4] = b"XXXX"
        # fix the CRC so the magic check itself is exercised
        body = bytes(blob[:-4])
        import zlib

        blob[-4:] = struct.pack("<I", zlib.crc32(body) & 0xFFFFFFFF)
        with pytest.raises(CheckpointError, match="magic"):
            load_checkpoint(bytes(blob))

    def test_truncation_detected(self):
        blob = save_checkpoint("demo", demo_tensors())
        for cut in (len(blob) - 1, len(blob) // 2, 5):
            with pytest.raises(CheckpointError):
                load_checkpoint(blob[:cut])

    def test_flipped_payload_byte_fails_crc(self):
        blob = bytearray(save_checkpoint("demo", demo_tensors()))
        blob[-10] ^= 0xFF
        with pytest.raises(CheckpointError, match="CRC"):
            load_checkpoint(bytes(blob))

    def test_unsupported_version(self):
        blob = bytearray(save_checkpoint("demo", demo_tensors()))
        blob[4:8] = struct.pack("<I", 99)
        import zlib

        body = bytes(blob[:-4])
        blob[-4:] = struct.pack("<I", zlib.crc32(body) & 0xFFFFFFFF)
        with pytest.raises(CheckpointError, match="version"):
            load_checkpoint(bytes(blob))
