import io
import random
import struct
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from labeloracle.harness import assign_labels, generate_grid
from labeloracle.oracle import build_oracle
from labeloracle.serialize import (MAGIC, ChecksumError, SerializationError, TruncatedInput,
                                   VersionMismatch, decode_varints, deserialize_oracle, dumps,
                                   encode_varints, serialize_oracle)


@pytest.fixture(scope="module")
def grid_bytes():
    g = assign_labels(generate_grid(10, 1, 50, 3), 4, "clustered", 3)
    orc = build_oracle(g, Fraction(1, 4))
    return orc, dumps(orc)


@given(st.lists(st.integers(-(1 << 63), (1 << 63) - 1), max_size=200))
def test_varint_round_trip(xs):
    arr = np.array(xs, dtype=np.int64)
    assert decode_varints(encode_varints(arr)).tolist() == xs


def test_small_varints_are_one_byte():
    assert len(encode_varints(np.array([0, -1, 1, 63, -64]))) == 5
    assert len(encode_varints(np.array([64]))) == 2


def test_byte_identical_round_trip(grid_bytes):
    orc, data = grid_bytes
    again = deserialize_oracle(data)
    assert dumps(again) == data


def test_repeated_builds_identical(grid_bytes):
    orc, data = grid_bytes
    assert dumps(build_oracle(orc.graph, orc.eps)) == data


def test_queries_survive_round_trip(grid_bytes, tmp_path):
    orc, data = grid_bytes
    path = tmp_path / "o.bin"
    serialize_oracle(orc, str(path))
    back = deserialize_oracle(str(path))
    rnd = random.Random(1)
    g = orc.graph
    for _ in range(1000):
        u = rnd.randrange(g.n)
        if rnd.random() < 0.5:
            lab = rnd.randrange(g.num_labels)
            assert back.query_vertex_label(u, lab) == orc.query_vertex_label(u, lab)
        else:
            w = rnd.randrange(g.n)
            assert back.query_vertex_vertex(u, w) == orc.query_vertex_vertex(u, w)


def test_stream_io(grid_bytes):
    orc, data = grid_bytes
    buf = io.BytesIO()
    serialize_oracle(orc, buf)
    buf.seek(0)
    assert dumps(deserialize_oracle(buf)) == data


def test_header_fields(grid_bytes):
    orc, data = grid_bytes
    magic, version, _, n, num, den, nodes, plen = struct.unpack_from("<8sHHQQQQQ", data)
    assert magic == MAGIC and version == 1
    assert (n, num, den, nodes) == (orc.graph.n, 1, 4, len(orc.tree.nodes))
    assert len(data) == struct.calcsize("<8sHHQQQQQ") + plen + 32


def test_corrupted_byte(grid_bytes):
    _, data = grid_bytes
    bad = bytearray(data)
    bad[len(bad) // 2] ^= 0x40
    with pytest.raises(ChecksumError):
        deserialize_oracle(bytes(bad))


def test_truncated(grid_bytes):
    _, data = grid_bytes
    for cut in (10, len(data) - 1):
        with pytest.raises(TruncatedInput):
            deserialize_oracle(data[:cut])


def test_version_mismatch(grid_bytes):
    _, data = grid_bytes
    bad = bytearray(data)
    struct.pack_into("<H", bad, 8, 2)
    with pytest.raises(VersionMismatch):
        deserialize_oracle(bytes(bad))


def test_bad_magic():
    with pytest.raises(SerializationError):
        deserialize_oracle(b"x" * 100)
