import numpy as np
import pytest

from edbosonic import serialize
from edbosonic.fock import HilbertLayout, destroy


def test_binary_round_trip(tmp_path):
    lay = HilbertLayout((3, 2))
    a = destroy(lay, 1)
    p = tmp_path / "a.bin"
    serialize.save(p, a)
    blob = p.read_bytes()
    assert blob[:8] == b"EDBMAT01"
    back = serialize.load(p)
    assert back.layout == lay
    assert np.array_equal(back.matrix, a.matrix)


def test_json_round_trip_plain_array(tmp_path):
    m = np.arange(6).reshape(2, 3) * (1 + 1j)
    p = tmp_path / "m.json"
    serialize.save(p, m)
    assert np.array_equal(serialize.load(p), m)


def test_bytes_are_deterministic():
    m = np.eye(3) * 0.5j
    assert serialize.to_bytes(m) == serialize.to_bytes(m.copy())


def test_bad_magic():
    with pytest.raises(ValueError):
        serialize.from_bytes(b"NOTMAGIC" + b"\0" * 16)
