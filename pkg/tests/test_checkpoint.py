"""Binary parameter container round-trips."""

import numpy as np
import pytest

from rdpcgan.exceptions import DataError
from rdpcgan.nn import load_params, save_params


def test_round_trip_preserves_values_and_shapes(tmp_path):
    rng = np.random.default_rng(3)
    tensors = {
        "enc/conv1.weight": rng.normal(size=(4, 2, 3)),
        "enc/conv1.bias": rng.normal(size=4),
        "gen/norm.running_mean": rng.normal(size=7),
        "scalarish": rng.normal(size=(1,)),
    }
    path = tmp_path / "m.ckpt"
    save_params(path, tensors)
    loaded = load_params(path)
    assert set(loaded) == set(tensors)
    for key, arr in tensors.items():
        assert loaded[key].shape == arr.shape
        assert np.array_equal(loaded[key], arr)


def test_save_is_deterministic(tmp_path):
    tensors = {"b": np.arange(3.0), "a": np.ones((2, 2))}
    p1, p2 = tmp_path / "a.ckpt", tmp_path / "b.ckpt"
    save_params(p1, tensors)
    save_params(p2, dict(reversed(list(tensors.items()))))
    assert p1.read_bytes() == p2.read_bytes()


def test_bad_magic_rejected(tmp_path):
    path = tmp_path / "junk.ckpt"
    path.write_bytes(b"NOTACKPT" + b"\0" * 16)
    with pytest.raises(DataError, match="magic"):
        load_params(path)
