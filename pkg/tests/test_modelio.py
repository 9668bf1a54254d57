import struct

import numpy as np
import pytest

from g2dlda import ProjectionModel, load_model, save_model
from g2dlda.modelio import ModelFormatError, dumps_model, loads_model


def test_roundtrip(tmp_path):
    W, _ = np.linalg.qr(np.random.default_rng(0).standard_normal((7, 3)))
    save_model(ProjectionModel(W), tmp_path / "m.bin")
    back = load_model(tmp_path / "m.bin")
    assert back.W.tobytes() == W.tobytes()
    assert back.orthonormal


def test_layout():
    W = np.arange(6, dtype=float).reshape(3, 2)
    buf = dumps_model(ProjectionModel(W))
    assert buf[:4] == b"G2DL"
    assert struct.unpack_from("<III", buf, 4) == (1, 3, 2)
    assert struct.unpack_from("<6d", buf, 16) == tuple(range(6))
    assert not loads_model(buf).orthonormal


def test_bad_inputs():
    good = dumps_model(ProjectionModel(np.eye(2)))
    with pytest.raises(ModelFormatError, match="magic"):
        loads_model(b"XXXX" + good[4:])
    with pytest.raises(ModelFormatError, match="version"):
        loads_model(good[:4] + struct.pack("<I", 9) + good[8:])
    with pytest.raises(ModelFormatError):
        loads_model(good[:-1])
    with pytest.raises(ModelFormatError):
        loads_model(b"G2")
