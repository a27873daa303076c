"""Tests for the plain-text checkpoint format."""

import math

import numpy as np
import pytest

from privgraph.checkpoint import FormatError, load_checkpoint, save_checkpoint
from privgraph.models import ClassifierParams, EncoderParams, PredictorParams, init_params
from privgraph.numkit import Rng
from privgraph.trainer import ModelState


def _state(dims=(5, 4, 3, 2), seed=0):
    theta, phi, psi = init_params(dims, Rng(seed))
    return ModelState(theta=theta, phi=phi, psi=psi,
                      adam_theta=None, adam_phi=None, adam_psi=None)


def _assert_roundtrip(state, path):
    save_checkpoint(path, state)
    theta, phi, psi = load_checkpoint(path)
    assert np.array_equal(theta.w0, state.theta.w0)
    assert np.array_equal(theta.w1, state.theta.w1)
    assert np.array_equal(phi.wb, state.phi.wb)
    assert np.array_equal(psi.wc, state.psi.wc)


def test_roundtrip_is_bitwise(tmp_path):
    for seed in range(5):
        _assert_roundtrip(_state(seed=seed), tmp_path / f"s{seed}.txt")


def test_roundtrip_survives_awkward_values(tmp_path):
    # subnormals, huge magnitudes, negative zero, and digits that need
    # all 17 significant places
    state = _state(dims=(2, 3, 2, 2))
    state.theta.w0[:] = [[5e-324, -1.7e308, 0.1 + 0.2], [-0.0, math.pi, 1e-300]]
    _assert_roundtrip(state, tmp_path / "awkward.txt")
    text = (tmp_path / "awkward.txt").read_text()
    assert "PRIVGRAPH-CKPT v1 2 3 2 2" in text.splitlines()[0]


def test_save_rejects_inconsistent_shapes(tmp_path):
    state = _state()
    state.phi = PredictorParams(wb=np.zeros((2, 2)))  # embed dim is 3
    with pytest.raises(ValueError):
        save_checkpoint(tmp_path / "bad.txt", state)


def test_missing_file_raises(tmp_path):
    with pytest.raises(FileNotFoundError):
        load_checkpoint(tmp_path / "nope.txt")


def _lines(tmp_path, name="ok.txt"):
    path = tmp_path / name
    save_checkpoint(path, _state())
    return path, path.read_text().splitlines()


def test_bad_magic_rejected(tmp_path):
    path, lines = _lines(tmp_path)
    lines[0] = lines[0].replace("PRIVGRAPH-CKPT", "SOMETHING-ELSE")
    path.write_text("\n".join(lines) + "\n")
    with pytest.raises(FormatError):
        load_checkpoint(path)


def test_unknown_version_rejected(tmp_path):
    path, lines = _lines(tmp_path)
    lines[0] = lines[0].replace(" v1 ", " v2 ")
    path.write_text("\n".join(lines) + "\n")
    with pytest.raises(FormatError):
        load_checkpoint(path)


def test_nonpositive_dimension_rejected(tmp_path):
    path = tmp_path / "dim.txt"
    path.write_text("PRIVGRAPH-CKPT v1 0 4 3 2\n")
    with pytest.raises(FormatError):
        load_checkpoint(path)


def test_truncated_file_rejected(tmp_path):
    path, lines = _lines(tmp_path)
    path.write_text("\n".join(lines[:-1]) + "\n")
    with pytest.raises(FormatError):
        load_checkpoint(path)


def test_empty_file_rejected(tmp_path):
    path = tmp_path / "empty.txt"
    path.write_text("")
    with pytest.raises(FormatError):
        load_checkpoint(path)


def test_block_dims_must_match_header(tmp_path):
    path, lines = _lines(tmp_path)
    idx = next(i for i, l in enumerate(lines) if l.startswith("w1 "))
    lines[idx] = "w1 9 9"
    path.write_text("\n".join(lines) + "\n")
    with pytest.raises(FormatError):
        load_checkpoint(path)


def test_wrong_block_name_rejected(tmp_path):
    path, lines = _lines(tmp_path)
    idx = next(i for i, l in enumerate(lines) if l.startswith("wb "))
    lines[idx] = lines[idx].replace("wb", "wx")
    path.write_text("\n".join(lines) + "\n")
    with pytest.raises(FormatError):
        load_checkpoint(path)


def test_short_row_rejected(tmp_path):
    path, lines = _lines(tmp_path)
    lines[2] = " ".join(lines[2].split()[:-1])  # drop one value from w0 row 0
    path.write_text("\n".join(lines) + "\n")
    with pytest.raises(FormatError):
        load_checkpoint(path)


def test_non_numeric_value_rejected(tmp_path):
    path, lines = _lines(tmp_path)
    parts = lines[2].split()
    parts[0] = "bogus"
    lines[2] = " ".join(parts)
    path.write_text("\n".join(lines) + "\n")
    with pytest.raises(FormatError):
        load_checkpoint(path)


def test_trailing_content_rejected(tmp_path):
    path, lines = _lines(tmp_path)
    lines.append("leftover junk")
    path.write_text("\n".join(lines) + "\n")
    with pytest.raises(FormatError):
        load_checkpoint(path)
