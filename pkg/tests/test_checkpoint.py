import tempfile
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from sccode.checkpoint import (
    MAGIC,
    load_model,
    read_arrays,
    save_model,
    write_arrays,
    write_loss_trace,
)
from sccode.classifier import init_classifier
from sccode.data import MaskSpec, SyntheticSpec, apply_mask, generate_synthetic
from sccode.errors import ParseError
from sccode.numerics import RngStream
from sccode.training import TrainConfig, train_sequential, train_simultaneous


def test_array_round_trip(tmp_path, rng):
    arrays = {"a": rng.normal(size=(3, 4)), "b": np.arange(5), "c": rng.random(6) > 0.5,
              "scalar": np.array(2.5), "empty": np.zeros((0, 3))}
    write_arrays(tmp_path / "x.bin", arrays, {"note": "hi"})
    back, meta = read_arrays(tmp_path / "x.bin")
    assert meta == {"note": "hi"}
    for k, v in arrays.items():
        assert back[k].shape == v.shape
        np.testing.assert_array_equal(back[k], v)
    assert (tmp_path / "x.bin").read_bytes()[:8] == MAGIC


def test_layout_is_little_endian(tmp_path):
    write_arrays(tmp_path / "x.bin", {"d": np.array([1.0])})
    raw = (tmp_path / "x.bin").read_bytes()
    assert raw[-8:] == np.float64(1.0).tobytes() == bytes.fromhex("000000000000f03f")
    assert raw[-16:-8] == (1).to_bytes(8, "little")


def test_corrupt_files(tmp_path):
    write_arrays(tmp_path / "x.bin", {"d": np.ones(4)})
    raw = (tmp_path / "x.bin").read_bytes()
    (tmp_path / "t.bin").write_bytes(raw[:-3])
    with pytest.raises(ParseError, match="truncated"):
        read_arrays(tmp_path / "t.bin")
    (tmp_path / "m.bin").write_bytes(b"NOTACKPT" + raw[8:])
    with pytest.raises(ParseError, match="magic"):
        read_arrays(tmp_path / "m.bin")
    (tmp_path / "e.bin").write_bytes(raw + b"\0")
    with pytest.raises(ParseError, match="trailing"):
        read_arrays(tmp_path / "e.bin")


@pytest.mark.parametrize("hidden", [(), (5, 3)])
@pytest.mark.parametrize("trainer", [train_simultaneous, train_sequential])
def test_model_round_trip(tmp_path, hidden, trainer):
    ds, _ = generate_synthetic(SyntheticSpec(8, 10, 2, 50, 0, 0.1, seed=1))
    ds = apply_mask(ds, MaskSpec("uniform_random", 0.3, seed=1))
    model = trainer(ds, hidden, TrainConfig(n_iter=20, batch_size=10, n_atoms=10))
    save_model(model, tmp_path / "m.ckpt", {"method": "x"})
    back, meta = load_model(tmp_path / "m.ckpt")
    assert meta["method"] == "x"
    np.testing.assert_array_equal(back.dictionary, model.dictionary)
    np.testing.assert_array_equal(back.train_codes, model.train_codes)
    np.testing.assert_array_equal(back.loss_trace, model.loss_trace)
    for a, b in zip(back.classifier.params(), model.classifier.params()):
        np.testing.assert_array_equal(a, b)


def test_bare_classifier_and_trace_csv(tmp_path):
    clf = init_classifier(RngStream(0), 4, [3], 2)
    save_model(clf, tmp_path / "c.ckpt")
    back, _ = load_model(tmp_path / "c.ckpt")
    assert back.dictionary is None
    np.testing.assert_array_equal(back.classifier.head_w, clf.head_w)

    ds, _ = generate_synthetic(SyntheticSpec(8, 10, 2, 50, 0, 0.1, seed=1))
    model = train_simultaneous(ds, (), TrainConfig(n_iter=30, batch_size=10, n_atoms=10))
    write_loss_trace(model, tmp_path / "trace.csv")
    lines = (tmp_path / "trace.csv").read_text().splitlines()
    assert lines[0] == "iteration,J0,J1,J2,mean_nnz"
    assert len(lines) == 4 and lines[1].startswith("0,")


def test_wrong_kind_rejected(tmp_path):
    write_arrays(tmp_path / "x.bin", {"d": np.ones(2)}, {"kind": "other"})
    with pytest.raises(ParseError):
        load_model(tmp_path / "x.bin")


@given(st.dictionaries(st.text(min_size=1, max_size=12),
                       hnp.arrays(st.sampled_from([np.float64, np.int64, np.bool_]),
                                  hnp.array_shapes(min_dims=0, max_dims=3, min_side=0,
                                                   max_side=4)),
                       max_size=4))
def test_array_round_trip_property(arrays):
    with tempfile.TemporaryDirectory() as tmp:
        path = Path(tmp) / "x.bin"
        write_arrays(path, arrays, {"n": len(arrays)})
        back, meta = read_arrays(path)
    assert meta == {"n": len(arrays)} and list(back) == list(arrays)
    for k, v in arrays.items():
        assert back[k].dtype == v.dtype and back[k].shape == v.shape
        np.testing.assert_array_equal(back[k], v)
