import numpy as np
import pytest

from crossorder.checkpoint import CheckpointError, load_checkpoint, save_checkpoint
from crossorder.synthetic import SynthConfig, generate_corpus
from crossorder.trainer import TrainConfig, init_state, train

CFG = TrainConfig(learning_rate=1e-2, batch_size=4, epochs=1, seed=1, heads=2)


@pytest.fixture
def trained():
    corpus = generate_corpus(SynthConfig(stories=6, set_size_range=(3, 4), dim=8, seed=2))
    return train(corpus, CFG)


def test_round_trip(tmp_path, trained):
    path = tmp_path / "m.ckpt"
    save_checkpoint(trained, {"seed": 1, "heads": 2}, path)
    ck = load_checkpoint(path)
    assert ck.config == {"seed": 1, "heads": 2}
    for a, b in ((trained.text_model, ck.text_model), (trained.image_model, ck.image_model)):
        na, nb = a.named_arrays(), b.named_arrays()
        assert na.keys() == nb.keys()
        assert all(np.array_equal(na[k], nb[k]) for k in na)
    for a, b in ((trained.text_opt, ck.state.text_opt), (trained.image_opt, ck.state.image_opt)):
        assert (a.step, a.skipped) == (b.step, b.skipped)
        assert all(np.array_equal(a.m[k], b.m[k]) and np.array_equal(a.v[k], b.v[k]) for k in a.m)
    assert [h.line() for h in ck.state.history] == [h.line() for h in trained.history]


def test_resave_is_byte_identical(tmp_path, trained):
    save_checkpoint(trained, {"x": 1}, tmp_path / "a.ckpt")
    save_checkpoint(load_checkpoint(tmp_path / "a.ckpt").state, {"x": 1}, tmp_path / "b.ckpt")
    assert (tmp_path / "a.ckpt").read_bytes() == (tmp_path / "b.ckpt").read_bytes()


def test_bad_magic(tmp_path):
    path = tmp_path / "bad.ckpt"
    path.write_bytes(b"NOTACKPT" + bytes(32))
    with pytest.raises(CheckpointError, match="version error"):
        load_checkpoint(path)


def test_bad_version(tmp_path, trained):
    path = tmp_path / "m.ckpt"
    save_checkpoint(trained, {}, path)
    raw = bytearray(path.read_bytes())
    raw[8] = 99
    path.write_bytes(bytes(raw))
    with pytest.raises(CheckpointError, match="version"):
        load_checkpoint(path)


def test_truncated(tmp_path, trained):
    path = tmp_path / "m.ckpt"
    save_checkpoint(trained, {}, path)
    path.write_bytes(path.read_bytes()[:-9])
    with pytest.raises(CheckpointError, match="truncated"):
        load_checkpoint(path)


def test_dimension_error(tmp_path):
    path = tmp_path / "d32.ckpt"
    save_checkpoint(init_state(32, 32, TrainConfig(heads=8)), {}, path)
    assert load_checkpoint(path, expected_width=32).text_model.width == 32
    with pytest.raises(CheckpointError, match="dimension error"):
        load_checkpoint(path, expected_width=64)
