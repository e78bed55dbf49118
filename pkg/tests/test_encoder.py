import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from crossorder.encoder import attention_weights, encode_set, encode_set_backward, init_params

from _oracles import central_diff, encoder_by_loops, rel_error


def test_init_is_deterministic():
    a, b = init_params(32, 8, seed=7), init_params(32, 8, seed=7)
    for ba, bb in zip(a.blocks, b.blocks):
        for k in ba:
            assert np.array_equal(ba[k], bb[k])


def test_init_biases_zero_and_scale():
    p = init_params(32, 8, seed=3)
    for blk in p.blocks:
        for k in ("ln1_b", "ln2_b", "bo", "b1", "b2"):
            assert np.all(blk[k] == 0.0)
        w = np.concatenate([blk[k].ravel() for k in ("wq", "wk", "wv", "wo", "w1", "w2")])
        assert abs(w.mean()) < 0.02
        assert w.std() == pytest.approx(1 / np.sqrt(32), rel=0.05)


def test_width_must_divide_heads():
    with pytest.raises(ValueError, match="width not divisible by heads"):
        init_params(33, 8, seed=0)


def test_width_mismatch():
    with pytest.raises(ValueError, match="width mismatch"):
        encode_set(np.zeros((3, 16)), init_params(32, 8, 0))


def test_zero_network_is_identity(rng):
    p = init_params(16, 4, seed=1)
    for blk in p.blocks:
        for k in ("wq", "wk", "wv", "wo", "w1", "w2"):
            blk[k][...] = 0.0
    x = rng.normal(size=(5, 16))
    assert np.array_equal(encode_set(x, p), x)


def test_singleton_attends_to_itself(rng):
    p = init_params(16, 4, seed=2)
    x = rng.normal(size=(1, 16))
    np.testing.assert_array_equal(attention_weights(x, p), np.ones((4, 1, 1)))
    np.testing.assert_allclose(encode_set(x, p), encoder_by_loops(x, p.blocks, 4), atol=1e-12)


@pytest.mark.parametrize("blocks", [1, 2])
def test_matches_loop_reimplementation(rng, blocks):
    p = init_params(32, 8, seed=11, n_blocks=blocks)
    x = rng.normal(size=(3, 32))
    np.testing.assert_allclose(encode_set(x, p), encoder_by_loops(x, p.blocks, 8), atol=1e-10, rtol=0)


def test_attention_rows_sum_to_one(rng):
    p = init_params(16, 4, seed=4)
    for n in range(1, 9):
        att = attention_weights(rng.normal(size=(n, 16)) * 3, p)
        assert np.max(np.abs(att.sum(axis=-1) - 1.0)) < 1e-12


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 8), st.integers(0, 10_000))
def test_permutation_equivariance(n, seed):
    r = np.random.default_rng(seed)
    p = init_params(16, 4, seed=seed)
    x = r.normal(size=(n, 16))
    perm = r.permutation(n)
    np.testing.assert_allclose(encode_set(x[perm], p), encode_set(x, p)[perm], atol=1e-12)


def test_zero_upstream_gives_zero_grads(rng):
    p = init_params(8, 2, seed=0)
    x = rng.normal(size=(3, 8))
    grads, dx = encode_set_backward(x, p, np.zeros((3, 8)))
    assert not np.any(dx)
    assert all(not np.any(g) for blk in grads for g in blk.values())


def test_backward_shape_mismatch(rng):
    p = init_params(8, 2, seed=0)
    with pytest.raises(ValueError, match="shape mismatch"):
        encode_set_backward(rng.normal(size=(3, 8)), p, np.zeros((2, 8)))


@pytest.mark.parametrize("seed", range(5))
def test_gradients_match_finite_differences(seed):
    r = np.random.default_rng(seed)
    p = init_params(8, 2, seed=seed, n_blocks=2)
    x = r.normal(size=(3, 8))
    up = r.normal(size=(3, 8))
    grads, dx = encode_set_backward(x, p, up)

    def f():
        return float((encode_set(x, p) * up).sum())

    for i, blk in enumerate(p.blocks):
        for k, arr in blk.items():
            assert rel_error(grads[i][k], central_diff(f, arr)) < 1e-4, (i, k)
    assert rel_error(dx, central_diff(f, x)) < 1e-4


def test_duplicate_elements_get_equal_input_grads():
    r = np.random.default_rng(9)
    p = init_params(8, 2, seed=9)
    x = r.normal(size=(3, 8))
    x[2] = x[0]
    up = r.normal(size=(3, 8))
    up[2] = up[0]
    _, dx = encode_set_backward(x, p, up)
    np.testing.assert_allclose(dx[0], dx[2], atol=1e-12)

    def f():
        return float((encode_set(x, p) * up).sum())

    fd = central_diff(f, x)
    np.testing.assert_allclose(fd[0], fd[2], atol=1e-8)
    assert rel_error(dx, fd) < 1e-4
