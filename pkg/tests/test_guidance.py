import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from crossorder.guidance import (Axis, GuidanceConfig, GuidanceMode, align_argmax, alignment_map, cgo_mu,
                                 guidance_additions, mask_matrix, refine_image, refine_text, renormalize_pairs)

from _oracles import replay_cgo_mu

A = np.array([[0, 0.95], [0.05, 0]])
B = np.array([[0, 0.5], [0.5, 0]])
C = np.array([[0.9, 0.1], [0.2, 0.8]])


def random_instance(r, m, n, rounded=False):
    def scores(k):
        s = r.uniform(0, 1, size=(k, k))
        np.fill_diagonal(s, 0)
        return s
    c = r.uniform(0, 1, size=(m, n))
    if rounded:
        c = np.round(c, 1)  # provoke argmax ties
    return scores(n), scores(m), c


def test_mask_examples():
    assert np.array_equal(mask_matrix(A, 0.9), [[0, 0.95], [0, 0]])
    assert not np.any(mask_matrix(A, 1.0))
    np.testing.assert_array_equal(mask_matrix(A, 0.0), A)


def test_align_examples():
    assert align_argmax(np.array([[0.9, 0.1]]), 0) == 0
    assert align_argmax(np.array([[0.5, 0.5]]), 0) == 0
    assert align_argmax(np.array([[0.2, 0.8], [0.7, 0.3]]), 0, Axis.COLUMN) == 1
    assert list(alignment_map(np.array([[0.2, 0.8], [0.7, 0.3]]), "column")) == [1, 0]


def test_align_out_of_range():
    with pytest.raises(IndexError):
        align_argmax(C, 2)
    with pytest.raises(IndexError):
        align_argmax(np.zeros((3, 2)), 2, Axis.COLUMN)


def test_cgo_mu_hand_example():
    out = cgo_mu(B, A, C, 0.9)
    np.testing.assert_allclose(out, [[0, 1.45], [0.5, 0]], atol=1e-15)


def test_cgo_mu_collision_skipped():
    out = cgo_mu(B, A, np.array([[0.9, 0.1], [0.8, 0.2]]), 0.9)
    assert np.array_equal(out, B)


def test_theta_one_is_identity(rng):
    for _ in range(20):
        tgt, src, sim = random_instance(rng, 4, 3)
        assert np.array_equal(cgo_mu(tgt, src, sim, 1.0), tgt)


def test_mode_off_returns_target():
    cfg = GuidanceConfig(mode=GuidanceMode.OFF)
    out = cgo_mu(B, A, C, 0.0, cfg)
    assert np.array_equal(out, B) and out is not B


def test_refine_directions():
    cfg = GuidanceConfig()
    np.testing.assert_allclose(refine_image(B, A, C, cfg), [[0, 1.45], [0.5, 0]])
    # image guides text through the columns of C
    a_ref = refine_text(np.full((2, 2), 0.5) - np.eye(2) * 0.5, np.array([[0, 0.1], [0.85, 0]]), C, cfg)
    np.testing.assert_allclose(a_ref, [[0, 0.5], [1.35, 0]])


def test_shape_errors():
    with pytest.raises(ValueError, match="shape mismatch"):
        cgo_mu(B, np.zeros((3, 3)), C, 0.5)
    with pytest.raises(ValueError, match="shape mismatch"):
        cgo_mu(np.zeros((3, 3)), A, C, 0.5)
    with pytest.raises(ValueError, match="shape mismatch"):
        cgo_mu(np.zeros((2, 3)), A, C, 0.5)


def test_threshold_range():
    with pytest.raises(ValueError):
        GuidanceConfig(theta_text_source=1.5)


def test_additions_match_difference(rng):
    for _ in range(20):
        tgt, src, sim = random_instance(rng, 5, 4)
        add = guidance_additions(4, src, sim, 0.6)
        np.testing.assert_allclose(tgt + add, cgo_mu(tgt, src, sim, 0.6), atol=1e-14)


sizes = st.integers(1, 6)


@settings(max_examples=100, deadline=None)
@given(sizes, sizes, st.integers(0, 100_000), st.floats(0, 1), st.booleans(), st.sampled_from(["row", "column"]))
def test_matches_literal_replay(m, n, seed, theta, rounded, axis):
    r = np.random.default_rng(seed)
    tgt, src, sim = random_instance(r, m, n, rounded)
    if axis == "column":
        tgt, src = src, tgt
    for renorm in (False, True):
        out = cgo_mu(tgt, src, sim, theta, GuidanceConfig(renormalize=renorm), axis)
        assert np.array_equal(out, replay_cgo_mu(tgt, src, sim, theta, axis, renorm))


@settings(max_examples=100, deadline=None)
@given(sizes, sizes, st.integers(0, 100_000), st.floats(0, 1))
def test_never_decreases(m, n, seed, theta):
    tgt, src, sim = random_instance(np.random.default_rng(seed), m, n, True)
    assert np.all(cgo_mu(tgt, src, sim, theta) >= tgt)


@settings(max_examples=100, deadline=None)
@given(st.integers(2, 6), sizes, st.integers(0, 100_000), st.floats(0, 1))
def test_renormalized_pairs_sum_to_one(m, n, seed, theta):
    tgt, src, sim = random_instance(np.random.default_rng(seed), m, n)
    out = cgo_mu(tgt, src, sim, theta, GuidanceConfig(renormalize=True))
    off = ~np.eye(len(out), dtype=bool)
    assert np.max(np.abs((out + out.T)[off] - 1.0), initial=0.0) < 1e-12
    assert np.all(np.diag(out) == 0)


def test_renormalize_keeps_ratio():
    out = renormalize_pairs(np.array([[0, 3.0], [1.0, 0]]))
    np.testing.assert_allclose(out, [[0, 0.75], [0.25, 0]])


def test_deterministic(rng):
    tgt, src, sim = random_instance(rng, 6, 6, True)
    assert np.array_equal(cgo_mu(tgt, src, sim, 0.3), cgo_mu(tgt.copy(), src.copy(), sim.copy(), 0.3))
