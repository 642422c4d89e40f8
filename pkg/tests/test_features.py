import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from partwise.exceptions import ParameterError
from partwise.features import (
    MOCK_DIM,
    build_memory_bank,
    coreset_sample,
    mock_extract,
)


def _uniform(color, h=32, w=32):
    img = np.empty((h, w, 3), dtype=np.uint8)
    img[:] = color
    return img


# --- mock extractor ----------------------------------------------------------


def test_mock_uniform_image_identical_vectors():
    fmap = mock_extract(_uniform((180, 20, 20)), stride=8)
    assert fmap.shape == (4, 4, MOCK_DIM)
    flat = fmap.reshape(-1, MOCK_DIM)
    np.testing.assert_allclose(flat - flat[0], 0.0, atol=1e-9)


def test_mock_split_image_two_vector_values():
    # color boundary inside patch column 3; other columns are pure
    img = np.zeros((32, 64, 3), dtype=np.uint8)
    img[:, :28] = (200, 30, 30)
    img[:, 28:] = (40, 60, 200)
    fmap = mock_extract(img, stride=8)
    left = fmap[:, :3].reshape(-1, MOCK_DIM)
    right = fmap[:, 4:].reshape(-1, MOCK_DIM)
    np.testing.assert_allclose(left - left[0], 0.0, atol=1e-9)
    np.testing.assert_allclose(right - right[0], 0.0, atol=1e-9)
    assert np.linalg.norm(left[0] - right[0]) > 1.0


def test_mock_std_zero_on_constant_patches():
    fmap = mock_extract(_uniform((90, 120, 33)), stride=8)
    np.testing.assert_allclose(fmap[..., 3:6], 0.0, atol=1e-9)


def test_mock_rejects_tiny_image():
    with pytest.raises(ParameterError):
        mock_extract(_uniform((0, 0, 0), h=4, w=4), stride=8)


# --- coreset sampling ---------------------------------------------------------


def _as_fmap(points):
    pts = np.asarray(points, dtype=np.float64)
    return pts.reshape(1, len(pts), -1)


def test_coreset_full_ratio_is_permutation():
    fmap = np.random.default_rng(0).normal(size=(3, 4, 5))
    s = coreset_sample(fmap, 1.0)
    assert sorted(s.source_indices.tolist()) == list(range(12))


def test_coreset_single_sample_starts_near_mean():
    pts = [(0.0, 0.0), (1.0, 0.0), (0.4, 0.1), (10.0, 10.0)]
    s = coreset_sample(_as_fmap(pts), 0.25)
    flat = np.asarray(pts)
    mean = flat.mean(axis=0)
    expected = int(np.argmin(((flat - mean) ** 2).sum(axis=1)))
    assert s.source_indices.tolist() == [expected]


def test_coreset_matches_exhaustive_maximin():
    # anchors form the unique dispersion-optimal triple and the mean-nearest
    # start is one of them, so greedy and the exhaustive optimum coincide
    pts = [(0.0, 0.0), (10.0, 0.0), (0.0, 10.0), (9.8, 0.2), (0.2, 9.8)]
    flat = np.asarray(pts)
    best, best_score = None, -1.0
    for subset in itertools.combinations(range(5), 3):
        dmin = min(
            np.linalg.norm(flat[a] - flat[b]) for a, b in itertools.combinations(subset, 2)
        )
        if dmin > best_score:
            best, best_score = set(subset), dmin
    s = coreset_sample(_as_fmap(pts), 3 / 5)
    assert set(s.source_indices.tolist()) == best == {0, 1, 2}


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 10_000))
def test_coreset_greedy_definition(seed):
    r = np.random.default_rng(seed)
    n_total = int(r.integers(6, 14))
    flat = r.normal(size=(n_total, 3))
    n = int(r.integers(2, n_total + 1))
    s = coreset_sample(flat.reshape(1, n_total, 3), n / n_total)
    chosen = s.source_indices.tolist()
    assert len(set(chosen)) == len(chosen) == n
    for t in range(1, n):
        selected = flat[chosen[:t]]
        dists = np.array([np.min(np.linalg.norm(selected - v, axis=1)) for v in flat])
        picked = dists[chosen[t]]
        others = [i for i in range(n_total) if i not in chosen[:t]]
        assert picked >= max(dists[i] for i in others) - 1e-12


def test_coreset_k_distinct_values():
    pts = [(0.0, 0.0)] * 3 + [(5.0, 5.0)] * 3 + [(0.0, 9.0)] * 2
    s = coreset_sample(_as_fmap(pts), 3 / 8)
    chosen = {tuple(v) for v in s.vectors}
    assert chosen == {(0.0, 0.0), (5.0, 5.0), (0.0, 9.0)}


def test_coreset_ratio_bounds():
    fmap = np.zeros((2, 2, 1))
    with pytest.raises(ParameterError):
        coreset_sample(fmap, 0.0)
    with pytest.raises(ParameterError):
        coreset_sample(fmap, 1.5)
    with pytest.raises(ParameterError):
        coreset_sample(fmap, 0.01)  # floor(0.04) = 0


# --- memory bank ---------------------------------------------------------------


def test_memory_bank_counts_and_offsets():
    a = coreset_sample(np.random.default_rng(0).normal(size=(1, 5, 4)), 3 / 5)
    b = coreset_sample(np.random.default_rng(1).normal(size=(1, 5, 4)), 4 / 5)
    bank = build_memory_bank([a, b])
    assert bank.size == 7
    assert bank.offsets == [0, 3]
    np.testing.assert_array_equal(bank.vectors[:3], a.vectors)
    np.testing.assert_array_equal(bank.vectors[3:], b.vectors)


def test_memory_bank_single_image():
    s = coreset_sample(np.random.default_rng(2).normal(size=(1, 5, 4)), 1.0)
    assert build_memory_bank([s]).size == 5


def test_memory_bank_rejects_empty_and_mixed():
    with pytest.raises(ParameterError):
        build_memory_bank([])
    a = coreset_sample(np.random.default_rng(0).normal(size=(1, 4, 3)), 0.5)
    b = coreset_sample(np.random.default_rng(0).normal(size=(1, 4, 5)), 0.5)
    with pytest.raises(ParameterError):
        build_memory_bank([a, b])
