import numpy as np
import pytest
import torch
from hypothesis import given, settings
from hypothesis import strategies as st

from clickmatte.domain import AlphaMatte, Image, UncertaintyMap
from clickmatte.models import RefinementNet, RefinerConfig
from clickmatte.refinement import (PatchSpec, _window_sums, mine_training_patches,
                                   patches_from_json, patches_to_json, refine_matte,
                                   select_patches)
from tests.oracles import max_sum_window_reference


def _sigma(data):
    return UncertaintyMap(np.asarray(data, dtype=np.float32) + 1e-4)


def _brute_window_sums(field, k):
    h, w = field.shape
    out = np.zeros((h - k + 1, w - k + 1))
    for t in range(h - k + 1):
        for l in range(w - k + 1):
            out[t, l] = field[t:t + k, l:l + k].sum()
    return out


def test_window_sums_match_brute_force():
    rng = np.random.default_rng(0)
    field = rng.random((20, 17)).astype(np.float64)
    for k in (3, 5, 8):
        got = _window_sums(field, k)
        expected = _brute_window_sums(field, k)
        assert got.shape == expected.shape
        assert np.allclose(got, expected, atol=1e-9)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**31 - 1), st.integers(2, 5))
def test_window_sums_property(seed, k):
    rng = np.random.default_rng(seed)
    field = rng.random((12, 14))
    sums = _window_sums(field, k)
    assert np.allclose(sums, _brute_window_sums(field, k))
    best_sum, best_t, best_l = max_sum_window_reference(field, k)
    assert sums[best_t, best_l] == pytest.approx(best_sum)


def test_select_zero_budget_is_empty():
    assert select_patches(_sigma(np.ones((128, 128))), 64, 0) == []


def test_select_impulse_window_contains_impulse():
    field = np.zeros((256, 256), dtype=np.float32)
    field[100, 100] = 1.0
    patches = select_patches(_sigma(field), 64, 1)
    assert len(patches) == 1
    p = patches[0]
    assert p.top <= 100 < p.top + 64 and p.left <= 100 < p.left + 64
    # greedy-optimal: the selected window matches the exhaustive-search oracle
    best_sum, best_t, best_l = max_sum_window_reference(
        np.asarray(field, dtype=np.float64) + 1e-4, 64)
    assert p.score == pytest.approx(best_sum, rel=1e-6)
    assert (p.top, p.left) == (best_t, best_l)


def test_select_uniform_sigma_gives_quadrants_in_raster_order():
    patches = select_patches(_sigma(np.ones((128, 128))), 64, 4)
    assert [(p.top, p.left) for p in patches] == [(0, 0), (0, 64), (64, 0), (64, 64)]


def test_selected_patches_are_disjoint_and_scores_non_increasing():
    rng = np.random.default_rng(1)
    sigma = _sigma(rng.random((192, 256)))
    patches = select_patches(sigma, 64, 8)
    for i, a in enumerate(patches):
        for b in patches[i + 1:]:
            assert not a.overlaps(b)
    scores = [p.score for p in patches]
    assert scores == sorted(scores, reverse=True)


def test_select_on_large_image_uses_stride_grid_and_stays_in_bounds():
    rng = np.random.default_rng(2)
    sigma = _sigma(rng.random((600, 800)))
    patches = select_patches(sigma, 64, 8)
    assert len(patches) == 8
    for p in patches:
        assert 0 <= p.top <= 600 - 64 and 0 <= p.left <= 800 - 64


def test_budget_capped_by_image_area():
    # a 128x128 image fits at most four disjoint 64x64 windows
    patches = select_patches(_sigma(np.ones((128, 128))), 64, 8)
    assert len(patches) == 4


def test_mine_training_patches_ranks_by_error():
    gt = AlphaMatte(np.zeros((128, 192), dtype=np.float32))
    pred = np.zeros((128, 192), dtype=np.float32)
    pred[10:20, 140:150] = 1.0  # concentrated error in the right part
    patches = mine_training_patches(AlphaMatte(pred), gt, 64, 2)
    p = patches[0]
    assert p.left <= 140 and p.left + 64 >= 150 and p.top <= 10


def test_refine_matte_identity_refiner_is_noop():
    torch.manual_seed(0)
    refiner = RefinementNet(RefinerConfig(width=8)).eval()
    rng = np.random.default_rng(3)
    image = Image(rng.random((128, 128, 3)).astype(np.float32))
    alpha = AlphaMatte(rng.random((128, 128)).astype(np.float32))
    patches = select_patches(_sigma(rng.random((128, 128))), 64, 4)
    out = refine_matte(image, alpha, patches, refiner)
    assert np.array_equal(out.data, alpha.data)


def test_refine_matte_outside_patches_bit_identical():
    torch.manual_seed(1)
    refiner = RefinementNet(RefinerConfig(width=8))
    with torch.no_grad():
        refiner.tail.weight.normal_(0, 0.1)
    refiner.eval()
    rng = np.random.default_rng(4)
    image = Image(rng.random((160, 160, 3)).astype(np.float32))
    alpha = AlphaMatte(rng.random((160, 160)).astype(np.float32))
    patches = select_patches(_sigma(rng.random((160, 160))), 64, 2)
    out = refine_matte(image, alpha, patches, refiner)
    inside = np.zeros((160, 160), dtype=bool)
    for p in patches:
        inside[p.top:p.top + 64, p.left:p.left + 64] = True
    assert np.array_equal(out.data[~inside], alpha.data[~inside])
    assert not np.array_equal(out.data[inside], alpha.data[inside])


def test_refine_matte_rejects_out_of_bounds_patch():
    refiner = RefinementNet(RefinerConfig(width=8)).eval()
    rng = np.random.default_rng(5)
    image = Image(rng.random((100, 100, 3)).astype(np.float32))
    alpha = AlphaMatte(rng.random((100, 100)).astype(np.float32))
    with pytest.raises(ValueError, match="bounds"):
        refine_matte(image, alpha, [PatchSpec(50, 50, 64, 1.0)], refiner)


def test_refine_matte_rejects_overlapping_patches():
    refiner = RefinementNet(RefinerConfig(width=8)).eval()
    rng = np.random.default_rng(6)
    image = Image(rng.random((128, 128, 3)).astype(np.float32))
    alpha = AlphaMatte(rng.random((128, 128)).astype(np.float32))
    bad = [PatchSpec(0, 0, 64, 1.0), PatchSpec(32, 32, 64, 0.5)]
    with pytest.raises(ValueError, match="overlap"):
        refine_matte(image, alpha, bad, refiner)


def test_patch_spec_json_round_trip():
    patches = [PatchSpec(0, 64, 64, 2.5), PatchSpec(64, 0, 64, 1.25)]
    records = patches_to_json(patches)
    assert records[0] == {"top": 0, "left": 64, "k": 64, "score": 2.5}
    assert patches_from_json(records) == patches
