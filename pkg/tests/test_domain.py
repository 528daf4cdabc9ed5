import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from clickmatte import io as cmio
from clickmatte.domain import (AlphaMatte, ClickSet, HintMap, Image, Polarity, RegionLabel,
                               RegionPartition, UncertaintyMap, validate)


def test_zero_hint_map_passes():
    assert validate(HintMap.zeros(8, 8)).ok


def test_hint_map_bad_value_fails():
    data = np.zeros((4, 4), dtype=np.float32)
    data[1, 1] = 0.5
    report = validate(HintMap(data))
    assert not report.ok
    assert any("value set" in v for v in report.violations)


def test_alpha_out_of_range_fails():
    data = np.zeros((4, 4), dtype=np.float32)
    data[0, 0] = 1.2
    report = validate(AlphaMatte(data))
    assert not report.ok
    assert any("range" in v for v in report.violations)


def test_uncertainty_below_floor_fails():
    assert not validate(UncertaintyMap(np.full((3, 3), 1e-6, dtype=np.float32))).ok
    assert validate(UncertaintyMap(np.full((3, 3), 0.1, dtype=np.float32))).ok


def test_image_nan_fails():
    data = np.zeros((2, 2, 3), dtype=np.float32)
    data[0, 0, 0] = np.nan
    assert not validate(Image(data)).ok


def test_domain_values_are_immutable():
    matte = AlphaMatte(np.zeros((4, 4), dtype=np.float32))
    with pytest.raises(ValueError):
        matte.data[0, 0] = 1.0


@given(st.integers(0, 2**32 - 1))
@settings(max_examples=25, deadline=None)
def test_partition_completeness(seed):
    rng = np.random.default_rng(seed)
    labels = rng.integers(0, 3, size=(6, 7)).astype(np.uint8)
    part = RegionPartition(labels)
    n = sum(int(part.mask(l).sum()) for l in RegionLabel)
    assert n == 6 * 7


def test_click_set_ordering_and_append():
    clicks = ClickSet().appended(1, 2, Polarity.FOREGROUND).appended(3, 4, Polarity.BACKGROUND)
    assert [p.sequence_index for p in clicks.points] == [0, 1]
    assert clicks.without_last().points[-1].row == 1
    with pytest.raises(ValueError):
        ClickSet().without_last()


# --- serialization round-trips ---------------------------------------------------


def test_floatmap_roundtrip_bit_exact(tmp_path):
    rng = np.random.default_rng(0)
    data = rng.random((13, 17)).astype(np.float32)
    hint = UncertaintyMap(data + 1.0)
    path = tmp_path / "sigma.fmap"
    cmio.save_uncertainty_map(hint, path)
    back = cmio.load_uncertainty_map(path)
    assert back.data.tobytes() == hint.data.tobytes()


def test_hintmap_roundtrip_bit_exact(tmp_path):
    data = np.zeros((9, 9), dtype=np.float32)
    data[2, 3] = 1.0
    data[5, 5] = -1.0
    path = tmp_path / "hints.fmap"
    cmio.save_hint_map(HintMap(data), path)
    assert cmio.load_hint_map(path).data.tobytes() == data.tobytes()


def test_floatmap_rejects_bad_magic(tmp_path):
    path = tmp_path / "bad.fmap"
    path.write_bytes(b"NOTMAGIC" + b"\x00" * 16)
    with pytest.raises(ValueError, match="magic"):
        cmio.load_hint_map(path)


def test_matte_png_roundtrip_on_16bit_grid(tmp_path):
    rng = np.random.default_rng(1)
    codes = rng.integers(0, 65536, size=(12, 12))
    matte = AlphaMatte((codes / 65535.0).astype(np.float32))
    path = tmp_path / "alpha.png"
    cmio.save_matte_png(matte, path)
    back = cmio.load_matte_png(path)
    assert np.array_equal(np.round(back.data * 65535), codes)


def test_image_png_roundtrip_on_8bit_grid(tmp_path):
    rng = np.random.default_rng(2)
    codes = rng.integers(0, 256, size=(8, 8, 3))
    img = Image((codes / 255.0).astype(np.float32))
    path = tmp_path / "img.png"
    cmio.save_image_png(img, path)
    assert np.array_equal(np.round(cmio.load_image_png(path).data * 255), codes)


def test_clicks_json_roundtrip(tmp_path):
    clicks = ClickSet(radius=9).appended(1, 2, Polarity.FOREGROUND).appended(7, 8, Polarity.BACKGROUND)
    path = tmp_path / "clicks.json"
    cmio.save_clicks(clicks, path)
    back = cmio.load_clicks(path, radius=9)
    assert back == clicks
    assert cmio.clicks_to_json(back)[0] == {"row": 1, "col": 2, "polarity": "fg", "i": 0}
