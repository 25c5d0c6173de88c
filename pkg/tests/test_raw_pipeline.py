# tests/test_raw_pipeline.py
from __future__ import annotations

from pathlib import Path

import numpy as np
import pytest
from PIL import Image

from src.domain.errors import ContractViolation, FormatError
from src.domain.types import BayerPattern, RawFrame, RgbImage
from src.io.raw_io import raw_path, read_raw, save_png, write_raw
from src.raw.frame import exposure_scale, normalize, requantize
from src.raw.isp import channel_masks, demosaic_bilinear, simple_isp


def _frame(data, **kw) -> RawFrame:
    return RawFrame(data=np.asarray(data, dtype=np.uint16), **kw)


def test_normalize_examples():
    raw = _frame([[4095, 240], [2167, 0]])
    x = normalize(raw)
    assert x.shape == (1, 1, 2, 2)
    assert x[0, 0, 0, 0] == 1.0
    assert x[0, 0, 0, 1] == 0.0
    assert x[0, 0, 1, 0] == pytest.approx((2167 - 240) / 3855)
    assert x[0, 0, 1, 1] == 0.0  # 黒レベル未満はクランプ


def test_raw_frame_invariants():
    with pytest.raises(FormatError):
        _frame(np.zeros((3, 2)))
    with pytest.raises(FormatError):
        _frame([[5000, 0], [0, 0]])
    with pytest.raises(FormatError):
        _frame(np.zeros((2, 2)), bit_depth=8, black_level=16, white_level=4095)
    with pytest.raises(FormatError):
        _frame(np.zeros((2, 2)), bit_depth=14)


def test_requantize_examples():
    raw = _frame([[4095, 1000], [0, 0]])
    r8 = requantize(raw, 8)
    assert r8.data[0, 0] == 255
    assert (r8.bit_depth, r8.black_level, r8.white_level) == (8, 15, 255)
    assert requantize(raw, 10).data[0, 1] == 250
    assert requantize(raw, 12) is raw
    with pytest.raises(ContractViolation):
        requantize(r8, 10)


def test_normalize_commutes_with_requantize_within_one_lsb():
    rng = np.random.default_rng(0)
    raw = _frame(rng.integers(0, 4096, size=(16, 16)))
    coarse = requantize(raw, 8)
    lsb = 1.0 / (coarse.white_level - coarse.black_level)
    diff = np.abs(normalize(coarse) - normalize(raw))
    assert diff.max() <= lsb + 1e-12


@pytest.mark.parametrize("pattern", list(BayerPattern))
def test_demosaic_preserves_constants(pattern):
    raw = _frame(np.full((6, 8), 2167), bayer_pattern=pattern)
    rgb = demosaic_bilinear(raw)
    np.testing.assert_allclose(rgb.data, (2167 - 240) / 3855, atol=1e-12)


def test_demosaic_red_scene_on_rggb():
    data = np.full((4, 4), 240)
    data[0::2, 0::2] = 4095
    rgb = demosaic_bilinear(_frame(data))
    np.testing.assert_allclose(rgb.data[0::2, 0::2, 0], 1.0)
    np.testing.assert_allclose(rgb.data[:, :, 1], 0.0)
    np.testing.assert_allclose(rgb.data[:, :, 2], 0.0)


def _naive_demosaic(plane, pattern):
    """画素ごとの素朴な補間 (鏡映境界)"""
    h, w = plane.shape
    masks = channel_masks(h, w, pattern)
    k_rb = np.array([[1, 2, 1], [2, 4, 2], [1, 2, 1]]) / 4.0
    k_g = np.array([[0, 1, 0], [1, 4, 1], [0, 1, 0]]) / 4.0

    def mirror(i, n):
        if i < 0:
            return -i
        if i >= n:
            return 2 * n - 2 - i
        return i

    out = np.zeros((h, w, 3))
    for ch, k in enumerate((k_rb, k_g, k_rb)):
        for y in range(h):
            for x in range(w):
                acc = 0.0
                for dy in (-1, 0, 1):
                    for dx in (-1, 0, 1):
                        yy, xx = mirror(y + dy, h), mirror(x + dx, w)
                        acc += k[dy + 1, dx + 1] * plane[yy, xx] * masks[ch, yy, xx]
                out[y, x, ch] = acc
    return out


@pytest.mark.parametrize("pattern", [BayerPattern.RGGB, BayerPattern.GBRG])
def test_demosaic_matches_naive_reference(pattern):
    rng = np.random.default_rng(1)
    raw = _frame(rng.integers(240, 4096, size=(6, 8)), bayer_pattern=pattern)
    plane = normalize(raw)[0, 0]
    expected = np.clip(_naive_demosaic(plane, pattern), 0.0, 1.0)
    np.testing.assert_allclose(demosaic_bilinear(raw).data, expected, atol=1e-12)


def test_simple_isp_examples():
    rng = np.random.default_rng(2)
    raw = _frame(rng.integers(240, 4096, size=(8, 8)))
    np.testing.assert_array_equal(simple_isp(raw).data, demosaic_bilinear(raw).data)

    sat = _frame(np.full((4, 4), 4095))
    np.testing.assert_array_equal(simple_isp(sat, wb_gains=(2.0, 2.0, 2.0)).data, 1.0)

    gray = _frame(np.full((4, 4), 1000), black_level=0, white_level=4000)
    out = simple_isp(gray, gamma=2.2)
    np.testing.assert_allclose(out.data, 0.25 ** (1 / 2.2), atol=1e-12)
    assert out.data[0, 0, 0] == pytest.approx(0.5326, abs=1e-4)


def test_simple_isp_rejects_bad_params():
    raw = _frame(np.zeros((2, 2)))
    with pytest.raises(ContractViolation):
        simple_isp(raw, wb_gains=(1.0, 0.0, 1.0))
    with pytest.raises(ContractViolation):
        simple_isp(raw, gamma=0.0)


def test_exposure_scale_examples():
    x = np.array([[[[0.004, 0.02]]]])
    np.testing.assert_array_equal(exposure_scale(x, 1.0), x)
    out = exposure_scale(x, 100.0)
    assert out[0, 0, 0, 0] == pytest.approx(0.4)
    assert out[0, 0, 0, 1] == 1.0
    img = exposure_scale(RgbImage(np.full((2, 2, 3), 0.5)), 4.0)
    assert isinstance(img, RgbImage) and img.data.max() == 1.0
    with pytest.raises(ContractViolation):
        exposure_scale(x, 0.0)


def test_raw_file_round_trip(tmp_path: Path):
    rng = np.random.default_rng(3)
    raw = _frame(
        rng.integers(0, 1024, size=(4, 6)),
        bit_depth=10,
        bayer_pattern=BayerPattern.GRBG,
        black_level=64,
        white_level=1023,
        frame_index=7,
        timestamp=0.35,
    )
    path = raw_path(tmp_path / "raw", 7)
    assert path.name == "000007.raw16"
    write_raw(raw, path)
    assert path.with_suffix(".toml").is_file()
    back = read_raw(path)
    np.testing.assert_array_equal(back.data, raw.data)
    assert back.bit_depth == 10 and back.bayer_pattern is BayerPattern.GRBG
    assert (back.black_level, back.white_level, back.frame_index) == (64, 1023, 7)
    assert back.timestamp == pytest.approx(0.35)


def test_read_raw_rejects_truncated_and_missing_sidecar(tmp_path: Path):
    path = tmp_path / "000001.raw16"
    write_raw(_frame(np.zeros((2, 2))), path)
    path.write_bytes(b"\x00" * 6)
    with pytest.raises(FormatError, match="バイト"):
        read_raw(path)
    path.with_suffix(".toml").unlink()
    with pytest.raises(FormatError):
        read_raw(path)


def test_read_raw_missing_key(tmp_path: Path):
    path = tmp_path / "000001.raw16"
    write_raw(_frame(np.zeros((2, 2))), path)
    sidecar = path.with_suffix(".toml")
    text = "\n".join(
        line for line in sidecar.read_text(encoding="utf-8").splitlines()
        if not line.startswith("bit_depth")
    )
    sidecar.write_text(text, encoding="utf-8")
    with pytest.raises(FormatError, match="bit_depth"):
        read_raw(path)


def test_save_png(tmp_path: Path):
    data = np.zeros((2, 3, 3))
    data[0, 0] = [1.0, 0.5, 0.0]
    out = tmp_path / "png" / "a.png"
    save_png(RgbImage(data), out)
    with Image.open(out) as im:
        arr = np.asarray(im)
    assert arr.shape == (2, 3, 3)
    assert tuple(arr[0, 0]) == (255, 128, 0)
