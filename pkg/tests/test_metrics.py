import csv
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import ndimage

from offgrid.errors import DimensionMismatchError
from offgrid.metrics import MetricsReport, evaluate, hfen, log_kernel, snr, ssim, write_metrics


@pytest.fixture
def image():
    x = np.zeros((48, 48))
    x[12:30, 10:36] = 0.8
    yy, xx = np.mgrid[:48, :48]
    x[(yy - 34) ** 2 + (xx - 30) ** 2 < 49] = 0.4
    return x


def test_snr_examples(image, rng):
    assert snr(image, image) == math.inf
    assert snr(image, np.zeros_like(image)) == pytest.approx(0.0, abs=1e-12)
    e = rng.standard_normal(image.shape)
    e *= 0.1 * np.linalg.norm(image) / np.linalg.norm(e)
    assert snr(image, image + e) == pytest.approx(20.0, abs=1e-9)
    with pytest.raises(DimensionMismatchError):
        snr(image, image[:-1])


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**31), st.floats(1e-3, 10.0))
def test_snr_scale_law(seed, scale):
    rng = np.random.default_rng(seed)
    ref = rng.random((16, 16)) + 0.1
    e = scale * rng.standard_normal((16, 16))
    assert snr(ref, ref + e) - snr(ref, ref + 10 * e) == pytest.approx(20.0, abs=1e-9)


def test_log_kernel():
    k = log_kernel()
    assert k.shape == (15, 15)
    assert abs(k.sum()) <= 1e-15
    assert np.allclose(k, k.T) and np.allclose(k, k[::-1])
    assert k[7, 7] < 0


def test_hfen(image, rng):
    assert hfen(image, image) == 0.0
    assert hfen(image, image + 0.3) == pytest.approx(0.0, abs=1e-12)
    assert math.isnan(hfen(np.ones((20, 20)), np.zeros((20, 20))))
    blurred = ndimage.gaussian_filter(image, 1.0)
    noise = rng.standard_normal(image.shape)
    noise *= 1e-3 * np.linalg.norm(blurred - image) / np.linalg.norm(noise)
    assert hfen(image, blurred) > 0
    assert hfen(image, blurred) > hfen(image, image + noise) > 0


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**31), st.floats(-5, 5))
def test_hfen_constant_shift(seed, c):
    rng = np.random.default_rng(seed)
    ref = rng.random((20, 20))
    rec = ref + 0.1 * rng.standard_normal((20, 20))
    assert hfen(ref, rec) == pytest.approx(hfen(ref, rec + c), rel=1e-9, abs=1e-12)


def test_ssim(image, rng):
    assert ssim(image, image) == pytest.approx(1.0, abs=1e-12)
    assert ssim(image, 1 - image) < 0.5
    shifted = 0.7 * image + 0.2
    assert ssim(image, shifted) < 1
    other = rng.random(image.shape)
    assert ssim(image, other) == pytest.approx(ssim(other, image), abs=1e-12)
    assert -1 <= ssim(image, other) <= 1


def test_ssim_window_is_eleven_taps():
    impulse = np.zeros((31, 31))
    impulse[15, 15] = 1
    blurred = ndimage.gaussian_filter(impulse, 1.5, mode="reflect", truncate=3.5)
    support = np.argwhere(blurred > 0)
    assert support.min(0).tolist() == [10, 10] and support.max(0).tolist() == [20, 20]


def test_report_csv(tmp_path, image):
    rep = evaluate(image, image * 0.9, "s", "lowpass", "ifft", 0.0, 7)
    assert isinstance(rep, MetricsReport) and rep.seed == 7
    p = tmp_path / "m.csv"
    write_metrics(p, [rep, rep])
    rows = list(csv.reader(p.open()))
    assert rows[0] == ["scene", "task", "method", "snr", "hfen", "ssim", "wall_ms", "seed"]
    assert len(rows) == 3 and float(rows[1][3]) == rep.snr
