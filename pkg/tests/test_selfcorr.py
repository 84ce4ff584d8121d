"""Self-correlation bad-carrier scoring against a direct-formula oracle."""

import math

import numpy as np
import pytest

from stegosim.errors import UndefinedMetricError
from stegosim.stegochannel import GrayImage, mean_filter, self_corr


def oracle_pearson(x, y):
    """Textbook sum formula with exact accumulation."""
    n = len(x)
    sx, sy = math.fsum(x), math.fsum(y)
    sxx = math.fsum(v * v for v in x)
    syy = math.fsum(v * v for v in y)
    sxy = math.fsum(a * b for a, b in zip(x, y))
    num = sxy - sx * sy / n
    den = math.sqrt((sxx - sx * sx / n) * (syy - sy * sy / n))
    return num / den


def test_matches_direct_formula_oracle():
    rng = np.random.default_rng(77)
    for _ in range(20):
        img = GrayImage(rng.integers(0, 256, size=(64, 64)).astype(np.uint8))
        lib = self_corr(img).value
        x = img.pixels.astype(float).ravel().tolist()
        y = mean_filter(img.pixels.astype(float)).ravel().tolist()
        assert abs(lib - oracle_pearson(x, y)) < 1e-12


def test_identity_filter_gives_one():
    rng = np.random.default_rng(5)
    img = GrayImage(rng.integers(0, 256, size=(16, 16)).astype(np.uint8))
    score = self_corr(img, noise_filter=lambda px: px)
    assert score.value == pytest.approx(1.0)
    assert score.is_bad


def test_constant_image_is_undefined():
    img = GrayImage(np.full((16, 16), 128, dtype=np.uint8))
    with pytest.raises(UndefinedMetricError):
        self_corr(img)


def test_threshold_is_configurable():
    rng = np.random.default_rng(6)
    img = GrayImage(rng.integers(0, 256, size=(32, 32)).astype(np.uint8))
    score = self_corr(img)
    assert -1.0 <= score.value <= 1.0
    flipped = self_corr(img, threshold=score.value - 1.0)
    assert flipped.is_bad
    relaxed = self_corr(img, threshold=1.5)
    assert not relaxed.is_bad


def test_smooth_images_score_higher_than_noise():
    rng = np.random.default_rng(8)
    noise = GrayImage(rng.integers(0, 256, size=(64, 64)).astype(np.uint8))
    ramp = np.tile(np.arange(64, dtype=np.uint8) * 3, (64, 1))
    smooth = GrayImage(ramp)
    assert self_corr(smooth).value > self_corr(noise).value
