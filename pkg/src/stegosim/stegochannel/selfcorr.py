"""Bad-carrier detection: correlation of an image with a denoised self."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from ..errors import UndefinedMetricError
from .image import GrayImage

# Carriers whose pixels correlate with their own noise-filtered version
# above this level embed poorly.  The cutoff is calibrated to the default
# 3x3 mean filter and is configurable because it does not transfer to
# other filters.
DEFAULT_BAD_THRESHOLD = 0.9964


@dataclass(frozen=True)
class SelfCorrScore:
    value: float
    is_bad: bool


def mean_filter(pixels: np.ndarray) -> np.ndarray:
    """3x3 mean filter with edge replication."""
    return ndimage.uniform_filter(pixels, size=3, mode="nearest")


def self_corr(image: GrayImage, threshold: float = DEFAULT_BAD_THRESHOLD,
              noise_filter=mean_filter) -> SelfCorrScore:
    """Pearson correlation between an image and its noise-filtered self.

    Raises UndefinedMetricError when either side has zero variance
    (constant images have no defined correlation).
    """
    x = image.pixels.astype(np.float64).ravel()
    y = np.asarray(noise_filter(image.pixels.astype(np.float64))).ravel()
    if np.ptp(x) == 0 or np.ptp(y) == 0:
        raise UndefinedMetricError("self correlation undefined for zero-variance image")
    value = float(np.corrcoef(x, y)[0, 1])
    return SelfCorrScore(value=value, is_bad=value > threshold)
