"""Wavelet-domain noise removal by soft thresholding of the detail subbands."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .wavelet_core import SubbandPyramid, WaveletKind, decompose, make_filter_bank, reconstruct

MAD_SCALE = 0.6745


@dataclass(frozen=True)
class DenoiseConfig:
    """Denoising settings.

    ``threshold=None`` selects the universal rule ``sigma * sqrt(2 ln n)``;
    a number fixes the threshold by hand. Only soft shrinkage is offered.
    """

    kind: WaveletKind = WaveletKind.SECOND
    levels: int = 3
    threshold: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "kind", WaveletKind.parse(self.kind))
        if self.levels < 1:
            raise ValueError(f"levels must be >= 1, got {self.levels}")
        if self.threshold is not None and not self.threshold >= 0:
            raise ValueError(f"threshold must be non-negative, got {self.threshold}")


def estimate_sigma(hh) -> float:
    """Robust noise level from the finest diagonal band: median(|hh|) / 0.6745."""
    a = np.asarray(hh, dtype=float)
    if a.size == 0:
        raise ValueError("empty subband")
    return float(np.median(np.abs(a)) / MAD_SCALE)


def soft_threshold(x, threshold: float):
    if threshold < 0:
        raise ValueError(f"threshold must be non-negative, got {threshold}")
    x = np.asarray(x, dtype=float)
    out = np.sign(x) * np.maximum(np.abs(x) - threshold, 0.0)
    return float(out) if out.ndim == 0 else out


def universal_threshold(pyr: SubbandPyramid) -> float:
    sigma = estimate_sigma(pyr.details[0][2])
    n = pyr.width * pyr.height
    return sigma * math.sqrt(2.0 * math.log(n)) if n > 1 else 0.0


def threshold_pyramid(pyr: SubbandPyramid, cfg: DenoiseConfig) -> SubbandPyramid:
    t = universal_threshold(pyr) if cfg.threshold is None else cfg.threshold
    return pyr.map_details(lambda band: soft_threshold(band, t))


def denoise_plane(plane, cfg: DenoiseConfig, clamp: bool = True) -> np.ndarray:
    bank = make_filter_bank(cfg.kind)
    pyr = decompose(plane, bank, cfg.levels)
    out = reconstruct(threshold_pyramid(pyr, cfg), bank)
    return np.clip(out, 0.0, 255.0) if clamp else out


def denoise_image(image, cfg: DenoiseConfig) -> np.ndarray:
    img = np.asarray(image, dtype=float)
    if img.ndim != 3 or img.shape[2] != 3:
        raise ValueError(f"expected an RGB image of shape (H, W, 3), got {img.shape}")
    return np.stack([denoise_plane(img[:, :, ch], cfg) for ch in range(3)], axis=2)
