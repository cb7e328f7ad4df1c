"""Image quality criteria: MSE, PSNR, bits per pixel and compression ratio."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

PEAK = 255.0
RAW_BITS_PER_PIXEL = 24  # 8-bit RGB


def mse(reference, test) -> float:
    """Mean squared error over every pixel and channel."""
    a = np.asarray(reference, dtype=float)
    b = np.asarray(test, dtype=float)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    if a.size == 0:
        raise ValueError("empty images")
    d = a - b
    return float(np.mean(d * d))


def psnr(mse_value: float) -> float:
    """Peak signal-to-noise ratio in dB for 8-bit data; ``math.inf`` when ``mse_value`` is 0."""
    if mse_value < 0 or math.isnan(mse_value):
        raise ValueError(f"mse must be non-negative, got {mse_value}")
    if mse_value == 0:
        return math.inf
    return 10.0 * math.log10(PEAK * PEAK / mse_value)


def bpp(total_payload_bits: int, pixel_count: int) -> float:
    if pixel_count <= 0:
        raise ValueError(f"pixel count must be positive, got {pixel_count}")
    return total_payload_bits / pixel_count


def cr(bpp_value: float) -> float:
    """Compressed size as a percentage of the raw 24-bit RGB size."""
    return 100.0 * bpp_value / RAW_BITS_PER_PIXEL


@dataclass(frozen=True)
class QualityReport:
    iteration: int
    mse: float
    psnr: float
    bpp: float
    cr: float

    @classmethod
    def from_measurements(cls, iteration: int, mse_value: float, payload_bits: int, pixel_count: int) -> "QualityReport":
        b = bpp(payload_bits, pixel_count)
        return cls(iteration, mse_value, psnr(mse_value), b, cr(b))

    def as_row(self) -> list[str]:
        return [str(self.iteration), f"{self.mse:.6g}", f"{self.psnr:.4f}", f"{self.bpp:.6f}", f"{self.cr:.4f}"]


CSV_HEADER = ["Iteration", "MSE", "PSNR", "BPP", "CR"]
