"""Convolution shape arithmetic, a reference cross-correlation and a wavelet
pooling layer."""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .wavelet_core import WaveletKind, dwt2d, make_filter_bank


class TensorDims(NamedTuple):
    n_l: int  # height
    n_w: int  # width
    n_c: int  # channels


@dataclass(frozen=True)
class ConvSpec:
    """Square ``l x l`` window over ``n_c`` channels producing ``n_f`` maps.

    ``n_f=None`` describes a pooling window, which keeps the channel count.
    """

    l: int
    n_c: int
    n_f: int | None = None
    s: int = 1
    p: int = 0

    def __post_init__(self):
        if self.l < 1:
            raise ValueError(f"kernel size must be >= 1, got {self.l}")
        if self.n_c < 1:
            raise ValueError(f"channel count must be >= 1, got {self.n_c}")
        if self.n_f is not None and self.n_f < 1:
            raise ValueError(f"filter count must be >= 1, got {self.n_f}")
        if self.s < 1:
            raise ValueError(f"stride must be >= 1, got {self.s}")
        if self.p < 0:
            raise ValueError(f"padding must be >= 0, got {self.p}")

    @property
    def is_pooling(self) -> bool:
        return self.n_f is None


def filter_dims(spec: ConvSpec) -> tuple[int, int, int]:
    return spec.l, spec.l, spec.n_c


def conv_output_dims(input: TensorDims, spec: ConvSpec) -> TensorDims:
    n_l, n_w, n_c = input
    if min(n_l, n_w, n_c) < 1:
        raise ValueError(f"tensor dims must be positive, got {tuple(input)}")
    if n_c != spec.n_c:
        raise ValueError(f"spec expects {spec.n_c} input channels, tensor has {n_c}")
    span_l = n_l + 2 * spec.p - spec.l
    span_w = n_w + 2 * spec.p - spec.l
    if span_l < 0 or span_w < 0:
        raise ValueError(f"{spec.l}x{spec.l} window does not fit a {n_l}x{n_w} input with padding {spec.p}")
    out_c = n_c if spec.is_pooling else spec.n_f
    return TensorDims(span_l // spec.s + 1, span_w // spec.s + 1, out_c)


def same_padding(l: int) -> int:
    """Padding that keeps spatial dims at stride 1; needs an odd kernel."""
    if l < 1 or l % 2 == 0:
        raise ValueError(f"same padding needs an odd kernel size, got {l}")
    return (l - 1) // 2


def conv2d_map(input, kernel, spec: ConvSpec) -> np.ndarray:
    """Strided cross-correlation (no kernel flip) with zero padding.

    ``input`` is ``(H, W, n_c)``. A kernel of shape ``(l, l, n_c)`` yields one
    ``(H', W')`` map; ``(l, l, n_c, n_f)`` yields ``(H', W', n_f)``.
    """
    x = np.asarray(input, dtype=float)
    k = np.asarray(kernel, dtype=float)
    if x.ndim == 2:
        x = x[:, :, None]
    if x.ndim != 3 or x.shape[2] != spec.n_c:
        raise ValueError(f"input shape {x.shape} does not carry {spec.n_c} channels")
    single = k.ndim == 3
    if single:
        k = k[..., None]
    if k.shape[:3] != filter_dims(spec) or k.ndim != 4:
        raise ValueError(f"kernel shape {np.shape(kernel)} does not match {filter_dims(spec)}")
    if spec.n_f is not None and not single and k.shape[3] != spec.n_f:
        raise ValueError(f"kernel has {k.shape[3]} filters, spec asks for {spec.n_f}")
    out_dims = conv_output_dims(TensorDims(*x.shape), ConvSpec(spec.l, spec.n_c, k.shape[3], spec.s, spec.p))
    if spec.p:
        x = np.pad(x, ((spec.p, spec.p), (spec.p, spec.p), (0, 0)))
    win = np.lib.stride_tricks.sliding_window_view(x, (spec.l, spec.l), axis=(0, 1))
    win = win[::spec.s, ::spec.s][: out_dims.n_l, : out_dims.n_w]
    # win: (H', W', n_c, l, l); kernel: (l, l, n_c, n_f)
    out = np.einsum("hwcij,ijcf->hwf", win, k)
    return out[:, :, 0] if single else out


def wavelet_downsample(plane, kind: WaveletKind | str = WaveletKind.SECOND) -> np.ndarray:
    """Halve a plane with one transform level, keeping only the gain-normalised approximation.

    The approximation of a constant ``v`` is ``4 c**2 v``; dividing by
    ``4 c**2`` makes this a 2x2 block mean.
    """
    bank = make_filter_bank(kind)
    ll = dwt2d(plane, bank)[0]
    return ll / (4.0 * bank.c**2)


# Layer specs for the first stages of the reference network used for shape checks.
TABLE5_CHAIN: list[tuple[str, ConvSpec]] = [
    ("conv1", ConvSpec(l=11, n_c=3, n_f=96, s=4, p=0)),
    ("pool1", ConvSpec(l=3, n_c=96, s=2)),
    ("conv2", ConvSpec(l=5, n_c=96, n_f=256, s=1, p=2)),
    ("pool2", ConvSpec(l=3, n_c=256, s=2)),
    ("conv3", ConvSpec(l=3, n_c=256, n_f=384, s=1, p=1)),
]


def run_chain(input: TensorDims, chain=TABLE5_CHAIN) -> list[tuple[str, TensorDims]]:
    out = [("data", TensorDims(*input))]
    dims = TensorDims(*input)
    for name, spec in chain:
        dims = conv_output_dims(dims, spec)
        out.append((name, dims))
    return out
