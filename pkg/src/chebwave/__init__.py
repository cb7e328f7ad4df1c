"""Chebyshev wavelet image toolkit: transforms, denoising, SPIHT coding and quality metrics."""

from .wavelet_core import (
    ChebyshevWaveletParams,
    FilterBank,
    SubbandPyramid,
    WaveletKind,
    cheb_poly,
    decompose,
    dwt1d,
    dwt1d_inverse,
    dwt2d,
    dwt2d_inverse,
    eval_wavelet,
    make_filter_bank,
    reconstruct,
)

__version__ = "0.1.0"
