"""Chebyshev wavelets of the second and third kind and their 2-tap filter banks.

Images are handled as 2D float arrays indexed ``[row, col]``. A plane of
``height x width`` samples splits into four quadrants per level:

* ``ll`` - low along rows and columns (approximation)
* ``hl`` - high along rows, low along columns (top-right in a Mallat layout)
* ``lh`` - low along rows, high along columns (bottom-left)
* ``hh`` - high along both

Rows are transformed first, columns second. Odd lengths are extended by
half-sample symmetry (the last sample is repeated) before each split.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np


class WaveletKind(enum.Enum):
    SECOND = "second"
    THIRD = "third"

    @classmethod
    def parse(cls, value: "WaveletKind | str") -> "WaveletKind":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise ValueError(f"unknown wavelet kind {value!r}; expected 'second' or 'third'") from None

    @property
    def code(self) -> int:
        """Numeric tag used in the CHBW bitstream header."""
        return 0 if self is WaveletKind.SECOND else 1

    @classmethod
    def from_code(cls, code: int) -> "WaveletKind":
        if code == 0:
            return cls.SECOND
        if code == 1:
            return cls.THIRD
        raise ValueError(f"invalid wavelet kind code {code}")


@dataclass(frozen=True)
class ChebyshevWaveletParams:
    """Indices of one basis function: dilation ``k``, translation ``r``, degree ``s``."""

    kind: WaveletKind
    k: int
    r: int
    s: int

    def __post_init__(self):
        if self.k < 1:
            raise ValueError(f"k must be >= 1, got {self.k}")
        if self.s < 0:
            raise ValueError(f"s must be >= 0, got {self.s}")
        r_max = 2 ** (self.k - 1) if self.kind is WaveletKind.SECOND else 2**self.k
        if not 1 <= self.r <= r_max:
            raise ValueError(f"r must lie in [1, {r_max}] for k={self.k}, got {self.r}")

    @property
    def support(self) -> tuple[float, float]:
        """Half-open interval ``[lo, hi)`` on which the wavelet is non-zero."""
        width = 2.0 ** (self.k - 1) if self.kind is WaveletKind.SECOND else 2.0**self.k
        return (self.r - 1) / width, self.r / width

    def local_coordinate(self, t: float) -> float:
        """Map ``t`` from the support interval onto the polynomial domain [-1, 1)."""
        scale = 2.0**self.k if self.kind is WaveletKind.SECOND else 2.0 ** (self.k + 1)
        return scale * t - 2 * self.r + 1


# Basis functions that reproduce the printed filter constants exactly.
DEFAULT_FILTER_PARAMS = {
    WaveletKind.SECOND: ChebyshevWaveletParams(WaveletKind.SECOND, k=2, r=1, s=0),
    WaveletKind.THIRD: ChebyshevWaveletParams(WaveletKind.THIRD, k=1, r=1, s=0),
}


def cheb_poly(kind: WaveletKind, s: int, t: float) -> float:
    """Evaluate U_s(t) (second kind) or V_s(t) (third kind) by the three-term recurrence."""
    if s < 0:
        raise ValueError(f"degree must be non-negative, got {s}")
    prev = 1.0
    if s == 0:
        return prev
    cur = 2.0 * t if kind is WaveletKind.SECOND else 2.0 * t - 1.0
    for _ in range(s - 1):
        prev, cur = cur, 2.0 * t * cur - prev
    return cur


def _normalizer(kind: WaveletKind) -> float:
    return math.sqrt(2.0 / math.pi) if kind is WaveletKind.SECOND else 1.0 / math.sqrt(math.pi)


def eval_wavelet(p: ChebyshevWaveletParams, t: float) -> float:
    """Value of the dilated, translated and normalised Chebyshev wavelet at ``t`` in [0, 1)."""
    if not 0.0 <= t < 1.0:
        raise ValueError(f"t must lie in [0, 1), got {t}")
    lo, hi = p.support
    if not lo <= t < hi:
        return 0.0
    x = p.local_coordinate(t)
    return 2.0 ** (p.k / 2.0) * _normalizer(p.kind) * cheb_poly(p.kind, p.s, x)


@dataclass(frozen=True)
class FilterBank:
    """Two-tap analysis/synthesis pair with gain constant ``c``.

    Analysis maps a pair ``(x0, x1)`` to ``(c*(x0 + x1), c*(x0 - x1))``; the
    synthesis bank is the exact inverse of that 2x2 matrix.
    """

    kind: WaveletKind
    c: float
    analysis_low: tuple[float, float] = field(init=False)
    analysis_high: tuple[float, float] = field(init=False)
    synthesis_low: tuple[float, float] = field(init=False)
    synthesis_high: tuple[float, float] = field(init=False)

    def __post_init__(self):
        c = self.c
        if not c > 0:
            raise ValueError(f"gain constant must be positive, got {c}")
        inv = 1.0 / (2.0 * c)
        object.__setattr__(self, "analysis_low", (c, c))
        object.__setattr__(self, "analysis_high", (c, -c))
        # columns of the inverse matrix: x0 = inv*(a + d), x1 = inv*(a - d)
        object.__setattr__(self, "synthesis_low", (inv, inv))
        object.__setattr__(self, "synthesis_high", (inv, -inv))

    @property
    def analysis_matrix(self) -> np.ndarray:
        """Rows are the low-pass and high-pass taps."""
        return np.array([self.analysis_low, self.analysis_high])

    @property
    def synthesis_matrix(self) -> np.ndarray:
        """Columns are the low-pass and high-pass reconstruction taps."""
        return np.array([self.synthesis_low, self.synthesis_high]).T

    @property
    def gain(self) -> float:
        """Energy gain of one 1D analysis step: ``M.T @ M == gain * I``."""
        return 2.0 * self.c * self.c


def make_filter_bank(kind: WaveletKind | str) -> FilterBank:
    kind = WaveletKind.parse(kind)
    p = DEFAULT_FILTER_PARAMS[kind]
    lo, hi = p.support
    # the basis function is constant (degree 0) on its support; sample its midpoint
    c = eval_wavelet(p, 0.5 * (lo + hi))
    return FilterBank(kind, c)


def _as_bank(bank: FilterBank | WaveletKind | str) -> FilterBank:
    return bank if isinstance(bank, FilterBank) else make_filter_bank(bank)


def _pad_even(x: np.ndarray, axis: int) -> np.ndarray:
    n = x.shape[axis]
    if n % 2 == 0:
        return x
    last = np.take(x, [n - 1], axis=axis)
    return np.concatenate([x, last], axis=axis)


def _analyze(x: np.ndarray, bank: FilterBank, axis: int) -> tuple[np.ndarray, np.ndarray]:
    x = _pad_even(np.asarray(x, dtype=float), axis)
    even = np.take(x, np.arange(0, x.shape[axis], 2), axis=axis)
    odd = np.take(x, np.arange(1, x.shape[axis], 2), axis=axis)
    c = bank.c
    return c * (even + odd), c * (even - odd)


def _synthesize(approx: np.ndarray, detail: np.ndarray, bank: FilterBank, axis: int, length: int) -> np.ndarray:
    if approx.shape != detail.shape:
        raise ValueError(f"approx/detail shape mismatch: {approx.shape} vs {detail.shape}")
    half = approx.shape[axis]
    if length not in (2 * half, 2 * half - 1):
        raise ValueError(f"cannot restore length {length} from {half} coefficient pairs")
    s = bank.synthesis_low[0]
    even = s * (approx + detail)
    odd = s * (approx - detail)
    shape = list(approx.shape)
    shape[axis] = 2 * half
    out = np.empty(shape, dtype=float)
    idx = [slice(None)] * out.ndim
    idx[axis] = slice(0, None, 2)
    out[tuple(idx)] = even
    idx[axis] = slice(1, None, 2)
    out[tuple(idx)] = odd
    idx[axis] = slice(0, length)
    return out[tuple(idx)]


def dwt1d(signal, bank: FilterBank) -> tuple[np.ndarray, np.ndarray]:
    """Single-level transform of a 1D signal; returns ``(approx, detail)``."""
    x = np.asarray(signal, dtype=float)
    if x.ndim != 1 or x.size == 0:
        raise ValueError("signal must be a non-empty 1D sequence")
    return _analyze(x, bank, axis=0)


def dwt1d_inverse(approx, detail, bank: FilterBank, original_length: int | None = None) -> np.ndarray:
    a = np.asarray(approx, dtype=float)
    d = np.asarray(detail, dtype=float)
    if a.ndim != 1 or d.ndim != 1:
        raise ValueError("approx and detail must be 1D")
    if a.shape != d.shape:
        raise ValueError(f"approx/detail length mismatch: {a.size} vs {d.size}")
    length = 2 * a.size if original_length is None else int(original_length)
    return _synthesize(a, d, bank, axis=0, length=length)


def _check_plane(plane) -> np.ndarray:
    arr = np.asarray(plane, dtype=float)
    if arr.ndim != 2 or arr.size == 0:
        raise ValueError(f"expected a non-empty 2D plane, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("plane contains non-finite samples")
    return arr


def dwt2d(plane, bank: FilterBank) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """One separable level; returns ``(ll, lh, hl, hh)``."""
    x = _check_plane(plane)
    row_low, row_high = _analyze(x, bank, axis=1)
    ll, lh = _analyze(row_low, bank, axis=0)
    hl, hh = _analyze(row_high, bank, axis=0)
    return ll, lh, hl, hh


def dwt2d_inverse(ll, lh, hl, hh, bank: FilterBank, shape: tuple[int, int] | None = None) -> np.ndarray:
    """Invert :func:`dwt2d`. ``shape`` is the ``(height, width)`` to restore."""
    ll, lh, hl, hh = (np.asarray(q, dtype=float) for q in (ll, lh, hl, hh))
    if not ll.shape == lh.shape == hl.shape == hh.shape:
        raise ValueError("all four quadrants must share one shape")
    if shape is None:
        shape = (2 * ll.shape[0], 2 * ll.shape[1])
    height, width = shape
    row_low = _synthesize(ll, lh, bank, axis=0, length=height)
    row_high = _synthesize(hl, hh, bank, axis=0, length=height)
    return _synthesize(row_low, row_high, bank, axis=1, length=width)


def level_shape(height: int, width: int, level: int) -> tuple[int, int]:
    """Subband dims at ``level`` (1-based); level 0 is the input itself."""
    d = 2**level
    return -(-height // d), -(-width // d)


@dataclass
class SubbandPyramid:
    """Multi-level decomposition: coarsest ``ll`` plus one ``(lh, hl, hh)`` triple per level.

    ``details[0]`` is the finest level (level 1).
    """

    ll: np.ndarray
    details: list[tuple[np.ndarray, np.ndarray, np.ndarray]]
    original_dims: tuple[int, int]  # (width, height)

    @property
    def levels(self) -> int:
        return len(self.details)

    @property
    def width(self) -> int:
        return self.original_dims[0]

    @property
    def height(self) -> int:
        return self.original_dims[1]

    def validate(self) -> None:
        if self.levels < 1:
            raise ValueError("pyramid has no levels")
        for i, triple in enumerate(self.details, start=1):
            want = level_shape(self.height, self.width, i)
            if len(triple) != 3:
                raise ValueError(f"level {i}: expected (lh, hl, hh)")
            for band in triple:
                if np.shape(band) != want:
                    raise ValueError(f"level {i}: band shape {np.shape(band)} != {want}")
        want = level_shape(self.height, self.width, self.levels)
        if np.shape(self.ll) != want:
            raise ValueError(f"ll shape {np.shape(self.ll)} != {want}")

    def map_details(self, fn) -> "SubbandPyramid":
        """New pyramid with ``fn`` applied to every detail band; ``ll`` is copied as is."""
        details = [tuple(fn(b) for b in triple) for triple in self.details]
        return SubbandPyramid(self.ll.copy(), details, self.original_dims)

    def detail_energy(self) -> float:
        return float(sum(np.sum(b * b) for triple in self.details for b in triple))


def max_levels(width: int, height: int) -> int:
    return int(math.floor(math.log2(min(width, height)))) if min(width, height) >= 1 else 0


def decompose(plane, bank: FilterBank, levels: int) -> SubbandPyramid:
    x = _check_plane(plane)
    height, width = x.shape
    if levels < 1:
        raise ValueError(f"levels must be >= 1, got {levels}")
    if 2**levels > min(width, height):
        raise ValueError(f"{levels} levels is too deep for a {width}x{height} plane")
    details = []
    ll = x
    for _ in range(levels):
        ll, lh, hl, hh = dwt2d(ll, bank)
        details.append((lh, hl, hh))
    return SubbandPyramid(ll, details, (width, height))


def reconstruct(pyr: SubbandPyramid, bank: FilterBank) -> np.ndarray:
    pyr.validate()
    ll = np.asarray(pyr.ll, dtype=float)
    for level in range(pyr.levels, 0, -1):
        lh, hl, hh = pyr.details[level - 1]
        ll = dwt2d_inverse(ll, lh, hl, hh, bank, shape=level_shape(pyr.height, pyr.width, level - 1))
    return ll


def mallat_layout(pyr: SubbandPyramid, block: int | None = None) -> np.ndarray:
    """Pack a pyramid into one array with the classic nested-quadrant layout.

    Each level occupies a slot of ``grid/2**i``; bands smaller than their
    slot (odd dims) sit top-left and the slack is zero. ``block`` rounds
    the grid up to a multiple of it (default ``2**levels``).
    """
    levels = pyr.levels
    block = block or 2**levels
    gh = -(-pyr.height // block) * block
    gw = -(-pyr.width // block) * block
    out = np.zeros((gh, gw), dtype=np.asarray(pyr.ll).dtype)
    for i, (lh, hl, hh) in enumerate(pyr.details, start=1):
        sh, sw = gh >> i, gw >> i
        bh, bw = np.shape(hh)
        out[0:bh, sw:sw + bw] = hl
        out[sh:sh + bh, 0:bw] = lh
        out[sh:sh + bh, sw:sw + bw] = hh
    lh_, lw_ = np.shape(pyr.ll)
    out[0:lh_, 0:lw_] = pyr.ll
    return out


def from_mallat_layout(grid: np.ndarray, width: int, height: int, levels: int) -> SubbandPyramid:
    gh, gw = grid.shape
    details = []
    for i in range(1, levels + 1):
        sh, sw = gh >> i, gw >> i
        bh, bw = level_shape(height, width, i)
        hl = grid[0:bh, sw:sw + bw]
        lh = grid[sh:sh + bh, 0:bw]
        hh = grid[sh:sh + bh, sw:sw + bw]
        details.append((lh.copy(), hl.copy(), hh.copy()))
    bh, bw = level_shape(height, width, levels)
    return SubbandPyramid(grid[0:bh, 0:bw].copy(), details, (width, height))
