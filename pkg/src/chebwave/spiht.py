"""SPIHT (set partitioning in hierarchical trees) bitplane coder.

The coder works on a quantized pyramid packed into a nested-quadrant grid
whose sides are multiples of ``2**(levels + 1)``, so the coarsest band has
even dims and splits into 2x2 groups. Inside such a group the top-left
coefficient is a leaf; the other three each root a tree in the band at
the same offset (top-right -> ``hl``, bottom-left -> ``lh``, bottom-right
-> ``hh``). Outside the coarsest band a coefficient ``(i, j)`` has the four
children ``(2i + a, 2j + b)`` unless it sits in a finest-level band.

Every pass emits raw bits, most significant bitplane first: a sorting pass
over LIP then LIS, then a refinement pass over coefficients that were
already significant before it. Sign bits are 0 for positive, 1 for
negative. The decoder reconstructs significant coefficients at the centre
of their remaining uncertainty interval, which becomes exact once the
zero bitplane has been decoded.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterator

import numpy as np

from .wavelet_core import SubbandPyramid, from_mallat_layout, mallat_layout

MAX_Q_BITS = 8
INT_LIMIT = 2**31
NO_SIGNIFICANT = 0xFF  # n_max sentinel for an all-zero grid

TYPE_A = 0  # entry stands for all descendants D(i, j)
TYPE_B = 1  # entry stands for grand-descendants L(i, j)


class SpihtError(ValueError):
    pass


class TruncatedStreamError(SpihtError):
    pass


def grid_block(levels: int) -> int:
    return 2 ** (levels + 1)


def grid_shape(width: int, height: int, levels: int) -> tuple[int, int]:
    """(rows, cols) of the coefficient grid for an image of ``width x height``."""
    b = grid_block(levels)
    return -(-height // b) * b, -(-width // b) * b


@dataclass
class CoefficientGrid:
    """Integer coefficients ``round(real * 2**q_bits)`` in nested-quadrant layout."""

    values: np.ndarray
    width: int
    height: int
    levels: int
    q_bits: int

    def __post_init__(self):
        if self.levels < 1:
            raise SpihtError("coefficient grid must have at least one level")
        want = grid_shape(self.width, self.height, self.levels)
        if self.values.shape != want:
            raise SpihtError(f"grid shape {self.values.shape} does not match {want} for {self.levels} levels")

    def __eq__(self, other):
        if not isinstance(other, CoefficientGrid):
            return NotImplemented
        return (
            (self.width, self.height, self.levels, self.q_bits) == (other.width, other.height, other.levels, other.q_bits)
            and np.array_equal(self.values, other.values)
        )


def quantize(pyr: SubbandPyramid, q_bits: int = 4) -> CoefficientGrid:
    if not 0 <= q_bits <= MAX_Q_BITS:
        raise SpihtError(f"q_bits must lie in [0, {MAX_Q_BITS}], got {q_bits}")
    pyr.validate()
    layout = mallat_layout(pyr, block=grid_block(pyr.levels))
    scaled = np.rint(layout * float(2**q_bits))  # rint rounds half to even
    if not np.all(np.isfinite(scaled)) or np.max(np.abs(scaled), initial=0) >= INT_LIMIT:
        raise SpihtError("quantized coefficients overflow the 32-bit range")
    return CoefficientGrid(scaled.astype(np.int64), pyr.width, pyr.height, pyr.levels, q_bits)


def dequantize(grid: CoefficientGrid) -> SubbandPyramid:
    real = grid.values.astype(float) / float(2**grid.q_bits)
    return from_mallat_layout(real, grid.width, grid.height, grid.levels)


class _Trees:
    """Spatial orientation trees over a flat (row-major) index space."""

    def __init__(self, rows: int, cols: int, levels: int):
        self.rows, self.cols, self.levels = rows, cols, levels
        self.h0, self.w0 = rows >> levels, cols >> levels
        n = rows * cols
        self.children: list[tuple[int, ...] | None] = [None] * n
        self.grand: list[bool] = [False] * n
        half_r, half_c = rows // 2, cols // 2
        for i in range(half_r):
            for j in range(half_c):
                r0c0 = self._child_origin(i, j)
                if r0c0 is None:
                    continue
                r0, c0 = r0c0
                self.children[i * cols + j] = (
                    r0 * cols + c0,
                    r0 * cols + c0 + 1,
                    (r0 + 1) * cols + c0,
                    (r0 + 1) * cols + c0 + 1,
                )
                # children have their own children unless they lie in a finest band
                self.grand[i * cols + j] = r0 < half_r and c0 < half_c
        self.roots = [i * cols + j for i in range(self.h0) for j in range(self.w0)]

    def _child_origin(self, i: int, j: int) -> tuple[int, int] | None:
        if i < self.h0 and j < self.w0:
            p, q = i & 1, j & 1
            if p == 0 and q == 0:
                return None
            return i - p + p * self.h0, j - q + q * self.w0
        return 2 * i, 2 * j

    def descendant_maxima(self, mags: np.ndarray) -> tuple[list[int], list[int]]:
        """Per node: max magnitude over all descendants, and over grand-descendants."""
        flat = mags.ravel()
        n = flat.size
        dmax = np.zeros(n, dtype=np.int64)
        lmax = np.zeros(n, dtype=np.int64)
        parents = [k for k in range(n) if self.children[k] is not None]
        kids = np.array([self.children[k] for k in parents], dtype=np.int64).reshape(-1, 4)
        parents = np.array(parents, dtype=np.int64)
        # tree depth is at most levels + 1 edges
        for _ in range(self.levels + 1):
            smax = np.maximum(flat, dmax)
            dmax[parents] = smax[kids].max(axis=1)
            lmax[parents] = dmax[kids].max(axis=1)
        return dmax.tolist(), lmax.tolist()


@dataclass
class SpihtBitstream:
    """One channel's embedded bitstream.

    ``bits`` holds the payload as 0/1 values; ``pass_ends[p]`` is the bit
    offset at which pass ``p + 1`` ends.
    """

    width: int
    height: int
    levels: int
    q_bits: int
    n_max: int | None
    max_passes: int
    bits: np.ndarray
    pass_ends: list[int] = field(default_factory=list)

    @property
    def n_bits(self) -> int:
        return int(self.bits.size)

    @property
    def passes(self) -> int:
        """Passes actually present: the bitplanes run out at zero."""
        return available_passes(self.n_max, self.max_passes)

    @property
    def payload(self) -> bytes:
        return np.packbits(self.bits.astype(np.uint8)).tobytes() if self.bits.size else b""

    def bits_after(self, passes: int) -> int:
        if passes <= 0 or not self.pass_ends:
            return 0
        return self.pass_ends[min(passes, len(self.pass_ends)) - 1]


def available_passes(n_max: int | None, max_passes: int) -> int:
    return 0 if n_max is None else min(max_passes, n_max + 1)


PassHook = Callable[[int, list, list, list], None]


def spiht_encode(grid: CoefficientGrid, max_passes: int = 17, on_pass: PassHook | None = None) -> SpihtBitstream:
    """Encode ``grid`` with at most ``max_passes`` bitplanes.

    ``on_pass(n, lip, lis, lsp)`` is called after every pass; LIS entries
    are ``(index, TYPE_A | TYPE_B)`` tuples over flat row-major indices.
    """
    if grid.levels < 1:
        raise SpihtError("coefficient grid must have at least one level")
    if max_passes < 1:
        raise SpihtError(f"max_passes must be >= 1, got {max_passes}")
    values = grid.values
    rows, cols = values.shape
    peak = int(np.max(np.abs(values), initial=0))
    n_max = peak.bit_length() - 1 if peak > 0 else None
    header = dict(width=grid.width, height=grid.height, levels=grid.levels, q_bits=grid.q_bits, n_max=n_max, max_passes=max_passes)
    if n_max is None:
        return SpihtBitstream(bits=np.zeros(0, dtype=np.uint8), pass_ends=[], **header)

    trees = _Trees(rows, cols, grid.levels)
    children, grand = trees.children, trees.grand
    mag_arr = np.abs(values)
    mags = mag_arr.ravel().tolist()
    neg = (values.ravel() < 0).tolist()
    dmax, lmax = trees.descendant_maxima(mag_arr)

    lip = list(trees.roots)
    lis = [(k, TYPE_A) for k in trees.roots if children[k] is not None]
    lsp: list[int] = []
    out: list[int] = []
    emit = out.append
    pass_ends = []

    n = n_max
    for _ in range(available_passes(n_max, max_passes)):
        thr = 1 << n
        new_sig: list[int] = []

        next_lip = []
        for k in lip:
            if mags[k] >= thr:
                emit(1)
                emit(1 if neg[k] else 0)
                new_sig.append(k)
            else:
                emit(0)
                next_lip.append(k)
        lip = next_lip

        next_lis = []
        pos = 0
        while pos < len(lis):
            k, kind = lis[pos]
            pos += 1
            if kind == TYPE_A:
                if dmax[k] >= thr:
                    emit(1)
                    for c in children[k]:
                        if mags[c] >= thr:
                            emit(1)
                            emit(1 if neg[c] else 0)
                            new_sig.append(c)
                        else:
                            emit(0)
                            lip.append(c)
                    if grand[k]:
                        lis.append((k, TYPE_B))
                else:
                    emit(0)
                    next_lis.append((k, kind))
            else:
                if lmax[k] >= thr:
                    emit(1)
                    for c in children[k]:
                        lis.append((c, TYPE_A))
                else:
                    emit(0)
                    next_lis.append((k, kind))
        lis = next_lis

        for k in lsp:
            emit((mags[k] >> n) & 1)
        lsp.extend(new_sig)

        pass_ends.append(len(out))
        if on_pass is not None:
            on_pass(n, list(lip), list(lis), list(lsp))
        n -= 1

    return SpihtBitstream(bits=np.array(out, dtype=np.uint8), pass_ends=pass_ends, **header)


def _decode_passes(stream: SpihtBitstream, passes: int) -> Iterator[tuple[int, CoefficientGrid]]:
    """Yield ``(bits_consumed, grid)`` after each of the first ``passes`` passes."""
    rows, cols = grid_shape(stream.width, stream.height, stream.levels)

    def make_grid(values):
        return CoefficientGrid(values, stream.width, stream.height, stream.levels, stream.q_bits)

    todo = min(passes, stream.passes)
    if todo == 0:
        yield 0, make_grid(np.zeros((rows, cols), dtype=np.int64))
        return

    trees = _Trees(rows, cols, stream.levels)
    children, grand = trees.children, trees.grand
    bits = stream.bits.tolist()
    n_bits = len(bits)
    rmag = [0] * (rows * cols)
    neg = [False] * (rows * cols)
    pos_bit = 0

    def read() -> int:
        nonlocal pos_bit
        if pos_bit >= n_bits:
            raise TruncatedStreamError(f"bitstream ends inside a pass (after {n_bits} bits)")
        b = bits[pos_bit]
        pos_bit += 1
        return b

    lip = list(trees.roots)
    lis = [(k, TYPE_A) for k in trees.roots if children[k] is not None]
    lsp: list[int] = []

    n = stream.n_max
    for _ in range(todo):
        thr = 1 << n
        new_sig: list[int] = []

        next_lip = []
        for k in lip:
            if read():
                neg[k] = bool(read())
                rmag[k] = thr
                new_sig.append(k)
            else:
                next_lip.append(k)
        lip = next_lip

        next_lis = []
        idx = 0
        while idx < len(lis):
            k, kind = lis[idx]
            idx += 1
            if kind == TYPE_A:
                if read():
                    for c in children[k]:
                        if read():
                            neg[c] = bool(read())
                            rmag[c] = thr
                            new_sig.append(c)
                        else:
                            lip.append(c)
                    if grand[k]:
                        lis.append((k, TYPE_B))
                else:
                    next_lis.append((k, kind))
            else:
                if read():
                    for c in children[k]:
                        lis.append((c, TYPE_A))
                else:
                    next_lis.append((k, kind))
        lis = next_lis

        for k in lsp:
            if read():
                rmag[k] |= thr
        lsp.extend(new_sig)

        mag = np.array(rmag, dtype=np.int64)
        if n > 0:
            mag = np.where(mag > 0, mag + (1 << (n - 1)), 0)
        signed = np.where(np.array(neg), -mag, mag).reshape(rows, cols)
        yield pos_bit, make_grid(signed)
        n -= 1


def spiht_decode(stream: SpihtBitstream, passes: int | None = None) -> CoefficientGrid:
    """Decode the first ``passes`` passes (all encoded passes by default)."""
    full = passes is None
    if passes is None:
        passes = stream.max_passes
    if passes < 0 or passes > stream.max_passes:
        raise SpihtError(f"cannot decode {passes} passes from a stream encoded with {stream.max_passes}")
    consumed, grid = 0, None
    for consumed, grid in _decode_passes(stream, passes):
        pass
    if full and consumed != stream.n_bits:
        raise SpihtError(f"corrupt stream: {stream.n_bits - consumed} trailing bits after the last pass")
    return grid


def decode_progressive(stream: SpihtBitstream, passes: int) -> list[tuple[int, CoefficientGrid]]:
    """Snapshots after each pass 1..passes as ``(bits_consumed, grid)``.

    Passes beyond the last bitplane repeat the final snapshot.
    """
    snaps = list(_decode_passes(stream, passes))
    while len(snaps) < passes:
        snaps.append(snaps[-1])
    return snaps[:passes] if passes else []


def truncate_stream(stream: SpihtBitstream, passes: int) -> SpihtBitstream:
    """Cut a stream at a pass boundary; the result equals encoding with ``max_passes=passes``."""
    if not 1 <= passes <= stream.max_passes:
        raise SpihtError(f"pass count {passes} outside [1, {stream.max_passes}]")
    if stream.pass_ends or stream.n_max is None:
        ends = stream.pass_ends
    else:
        ends = [c for c, _ in _decode_passes(stream, stream.max_passes)]
    kept = available_passes(stream.n_max, passes)
    cut = ends[kept - 1] if kept else 0
    return SpihtBitstream(
        width=stream.width, height=stream.height, levels=stream.levels, q_bits=stream.q_bits,
        n_max=stream.n_max, max_passes=passes, bits=stream.bits[:cut].copy(), pass_ends=list(ends[:kept]),
    )
