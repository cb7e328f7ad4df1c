"""RGB image compression on top of the SPIHT coder, the CHBW container and the
rate-distortion sweep.

CHBW layout (little-endian)::

    magic "CHBW" | version u8 | kind u8 | width u32 | height u32 |
    channels u8 | levels u8 | q_bits u8 | n_max u8 x channels |
    passes u16 | payload length in bits u32 x channels | payloads

Each payload is packed MSB-first and zero-padded to a byte boundary. An
``n_max`` of 255 marks a channel with no significant coefficient.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from . import metrics
from .spiht import (
    NO_SIGNIFICANT,
    SpihtBitstream,
    SpihtError,
    decode_progressive,
    dequantize,
    quantize,
    spiht_decode,
    spiht_encode,
)
from .wavelet_core import WaveletKind, decompose, make_filter_bank, reconstruct

MAGIC = b"CHBW"
VERSION = 1
_FIXED = struct.Struct("<4sBBIIBBB")


@dataclass
class ChbwFile:
    kind: WaveletKind
    width: int
    height: int
    levels: int
    q_bits: int
    passes: int
    streams: list[SpihtBitstream]

    @property
    def payload_bits(self) -> int:
        return sum(s.n_bits for s in self.streams)

    def to_bytes(self) -> bytes:
        head = _FIXED.pack(MAGIC, VERSION, self.kind.code, self.width, self.height,
                           len(self.streams), self.levels, self.q_bits)
        n_max = bytes(NO_SIGNIFICANT if s.n_max is None else s.n_max for s in self.streams)
        tail = struct.pack("<H", self.passes) + b"".join(struct.pack("<I", s.n_bits) for s in self.streams)
        return head + n_max + tail + b"".join(s.payload for s in self.streams)

    @classmethod
    def from_bytes(cls, data: bytes) -> "ChbwFile":
        if len(data) < _FIXED.size:
            raise SpihtError("corrupt header: file too short")
        magic, version, kind_code, width, height, channels, levels, q_bits = _FIXED.unpack_from(data)
        if magic != MAGIC:
            raise SpihtError(f"corrupt header: bad magic {magic!r}")
        if version != VERSION:
            raise SpihtError(f"unsupported CHBW version {version}")
        try:
            kind = WaveletKind.from_code(kind_code)
        except ValueError as exc:
            raise SpihtError(f"corrupt header: {exc}") from None
        if channels < 1 or levels < 1 or width < 1 or height < 1:
            raise SpihtError("corrupt header: zero dimension, channel or level count")
        off = _FIXED.size
        need = off + channels + 2 + 4 * channels
        if len(data) < need:
            raise SpihtError("corrupt header: file too short")
        n_maxes = list(data[off:off + channels])
        off += channels
        (passes,) = struct.unpack_from("<H", data, off)
        off += 2
        lengths = list(struct.unpack_from(f"<{channels}I", data, off))
        off += 4 * channels
        streams = []
        for n_max, n_bits in zip(n_maxes, lengths):
            if n_max != NO_SIGNIFICANT and n_max > 30:
                raise SpihtError(f"corrupt header: n_max {n_max}")
            n_bytes = -(-n_bits // 8)
            chunk = data[off:off + n_bytes]
            if len(chunk) != n_bytes:
                raise SpihtError("corrupt stream: payload shorter than its declared length")
            off += n_bytes
            bits = np.unpackbits(np.frombuffer(chunk, dtype=np.uint8))[:n_bits]
            streams.append(SpihtBitstream(
                width=width, height=height, levels=levels, q_bits=q_bits,
                n_max=None if n_max == NO_SIGNIFICANT else n_max,
                max_passes=passes, bits=bits, pass_ends=[],
            ))
        if off != len(data):
            raise SpihtError(f"corrupt stream: {len(data) - off} unexpected trailing bytes")
        return cls(kind, width, height, levels, q_bits, passes, streams)

    def save(self, path) -> None:
        with open(path, "wb") as fh:
            fh.write(self.to_bytes())

    @classmethod
    def load(cls, path) -> "ChbwFile":
        with open(path, "rb") as fh:
            return cls.from_bytes(fh.read())


def _channels(image) -> np.ndarray:
    img = np.asarray(image, dtype=float)
    if img.ndim == 2:
        img = img[:, :, None]
    if img.ndim != 3 or img.size == 0:
        raise ValueError(f"expected an (H, W, C) image, got shape {img.shape}")
    return img


def compress_image(image, kind: WaveletKind | str = WaveletKind.SECOND, levels: int = 3,
                   passes: int = 17, q_bits: int = 4) -> ChbwFile:
    """Encode each channel independently into one CHBW container."""
    img = _channels(image)
    kind = WaveletKind.parse(kind)
    bank = make_filter_bank(kind)
    height, width, nch = img.shape
    streams = []
    for ch in range(nch):
        grid = quantize(decompose(img[:, :, ch], bank, levels), q_bits)
        streams.append(spiht_encode(grid, passes))
    return ChbwFile(kind, width, height, levels, q_bits, passes, streams)


def _to_plane(grid, bank) -> np.ndarray:
    return np.clip(reconstruct(dequantize(grid), bank), 0.0, 255.0)


def decompress_image(chbw: ChbwFile, passes: int | None = None) -> np.ndarray:
    """Decode ``passes`` passes per channel (all by default) into an (H, W, C) float image."""
    bank = make_filter_bank(chbw.kind)
    planes = [_to_plane(spiht_decode(s, passes), bank) for s in chbw.streams]
    return np.stack(planes, axis=2)


def sweep_with_stream(image, kind: WaveletKind | str = WaveletKind.SECOND, levels: int = 3,
                      max_passes: int = 17, q_bits: int = 4) -> tuple[list[metrics.QualityReport], ChbwFile]:
    img = _channels(image)
    chbw = compress_image(img, kind, levels, max_passes, q_bits)
    bank = make_filter_bank(chbw.kind)
    per_channel = [decode_progressive(s, max_passes) for s in chbw.streams]
    pixels = chbw.width * chbw.height
    rows = []
    for i in range(max_passes):
        recon = np.stack([_to_plane(snaps[i][1], bank) for snaps in per_channel], axis=2)
        bits = sum(snaps[i][0] for snaps in per_channel)
        rows.append(metrics.QualityReport.from_measurements(i + 1, metrics.mse(img, recon), bits, pixels))
    return rows, chbw


def rate_distortion_sweep(image, kind: WaveletKind | str = WaveletKind.SECOND, levels: int = 3,
                          max_passes: int = 17, q_bits: int = 4) -> list[metrics.QualityReport]:
    """One quality row per decoded pass count 1..max_passes.

    BPP counts the payload bits of all channels consumed up to that pass
    divided by the pixel count, so CR is relative to 24-bit RGB.
    """
    return sweep_with_stream(image, kind, levels, max_passes, q_bits)[0]
