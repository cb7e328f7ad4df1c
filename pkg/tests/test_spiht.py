import struct

import numpy as np
import pytest

from chebwave.codec import ChbwFile, compress_image, decompress_image, rate_distortion_sweep, sweep_with_stream
from chebwave.spiht import (
    TYPE_A,
    CoefficientGrid,
    SpihtError,
    TruncatedStreamError,
    _Trees,
    decode_progressive,
    dequantize,
    grid_shape,
    quantize,
    spiht_decode,
    spiht_encode,
    truncate_stream,
)
from chebwave.wavelet_core import SubbandPyramid, WaveletKind, decompose, make_filter_bank


def pyramid_4x4(ll):
    z = np.zeros((2, 2))
    return SubbandPyramid(np.asarray(ll, dtype=float), [(z, z, z)], (4, 4))


def random_grid(rng, max_side=64, magnitude=5000):
    levels = int(rng.integers(1, 4))
    h, w = (int(v) for v in rng.integers(2**levels, max_side + 1, size=2))
    vals = rng.integers(-magnitude, magnitude + 1, size=grid_shape(w, h, levels))
    # sparsify so the trees see realistic zero runs
    vals[rng.uniform(size=vals.shape) < 0.5] = 0
    return CoefficientGrid(vals.astype(np.int64), w, h, levels, 4)


def image_grid(seed, size=32, levels=3, kind="second"):
    P = np.random.default_rng(seed).uniform(0, 255, size=(size, size))
    return quantize(decompose(P, make_filter_bank(kind), levels), 4)


class TestQuantize:
    def test_rounds_small_value_down(self):
        g = quantize(pyramid_4x4([[0.49, 0], [0, 0]]), q_bits=0)
        assert g.values[0, 0] == 0

    def test_exact_scaling(self):
        g = quantize(pyramid_4x4([[3.25, 0], [0, 0]]), q_bits=2)
        assert g.values[0, 0] == 13
        assert dequantize(g).ll[0, 0] == 3.25

    def test_half_rounds_to_even(self):
        g = quantize(pyramid_4x4([[2.5, 3.5], [-2.5, 0]]), q_bits=0)
        assert g.values[0, :2].tolist() == [2, 4]
        assert g.values[1, 0] == -2

    def test_integer_grid_identity(self):
        pyr = decompose(np.random.default_rng(0).uniform(0, 255, (16, 16)), make_filter_bank("third"), 2)
        pyr = pyr.map_details(np.round)
        pyr.ll = np.round(pyr.ll)
        back = dequantize(quantize(pyr, 0))
        assert np.array_equal(back.ll, pyr.ll)
        for t1, t2 in zip(back.details, pyr.details):
            for a, b in zip(t1, t2):
                assert np.array_equal(a, b)

    def test_limits(self):
        with pytest.raises(SpihtError):
            quantize(pyramid_4x4([[1, 0], [0, 0]]), q_bits=9)
        with pytest.raises(SpihtError):
            quantize(pyramid_4x4([[2.0**40, 0], [0, 0]]), q_bits=0)

    def test_grid_dims_checked(self):
        with pytest.raises(SpihtError):
            CoefficientGrid(np.zeros((4, 4), dtype=np.int64), 4, 4, 0, 0)
        with pytest.raises(SpihtError):
            CoefficientGrid(np.zeros((4, 6), dtype=np.int64), 4, 4, 1, 0)


class TestTrees:
    def test_every_coefficient_has_one_parent(self):
        for rows, cols, levels in [(8, 8, 1), (16, 16, 3), (16, 32, 2)]:
            t = _Trees(rows, cols, levels)
            seen = np.zeros(rows * cols, dtype=int)
            for kids in t.children:
                if kids:
                    for k in kids:
                        seen[k] += 1
            roots = np.zeros(rows * cols, dtype=bool)
            roots[t.roots] = True
            assert np.all(seen[~roots] == 1)
            assert np.all(seen[roots] == 0)

    def test_ll_group_leaf(self):
        t = _Trees(8, 8, 2)
        # 8x8 grid, 2 levels: coarsest band is 2x2, each detail band at level 2 too
        assert t.children[0] is None
        assert t.children[1] == (2, 3, 10, 11)  # top-right band
        assert t.children[8] == (16, 17, 24, 25)  # bottom-left band
        assert t.children[9] == (18, 19, 26, 27)  # bottom-right band
        assert t.children[2] == (4, 5, 12, 13)


class TestEncodeDecode:
    def test_all_zero_grid(self):
        g = CoefficientGrid(np.zeros((8, 8), dtype=np.int64), 8, 8, 2, 4)
        s = spiht_encode(g, 17)
        assert s.n_max is None and s.n_bits == 0 and s.payload == b""
        assert spiht_decode(s) == g

    def test_single_root_coefficient_hand_trace(self):
        vals = np.zeros((4, 4), dtype=np.int64)
        vals[0, 0] = 32
        g = CoefficientGrid(vals, 4, 4, 1, 0)
        s = spiht_encode(g, 1)
        assert s.n_max == 5
        # LIP (4 roots): sig+sign, 0, 0, 0; LIS (3 type-A sets): 0, 0, 0; no refinement
        assert s.bits.tolist() == [1, 0, 0, 0, 0, 0, 0, 0]
        out = spiht_decode(s, 1)
        assert out.values[0, 0] == 48  # 1.5 * 2**5
        assert np.count_nonzero(out.values) == 1

    def test_negative_sign(self):
        vals = np.zeros((4, 4), dtype=np.int64)
        vals[0, 1] = -5
        out = spiht_decode(spiht_encode(CoefficientGrid(vals, 4, 4, 1, 0), 10))
        assert out.values[0, 1] == -5

    def test_lossless_random(self):
        rng = np.random.default_rng(77)
        for _ in range(50):
            g = random_grid(rng)
            s = spiht_encode(g, 64)
            assert s.passes == s.n_max + 1
            assert spiht_decode(s) == g

    def test_prefix_equals_reencode(self):
        rng = np.random.default_rng(5)
        for _ in range(8):
            g = random_grid(rng, max_side=32)
            full = spiht_encode(g, 17)
            for i in range(1, full.passes + 1):
                short = spiht_encode(g, i)
                assert np.array_equal(short.bits, full.bits[: full.pass_ends[i - 1]])
                assert spiht_decode(full, i) == spiht_decode(short)
                cut = truncate_stream(full, i)
                assert np.array_equal(cut.bits, short.bits)

    def test_mse_non_increasing(self):
        for seed in range(10):
            g = image_grid(seed, kind=["second", "third"][seed % 2])
            s = spiht_encode(g, 40)
            errs = [np.mean((snap.values - g.values) ** 2.0) for _, snap in decode_progressive(s, s.passes)]
            assert all(b <= a for a, b in zip(errs, errs[1:]))
            assert errs[-1] == 0

    def test_list_discipline(self):
        g = image_grid(3, size=16, levels=2)
        rows, cols = g.values.shape
        n = rows * cols
        t = _Trees(rows, cols, g.levels)

        def descendants(k, skip_children):
            out, frontier = [], list(t.children[k] or ())
            if skip_children:
                frontier = [c for kid in frontier for c in (t.children[kid] or ())]
            while frontier:
                out.extend(frontier)
                frontier = [c for f in frontier for c in (t.children[f] or ())]
            return out

        def check(bitplane, lip, lis, lsp):
            count = np.zeros(n, dtype=int)
            for k in lip + lsp:
                count[k] += 1
            for k, kind in lis:
                for d in descendants(k, skip_children=kind != TYPE_A):
                    count[d] += 1
            assert np.all(count == 1), f"pass at bitplane {bitplane}"

        spiht_encode(g, 40, on_pass=check)

    def test_bad_arguments(self):
        g = image_grid(0, size=8, levels=1)
        with pytest.raises(SpihtError):
            spiht_encode(g, 0)
        s = spiht_encode(g, 3)
        with pytest.raises(SpihtError):
            spiht_decode(s, 4)

    def test_truncated_mid_pass_rejected(self):
        s = spiht_encode(image_grid(1), 17)
        s.bits = s.bits[: s.pass_ends[4] + 3]
        with pytest.raises(TruncatedStreamError):
            spiht_decode(s)
        # the complete passes before the cut still decode
        spiht_decode(s, 5)

    def test_trailing_bits_rejected(self):
        s = spiht_encode(image_grid(1), 4)
        s.bits = np.concatenate([s.bits, np.zeros(3, dtype=np.uint8)])
        with pytest.raises(SpihtError):
            spiht_decode(s)


def rgb(seed, h=32, w=32):
    rng = np.random.default_rng(seed)
    y, x = np.mgrid[0:h, 0:w]
    base = np.stack([100 + 80 * np.sin(x / 5.0), 60 + 3 * y, 200 - 2 * x - y], axis=2)
    return np.clip(base + rng.normal(0, 8, size=(h, w, 3)), 0, 255)


class TestContainer:
    def test_header_layout(self):
        chbw = compress_image(rgb(0, 16, 24), "third", levels=2, passes=5, q_bits=3)
        data = chbw.to_bytes()
        assert data[:4] == b"CHBW"
        assert data[4] == 1 and data[5] == 1
        assert struct.unpack_from("<II", data, 6) == (24, 16)
        assert tuple(data[14:17]) == (3, 2, 3)
        assert list(data[17:20]) == [s.n_max for s in chbw.streams]
        assert struct.unpack_from("<H", data, 20) == (5,)
        lengths = struct.unpack_from("<3I", data, 22)
        assert list(lengths) == [s.n_bits for s in chbw.streams]
        assert len(data) == 34 + sum(-(-b // 8) for b in lengths)
        first = np.unpackbits(np.frombuffer(data[34:34 + -(-lengths[0] // 8)], dtype=np.uint8))
        assert np.array_equal(first[: lengths[0]], chbw.streams[0].bits)
        assert not first[lengths[0]:].any()

    def test_round_trip_bytes(self):
        chbw = compress_image(rgb(1), "second", 3, 17, 4)
        back = ChbwFile.from_bytes(chbw.to_bytes())
        assert back.to_bytes() == chbw.to_bytes()
        np.testing.assert_array_equal(decompress_image(back), decompress_image(chbw))
        for p in (1, 6, 17):
            np.testing.assert_array_equal(decompress_image(back, p), decompress_image(chbw, p))

    def test_zero_image_sentinel(self):
        chbw = compress_image(np.zeros((16, 16, 3)), "second", 2, 17, 4)
        data = chbw.to_bytes()
        assert list(data[17:20]) == [255, 255, 255]
        assert chbw.payload_bits == 0
        assert np.all(decompress_image(ChbwFile.from_bytes(data)) == 0)

    @pytest.mark.parametrize("mutate", [
        lambda d: b"CHBX" + d[4:],
        lambda d: d[:4] + b"\x02" + d[5:],
        lambda d: d[:5] + b"\x07" + d[6:],
        lambda d: d[:-1],
        lambda d: d + b"\x00",
        lambda d: d[:10],
    ])
    def test_corrupt_rejected(self, mutate):
        data = compress_image(rgb(2, 16, 16), "second", 2, 6, 4).to_bytes()
        with pytest.raises(SpihtError):
            ChbwFile.from_bytes(mutate(data))


class TestSweep:
    @pytest.mark.parametrize("kind", list(WaveletKind))
    def test_rows_monotone_and_consistent(self, kind):
        rows = rate_distortion_sweep(rgb(3), kind, 3, 17, 4)
        assert [r.iteration for r in rows] == list(range(1, 18))
        for a, b in zip(rows, rows[1:]):
            assert b.mse <= a.mse
            assert b.psnr >= a.psnr
            assert b.bpp >= a.bpp and b.cr >= a.cr
        for r in rows:
            assert r.psnr - 10 * np.log10(255**2 / r.mse) == pytest.approx(0, abs=1e-9)
            assert r.cr - 100 * r.bpp / 24 == pytest.approx(0, abs=1e-9)

    def test_bits_match_stream(self):
        img = rgb(4)
        rows, chbw = sweep_with_stream(img, "second", 3, 17, 4)
        assert rows[-1].bpp == pytest.approx(chbw.payload_bits / (32 * 32))
        final = decompress_image(chbw)
        assert rows[-1].mse == pytest.approx(np.mean((final - img) ** 2))

    def test_odd_sized_image(self):
        rows = rate_distortion_sweep(rgb(5, 19, 27), "third", 2, 30, 4)
        assert rows[-1].mse < 1e-3
