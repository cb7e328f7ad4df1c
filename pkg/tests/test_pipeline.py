import numpy as np
import pytest

from chebwave.codec import rate_distortion_sweep
from chebwave.denoise import denoise_image
from chebwave.imageio import read_image, write_image
from chebwave.pipeline import (
    PipelineConfig,
    StageError,
    add_noise,
    histogram_equalize,
    run_pipeline,
)

from conftest import smooth_rgb


class TestHistogramEqualize:
    def test_uniform_channel_fixed_point(self):
        ch = np.arange(256, dtype=float).reshape(16, 16)
        out = histogram_equalize(np.stack([ch] * 3, axis=2))
        assert np.max(np.abs(out[:, :, 0] - ch)) <= 1

    def test_constant_channel_unchanged(self):
        img = np.full((8, 8, 3), 37.0)
        assert np.array_equal(histogram_equalize(img), img)

    def test_two_level_channel(self):
        ch = np.zeros((4, 4))
        ch[2:] = 64
        out = histogram_equalize(np.stack([ch] * 3, axis=2))[:, :, 0]
        assert set(np.unique(out)) == {127.0, 255.0}
        assert np.all(out[:2] == 127) and np.all(out[2:] == 255)


class TestAddNoise:
    def test_zero_sigma(self, rgb64):
        assert np.array_equal(add_noise(rgb64, 0, 1), rgb64)

    def test_deterministic(self, rgb64):
        assert np.array_equal(add_noise(rgb64, 10, 99), add_noise(rgb64, 10, 99))
        assert not np.array_equal(add_noise(rgb64, 10, 99), add_noise(rgb64, 10, 100))

    def test_sample_std(self):
        out = add_noise(np.full((100, 100), 128.0), 25, 2024)
        assert np.std(out) == pytest.approx(25, abs=1)

    def test_clamped(self):
        out = add_noise(np.full((50, 50), 250.0), 30, 0)
        assert out.max() <= 255 and out.min() >= 0

    def test_negative_sigma(self, rgb64):
        with pytest.raises(ValueError):
            add_noise(rgb64, -1, 0)


class TestRunPipeline:
    def test_tables_shape_and_trends(self, rgb64):
        rep = run_pipeline(rgb64, PipelineConfig(noise_sigma=15, seed=3))
        for rows in (rep.before, rep.after):
            assert len(rows) == 17
            for a, b in zip(rows, rows[1:]):
                assert b.mse <= a.mse and b.psnr >= a.psnr
                assert b.bpp >= a.bpp and b.cr >= a.cr

    def test_near_lossless_256(self):
        img = smooth_rgb(256, seed=1)
        rep = run_pipeline(img, PipelineConfig(passes=17, q_bits=4))
        assert rep.decoded_quality.psnr > 40

    def test_zero_image(self):
        rep = run_pipeline(np.zeros((32, 32, 3)), PipelineConfig(levels=2))
        for band in rep.features.values():
            assert np.all(band == 0)
        assert rep.before_stream.payload_bits == 0
        assert rep.after_stream.payload_bits == 0

    def test_feature_maps_are_level1(self, rgb64):
        rep = run_pipeline(rgb64, PipelineConfig(kind="third", levels=2))
        assert set(rep.features) == {"ll", "lh", "hl", "hh"}
        assert all(f.shape == (32, 32, 3) for f in rep.features.values())

    def test_stage_isolation(self, rgb64):
        cfg = PipelineConfig(noise_sigma=20, seed=5, enhance=False, passes=12)
        rep = run_pipeline(rgb64, cfg)
        noisy = add_noise(rgb64, 20, 5)
        manual = rate_distortion_sweep(denoise_image(noisy, cfg.denoise), cfg.kind, cfg.levels, cfg.passes, cfg.q_bits)
        assert manual == rep.after

    def test_determinism_in_memory(self, rgb64):
        cfg = PipelineConfig(noise_sigma=10, seed=42)
        a = run_pipeline(rgb64, cfg)
        b = run_pipeline(rgb64, cfg)
        assert a.before_stream.to_bytes() == b.before_stream.to_bytes()
        assert a.after_stream.to_bytes() == b.after_stream.to_bytes()
        assert a.before == b.before and a.after == b.after
        assert np.array_equal(a.final_image, b.final_image)

    def test_stage_error_names_stage(self):
        with pytest.raises(StageError) as info:
            run_pipeline(np.zeros((2, 2, 3)), PipelineConfig(levels=3))
        assert info.value.stage == "compress-before"

    def test_bad_input_shape(self):
        with pytest.raises(StageError) as info:
            run_pipeline(np.zeros((8, 8)), PipelineConfig())
        assert info.value.stage == "input"

    def test_config_validation(self):
        with pytest.raises(ValueError):
            PipelineConfig(levels=0)
        with pytest.raises(ValueError):
            PipelineConfig(passes=0)
        with pytest.raises(ValueError):
            PipelineConfig(kind="fourth")

    def test_writes_artifacts(self, rgb64, tmp_path):
        rep = run_pipeline(rgb64, PipelineConfig(), tmp_path / "run")
        for key in ("before_csv", "after_csv", "before_stream", "after_stream", "final", "rd_png", "features_png", "report"):
            assert rep.outputs[key].exists(), key
        header = rep.outputs["before_csv"].read_text().splitlines()[0]
        assert header == "Iteration,MSE,PSNR,BPP,CR"


class TestImageIO:
    @pytest.mark.parametrize("suffix", [".png", ".ppm"])
    def test_round_trip(self, tmp_path, rgb64, suffix):
        path = write_image(tmp_path / f"x{suffix}", rgb64)
        assert np.array_equal(read_image(path), rgb64)

    def test_ppm_is_binary_p6(self, tmp_path, rgb64):
        path = write_image(tmp_path / "x.ppm", rgb64)
        assert path.read_bytes()[:2] == b"P6"

    def test_unsupported_suffix(self, tmp_path, rgb64):
        with pytest.raises(ValueError):
            write_image(tmp_path / "x.jpg", rgb64)
