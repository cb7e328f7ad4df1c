"""End-to-end processing of one colour image.

Stages: enhance -> (noise) -> compress sweep -> denoise -> compress sweep
-> full decode -> second denoise -> level-1 feature maps.
"""

from __future__ import annotations

import csv
import time
from contextlib import contextmanager
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import metrics
from .codec import ChbwFile, decompress_image, sweep_with_stream
from .denoise import DenoiseConfig, denoise_image
from .imageio import write_image
from .wavelet_core import WaveletKind, dwt2d, make_filter_bank


class StageError(RuntimeError):
    """A pipeline stage failed; ``stage`` names it."""

    def __init__(self, stage: str, cause: BaseException):
        super().__init__(f"[{stage}] {cause}")
        self.stage = stage
        self.cause = cause


@dataclass(frozen=True)
class PipelineConfig:
    kind: WaveletKind = WaveletKind.SECOND
    levels: int = 3
    passes: int = 17
    q_bits: int = 4
    noise_sigma: float | None = None
    seed: int = 0
    enhance: bool = True

    def __post_init__(self):
        object.__setattr__(self, "kind", WaveletKind.parse(self.kind))
        if self.levels < 1:
            raise ValueError(f"levels must be >= 1, got {self.levels}")
        if self.passes < 1:
            raise ValueError(f"passes must be >= 1, got {self.passes}")
        if self.noise_sigma is not None and self.noise_sigma < 0:
            raise ValueError(f"noise sigma must be non-negative, got {self.noise_sigma}")

    @property
    def denoise(self) -> DenoiseConfig:
        return DenoiseConfig(self.kind, self.levels)


@dataclass
class PipelineReport:
    before: list[metrics.QualityReport]
    after: list[metrics.QualityReport]
    before_stream: ChbwFile
    after_stream: ChbwFile
    final_image: np.ndarray
    features: dict[str, np.ndarray]
    decoded_quality: metrics.QualityReport
    final_quality: metrics.QualityReport
    timings: dict[str, float] = field(default_factory=dict)
    outputs: dict[str, Path] = field(default_factory=dict)


def histogram_equalize(image) -> np.ndarray:
    """Per-channel cumulative-histogram remap onto [0, 255].

    A level ``v`` maps to ``floor(255 * cdf(v))``. Single-valued channels
    are returned unchanged.
    """
    img = np.asarray(image, dtype=float)
    if img.ndim == 2:
        img = img[:, :, None]
    levels = np.clip(np.rint(img), 0, 255).astype(np.int64)
    out = img.copy()
    for ch in range(img.shape[2]):
        lv = levels[:, :, ch]
        if lv.min() == lv.max():
            continue
        hist = np.bincount(lv.ravel(), minlength=256)
        cdf = np.cumsum(hist) / lv.size
        lut = np.floor(255.0 * cdf + 1e-9)
        out[:, :, ch] = lut[lv]
    return out if np.ndim(image) == 3 else out[:, :, 0]


def add_noise(image, sigma: float, seed: int) -> np.ndarray:
    """Add seeded i.i.d. Gaussian noise and clamp to [0, 255]."""
    if sigma < 0:
        raise ValueError(f"sigma must be non-negative, got {sigma}")
    img = np.asarray(image, dtype=float)
    if sigma == 0:
        return img.copy()
    rng = np.random.default_rng(seed)
    return np.clip(img + rng.normal(0.0, sigma, size=img.shape), 0.0, 255.0)


def feature_maps(image, kind: WaveletKind | str) -> dict[str, np.ndarray]:
    """Level-1 subbands of every channel, stacked as (H/2, W/2, 3) arrays."""
    bank = make_filter_bank(kind)
    img = np.asarray(image, dtype=float)
    per_channel = [dwt2d(img[:, :, ch], bank) for ch in range(img.shape[2])]
    return {
        name: np.stack([bands[i] for bands in per_channel], axis=2)
        for i, name in enumerate(("ll", "lh", "hl", "hh"))
    }


def write_table_csv(path, rows: list[metrics.QualityReport]) -> Path:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(metrics.CSV_HEADER)
        for r in rows:
            w.writerow(r.as_row())
    return Path(path)


@contextmanager
def _stage(name: str, timings: dict):
    t0 = time.perf_counter()
    try:
        yield
    except StageError:
        raise
    except Exception as exc:
        raise StageError(name, exc) from exc
    finally:
        timings[name] = time.perf_counter() - t0


def run_pipeline(image, cfg: PipelineConfig, out_dir=None) -> PipelineReport:
    """Run every stage; when ``out_dir`` is given, write all artifacts there."""
    timings: dict[str, float] = {}
    with _stage("input", timings):
        img = np.asarray(image, dtype=float)
        if img.ndim != 3 or img.shape[2] != 3:
            raise ValueError(f"expected an RGB image of shape (H, W, 3), got {img.shape}")
    with _stage("enhance", timings):
        work = histogram_equalize(img) if cfg.enhance else img.copy()
    with _stage("noise", timings):
        if cfg.noise_sigma:
            work = add_noise(work, cfg.noise_sigma, cfg.seed)
    with _stage("compress-before", timings):
        before, before_stream = sweep_with_stream(work, cfg.kind, cfg.levels, cfg.passes, cfg.q_bits)
    with _stage("denoise", timings):
        denoised = denoise_image(work, cfg.denoise)
    with _stage("compress-after", timings):
        after, after_stream = sweep_with_stream(denoised, cfg.kind, cfg.levels, cfg.passes, cfg.q_bits)
    with _stage("decompress", timings):
        decoded = decompress_image(ChbwFile.from_bytes(after_stream.to_bytes()))
    with _stage("second-denoise", timings):
        final = denoise_image(decoded, cfg.denoise)
    with _stage("features", timings):
        feats = feature_maps(final, cfg.kind)
        pixels = img.shape[0] * img.shape[1]
        bits = after_stream.payload_bits
        decoded_q = metrics.QualityReport.from_measurements(cfg.passes, metrics.mse(denoised, decoded), bits, pixels)
        final_q = metrics.QualityReport.from_measurements(cfg.passes, metrics.mse(work, final), bits, pixels)

    report = PipelineReport(before, after, before_stream, after_stream, final, feats, decoded_q, final_q, timings)
    if out_dir is not None:
        with _stage("write", timings):
            _write_outputs(report, Path(out_dir), cfg, work, denoised, decoded)
    return report


def _write_outputs(report: PipelineReport, out: Path, cfg: PipelineConfig, work, denoised, decoded) -> None:
    from .plotting import plot_rate_distortion, plot_subbands

    out.mkdir(parents=True, exist_ok=True)
    o = report.outputs
    o["input"] = write_image(out / "input.png", work)
    o["denoised"] = write_image(out / "denoised.png", denoised)
    o["decompressed"] = write_image(out / "decompressed.png", decoded)
    o["final"] = write_image(out / "final.png", report.final_image)
    o["before_csv"] = write_table_csv(out / "compression_before_denoising.csv", report.before)
    o["after_csv"] = write_table_csv(out / "compression_after_denoising.csv", report.after)
    report.before_stream.save(out / "before.chbw")
    report.after_stream.save(out / "after.chbw")
    o["before_stream"] = out / "before.chbw"
    o["after_stream"] = out / "after.chbw"
    np.savez(out / "features.npz", **report.features)
    o["features"] = out / "features.npz"
    f = report.features
    o["features_png"] = plot_subbands(f["ll"].mean(axis=2), f["lh"].mean(axis=2), f["hl"].mean(axis=2),
                                      f["hh"].mean(axis=2), out / "features.png", "level-1 feature maps")
    o["rd_png"] = plot_rate_distortion({"before denoising": report.before, "after denoising": report.after},
                                       out / "rate_distortion.png", f"{cfg.kind.value}-kind filter bank")
    o["report"] = out / "report.txt"
    (out / "report.txt").write_text(format_report(report, cfg))


def format_report(report: PipelineReport, cfg: PipelineConfig) -> str:
    lines = [
        f"wavelet: {cfg.kind.value}",
        f"levels: {cfg.levels}  passes: {cfg.passes}  q_bits: {cfg.q_bits}",
        f"noise sigma: {cfg.noise_sigma if cfg.noise_sigma else 'off'}  seed: {cfg.seed}  enhance: {cfg.enhance}",
        "",
    ]
    for title, rows in (("compression before denoising", report.before), ("compression after denoising", report.after)):
        lines.append(title)
        lines.append("  " + "  ".join(f"{h:>10}" for h in metrics.CSV_HEADER))
        for r in rows:
            lines.append("  " + "  ".join(f"{v:>10}" for v in r.as_row()))
        lines.append("")
    for label, q in (("decompressed vs denoised source", report.decoded_quality),
                     ("final (second denoise) vs input", report.final_quality)):
        lines.append(f"{label}: MSE {q.mse:.6g}  PSNR {q.psnr:.3f} dB  BPP {q.bpp:.4f}  CR {q.cr:.3f}%")
    lines.append("")
    lines.append("stage timings (s):")
    lines.extend(f"  {k}: {v:.3f}" for k, v in report.timings.items())
    return "\n".join(lines) + "\n"
