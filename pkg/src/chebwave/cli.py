"""Command line entry point: ``chebwave <subcommand> ...``."""

from __future__ import annotations

import argparse
import csv
import sys
from pathlib import Path

import numpy as np

from . import metrics
from .codec import ChbwFile, compress_image, decompress_image, sweep_with_stream
from .conv_dims import TensorDims, run_chain
from .denoise import DenoiseConfig, denoise_image
from .imageio import read_image, write_image
from .pipeline import PipelineConfig, StageError, add_noise, run_pipeline, write_table_csv
from .tables import validate_tables
from .wavelet_core import WaveletKind, decompose, make_filter_bank, mallat_layout

DEFAULTS = {"wavelet": "second", "levels": 3, "passes": 17, "qbits": 4, "noise_sigma": None, "seed": 0, "enhance": True}

_CONFIG_KEYS = {
    "wavelet": str,
    "levels": int,
    "passes": int,
    "qbits": int,
    "q_bits": int,
    "noise-sigma": float,
    "noise_sigma": float,
    "seed": int,
    "enhance": lambda v: v.strip().lower() in ("1", "true", "yes", "on"),
    "out": str,
}


def load_config(path) -> dict:
    """Parse a ``key=value`` file; ``#`` starts a comment."""
    cfg = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key = key.strip().lower()
        if not sep or key not in _CONFIG_KEYS:
            raise ValueError(f"{path}:{lineno}: unrecognised config line {raw!r}")
        dest = {"q_bits": "qbits", "noise-sigma": "noise_sigma"}.get(key, key)
        cfg[dest] = _CONFIG_KEYS[key](value.strip())
    return cfg


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--wavelet", choices=["second", "third"], default=None)
    p.add_argument("--levels", type=int, default=None, metavar="N")
    p.add_argument("--passes", type=int, default=None, metavar="N")
    p.add_argument("--qbits", type=int, default=None, metavar="N")
    p.add_argument("--noise-sigma", type=float, default=None, metavar="X")
    p.add_argument("--seed", type=int, default=None, metavar="N")
    p.add_argument("--no-enhance", dest="enhance", action="store_false", default=None)
    p.add_argument("--out", default=None, metavar="DIR")
    p.add_argument("--config", default=None, metavar="FILE", help="key=value file; flags override it")
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = argparse.ArgumentParser(prog="chebwave", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("decompose", parents=[common], help="multi-level subband decomposition of an image")
    p.add_argument("image")
    p = sub.add_parser("denoise", parents=[common], help="wavelet soft-threshold denoising")
    p.add_argument("image")
    p = sub.add_parser("compress", parents=[common], help="SPIHT-encode an image into a .chbw stream")
    p.add_argument("image")
    p = sub.add_parser("decompress", parents=[common], help="decode a .chbw stream to an image")
    p.add_argument("stream")
    p = sub.add_parser("metrics", parents=[common], help="MSE/PSNR between two images")
    p.add_argument("reference")
    p.add_argument("test")
    p.add_argument("--bits", type=int, default=None, help="payload bits, to also report BPP and CR")
    p = sub.add_parser("sweep", parents=[common], help="per-pass rate-distortion table")
    p.add_argument("image")
    p = sub.add_parser("shapes", parents=[common], help="convolution shape chain")
    p.add_argument("--input", default="227,227,3", help="H,W,C of the input tensor")
    p = sub.add_parser("pipeline", parents=[common], help="full enhance/denoise/compress/feature pipeline")
    p.add_argument("image")
    sub.add_parser("validate-tables", parents=[common], help="consistency check of the published tables")
    return parser


def _settings(args) -> dict:
    merged = dict(DEFAULTS, out="out")
    if args.config:
        merged.update(load_config(args.config))
    for key in ("wavelet", "levels", "passes", "qbits", "noise_sigma", "seed", "enhance", "out"):
        value = getattr(args, key, None)
        if value is not None:
            merged[key] = value
    return merged


def _out_dir(s: dict) -> Path:
    out = Path(s["out"])
    out.mkdir(parents=True, exist_ok=True)
    return out


def _print_rows(rows) -> None:
    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(metrics.CSV_HEADER)
    for r in rows:
        w.writerow(r.as_row())


def _load_input(s: dict, path) -> np.ndarray:
    img = read_image(path)
    if s["noise_sigma"]:
        img = add_noise(img, s["noise_sigma"], s["seed"])
    return img


def cmd_decompose(args, s):
    from .plotting import plot_layout

    img = read_image(args.image)
    bank = make_filter_bank(s["wavelet"])
    pyrs = [decompose(img[:, :, ch], bank, s["levels"]) for ch in range(3)]
    out = _out_dir(s)
    arrays = {"ll": np.stack([p.ll for p in pyrs], axis=2)}
    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(["Level", "Band", "Height", "Width", "Energy"])
    for level in range(1, s["levels"] + 1):
        for i, name in enumerate(("lh", "hl", "hh")):
            band = np.stack([p.details[level - 1][i] for p in pyrs], axis=2)
            arrays[f"{name}{level}"] = band
            w.writerow([level, name.upper(), band.shape[0], band.shape[1], f"{float(np.sum(band ** 2)):.6g}"])
    ll = arrays["ll"]
    w.writerow([s["levels"], "LL", ll.shape[0], ll.shape[1], f"{float(np.sum(ll ** 2)):.6g}"])
    np.savez(out / "subbands.npz", **arrays)
    layout = np.mean([np.abs(mallat_layout(p)) for p in pyrs], axis=0)
    plot_layout(layout, out / "subbands.png", f"{s['levels']}-level decomposition")
    return 0


def cmd_denoise(args, s):
    img = _load_input(s, args.image)
    out_img = denoise_image(img, DenoiseConfig(s["wavelet"], s["levels"]))
    path = write_image(_out_dir(s) / f"{Path(args.image).stem}_denoised.png", out_img)
    print(f"wrote {path}")
    return 0


def cmd_compress(args, s):
    img = _load_input(s, args.image)
    chbw = compress_image(img, s["wavelet"], s["levels"], s["passes"], s["qbits"])
    path = _out_dir(s) / f"{Path(args.image).stem}.chbw"
    chbw.save(path)
    b = metrics.bpp(chbw.payload_bits, chbw.width * chbw.height)
    print(f"wrote {path}: {chbw.payload_bits} payload bits, BPP {b:.4f}, CR {metrics.cr(b):.3f}%")
    return 0


def cmd_decompress(args, s):
    chbw = ChbwFile.load(args.stream)
    passes = args.passes if args.passes is not None else chbw.passes
    img = decompress_image(chbw, passes)
    path = write_image(_out_dir(s) / f"{Path(args.stream).stem}_decoded.png", img)
    print(f"wrote {path} ({passes} passes)")
    return 0


def cmd_metrics(args, s):
    ref, test = read_image(args.reference), read_image(args.test)
    m = metrics.mse(ref, test)
    w = csv.writer(sys.stdout, lineterminator="\n")
    if args.bits is None:
        w.writerow(["MSE", "PSNR"])
        w.writerow([f"{m:.6g}", f"{metrics.psnr(m):.4f}"])
    else:
        b = metrics.bpp(args.bits, ref.shape[0] * ref.shape[1])
        w.writerow(["MSE", "PSNR", "BPP", "CR"])
        w.writerow([f"{m:.6g}", f"{metrics.psnr(m):.4f}", f"{b:.6f}", f"{metrics.cr(b):.4f}"])
    return 0


def cmd_sweep(args, s):
    from .plotting import plot_rate_distortion

    img = _load_input(s, args.image)
    rows, _ = sweep_with_stream(img, s["wavelet"], s["levels"], s["passes"], s["qbits"])
    out = _out_dir(s)
    stem = Path(args.image).stem
    write_table_csv(out / f"{stem}_sweep.csv", rows)
    plot_rate_distortion({stem: rows}, out / f"{stem}_sweep.png", f"{s['wavelet']}-kind filter bank")
    _print_rows(rows)
    return 0


def cmd_shapes(args, s):
    dims = TensorDims(*(int(v) for v in args.input.split(",")))
    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(["Layer", "Height", "Width", "Channels"])
    for name, d in run_chain(dims):
        w.writerow([name, *d])
    return 0


def cmd_pipeline(args, s):
    cfg = PipelineConfig(
        kind=s["wavelet"], levels=s["levels"], passes=s["passes"], q_bits=s["qbits"],
        noise_sigma=s["noise_sigma"], seed=s["seed"], enhance=s["enhance"],
    )
    img = read_image(args.image)
    report = run_pipeline(img, cfg, _out_dir(s))
    print((report.outputs["report"]).read_text(), end="")
    return 0


def cmd_validate_tables(args, s):
    result = validate_tables()
    print(result.report(), end="")
    return 0 if result.passed else 1


COMMANDS = {
    "decompose": cmd_decompose,
    "denoise": cmd_denoise,
    "compress": cmd_compress,
    "decompress": cmd_decompress,
    "metrics": cmd_metrics,
    "sweep": cmd_sweep,
    "shapes": cmd_shapes,
    "pipeline": cmd_pipeline,
    "validate-tables": cmd_validate_tables,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        s = _settings(args)
        s["wavelet"] = WaveletKind.parse(s["wavelet"]).value
        return COMMANDS[args.command](args, s)
    except StageError as exc:
        print(f"error[{args.command}:{exc.stage}]: {exc.cause}", file=sys.stderr)
    except (OSError, ValueError) as exc:
        print(f"error[{args.command}]: {exc}", file=sys.stderr)
    return 1


if __name__ == "__main__":
    sys.exit(main())
