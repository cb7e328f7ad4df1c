import numpy as np
import pytest


def smooth_rgb(size=64, seed=0, noise=4.0):
    rng = np.random.default_rng(seed)
    y, x = np.mgrid[0:size, 0:size]
    base = np.stack([
        128 + 60 * np.sin(x / 9.0) * np.cos(y / 13.0),
        90 + 120 * x / size,
        40 + 150 * y / size,
    ], axis=2)
    return np.clip(np.rint(base + rng.normal(0, noise, size=base.shape)), 0, 255)


@pytest.fixture
def rgb64():
    return smooth_rgb(64)


@pytest.fixture
def png_file(tmp_path, rgb64):
    from chebwave.imageio import write_image

    return write_image(tmp_path / "sample.png", rgb64)
