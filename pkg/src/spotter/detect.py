"""Multi-scale detection: image pyramid, per-level dense inference,
thresholded response masks, and throughput measurement.

Characters larger than the training window are caught by re-running the
same detector on geometrically shrunk copies of the image; each response
cell maps back to a window rectangle in original coordinates through its
level's scale.
"""

import time
from dataclasses import dataclass, replace

import numpy as np

from . import nets


@dataclass
class PyramidLevel:
    scale: float
    image: np.ndarray  # (1, h, w) float32 in [-1, 1]


@dataclass
class DetectionResult:
    levels: list  # ResponseMap per level
    masks: list  # boolean arrays, aligned with levels
    threshold: float
    original_size: tuple  # (h, w)


@dataclass
class BenchReport:
    image_size: int
    iterations: int
    median_seconds: float
    fps: float
    macs_per_frame: float
    effective_gmacs: float


def resize_bilinear(image, out_h, out_w):
    """Downsample a (c, h, w) tensor by separable bilinear interpolation.

    Source coordinates follow pixel-center alignment, clamped at edges;
    pure numpy, so the result is identical across backends and runs.
    """
    c, h, w = image.shape
    if (out_h, out_w) == (h, w):
        return image.copy()
    ys = (np.arange(out_h) + 0.5) * (h / out_h) - 0.5
    xs = (np.arange(out_w) + 0.5) * (w / out_w) - 0.5
    y0 = np.clip(np.floor(ys), 0, h - 1).astype(np.intp)
    x0 = np.clip(np.floor(xs), 0, w - 1).astype(np.intp)
    y1 = np.minimum(y0 + 1, h - 1)
    x1 = np.minimum(x0 + 1, w - 1)
    fy = np.clip(ys - y0, 0.0, 1.0).astype(np.float32)[None, :, None]
    fx = np.clip(xs - x0, 0.0, 1.0).astype(np.float32)[None, None, :]
    top = image[:, y0][:, :, x0] * (1 - fx) + image[:, y0][:, :, x1] * fx
    bot = image[:, y1][:, :, x0] * (1 - fx) + image[:, y1][:, :, x1] * fx
    return (top * (1 - fy) + bot * fy).astype(image.dtype)


def build_pyramid(image, scale_factor, min_window):
    """Levels at scales 1, f, f^2, ... while the level still fits the window.

    `image` is a (1, h, w) tensor (or 2-D grey array); `min_window` is the
    detector's (width, height).
    """
    if not 0 < scale_factor < 1:
        raise ValueError(f"scale factor must be in (0, 1), got {scale_factor}")
    image = np.asarray(image)
    if image.ndim == 2:
        image = image[None]
    _, h, w = image.shape
    win_w, win_h = min_window
    if h < win_h or w < win_w:
        raise ValueError(f"image {h}x{w} is smaller than the window {win_h}x{win_w}")
    levels = []
    k = 0
    while True:
        scale = scale_factor**k
        lh, lw = int(h * scale), int(w * scale)
        if lh < win_h or lw < win_w:
            break
        levels.append(PyramidLevel(scale, resize_bilinear(image, lh, lw)))
        k += 1
    return levels


def detect(spec, params, image, threshold, scale_factor=2 ** -0.5) -> DetectionResult:
    """Dense multi-scale inference thresholded into binary masks.

    `image` is (h, w) uint8 grey. mask[y, x] is set iff scores[y, x] >=
    threshold.
    """
    if not 0 <= threshold <= 1:
        raise ValueError(f"threshold must be in [0, 1], got {threshold}")
    tensor = nets.normalize_image(image)
    levels = build_pyramid(tensor, scale_factor, spec.window)
    maps = []
    masks = []
    for level in levels:
        rm = nets.forward_dense(spec, params, level.image)
        rm = replace(rm, scale=level.scale)
        maps.append(rm)
        masks.append(rm.scores >= threshold)
    return DetectionResult(maps, masks, threshold, tensor.shape[1:])


def window_rect(response: nets.ResponseMap, y, x, original_size):
    """Original-image rectangle (x0, y0, x1, y1) of response cell (y, x)."""
    s = response.scale
    win_w, win_h = response.window
    x0 = x * response.grid_stride / s
    y0 = y * response.grid_stride / s
    x1 = x0 + win_w / s
    y1 = y0 + win_h / s
    oh, ow = original_size
    return (
        max(0.0, x0),
        max(0.0, y0),
        min(float(ow), x1),
        min(float(oh), y1),
    )


def score_image(response: nets.ResponseMap) -> np.ndarray:
    """Response map as an 8-bit image (score * 255, rounded)."""
    return np.floor(response.scores * 255.0 + 0.5).astype(np.uint8)


def mask_image(mask) -> np.ndarray:
    return np.where(mask, np.uint8(255), np.uint8(0))


def benchmark_fps(spec, params, image_size=512, iterations=10, seed=0) -> BenchReport:
    """Median wall-clock of single-scale dense passes on a random image."""
    if iterations < 3:
        raise ValueError("need at least 3 iterations for a stable median")
    rng = np.random.default_rng(seed)
    img = rng.integers(0, 256, size=(image_size, image_size), dtype=np.uint8)
    tensor = nets.normalize_image(img)
    nets.forward_dense(spec, params, tensor)  # warm-up
    times = []
    for _ in range(iterations):
        t0 = time.perf_counter()
        nets.forward_dense(spec, params, tensor)
        times.append(time.perf_counter() - t0)
    med = float(np.median(times))
    macs = nets.count_macs(spec).total * image_size * image_size
    return BenchReport(
        image_size, iterations, med, 1.0 / med, macs, macs / med / 1e9
    )
