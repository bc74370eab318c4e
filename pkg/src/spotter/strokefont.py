"""Embedded stroke font: 62 glyphs (A-Z, a-z, 0-9) as polyline lists.

Coordinates live in a y-down "caps frame": y = 0 is the cap line, y = 1
the baseline. Lowercase bodies sit between 0.38 and 1, descenders reach
1.32. Each glyph carries its drawn width; rendering scales the frame
height to a pixel size and strokes the polylines with an anti-aliased
round pen.
"""

import math
from dataclasses import dataclass

import numpy as np


@dataclass
class GlyphMask:
    """Anti-aliased alpha raster of one glyph plus its pen advance."""

    alpha: np.ndarray  # 2-D float32 in [0, 1]
    advance: float  # px
    char: str


def _arc(cx, cy, rx, ry, deg0, deg1, n=10):
    """Elliptical arc polyline; angles in degrees, 0 = +x, 90 = up."""
    pts = []
    for j in range(n + 1):
        t = math.radians(deg0 + (deg1 - deg0) * j / n)
        pts.append((cx + rx * math.cos(t), cy - ry * math.sin(t)))
    return pts


def _circle(cx, cy, rx, ry):
    return _arc(cx, cy, rx, ry, 90, 450, n=16)


def _chain(*parts):
    """Concatenate point runs into one polyline."""
    pts = []
    for part in parts:
        pts.extend(part)
    return pts


_G = {
    "A": (0.64, [[(0, 1), (0.32, 0), (0.64, 1)], [(0.13, 0.6), (0.51, 0.6)]]),
    "B": (0.62, [
        [(0, 0), (0, 1)],
        _chain([(0, 0)], _arc(0.34, 0.25, 0.27, 0.25, 90, -90), [(0.34, 0.5), (0, 0.5)]),
        _chain([(0, 0.5)], [(0.35, 0.5)], _arc(0.35, 0.75, 0.28, 0.25, 90, -90), [(0, 1)]),
    ]),
    "C": (0.66, [_arc(0.34, 0.5, 0.32, 0.48, 55, 305, n=14)]),
    "D": (0.64, [
        [(0, 0), (0, 1)],
        _chain([(0, 0)], _arc(0.24, 0.5, 0.4, 0.5, 90, -90, n=12), [(0, 1)]),
    ]),
    "E": (0.6, [[(0.6, 0), (0, 0), (0, 1), (0.6, 1)], [(0, 0.5), (0.48, 0.5)]]),
    "F": (0.6, [[(0.6, 0), (0, 0), (0, 1)], [(0, 0.5), (0.46, 0.5)]]),
    "G": (0.66, [
        _chain(_arc(0.34, 0.5, 0.32, 0.48, 55, 330, n=14), [(0.62, 0.74), (0.62, 0.58), (0.38, 0.58)]),
    ]),
    "H": (0.64, [[(0, 0), (0, 1)], [(0.64, 0), (0.64, 1)], [(0, 0.5), (0.64, 0.5)]]),
    "I": (0.16, [[(0.08, 0), (0.08, 1)]]),
    "J": (0.56, [_chain([(0.5, 0), (0.5, 0.75)], _arc(0.26, 0.75, 0.24, 0.25, 0, -180))]),
    "K": (0.62, [[(0, 0), (0, 1)], [(0.6, 0), (0, 0.55)], [(0.18, 0.42), (0.62, 1)]]),
    "L": (0.58, [[(0, 0), (0, 1), (0.58, 1)]]),
    "M": (0.84, [[(0, 1), (0, 0), (0.42, 0.55), (0.84, 0), (0.84, 1)]]),
    "N": (0.64, [[(0, 1), (0, 0), (0.64, 1), (0.64, 0)]]),
    "O": (0.66, [_circle(0.33, 0.5, 0.32, 0.48)]),
    "P": (0.6, [
        [(0, 1), (0, 0)],
        _chain([(0, 0)], [(0.32, 0)], _arc(0.32, 0.27, 0.28, 0.27, 90, -90), [(0.32, 0.54), (0, 0.54)]),
    ]),
    "Q": (0.66, [_circle(0.33, 0.5, 0.32, 0.48), [(0.42, 0.72), (0.68, 1.02)]]),
    "R": (0.62, [
        [(0, 1), (0, 0)],
        _chain([(0, 0)], [(0.32, 0)], _arc(0.32, 0.27, 0.28, 0.27, 90, -90), [(0.32, 0.54), (0, 0.54)]),
        [(0.24, 0.54), (0.62, 1)],
    ]),
    "S": (0.62, [
        _chain(_arc(0.33, 0.26, 0.29, 0.25, 55, 250, n=12), _arc(0.33, 0.75, 0.3, 0.25, 110, -125, n=12)),
    ]),
    "T": (0.64, [[(0, 0), (0.64, 0)], [(0.32, 0), (0.32, 1)]]),
    "U": (0.64, [_chain([(0, 0), (0, 0.72)], _arc(0.32, 0.72, 0.32, 0.28, 180, 360), [(0.64, 0)])]),
    "V": (0.64, [[(0, 0), (0.32, 1), (0.64, 0)]]),
    "W": (0.88, [[(0, 0), (0.2, 1), (0.44, 0.35), (0.68, 1), (0.88, 0)]]),
    "X": (0.64, [[(0, 0), (0.64, 1)], [(0.64, 0), (0, 1)]]),
    "Y": (0.64, [[(0, 0), (0.32, 0.5), (0.64, 0)], [(0.32, 0.5), (0.32, 1)]]),
    "Z": (0.62, [[(0, 0), (0.62, 0), (0, 1), (0.62, 1)]]),
    "a": (0.54, [_circle(0.26, 0.69, 0.26, 0.31), [(0.52, 0.38), (0.52, 1)]]),
    "b": (0.54, [[(0, 0), (0, 1)], _circle(0.28, 0.69, 0.25, 0.31)]),
    "c": (0.54, [_arc(0.28, 0.69, 0.26, 0.31, 50, 310, n=12)]),
    "d": (0.54, [[(0.52, 0), (0.52, 1)], _circle(0.26, 0.69, 0.25, 0.31)]),
    "e": (0.54, [_arc(0.26, 0.69, 0.26, 0.31, 5, 305, n=12), [(0.01, 0.64), (0.52, 0.64)]]),
    "f": (0.46, [
        _chain(_arc(0.33, 0.18, 0.15, 0.16, 90, 180), [(0.18, 0.18), (0.18, 1)]),
        [(0.02, 0.42), (0.44, 0.42)],
    ]),
    "g": (0.54, [
        _circle(0.26, 0.66, 0.25, 0.28),
        _chain([(0.51, 0.38), (0.51, 1.05)], _arc(0.27, 1.05, 0.24, 0.25, 0, -160)),
    ]),
    "h": (0.52, [[(0, 0), (0, 1)], _chain(_arc(0.26, 0.62, 0.25, 0.24, 180, 0), [(0.51, 1)])]),
    "i": (0.16, [[(0.08, 0.38), (0.08, 1)], [(0.08, 0.14), (0.08, 0.18)]]),
    "j": (0.3, [
        _chain([(0.2, 0.38), (0.2, 1.08)], _arc(0.0, 1.08, 0.2, 0.22, 0, -90)),
        [(0.2, 0.14), (0.2, 0.18)],
    ]),
    "k": (0.5, [[(0, 0), (0, 1)], [(0.46, 0.38), (0.02, 0.72)], [(0.16, 0.6), (0.5, 1)]]),
    "l": (0.16, [[(0.08, 0), (0.08, 1)]]),
    "m": (0.8, [
        [(0, 0.38), (0, 1)],
        _chain(_arc(0.2, 0.6, 0.2, 0.22, 180, 0), [(0.4, 1)]),
        _chain(_arc(0.6, 0.6, 0.2, 0.22, 180, 0), [(0.8, 1)]),
    ]),
    "n": (0.5, [[(0, 0.38), (0, 1)], _chain(_arc(0.25, 0.62, 0.25, 0.24, 180, 0), [(0.5, 1)])]),
    "o": (0.52, [_circle(0.26, 0.69, 0.26, 0.31)]),
    "p": (0.54, [[(0, 0.38), (0, 1.32)], _circle(0.28, 0.69, 0.25, 0.31)]),
    "q": (0.54, [[(0.52, 0.38), (0.52, 1.32)], _circle(0.26, 0.69, 0.25, 0.31)]),
    "r": (0.42, [[(0, 0.38), (0, 1)], _arc(0.2, 0.62, 0.2, 0.24, 180, 20)]),
    "s": (0.48, [
        _chain(_arc(0.25, 0.53, 0.22, 0.16, 55, 250, n=10), _arc(0.25, 0.85, 0.23, 0.16, 110, -125, n=10)),
    ]),
    "t": (0.44, [
        _chain([(0.2, 0.1), (0.2, 0.82)], _arc(0.38, 0.82, 0.18, 0.18, 180, 270)),
        [(0.02, 0.38), (0.42, 0.38)],
    ]),
    "u": (0.5, [
        _chain([(0, 0.38), (0, 0.76)], _arc(0.25, 0.76, 0.25, 0.24, 180, 360)),
        [(0.5, 0.38), (0.5, 1)],
    ]),
    "v": (0.5, [[(0, 0.38), (0.25, 1), (0.5, 0.38)]]),
    "w": (0.72, [[(0, 0.38), (0.16, 1), (0.36, 0.55), (0.56, 1), (0.72, 0.38)]]),
    "x": (0.5, [[(0, 0.38), (0.5, 1)], [(0.5, 0.38), (0, 1)]]),
    "y": (0.52, [[(0, 0.38), (0.26, 1)], [(0.52, 0.38), (0.18, 1.32)]]),
    "z": (0.5, [[(0, 0.38), (0.5, 0.38), (0, 1), (0.5, 1)]]),
    "0": (0.6, [_circle(0.3, 0.5, 0.3, 0.48)]),
    "1": (0.52, [[(0.12, 0.18), (0.32, 0), (0.32, 1)], [(0.12, 1), (0.52, 1)]]),
    "2": (0.6, [_chain(_arc(0.3, 0.28, 0.28, 0.26, 160, 0, n=10), [(0.58, 0.28), (0.02, 1.0), (0.6, 1.0)])]),
    "3": (0.6, [_chain(_arc(0.3, 0.26, 0.27, 0.24, 140, -90, n=10), _arc(0.3, 0.74, 0.29, 0.24, 90, -140, n=10))]),
    "4": (0.6, [[(0.44, 1), (0.44, 0), (0, 0.68), (0.6, 0.68)]]),
    "5": (0.6, [_chain([(0.55, 0), (0.08, 0), (0.06, 0.45), (0.16, 0.42)], _arc(0.3, 0.69, 0.28, 0.27, 115, -115, n=12))]),
    "6": (0.6, [
        [(0.5, 0.02), (0.22, 0.35), (0.07, 0.6), (0.04, 0.72)],
        _circle(0.3, 0.72, 0.26, 0.26),
    ]),
    "7": (0.6, [[(0, 0), (0.6, 0), (0.2, 1)]]),
    "8": (0.6, [_circle(0.3, 0.26, 0.24, 0.24), _circle(0.3, 0.75, 0.27, 0.25)]),
    "9": (0.6, [
        _circle(0.3, 0.28, 0.26, 0.26),
        [(0.56, 0.28), (0.5, 0.65), (0.34, 0.9), (0.12, 1.0)],
    ]),
}

SUPPORTED = "".join(sorted(_G))


def glyph_width(ch) -> float:
    return _strokes(ch)[0]


def _strokes(ch):
    try:
        return _G[ch]
    except KeyError:
        raise ValueError(f"unsupported character {ch!r} (U+{ord(ch):04X})") from None


def glyph_segments(ch):
    """Stroke segments of ch as an (n, 4) array of (x0, y0, x1, y1)."""
    _, polylines = _strokes(ch)
    segs = []
    for line in polylines:
        for a, b in zip(line, line[1:]):
            segs.append((a[0], a[1], b[0], b[1]))
    return np.array(segs, np.float64)


def stroke_segments(segments, height, width, thickness):
    """Render segments (pixel coords) into an (height, width) alpha mask.

    Coverage is a linear ramp of the distance to the nearest stroke
    centerline: full inside the pen radius, fading over one pixel.
    """
    ys, xs = np.mgrid[0:height, 0:width]
    px = xs + 0.5
    py = ys + 0.5
    d2 = np.full((height, width), np.inf)
    for x0, y0, x1, y1 in segments:
        vx, vy = x1 - x0, y1 - y0
        L2 = vx * vx + vy * vy
        if L2 == 0:
            cx, cy = x0, y0
            d2 = np.minimum(d2, (px - cx) ** 2 + (py - cy) ** 2)
            continue
        t = np.clip(((px - x0) * vx + (py - y0) * vy) / L2, 0.0, 1.0)
        d2 = np.minimum(d2, (px - (x0 + t * vx)) ** 2 + (py - (y0 + t * vy)) ** 2)
    alpha = np.clip(thickness / 2.0 + 0.5 - np.sqrt(d2), 0.0, 1.0)
    return alpha.astype(np.float32)


def rasterize_glyph(ch, height, thickness=None) -> GlyphMask:
    """Render one glyph at the given caps-frame height in pixels."""
    if height < 8:
        raise ValueError(f"glyph height must be at least 8 px, got {height}")
    width, _ = _strokes(ch)
    if thickness is None:
        thickness = max(1.5, 0.12 * height)
    segs = glyph_segments(ch) * height
    pad = thickness / 2.0 + 1.0
    x_min, y_min = segs[:, [0, 2]].min() - pad, segs[:, [1, 3]].min() - pad
    x_max, y_max = segs[:, [0, 2]].max() + pad, segs[:, [1, 3]].max() + pad
    segs[:, [0, 2]] -= x_min
    segs[:, [1, 3]] -= y_min
    w_px = int(math.ceil(x_max - x_min))
    h_px = int(math.ceil(y_max - y_min))
    alpha = stroke_segments(segs, h_px, w_px, thickness)
    return GlyphMask(alpha, (width + 0.18) * height, ch)
