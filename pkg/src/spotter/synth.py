"""Synthetic training data: rendered characters and bigrams under
geometric and photometric distortion, composited onto procedural
backgrounds, plus the bit-exact dataset container.

A window is labeled text when the (union) glyph box spans at least 60% of
the window height and lies at least 80% inside the window; bigram windows
additionally need two glyphs, so a lone centered glyph is a bigram
negative. Everything is driven by per-sample seeds derived from the
dataset seed, so generation order and worker count cannot change a byte.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import FormatError
from .strokefont import SUPPORTED, glyph_segments, glyph_width, stroke_segments

WINDOWS = {"unigram": (32, 32), "bigram": (64, 32)}  # (width, height)

BGDS_MAGIC = b"BGDS0001"

_M64 = (1 << 64) - 1


@dataclass
class GenConfig:
    kind: str  # 'unigram' | 'bigram'
    count: int
    pos_frac: float = 0.5
    seed: int = 0
    rot_deg: float = 15.0
    persp: float = 0.08
    contrast: tuple = (0.3, 1.0)
    noise_sigma: float = 8.0
    bg_images: tuple = ()  # optional extra backgrounds, (h, w) uint8 arrays

    def __post_init__(self):
        if self.kind not in WINDOWS:
            raise ValueError(f"kind must be 'unigram' or 'bigram', got {self.kind!r}")
        if self.count < 1:
            raise ValueError("count must be at least 1")
        if not 0 <= self.pos_frac <= 1:
            raise ValueError(f"positive fraction must be in [0, 1], got {self.pos_frac}")

    @property
    def window(self):
        return WINDOWS[self.kind]


@dataclass
class Sample:
    patch: np.ndarray  # (h, w) uint8
    label: int  # 1 = text, 0 = no text


@dataclass
class Dataset:
    patches: np.ndarray  # (n, h, w) uint8
    labels: np.ndarray  # (n,) uint8

    def __len__(self):
        return len(self.patches)

    @property
    def width(self):
        return self.patches.shape[2]

    @property
    def height(self):
        return self.patches.shape[1]


def splitmix64(z):
    """One step of the splitmix64 mix; used to derive per-sample seeds."""
    z = (z + 0x9E3779B97F4A7C15) & _M64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _M64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _M64
    return z ^ (z >> 31)


def sample_seed(seed, index):
    return splitmix64((seed & _M64) ^ index)


def _sample_rng(seed, index):
    return np.random.default_rng(sample_seed(seed, index))


# ---------------------------------------------------------------------------
# procedural backgrounds


def bg_noise(rng, h, w, amp=None):
    base = rng.uniform(35, 220)
    if amp is None:
        amp = rng.uniform(4, 20)
    field = base + rng.normal(0.0, 1.0, (h, w)) * amp
    if rng.random() < 0.5:
        # cheap 3x3 box blur, clamped edges: turns white noise into smoother
        # texture
        p = np.pad(field, 1, mode="edge")
        field = sum(
            p[1 + dy : 1 + dy + h, 1 + dx : 1 + dx + w]
            for dy in (-1, 0, 1)
            for dx in (-1, 0, 1)
        ) / 9.0
    return field


def bg_gradient(rng, h, w):
    a = rng.uniform(20, 235)
    b = rng.uniform(20, 235)
    theta = rng.uniform(0, math.pi)
    ys, xs = np.mgrid[0:h, 0:w]
    t = xs * math.cos(theta) + ys * math.sin(theta)
    t = (t - t.min()) / max(t.max() - t.min(), 1e-9)
    return a + (b - a) * t


def bg_stripes(rng, h, w):
    """Stripe fields, including broken/dashed variants whose fragments sit
    at stroke scale: the classic single-character confuser."""
    base = rng.uniform(30, 210)
    delta = rng.uniform(25, 65) * (1 if rng.random() < 0.5 else -1)
    period = rng.uniform(2.0, 10.0)
    duty = rng.uniform(0.35, 0.65)
    theta = rng.uniform(0, math.pi)
    phase = rng.uniform(0, 1)
    ys, xs = np.mgrid[0:h, 0:w]
    t = (xs * math.cos(theta) + ys * math.sin(theta)) / period + phase
    frac = t - np.floor(t)
    style = rng.random()
    if style < 1 / 3:
        field = base + delta * (frac < duty)
    elif style < 2 / 3:
        field = base + delta * 0.5 * (1 + np.sin(2 * math.pi * t))
    else:
        # dashes: gate the stripes with a second, roughly perpendicular wave
        period2 = rng.uniform(3.0, 12.0)
        phase2 = rng.uniform(0, 1)
        t2 = (-xs * math.sin(theta) + ys * math.cos(theta)) / period2 + phase2
        gate = (t2 - np.floor(t2)) < rng.uniform(0.4, 0.7)
        field = base + delta * ((frac < duty) & gate)
    return field


def bg_blobs(rng, h, w):
    """Blob fields; half the time the blobs run along a line like a dotted
    stroke."""
    field = np.full((h, w), rng.uniform(40, 215))
    ys, xs = np.mgrid[0:h, 0:w]
    chain = rng.random() < 0.5
    if chain:
        n = int(rng.integers(3, 9))
        x0, y0 = rng.uniform(0, w), rng.uniform(0, h)
        ang = rng.uniform(0, math.pi)
        step = rng.uniform(2.5, 7.0)
        amp = rng.uniform(35, 80) * (1 if rng.random() < 0.5 else -1)
        r = rng.uniform(1.0, 3.0)
        centers = [
            (x0 + j * step * math.cos(ang), y0 + j * step * math.sin(ang))
            for j in range(n)
        ]
        for cx, cy in centers:
            field = field + amp * np.exp(-((xs - cx) ** 2 + (ys - cy) ** 2) / (2 * r * r))
    else:
        for _ in range(int(rng.integers(3, 14))):
            cx = rng.uniform(0, w)
            cy = rng.uniform(0, h)
            r = rng.uniform(1.2, 5.5)
            amp = rng.uniform(30, 80) * (1 if rng.random() < 0.5 else -1)
            field = field + amp * np.exp(-((xs - cx) ** 2 + (ys - cy) ** 2) / (2 * r * r))
    return field


SEVERE_CLUTTER_FRAC = 0.12


def background(rng, h, w, images=()):
    """One random procedural (or user-supplied) background field."""
    if len(images) and rng.random() < 0.5:
        img = images[int(rng.integers(0, len(images)))]
        ih, iw = img.shape
        if ih >= h and iw >= w:
            y0 = int(rng.integers(0, ih - h + 1))
            x0 = int(rng.integers(0, iw - w + 1))
            return img[y0 : y0 + h, x0 : x0 + w].astype(np.float64)
    pick = int(rng.integers(0, 4))
    return (bg_noise, bg_gradient, bg_stripes, bg_blobs)[pick](rng, h, w)


# ---------------------------------------------------------------------------
# glyph placement


def _homography(src, dst):
    """3x3 homography mapping four source corners onto four targets."""
    A = []
    b = []
    for (sx, sy), (dx, dy) in zip(src, dst):
        A.append([sx, sy, 1, 0, 0, 0, -sx * dx, -sy * dx])
        b.append(dx)
        A.append([0, 0, 0, sx, sy, 1, -sx * dy, -sy * dy])
        b.append(dy)
    h = np.linalg.solve(np.array(A, np.float64), np.array(b, np.float64))
    return np.array(
        [[h[0], h[1], h[2]], [h[3], h[4], h[5]], [h[6], h[7], 1.0]], np.float64
    )


def _apply_homography(H, pts):
    ones = np.ones((len(pts), 1))
    p = np.hstack([pts, ones]) @ H.T
    return p[:, :2] / p[:, 2:3]


def _layout(chars, spacing):
    """Pen-advance layout of a character run in the caps frame.

    Returns the stacked segments, per-glyph segment slices, and per-glyph
    frame boxes.
    """
    segs = []
    slices = []
    boxes = []
    pen = 0.0
    for ch in chars:
        g = glyph_segments(ch)
        g = g.copy()
        g[:, [0, 2]] += pen
        start = sum(len(s) for s in segs)
        segs.append(g)
        slices.append((start, start + len(g)))
        boxes.append(
            (g[:, [0, 2]].min(), g[:, [1, 3]].min(), g[:, [0, 2]].max(), g[:, [1, 3]].max())
        )
        pen += glyph_width(ch) + spacing
    return np.vstack(segs), slices, boxes


def _place(chars, rng, win_w, win_h, *, box_h_frac, rot_deg, persp, jitter=(0.12, 0.08)):
    """Scale, rotate, position and perspective-warp a character run.

    box_h_frac is the target union-box height as a fraction of the window
    height; the scale adapts to the run's own frame-box height so short
    lowercase bodies and full-height capitals land in the same size band.
    """
    spacing = rng.uniform(0.1, 0.22)
    segs, slices, _ = _layout(chars, spacing)
    pts = np.vstack([segs[:, 0:2], segs[:, 2:4]])
    x0, y0 = pts.min(axis=0)
    x1, y1 = pts.max(axis=0)
    frame_h = max(y1 - y0, 1e-6)

    scale = box_h_frac * win_h / frame_h
    theta = math.radians(rng.uniform(-rot_deg, rot_deg))
    target = np.array(
        [
            win_w / 2 + rng.uniform(-jitter[0], jitter[0]) * win_w,
            win_h / 2 + rng.uniform(-jitter[1], jitter[1]) * win_h,
        ]
    )
    center = np.array([(x0 + x1) / 2, (y0 + y1) / 2])
    rot = np.array(
        [[math.cos(theta), -math.sin(theta)], [math.sin(theta), math.cos(theta)]]
    )
    pts = (pts - center) * scale @ rot.T + target

    if persp > 0:
        corners = np.array(
            [[0, 0], [win_w, 0], [win_w, win_h], [0, win_h]], np.float64
        )
        warped = corners + rng.uniform(-persp, persp, (4, 2)) * (win_w, win_h)
        H = _homography(corners, warped)
        pts = _apply_homography(H, pts)

    n = len(segs)
    segs_px = np.hstack([pts[:n], pts[n:]])
    thickness = max(1.3, scale * frame_h * rng.uniform(0.075, 0.16))

    half = thickness / 2.0
    boxes = []
    for s0, s1 in slices:
        p = np.vstack([segs_px[s0:s1, 0:2], segs_px[s0:s1, 2:4]])
        boxes.append(
            (p[:, 0].min() - half, p[:, 1].min() - half, p[:, 0].max() + half, p[:, 1].max() + half)
        )
    return segs_px, thickness, boxes


def _union(boxes):
    b = np.array(boxes)
    return (b[:, 0].min(), b[:, 1].min(), b[:, 2].max(), b[:, 3].max())


def box_height_frac(box, win_h):
    return (box[3] - box[1]) / win_h


def box_inside_frac(box, win_w, win_h):
    x0, y0, x1, y1 = box
    area = max(x1 - x0, 0.0) * max(y1 - y0, 0.0)
    if area <= 0:
        return 0.0
    ix = max(0.0, min(x1, win_w) - max(x0, 0.0))
    iy = max(0.0, min(y1, win_h) - max(y0, 0.0))
    return ix * iy / area


def geometry_ok(union_box, win_w, win_h):
    """The text-label rule for a placed glyph run's union box."""
    return (
        box_height_frac(union_box, win_h) >= 0.6
        and box_inside_frac(union_box, win_w, win_h) >= 0.8
    )


def positive_geometry_ok(meta, kind):
    want = 2 if kind == "bigram" else 1
    if meta["n_glyphs"] != want:
        return False
    w, h = WINDOWS[kind]
    return geometry_ok(meta["union_box"], w, h)


# ---------------------------------------------------------------------------
# compositing


def _quantize(field):
    """Clip to [0, 255] and round half away from zero to uint8."""
    return np.floor(np.clip(field, 0, 255) + 0.5).astype(np.uint8)


def _composite(rng, cfg, segs, thickness):
    """Background, text overlay, then capture degradation.

    A fixed small fraction of windows is hit by severe speckle after
    compositing, burying whatever is underneath: the synthetic counterpart
    of the unreadable regions real scene-text ground truth carries. Both
    labels pass through the same degradation.
    """
    w, h = cfg.window
    bg = background(rng, h, w, cfg.bg_images)
    severe = rng.random() < SEVERE_CLUTTER_FRAC
    if segs is not None:
        alpha = stroke_segments(segs, h, w, thickness).astype(np.float64)
        c = rng.uniform(*cfg.contrast)
        amp = c * 130.0
        mean = bg.mean()
        tone = mean + amp if rng.random() < 0.5 else mean - amp
        tone = min(max(tone, 0.0), 255.0)
        if abs(tone - mean) < 20.0:  # clipping ate the contrast; flip sides
            tone = min(max(2 * mean - tone, 0.0), 255.0)
        bg = bg + alpha * (tone - bg)
    if severe:
        bg = bg + rng.normal(0.0, rng.uniform(280, 480), (h, w))
    if cfg.noise_sigma > 0:
        bg = bg + rng.normal(0.0, cfg.noise_sigma, (h, w))
    return _quantize(bg)


def _pick_chars(rng, n):
    return [SUPPORTED[int(rng.integers(0, len(SUPPORTED)))] for _ in range(n)]


def synth_positive(cfg, rng):
    """One labeled-text window: a glyph (or adjacent pair) that satisfies
    the geometry rule, distorted and composited."""
    w, h = cfg.window
    n = 2 if cfg.kind == "bigram" else 1
    for _ in range(100):
        chars = _pick_chars(rng, n)
        segs, th, boxes = _place(
            chars, rng, w, h,
            box_h_frac=rng.uniform(0.64, 0.92),
            rot_deg=cfg.rot_deg, persp=cfg.persp,
        )
        union = _union(boxes)
        if geometry_ok(union, w, h):
            patch = _composite(rng, cfg, segs, th)
            meta = {
                "class": "pos", "chars": "".join(chars), "n_glyphs": n,
                "boxes": boxes, "union_box": union,
            }
            return Sample(patch, 1), meta
    raise RuntimeError("positive placement failed 100 times; distortion ranges too wide")


def synth_negative(cfg, rng):
    """One no-text window from the fixed negative mixture.

    bigram: 50% procedural background, 30% glyph fragment (at least 60%
    cropped out), 20% a single full centered glyph (one letter is not a
    pair). unigram: the same first two classes, renormalized to 5/8 and 3/8.
    """
    w, h = cfg.window
    r = rng.random()
    if cfg.kind == "bigram":
        cls = "bg" if r < 0.5 else ("frag" if r < 0.8 else "single")
    else:
        cls = "bg" if r < 0.625 else "frag"

    if cls == "bg":
        patch = _composite(rng, cfg, None, 0.0)
        meta = {"class": "bg", "n_glyphs": 0, "boxes": [], "union_box": None}
        return Sample(patch, 0), meta

    if cls == "frag":
        for _ in range(100):
            chars = _pick_chars(rng, 1)
            # push the run's center toward or past an edge so most of the
            # box is cropped away, biased to keep the visible part large:
            # the most character-like fragments sit just under the 40%
            # inside-fraction cap
            side = int(rng.integers(0, 4))
            off = rng.uniform(0.3, 0.62)
            slide = rng.uniform(-0.3, 0.3)
            jx = (-off if side == 0 else off if side == 1 else slide) * w
            jy = (-off if side == 2 else off if side == 3 else slide) * h
            segs, th, boxes = _place(
                chars, rng, w, h,
                box_h_frac=rng.uniform(0.64, 1.15),  # fragments may outsize the window
                rot_deg=cfg.rot_deg, persp=cfg.persp,
                jitter=(0.0, 0.0),
            )
            segs = segs + np.array([jx, jy, jx, jy])
            boxes = [(b[0] + jx, b[1] + jy, b[2] + jx, b[3] + jy) for b in boxes]
            union = _union(boxes)
            inside = box_inside_frac(union, w, h)
            if 0.03 <= inside <= 0.4:
                patch = _composite(rng, cfg, segs, th)
                meta = {
                    "class": "frag", "chars": "".join(chars), "n_glyphs": 1,
                    "boxes": boxes, "union_box": union,
                }
                return Sample(patch, 0), meta
        raise RuntimeError("fragment placement failed 100 times")

    # single full glyph, bigram windows only: passes the box rule but is
    # one letter, hence a negative under the pair-label protocol
    for _ in range(100):
        chars = _pick_chars(rng, 1)
        segs, th, boxes = _place(
            chars, rng, w, h,
            box_h_frac=rng.uniform(0.64, 0.92),
            rot_deg=cfg.rot_deg, persp=cfg.persp,
            jitter=(0.03, 0.05),
        )
        union = _union(boxes)
        if geometry_ok(union, w, h):
            patch = _composite(rng, cfg, segs, th)
            meta = {
                "class": "single", "chars": "".join(chars), "n_glyphs": 1,
                "boxes": boxes, "union_box": union,
            }
            return Sample(patch, 0), meta
    raise RuntimeError("single-glyph placement failed 100 times")


def generate_dataset(cfg: GenConfig, with_meta=False):
    """The full labeled set for a config: ceil(count * pos_frac) positives
    first, then negatives, each sample drawn from its own derived seed."""
    w, h = cfg.window
    n_pos = math.ceil(cfg.count * cfg.pos_frac)
    patches = np.empty((cfg.count, h, w), np.uint8)
    labels = np.empty(cfg.count, np.uint8)
    metas = []
    for i in range(cfg.count):
        rng = _sample_rng(cfg.seed, i)
        if i < n_pos:
            sample, meta = synth_positive(cfg, rng)
        else:
            sample, meta = synth_negative(cfg, rng)
        patches[i] = sample.patch
        labels[i] = sample.label
        if with_meta:
            metas.append(meta)
    ds = Dataset(patches, labels)
    return (ds, metas) if with_meta else ds


def make_scene(seed, size=256, n_items=5, contrast=(0.55, 1.0), noise_sigma=4.0):
    """A detection test card: n_items bigrams planted on one background.

    Returns the uint8 image and one dict per planted pair with its union
    box and center in image coordinates.
    """
    rng = np.random.default_rng(seed)
    field = background(rng, size, size)
    cells = [(r, c) for r in range(3) for c in range(3)]
    order = rng.permutation(len(cells))
    truths = []
    for slot in order[:n_items]:
        r, c = cells[int(slot)]
        cx = (c + 0.5) / 3 * size + rng.uniform(-0.08, 0.08) * size
        cy = (r + 0.5) / 3 * size + rng.uniform(-0.08, 0.08) * size
        chars = _pick_chars(rng, 2)
        segs, th, boxes = _place(
            chars, rng, 64, 32,
            box_h_frac=rng.uniform(0.66, 0.85),
            rot_deg=6.0, persp=0.03, jitter=(0.0, 0.0),
        )
        shift = np.array([cx - 32, cy - 16, cx - 32, cy - 16])
        segs = segs + shift
        boxes = [(b[0] + cx - 32, b[1] + cy - 16, b[2] + cx - 32, b[3] + cy - 16) for b in boxes]
        alpha = stroke_segments(segs, size, size, th).astype(np.float64)
        cband = rng.uniform(*contrast)
        mean = field.mean()
        tone = mean + cband * 150.0 if mean < 128 else mean - cband * 150.0
        tone = min(max(tone, 0.0), 255.0)
        field = field + alpha * (tone - field)
        union = _union(boxes)
        truths.append(
            {"chars": "".join(chars), "box": union,
             "center": ((union[0] + union[2]) / 2, (union[1] + union[3]) / 2)}
        )
    if noise_sigma > 0:
        field = field + rng.normal(0.0, noise_sigma, (size, size))
    return _quantize(field), truths


# ---------------------------------------------------------------------------
# dataset container ("BGDS"): magic, u32 count/width/height, then per sample
# one label byte and width*height row-major pixels; little-endian, no padding


def write_dataset(dataset: Dataset, path):
    patches, labels = dataset.patches, dataset.labels
    if patches.ndim != 3 or len(patches) != len(labels):
        raise ValueError("dataset needs (n, h, w) patches and n labels")
    n, h, w = patches.shape
    body = bytearray()
    body += BGDS_MAGIC
    body += np.array([n, w, h], "<u4").tobytes()
    for i in range(n):
        body.append(int(labels[i]) & 1)
        body += patches[i].tobytes()
    with open(path, "wb") as f:
        f.write(bytes(body))


def read_dataset(path) -> Dataset:
    with open(path, "rb") as f:
        raw = f.read()
    if len(raw) < len(BGDS_MAGIC) or raw[: len(BGDS_MAGIC)] != BGDS_MAGIC:
        raise FormatError(f"{path}: bad magic (expected {BGDS_MAGIC.decode()})")
    head = len(BGDS_MAGIC)
    if len(raw) < head + 12:
        raise FormatError(f"{path}: truncated file (header incomplete)")
    n, w, h = np.frombuffer(raw, "<u4", count=3, offset=head)
    n, w, h = int(n), int(w), int(h)
    if w < 1 or h < 1:
        raise FormatError(f"{path}: dimension mismatch (width={w}, height={h})")
    need = head + 12 + n * (1 + w * h)
    if len(raw) < need:
        raise FormatError(
            f"{path}: truncated file ({len(raw)} bytes, {need} required for {n} samples)"
        )
    if len(raw) > need:
        raise FormatError(f"{path}: trailing data after {n} samples")
    patches = np.empty((n, h, w), np.uint8)
    labels = np.empty(n, np.uint8)
    pos = head + 12
    step = 1 + w * h
    buf = np.frombuffer(raw, np.uint8, count=n * step, offset=pos).reshape(n, step)
    labels[:] = buf[:, 0]
    patches[:] = buf[:, 1:].reshape(n, h, w)
    if not np.isin(labels, (0, 1)).all():
        raise FormatError(f"{path}: labels must be 0 or 1")
    return Dataset(patches, labels)
