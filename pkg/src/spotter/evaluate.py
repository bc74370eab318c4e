"""Window-level classifier evaluation: ROC sweep, operating points at a
precision floor, classifier comparison, and CSV/SVG reports.

The classification rule is score >= threshold throughout. The curve holds
one point per distinct score plus two endpoints: a threshold just above 1
(nothing classified positive; precision of an empty prediction set is
defined as 1) and threshold 0 (everything positive).
"""

from dataclasses import dataclass

import numpy as np

from . import nets
from .errors import PrecisionUnreachable, SpotterError

TOP_THRESHOLD = 1.000001  # sits above any softmax score


@dataclass
class ScoredSet:
    scores: np.ndarray  # float, in [0, 1]
    labels: np.ndarray  # {0, 1}

    def __post_init__(self):
        self.scores = np.asarray(self.scores, np.float64)
        self.labels = np.asarray(self.labels)
        if self.scores.shape != self.labels.shape or self.scores.ndim != 1:
            raise ValueError(
                f"scores {self.scores.shape} and labels {self.labels.shape} "
                "must be parallel 1-D arrays"
            )

    @property
    def positives(self):
        return int((self.labels == 1).sum())

    @property
    def negatives(self):
        return int((self.labels == 0).sum())


@dataclass
class RocPoint:
    threshold: float
    tp: int
    fp: int
    tn: int
    fn: int
    tpr: float
    fpr: float
    precision: float
    recall: float


@dataclass
class OperatingPoint:
    threshold: float
    fpr: float
    recall: float
    f_score: float
    precision: float


def score_dataset(spec, params, dataset) -> ScoredSet:
    """Eval-mode text probability of every sample, paired with its label."""
    if dataset.height != spec.window_h or dataset.width != spec.window_w:
        raise ValueError(
            f"dataset patches are {dataset.height}x{dataset.width} but the "
            f"{spec.kind} window is {spec.window_h}x{spec.window_w}"
        )
    scores = np.empty(len(dataset), np.float64)
    for i in range(len(dataset)):
        scores[i] = nets.forward_window(
            spec, params, nets.normalize_image(dataset.patches[i])
        )
    return ScoredSet(scores, dataset.labels.astype(np.uint8).copy())


def _point(threshold, tp, fp, p, n):
    tn = n - fp
    fn = p - tp
    precision = tp / (tp + fp) if tp + fp > 0 else 1.0
    return RocPoint(
        float(threshold), int(tp), int(fp), int(tn), int(fn),
        tpr=tp / p, fpr=fp / n, precision=precision, recall=tp / p,
    )


def confusion_at(scored: ScoredSet, threshold) -> RocPoint:
    """Counts for the rule `score >= threshold` at one threshold."""
    pred = scored.scores >= threshold
    pos = scored.labels == 1
    tp = int((pred & pos).sum())
    fp = int((pred & ~pos).sum())
    return _point(threshold, tp, fp, scored.positives, scored.negatives)


def roc_curve(scored: ScoredSet):
    """One RocPoint per distinct score, plus both endpoints, sorted by
    descending threshold. tp and fp are non-decreasing along the list."""
    p, n = scored.positives, scored.negatives
    if p < 1 or n < 1:
        raise SpotterError(
            f"ROC needs both classes; got {p} positives and {n} negatives"
        )
    order = np.argsort(-scored.scores, kind="stable")
    s = scored.scores[order]
    pos = (scored.labels[order] == 1).astype(np.int64)
    cum_tp = np.cumsum(pos)
    cum_fp = np.cumsum(1 - pos)
    points = [_point(TOP_THRESHOLD, 0, 0, p, n)]
    # group ties: the cut after the last occurrence of each distinct score
    for i in range(len(s)):
        if i + 1 < len(s) and s[i + 1] == s[i]:
            continue
        points.append(_point(s[i], cum_tp[i], cum_fp[i], p, n))
    last = points[-1]
    points.append(_point(0.0, last.tp, last.fp, p, n))
    return points


def operating_point(curve, target_precision) -> OperatingPoint:
    """The point with precision >= target that maximizes recall.

    Recall ties prefer the lower false-positive rate, then the lower
    threshold (which only separates points with identical counts). Points
    that classify nothing positive are excluded: an operating point must
    actually detect something, so a curve whose every real point falls
    below the floor is an error.
    """
    if not 0 < target_precision <= 1:
        raise ValueError(f"target precision must be in (0, 1], got {target_precision}")
    candidates = [pt for pt in curve if pt.tp >= 1 and pt.precision >= target_precision]
    if not candidates:
        best = max((pt.precision for pt in curve if pt.tp >= 1), default=0.0)
        raise PrecisionUnreachable(target_precision, best)
    pick = max(candidates, key=lambda pt: (pt.recall, -pt.fpr, -pt.threshold))
    f = 2 * pick.precision * pick.recall / (pick.precision + pick.recall)
    return OperatingPoint(pick.threshold, pick.fpr, pick.recall, f, pick.precision)


def compare(curve_a, curve_b, target_precision) -> float:
    """Relative FPR reduction of b against baseline a at a precision floor."""
    op_a = operating_point(curve_a, target_precision)
    op_b = operating_point(curve_b, target_precision)
    if op_a.fpr == 0:
        raise SpotterError("baseline already perfect: FPR is 0 at the target precision")
    return (op_a.fpr - op_b.fpr) / op_a.fpr


# ---------------------------------------------------------------------------
# reports

CSV_HEADER = "threshold,tp,fp,tn,fn,tpr,fpr,precision,recall"


def write_roc_csv(curve, path):
    lines = [CSV_HEADER]
    for pt in curve:
        lines.append(
            f"{pt.threshold:.6f},{pt.tp},{pt.fp},{pt.tn},{pt.fn},"
            f"{pt.tpr:.6f},{pt.fpr:.6f},{pt.precision:.6f},{pt.recall:.6f}"
        )
    with open(path, "w", newline="\n") as f:
        f.write("\n".join(lines) + "\n")


def read_roc_csv(path):
    with open(path) as f:
        lines = [ln.strip() for ln in f if ln.strip()]
    if not lines or lines[0] != CSV_HEADER:
        raise SpotterError(f"{path}: not a ROC CSV (missing header)")
    curve = []
    for ln in lines[1:]:
        parts = ln.split(",")
        if len(parts) != 9:
            raise SpotterError(f"{path}: malformed row {ln!r}")
        t, tp, fp, tn, fn, tpr, fpr, prec, rec = parts
        curve.append(
            RocPoint(float(t), int(tp), int(fp), int(tn), int(fn),
                     float(tpr), float(fpr), float(prec), float(rec))
        )
    return curve


def write_roc_svg(curve, path, size=480, margin=50):
    """Self-contained SVG plot of (fpr, tpr); presentation only."""
    span = size - 2 * margin

    def sx(v):
        return margin + v * span

    def sy(v):
        return size - margin - v * span

    pts = " ".join(f"{sx(pt.fpr):.1f},{sy(pt.tpr):.1f}" for pt in reversed(curve))
    grid = []
    for frac in (0.0, 0.25, 0.5, 0.75, 1.0):
        grid.append(
            f'<line x1="{sx(frac):.1f}" y1="{sy(0):.1f}" x2="{sx(frac):.1f}" '
            f'y2="{sy(1):.1f}" stroke="#ddd"/>'
            f'<line x1="{sx(0):.1f}" y1="{sy(frac):.1f}" x2="{sx(1):.1f}" '
            f'y2="{sy(frac):.1f}" stroke="#ddd"/>'
            f'<text x="{sx(frac):.1f}" y="{size - margin + 18:.1f}" font-size="11" '
            f'text-anchor="middle">{frac:g}</text>'
            f'<text x="{margin - 8:.1f}" y="{sy(frac) + 4:.1f}" font-size="11" '
            f'text-anchor="end">{frac:g}</text>'
        )
    svg = (
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" '
        f'viewBox="0 0 {size} {size}">'
        f'<rect width="{size}" height="{size}" fill="white"/>'
        + "".join(grid)
        + f'<polyline points="{pts}" fill="none" stroke="#1560bd" stroke-width="2"/>'
        f'<line x1="{sx(0):.1f}" y1="{sy(0):.1f}" x2="{sx(1):.1f}" y2="{sy(1):.1f}" '
        f'stroke="#bbb" stroke-dasharray="4 4"/>'
        f'<text x="{size / 2:.0f}" y="{size - 12}" font-size="13" '
        f'text-anchor="middle">false positive rate</text>'
        f'<text x="14" y="{size / 2:.0f}" font-size="13" text-anchor="middle" '
        f'transform="rotate(-90 14 {size / 2:.0f})">true positive rate</text>'
        "</svg>"
    )
    with open(path, "w") as f:
        f.write(svg + "\n")


def emit_report(curve, path, fmt):
    """Write a curve as `csv` (data) or `svg` (picture)."""
    if not curve:
        raise ValueError("cannot report an empty curve")
    if fmt == "csv":
        write_roc_csv(curve, path)
    elif fmt == "svg":
        write_roc_svg(curve, path)
    else:
        raise ValueError(f"unknown report format {fmt!r}; use 'csv' or 'svg'")
