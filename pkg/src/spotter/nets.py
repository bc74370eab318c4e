"""The three detector architectures and their execution engines.

A network is an ordered stack of layer descriptors that maps a grayscale
window to two class logits. The same stack runs in two ways:

* per window on a crop of exactly the nominal window size, and
* densely over a whole image, where every layer is applied convolutionally
  and each output cell equals the per-window result on the matching crop.

Because every stage is a valid convolution, a ReLU, or a 2x2 pool, the two
paths share all filter arithmetic; dense application evaluates the window
classifier at every grid position at the cost of one enlarged pass.
"""

from dataclasses import dataclass

import numpy as np

from . import ops
from .ops import ConvParams

KINDS = ("unigram", "bigram-naive", "bigram-shared")
KIND_TAGS = {"unigram": 0, "bigram-naive": 1, "bigram-shared": 2}
WINDOWS = {"unigram": (32, 32), "bigram-naive": (64, 32), "bigram-shared": (64, 32)}


@dataclass(frozen=True)
class Conv:
    out_channels: int
    kernel_h: int
    kernel_w: int


@dataclass(frozen=True)
class ReLU:
    pass


@dataclass(frozen=True)
class MaxPool2:
    pass


@dataclass(frozen=True)
class Dropout:
    p: float


@dataclass(frozen=True)
class SoftmaxHead:
    pass


@dataclass(frozen=True)
class NetworkSpec:
    """Layer stack plus the nominal (width, height) training window."""

    kind: str
    window: tuple  # (width, height) in px
    layers: tuple

    @property
    def window_w(self):
        return self.window[0]

    @property
    def window_h(self):
        return self.window[1]


@dataclass
class NetworkParams:
    """Learned weights: one ConvParams per Conv layer, in stack order."""

    conv: list
    train_mode: bool = False

    def astype(self, dtype):
        return NetworkParams([c.astype(dtype) for c in self.conv], self.train_mode)


@dataclass
class ResponseMap:
    """Grid of text probabilities from one dense pass.

    scores[y, x] is the text probability of the window whose top-left
    corner sits at (x * grid_stride, y * grid_stride) in the scaled image.
    """

    scale: float
    grid_stride: int
    window: tuple  # (width, height)
    scores: np.ndarray


@dataclass
class MacEntry:
    layer_index: int
    macs_per_pixel: float


@dataclass
class MacReport:
    entries: list
    total: float


def build_net(kind) -> NetworkSpec:
    """Reference architecture for a detector kind.

    All stacks use only valid convolutions and collapse the nominal window
    to a 1x1 two-channel map; the bigram-shared stack reuses the unigram
    feature layers and spans letter pairs with a 9-wide, 1-tall convolution.
    """
    if kind == "unigram":
        layers = (
            Conv(16, 5, 5), ReLU(), MaxPool2(),
            Conv(32, 5, 5), ReLU(), MaxPool2(),
            Conv(64, 5, 5), ReLU(),
            Dropout(0.5),
            Conv(2, 1, 1),
            SoftmaxHead(),
        )
    elif kind == "bigram-naive":
        layers = (
            Conv(16, 5, 5), ReLU(), MaxPool2(),
            Conv(32, 5, 13), ReLU(), MaxPool2(),
            Conv(64, 5, 9), ReLU(),
            Dropout(0.5),
            Conv(2, 1, 1),
            SoftmaxHead(),
        )
    elif kind == "bigram-shared":
        layers = (
            Conv(16, 5, 5), ReLU(), MaxPool2(),
            Conv(32, 5, 5), ReLU(), MaxPool2(),
            Conv(64, 5, 5), ReLU(),
            Conv(48, 1, 9), ReLU(),
            Dropout(0.5),
            Conv(2, 1, 1),
            SoftmaxHead(),
        )
    else:
        raise ValueError(f"unknown network kind {kind!r}; expected one of {KINDS}")
    spec = NetworkSpec(kind, WINDOWS[kind], layers)
    validate_spec(spec)
    return spec


def shape_chain(spec: NetworkSpec):
    """Per-layer (channels, height, width) on the nominal window."""
    c, h, w = 1, spec.window_h, spec.window_w
    chain = [(c, h, w)]
    for layer in spec.layers:
        if isinstance(layer, Conv):
            if h < layer.kernel_h or w < layer.kernel_w:
                raise ValueError(
                    f"kernel {layer.kernel_h}x{layer.kernel_w} does not fit {h}x{w}"
                )
            c, h, w = layer.out_channels, h - layer.kernel_h + 1, w - layer.kernel_w + 1
        elif isinstance(layer, MaxPool2):
            if h % 2 or w % 2:
                raise ValueError(f"pooling an odd map {h}x{w} on the nominal window")
            h, w = h // 2, w // 2
        elif isinstance(layer, (ReLU, Dropout, SoftmaxHead)):
            pass
        else:
            raise ValueError(f"unknown layer {layer!r}")
        chain.append((c, h, w))
    return chain


def validate_spec(spec: NetworkSpec):
    if not isinstance(spec.layers[-1], SoftmaxHead):
        raise ValueError("network must end in a softmax head")
    chain = shape_chain(spec)
    if chain[-1] != (2, 1, 1):
        raise ValueError(
            f"stack must collapse window {spec.window} to (2, 1, 1), got {chain[-1]}"
        )


def grid_stride(spec: NetworkSpec) -> int:
    s = 1
    for layer in spec.layers:
        if isinstance(layer, MaxPool2):
            s *= 2
    return s


def conv_layers(spec: NetworkSpec):
    return [l for l in spec.layers if isinstance(l, Conv)]


def init_params(spec: NetworkSpec, seed) -> NetworkParams:
    """He-normal kernels (std sqrt(2/fan_in)), zero biases, seeded."""
    rng = np.random.default_rng(seed)
    chain = shape_chain(spec)
    conv = []
    c_in = 1
    for layer, shape_in in zip(spec.layers, chain):
        if isinstance(layer, Conv):
            c_in = shape_in[0]
            fan_in = c_in * layer.kernel_h * layer.kernel_w
            k = rng.standard_normal(
                (layer.out_channels, c_in, layer.kernel_h, layer.kernel_w)
            ) * np.sqrt(2.0 / fan_in)
            conv.append(ConvParams(k.astype(ops.DTYPE), np.zeros(layer.out_channels, ops.DTYPE)))
    return NetworkParams(conv)


def zero_params(spec: NetworkSpec) -> NetworkParams:
    p = init_params(spec, 0)
    return NetworkParams(
        [ConvParams(np.zeros_like(c.kernels), np.zeros_like(c.bias)) for c in p.conv]
    )


def normalize_image(pixels) -> np.ndarray:
    """Map 8-bit grey levels to [-1, 1]: u -> (u/255 - 0.5) * 2, per pixel."""
    a = np.asarray(pixels)
    if a.ndim == 2:
        a = a[None, :, :]
    return ((a.astype(ops.DTYPE) / ops.DTYPE(255.0)) - ops.DTYPE(0.5)) * ops.DTYPE(2.0)


class MacCounter:
    """Tallies the multiply-accumulates each conv layer actually executes."""

    def __init__(self):
        self.per_layer = []
        self.total = 0

    def add(self, layer_index, macs):
        self.per_layer.append((layer_index, macs))
        self.total += macs


def run_layers(spec, params, x, *, train=False, rng=None, record=None, counter=None):
    """Run the stack up to the softmax head, returning the logit map.

    Dense inputs may be any size at or above the window; pooling truncates a
    trailing odd row/column so every surviving cell stays window-aligned.
    When `record` is a list, per-layer context needed by backprop is
    appended to it.
    """
    ci = 0
    for li, layer in enumerate(spec.layers):
        if isinstance(layer, Conv):
            p = params.conv[ci]
            if counter is not None:
                oc, ic, kh, kw = p.kernels.shape
                counter.add(li, oc * ic * kh * kw * (x.shape[1] - kh + 1) * (x.shape[2] - kw + 1))
            if record is not None:
                record.append(("conv", ci, x))
            x = ops.conv2d_valid(x, p)
            ci += 1
        elif isinstance(layer, ReLU):
            if record is not None:
                record.append(("relu", x))
            x = ops.relu(x)
        elif isinstance(layer, MaxPool2):
            if x.shape[1] % 2:
                x = x[:, : x.shape[1] - 1, :]
            if x.shape[2] % 2:
                x = x[:, :, : x.shape[2] - 1]
            x, idx = ops.maxpool2_indices(x)
            if record is not None:
                record.append(("pool", idx))
        elif isinstance(layer, Dropout):
            if train:
                mask = ops.dropout_mask(x.shape, layer.p, rng).astype(x.dtype)
                if record is not None:
                    record.append(("dropout", mask))
                x = x * mask
            elif record is not None:
                record.append(("dropout", None))
        elif isinstance(layer, SoftmaxHead):
            return x
    raise AssertionError("stack ended without a softmax head")


def backprop(spec, params, record, grad_logits, need_input_grad=True):
    """Walk the recorded stack backwards.

    Returns (per-conv-layer GradBundle list, grad wrt the input tensor).
    With need_input_grad=False the first conv layer skips its input
    gradient, which the training loop never uses.
    """
    grads = [None] * len(params.conv)
    g = grad_logits
    ci = len(params.conv)
    ri = len(record)
    for layer in reversed(spec.layers):
        if isinstance(layer, SoftmaxHead):
            continue
        ri -= 1
        entry = record[ri]
        if isinstance(layer, Conv):
            ci -= 1
            _, _, x_in = entry
            want_gx = need_input_grad or ci > 0
            bundle = ops.conv2d_backward(x_in, params.conv[ci], g, need_input_grad=want_gx)
            grads[ci] = bundle
            g = bundle.grad_input
        elif isinstance(layer, ReLU):
            g = ops.relu_backward(entry[1], g)
        elif isinstance(layer, MaxPool2):
            g = ops.maxpool2_backward(entry[1], g)
        elif isinstance(layer, Dropout):
            mask = entry[1]
            if mask is not None:
                g = g * mask
    return grads, g


def forward_window(spec, params, patch) -> float:
    """Text probability of a single window-sized patch (eval mode)."""
    if params.train_mode:
        raise ValueError("forward_window requires eval-mode params")
    patch = np.asarray(patch)
    if patch.shape != (1, spec.window_h, spec.window_w):
        raise ValueError(
            f"patch shape {patch.shape} does not match window "
            f"(1, {spec.window_h}, {spec.window_w})"
        )
    logits = run_layers(spec, params, patch)
    probs = ops.softmax2(logits)
    return float(probs[1, 0, 0])


def forward_dense(spec, params, image) -> ResponseMap:
    """Apply the whole stack convolutionally over an image.

    Every cell of the returned grid equals forward_window on the matching
    window-aligned crop, because all layers are translation-consistent on
    the stride-4 grid and dropout is inactive in eval mode.
    """
    if params.train_mode:
        raise ValueError("forward_dense requires eval-mode params")
    image = np.asarray(image)
    if image.ndim == 2:
        image = image[None]
    if image.shape[1] < spec.window_h or image.shape[2] < spec.window_w:
        raise ValueError(
            f"image {image.shape[1]}x{image.shape[2]} is smaller than the "
            f"window {spec.window_h}x{spec.window_w}"
        )
    logits = run_layers(spec, params, image)
    scores = ops.softmax2(logits)[1]
    stride = grid_stride(spec)
    expect = (
        (image.shape[1] - spec.window_h) // stride + 1,
        (image.shape[2] - spec.window_w) // stride + 1,
    )
    assert scores.shape == expect, (scores.shape, expect)
    return ResponseMap(1.0, stride, spec.window, scores)


def count_macs(spec: NetworkSpec) -> MacReport:
    """Analytic multiply-accumulates per input pixel, per conv layer.

    A conv layer behind cumulative pooling factors (dh, dw) evaluates once
    per dh*dw input pixels, so it costs out_c*in_c*kh*kw/(dh*dw) MACs per
    pixel; activation, pooling and softmax stages cost zero MACs.
    """
    entries = []
    c_in, dh, dw = 1, 1, 1
    for li, layer in enumerate(spec.layers):
        if isinstance(layer, Conv):
            macs = layer.out_channels * c_in * layer.kernel_h * layer.kernel_w / (dh * dw)
            entries.append(MacEntry(li, macs))
            c_in = layer.out_channels
        elif isinstance(layer, MaxPool2):
            dh *= 2
            dw *= 2
    return MacReport(entries, sum(e.macs_per_pixel for e in entries))


def dense_mac_probe(spec: NetworkSpec, height, width) -> int:
    """Total MACs an instrumented dense pass executes on a height x width image."""
    counter = MacCounter()
    params = zero_params(spec)
    run_layers(spec, params, np.zeros((1, height, width), ops.DTYPE), counter=counter)
    return counter.total


def dense_macs_per_pixel_limit(spec: NetworkSpec, w=256, step=8) -> float:
    """Asymptotic MACs/pixel of dense passes, from instrumented counts.

    The instrumented total on a WxW image is an exact quadratic in W while
    no pooling truncation occurs (W = 0 mod 4 here), so the second
    difference over a step recovers the leading per-pixel coefficient that
    boundary shrinkage hides at any single finite size.
    """
    f2 = dense_mac_probe(spec, w, w)
    f1 = dense_mac_probe(spec, w - step, w - step)
    f0 = dense_mac_probe(spec, w - 2 * step, w - 2 * step)
    return (f2 - 2 * f1 + f0) / (2.0 * step * step)
