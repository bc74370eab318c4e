"""Finite-difference verification of every backward pass.

Layers are re-run in float64 ("verification mode") and their analytic
gradients are compared against central differences with step h = 1e-5.
The reported figure is the max over all inputs and parameters of

    |analytic - numeric| / max(|analytic|, |numeric|, 1e-12)

Probe points are sampled away from ReLU kinks and pooling ties so the
layers are differentiable where the differences are taken.
"""

import numpy as np

from . import nets, ops
from .ops import ConvParams

H = 1e-5


def max_rel_err(analytic, numeric):
    a = np.asarray(analytic, np.float64)
    n = np.asarray(numeric, np.float64)
    denom = np.maximum(np.maximum(np.abs(a), np.abs(n)), 1e-12)
    return float((np.abs(a - n) / denom).max())


def central_diff(scalar_fn, arr, h=H):
    """Per-element central differences of scalar_fn wrt a float64 array."""
    arr = arr.astype(np.float64)
    grad = np.empty_like(arr)
    flat = arr.reshape(-1)
    gflat = grad.reshape(-1)
    for j in range(flat.size):
        orig = flat[j]
        flat[j] = orig + h
        fp = scalar_fn(arr)
        flat[j] = orig - h
        fm = scalar_fn(arr)
        flat[j] = orig
        gflat[j] = (fp - fm) / (2 * h)
    return grad


def _safe_tensor(rng, shape):
    """Values bounded away from zero, so ReLUs see no kinks at the probe."""
    mag = rng.uniform(0.2, 1.2, size=shape)
    sign = np.where(rng.random(shape) < 0.5, -1.0, 1.0)
    return mag * sign


def _conv_params(rng, out_c, in_c, kh, kw):
    k = _safe_tensor(rng, (out_c, in_c, kh, kw)) * 0.5
    b = _safe_tensor(rng, (out_c,)) * 0.1
    return ConvParams(k, b)


def check_stack(spec, params, x, rng):
    """Gradient-check an arbitrary stack (run in float64, eval mode).

    The stack output is reduced to a scalar through a fixed random
    projection; the analytic input/parameter gradients of that scalar are
    then compared coordinate-wise with central differences.
    """
    params64 = params.astype(np.float64)
    x = x.astype(np.float64)

    record = []
    out = nets.run_layers(spec, params64, x, record=record)
    proj = rng.standard_normal(out.shape)

    grads, gx = nets.backprop(spec, params64, record, proj.copy())

    def scalar(x_probe, conv_list):
        p = nets.NetworkParams(conv_list)
        return float((nets.run_layers(spec, p, x_probe) * proj).sum())

    worst = max_rel_err(gx, central_diff(lambda a: scalar(a, params64.conv), x))
    for ci in range(len(params64.conv)):
        base = params64.conv

        def with_kernels(arr):
            conv_list = list(base)
            conv_list[ci] = ConvParams(arr, base[ci].bias)
            return scalar(x, conv_list)

        def with_bias(arr):
            conv_list = list(base)
            conv_list[ci] = ConvParams(base[ci].kernels, arr)
            return scalar(x, conv_list)

        worst = max(worst, max_rel_err(grads[ci].grad_kernels,
                                       central_diff(with_kernels, base[ci].kernels)))
        worst = max(worst, max_rel_err(grads[ci].grad_bias,
                                       central_diff(with_bias, base[ci].bias)))
    return worst


def _stack_spec(layers, window_hw):
    h, w = window_hw
    return nets.NetworkSpec("probe", (w, h), tuple(layers))


def check_conv2d(seed=0, in_c=1, out_c=2, hw=(6, 6), khw=(3, 3)):
    rng = np.random.default_rng(seed)
    x = _safe_tensor(rng, (in_c,) + hw)
    p = _conv_params(rng, out_c, in_c, *khw)
    spec = _stack_spec([nets.Conv(out_c, *khw), nets.SoftmaxHead()], hw)
    return check_stack(spec, nets.NetworkParams([p]), x, rng)


def check_linear(seed=0, channels=4):
    """A 1x1 convolution is the stack's only dense-like (linear) stage."""
    return check_conv2d(seed, in_c=channels, out_c=3, hw=(1, 1), khw=(1, 1))


def check_conv_relu(seed=0, in_c=2, out_c=3, hw=(6, 6), khw=(3, 3)):
    rng = np.random.default_rng(seed)
    spec = _stack_spec(
        [nets.Conv(out_c, *khw), nets.ReLU(), nets.SoftmaxHead()], hw
    )
    for attempt in range(50):
        x = _safe_tensor(rng, (in_c,) + hw)
        p = _conv_params(rng, out_c, in_c, *khw)
        pre = ops.conv2d_valid(x, p)
        if np.abs(pre).min() > 1e-3:  # keep 100x the probe step away from the kink
            return check_stack(spec, nets.NetworkParams([p]), x, rng)
    raise RuntimeError("could not find a kink-free ReLU probe point")


def check_conv_relu_pool(seed=0, in_c=1, out_c=2, hw=(8, 8), khw=(3, 3)):
    rng = np.random.default_rng(seed)
    spec = _stack_spec(
        [nets.Conv(out_c, *khw), nets.ReLU(), nets.MaxPool2(), nets.SoftmaxHead()], hw
    )
    for attempt in range(50):
        x = _safe_tensor(rng, (in_c,) + hw)
        p = _conv_params(rng, out_c, in_c, *khw)
        pre = ops.conv2d_valid(x, p)
        if np.abs(pre).min() < 1e-3:
            continue
        act = ops.relu(pre)
        c, ph, pw = act.shape
        blocks = act[:, : ph // 2 * 2, : pw // 2 * 2]
        blocks = blocks.reshape(c, ph // 2, 2, pw // 2, 2).transpose(0, 1, 3, 2, 4)
        blocks = np.sort(blocks.reshape(c, ph // 2, pw // 2, 4), axis=-1)
        gap = blocks[..., 3] - blocks[..., 2]
        # a tie inside a pooling block makes the max non-differentiable
        if gap.min() > 1e-3:
            return check_stack(spec, nets.NetworkParams([p]), x, rng)
    raise RuntimeError("could not find a tie-free pooling probe point")


def check_softmax_xent(seed=0):
    rng = np.random.default_rng(seed)
    logits = rng.uniform(-3.0, 3.0, size=2)
    label = int(rng.integers(0, 2))
    analytic = ops.softmax_xent_grad(logits, label)
    numeric = central_diff(lambda z: ops.softmax_xent(z, label)[1], logits)
    return max_rel_err(analytic, numeric)
