"""Core tensor operations: valid convolution, ReLU, 2x2 max pooling,
two-class softmax cross-entropy and inverted dropout, each with its
backward pass.

Tensors are numpy arrays of shape (channels, height, width), row-major and
channel-major, float32 in production. The same functions run in float64
when the gradient checker re-executes a layer in verification mode.
"""

from dataclasses import dataclass

import numpy as np

from . import kernels

DTYPE = np.float32

# Largest float32 strictly below 1; probabilities are clamped into
# [PROB_EPS, PROB_MAX] so reported scores stay inside the open interval.
PROB_MAX = float(np.nextafter(np.float32(1.0), np.float32(0.0)))
PROB_EPS = 1e-12


@dataclass
class ConvParams:
    """Filter bank: kernels (out_c, in_c, kh, kw) plus per-output bias."""

    kernels: np.ndarray
    bias: np.ndarray

    def __post_init__(self):
        k = np.asarray(self.kernels)
        if k.ndim != 4:
            raise ValueError(f"kernels must be 4-D (out,in,kh,kw), got shape {k.shape}")
        if min(k.shape) < 1:
            raise ValueError(f"degenerate kernel shape {k.shape}")
        b = np.asarray(self.bias)
        if b.shape != (k.shape[0],):
            raise ValueError(
                f"bias length {b.shape} does not match {k.shape[0]} output channels"
            )
        self.kernels = np.ascontiguousarray(k)
        self.bias = np.ascontiguousarray(b)

    @property
    def out_channels(self):
        return self.kernels.shape[0]

    @property
    def in_channels(self):
        return self.kernels.shape[1]

    def astype(self, dtype):
        return ConvParams(self.kernels.astype(dtype), self.bias.astype(dtype))


@dataclass
class GradBundle:
    """Gradients mirroring the shapes of a convolution's inputs."""

    grad_input: np.ndarray
    grad_kernels: np.ndarray
    grad_bias: np.ndarray


def _as_tensor(x):
    x = np.ascontiguousarray(x)
    if x.ndim != 3:
        raise ValueError(f"expected a (c, h, w) tensor, got shape {x.shape}")
    return x


def conv2d_valid(x, params: ConvParams):
    """Valid (no padding) cross-correlation of x with the filter bank."""
    x = _as_tensor(x)
    k = params.kernels
    if x.shape[0] != k.shape[1]:
        raise ValueError(
            f"input has {x.shape[0]} channels but kernels {k.shape} expect {k.shape[1]}"
        )
    if x.shape[1] < k.shape[2] or x.shape[2] < k.shape[3]:
        raise ValueError(
            f"kernel {k.shape[2]}x{k.shape[3]} larger than input {x.shape[1]}x{x.shape[2]}"
        )
    if k.dtype != x.dtype:
        k = k.astype(x.dtype)
    b = params.bias.astype(x.dtype, copy=False)
    return kernels.conv2d_forward(x, k, b)


def conv2d_backward(x, params: ConvParams, grad_output, need_input_grad=True) -> GradBundle:
    """Exact partial derivatives of conv2d_valid's output sum."""
    x = _as_tensor(x)
    k = params.kernels
    expected = (k.shape[0], x.shape[1] - k.shape[2] + 1, x.shape[2] - k.shape[3] + 1)
    grad_output = np.ascontiguousarray(grad_output)
    if grad_output.shape != expected:
        raise ValueError(
            f"grad_output shape {grad_output.shape} does not match forward output {expected}"
        )
    if k.dtype != x.dtype:
        k = k.astype(x.dtype)
    gx, gk, gb = kernels.conv2d_backward(
        x, k, grad_output.astype(x.dtype, copy=False), need_input_grad
    )
    return GradBundle(gx, gk, gb)


def relu(x):
    return np.maximum(x, 0)


def relu_backward(x, grad_output):
    # gradient at exactly 0 is defined as 0
    return np.where(x > 0, grad_output, 0).astype(grad_output.dtype, copy=False)


def maxpool2(x):
    """Max over non-overlapping 2x2 blocks, stride 2."""
    y, _ = maxpool2_indices(x)
    return y


def maxpool2_indices(x):
    """Pooled tensor plus per-block argmax (0..3, row-major within block)."""
    x = _as_tensor(x)
    if x.shape[1] % 2 or x.shape[2] % 2:
        raise ValueError(f"maxpool2 needs even height and width, got {x.shape[1]}x{x.shape[2]}")
    return kernels.maxpool2_forward(x)


def maxpool2_backward(idx, grad_output):
    """Route each incoming gradient to the argmax cell of its block."""
    grad_output = np.ascontiguousarray(grad_output)
    if idx.shape != grad_output.shape:
        raise ValueError(f"argmax shape {idx.shape} vs grad shape {grad_output.shape}")
    return kernels.maxpool2_backward(idx, grad_output)


def softmax2(logits_map):
    """Channel-axis softmax of a (2, h, w) logit map, clamped to (0, 1)."""
    z = logits_map.astype(np.float64)
    z -= z.max(axis=0, keepdims=True)
    e = np.exp(z)
    p = e / e.sum(axis=0, keepdims=True)
    return np.clip(p, PROB_EPS, PROB_MAX).astype(logits_map.dtype)


def softmax_xent(logits, label):
    """Two-class softmax with cross-entropy loss.

    Returns (probs, loss). Computed with max subtraction, so arbitrarily
    large finite logits cannot overflow, and the loss uses the exact
    log-sum-exp form rather than log of a clamped probability.
    """
    z = np.asarray(logits, np.float64).reshape(-1)
    if z.shape != (2,):
        raise ValueError(f"expected 2 logits, got shape {np.shape(logits)}")
    if label not in (0, 1):
        raise ValueError(f"label must be 0 or 1, got {label!r}")
    m = z.max()
    e = np.exp(z - m)
    lse = m + np.log(e.sum())
    probs = e / e.sum()
    loss = float(lse - z[label])
    return np.clip(probs, PROB_EPS, PROB_MAX), loss


def softmax_xent_grad(logits, label):
    """Gradient of the loss wrt the logits: probs - onehot(label)."""
    z = np.asarray(logits, np.float64).reshape(-1)
    e = np.exp(z - z.max())
    grad = e / e.sum()
    grad[label] -= 1.0
    return grad


def dropout_mask(shape, p, rng):
    """Inverted-dropout multiplier: 0 with probability p, else 1/(1-p)."""
    if not 0 <= p < 1:
        raise ValueError(f"dropout probability must be in [0, 1), got {p}")
    keep = rng.random(shape) >= p
    return keep.astype(DTYPE) / DTYPE(1 - p)


def dropout(x, p, mode, rng=None):
    """Inverted dropout. Eval mode is the identity, bit for bit."""
    if mode not in ("train", "eval"):
        raise ValueError(f"mode must be 'train' or 'eval', got {mode!r}")
    if not 0 <= p < 1:
        raise ValueError(f"dropout probability must be in [0, 1), got {p}")
    if mode == "eval":
        return x
    if rng is None:
        raise ValueError("train-mode dropout needs a seeded rng")
    return x * dropout_mask(x.shape, p, rng).astype(x.dtype)
