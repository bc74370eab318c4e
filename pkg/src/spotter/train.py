"""Mini-batch training with Adam, plus bit-exact model persistence.

Training is a single sequential stream: one seeded generator drives weight
init, epoch shuffles and per-sample dropout masks in a fixed order, so a
(seed, dataset, config) triple always reproduces the same parameters.
"""

import math
import struct
from dataclasses import dataclass, field

import numpy as np

from . import nets, ops
from .errors import FormatError
from .nets import NetworkParams, NetworkSpec
from .ops import ConvParams

BGNM_MAGIC = b"BGNM0001"

_LAYER_TAGS = {"conv": 0, "relu": 1, "pool": 2, "dropout": 3, "softmax": 4}


@dataclass
class TrainConfig:
    learning_rate: float = 0.001
    batch_size: int = 100
    epochs: int = 10
    seed: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8

    def __post_init__(self):
        if self.learning_rate < 0:
            raise ValueError("learning rate must be non-negative")
        if not (0 < self.beta1 < 1 and 0 < self.beta2 < 1):
            raise ValueError("beta1 and beta2 must lie in (0, 1)")
        if self.batch_size < 1:
            raise ValueError("batch size must be at least 1")


@dataclass
class AdamSlot:
    m_k: np.ndarray
    v_k: np.ndarray
    m_b: np.ndarray
    v_b: np.ndarray


@dataclass
class AdamState:
    slots: list
    t: int = 0

    @classmethod
    def fresh(cls, params: NetworkParams):
        return cls(
            [
                AdamSlot(
                    np.zeros_like(c.kernels), np.zeros_like(c.kernels),
                    np.zeros_like(c.bias), np.zeros_like(c.bias),
                )
                for c in params.conv
            ]
        )


@dataclass
class EpochStats:
    epoch: int
    train_loss: float
    val_accuracy: float
    val_loss: float


@dataclass
class TrainLog:
    epochs: list = field(default_factory=list)


def _adam_update(theta, g, m, v, t, cfg):
    b1, b2 = cfg.beta1, cfg.beta2
    m[...] = b1 * m + (1 - b1) * g
    v[...] = b2 * v + (1 - b2) * (g * g)
    m_hat = m / (1 - b1**t)
    v_hat = v / (1 - b2**t)
    theta[...] = theta - cfg.learning_rate * m_hat / (np.sqrt(v_hat) + cfg.epsilon)


def adam_step(params: NetworkParams, grads, state: AdamState, cfg: TrainConfig):
    """One bias-corrected Adam update, in place; returns (params, state)."""
    if len(grads) != len(params.conv):
        raise ValueError(f"{len(grads)} gradients for {len(params.conv)} conv layers")
    state.t += 1
    for c, g, slot in zip(params.conv, grads, state.slots):
        gk = np.asarray(g.grad_kernels, c.kernels.dtype)
        gb = np.asarray(g.grad_bias, c.bias.dtype)
        if gk.shape != c.kernels.shape or gb.shape != c.bias.shape:
            raise ValueError(
                f"gradient shapes {gk.shape}/{gb.shape} do not match "
                f"parameters {c.kernels.shape}/{c.bias.shape}"
            )
        _adam_update(c.kernels, gk, slot.m_k, slot.v_k, state.t, cfg)
        _adam_update(c.bias, gb, slot.m_b, slot.v_b, state.t, cfg)
    return params, state


def _check_dims(spec, dataset, name):
    if dataset.height != spec.window_h or dataset.width != spec.window_w:
        raise ValueError(
            f"{name} patches are {dataset.height}x{dataset.width} but the "
            f"{spec.kind} window is {spec.window_h}x{spec.window_w}"
        )


def evaluate(spec, params, dataset):
    """Mean eval-mode loss and accuracy over a dataset."""
    was_train = params.train_mode
    params.train_mode = False
    total_loss = 0.0
    correct = 0
    for i in range(len(dataset)):
        x = nets.normalize_image(dataset.patches[i])
        logits = nets.run_layers(spec, params, x)[:, 0, 0]
        probs, loss = ops.softmax_xent(logits, int(dataset.labels[i]))
        total_loss += loss
        correct += int(np.argmax(probs)) == int(dataset.labels[i])
    params.train_mode = was_train
    n = len(dataset)
    return total_loss / n, correct / n


def train(spec: NetworkSpec, dataset, val_dataset, cfg: TrainConfig):
    """Train a network on a dataset; returns (params, TrainLog)."""
    if len(dataset) == 0:
        raise ValueError("empty training dataset")
    _check_dims(spec, dataset, "training")
    if val_dataset is not None and len(val_dataset):
        _check_dims(spec, val_dataset, "validation")

    rng = np.random.default_rng(cfg.seed)
    params = nets.init_params(spec, rng.integers(0, 2**63 - 1))
    state = AdamState.fresh(params)
    log = TrainLog()

    n = len(dataset)
    grads_k = [np.zeros(c.kernels.shape, np.float64) for c in params.conv]
    grads_b = [np.zeros(c.bias.shape, np.float64) for c in params.conv]

    for epoch in range(1, cfg.epochs + 1):
        order = rng.permutation(n)
        epoch_loss = 0.0
        params.train_mode = True
        for start in range(0, n, cfg.batch_size):
            batch = order[start : start + cfg.batch_size]
            for g in grads_k:
                g[...] = 0.0
            for g in grads_b:
                g[...] = 0.0
            for idx in batch:
                x = nets.normalize_image(dataset.patches[idx])
                record = []
                logits = nets.run_layers(spec, params, x, train=True, rng=rng, record=record)
                g_logit = ops.softmax_xent_grad(logits[:, 0, 0], int(dataset.labels[idx]))
                _, loss = ops.softmax_xent(logits[:, 0, 0], int(dataset.labels[idx]))
                epoch_loss += loss
                bundles, _ = nets.backprop(
                    spec, params, record,
                    g_logit.reshape(2, 1, 1).astype(ops.DTYPE),
                    need_input_grad=False,
                )
                for g, b in zip(grads_k, bundles):
                    g += b.grad_kernels
                for g, b in zip(grads_b, bundles):
                    g += b.grad_bias
            inv = 1.0 / len(batch)
            mean_grads = [
                ops.GradBundle(None, (gk * inv).astype(ops.DTYPE), (gb * inv).astype(ops.DTYPE))
                for gk, gb in zip(grads_k, grads_b)
            ]
            adam_step(params, mean_grads, state, cfg)
        params.train_mode = False

        val_loss, val_acc = (math.nan, math.nan)
        if val_dataset is not None and len(val_dataset):
            val_loss, val_acc = evaluate(spec, params, val_dataset)
        log.epochs.append(EpochStats(epoch, epoch_loss / n, val_acc, val_loss))
    return params, log


# ---------------------------------------------------------------------------
# model container ("BGNM"): magic, kind tag byte, u32 layer count, then per
# layer a type tag byte and its payload; conv layers store u32 out/in/kh/kw
# and float32 kernels in (o, i, h, w) order followed by biases; dropout
# stores its float32 rate. All integers little-endian.


def save_model(spec: NetworkSpec, params: NetworkParams, path):
    if spec.kind not in nets.KIND_TAGS:
        raise ValueError(f"cannot persist unnamed network kind {spec.kind!r}")
    conv_iter = iter(params.conv)
    out = bytearray()
    out += BGNM_MAGIC
    out.append(nets.KIND_TAGS[spec.kind])
    out += struct.pack("<I", len(spec.layers))
    for layer in spec.layers:
        if isinstance(layer, nets.Conv):
            c = next(conv_iter)
            out.append(_LAYER_TAGS["conv"])
            out += struct.pack("<IIII", *c.kernels.shape)
            out += c.kernels.astype("<f4").tobytes()
            out += c.bias.astype("<f4").tobytes()
        elif isinstance(layer, nets.ReLU):
            out.append(_LAYER_TAGS["relu"])
        elif isinstance(layer, nets.MaxPool2):
            out.append(_LAYER_TAGS["pool"])
        elif isinstance(layer, nets.Dropout):
            out.append(_LAYER_TAGS["dropout"])
            out += np.float32(layer.p).astype("<f4").tobytes()
        elif isinstance(layer, nets.SoftmaxHead):
            out.append(_LAYER_TAGS["softmax"])
        else:
            raise ValueError(f"cannot persist layer {layer!r}")
    with open(path, "wb") as f:
        f.write(bytes(out))


class _Reader:
    def __init__(self, raw, path):
        self.raw = raw
        self.pos = 0
        self.path = path

    def take(self, n, what):
        if self.pos + n > len(self.raw):
            raise FormatError(f"{self.path}: truncated file while reading {what}")
        chunk = self.raw[self.pos : self.pos + n]
        self.pos += n
        return chunk


def load_model(path):
    """Read a model container back into (spec, params)."""
    with open(path, "rb") as f:
        raw = f.read()
    r = _Reader(raw, path)
    if r.take(len(BGNM_MAGIC), "magic") != BGNM_MAGIC:
        raise FormatError(f"{path}: bad magic (expected {BGNM_MAGIC.decode()})")
    kind_tag = r.take(1, "kind")[0]
    kinds = {v: k for k, v in nets.KIND_TAGS.items()}
    if kind_tag not in kinds:
        raise FormatError(f"{path}: unknown network kind tag {kind_tag}")
    kind = kinds[kind_tag]
    (n_layers,) = struct.unpack("<I", r.take(4, "layer count"))
    layers = []
    conv = []
    for li in range(n_layers):
        tag = r.take(1, f"layer {li} tag")[0]
        if tag == _LAYER_TAGS["conv"]:
            oc, ic, kh, kw = struct.unpack("<IIII", r.take(16, f"layer {li} conv dims"))
            n_k = oc * ic * kh * kw
            k = np.frombuffer(r.take(4 * n_k, f"layer {li} kernels"), "<f4").reshape(
                oc, ic, kh, kw
            )
            b = np.frombuffer(r.take(4 * oc, f"layer {li} biases"), "<f4")
            layers.append(nets.Conv(oc, kh, kw))
            conv.append(ConvParams(k.astype(np.float32), b.astype(np.float32)))
        elif tag == _LAYER_TAGS["relu"]:
            layers.append(nets.ReLU())
        elif tag == _LAYER_TAGS["pool"]:
            layers.append(nets.MaxPool2())
        elif tag == _LAYER_TAGS["dropout"]:
            (p,) = np.frombuffer(r.take(4, f"layer {li} dropout rate"), "<f4")
            layers.append(nets.Dropout(float(p)))
        elif tag == _LAYER_TAGS["softmax"]:
            layers.append(nets.SoftmaxHead())
        else:
            raise FormatError(f"{path}: unknown layer tag {tag} at layer {li}")
    if r.pos != len(raw):
        raise FormatError(f"{path}: trailing data after {n_layers} layers")
    spec = NetworkSpec(kind, nets.WINDOWS[kind], tuple(layers))
    try:
        nets.validate_spec(spec)
    except ValueError as e:
        raise FormatError(f"{path}: stored stack is inconsistent: {e}") from None
    return spec, NetworkParams(conv)
