"""Parity between the compiled kernels and the numpy fallback."""

import numpy as np
import pytest

from spotter import kernels, nets, ops
from spotter.kernels import numpy_backend

native = pytest.importorskip("spotter.kernels.native")


def _pair(rng, xs, ks):
    x = rng.standard_normal(xs).astype(np.float32)
    k = rng.standard_normal(ks).astype(np.float32) * 0.2
    b = rng.standard_normal(ks[0]).astype(np.float32) * 0.1
    return x, k, b


SHAPES = [
    ((1, 32, 32), (16, 1, 5, 5)),
    ((16, 14, 30), (32, 16, 5, 5)),
    ((64, 1, 9), (48, 64, 1, 9)),
    ((3, 7, 11), (5, 3, 3, 2)),
    ((2, 1, 1), (4, 2, 1, 1)),
]


@pytest.mark.parametrize("xs,ks", SHAPES)
def test_forward_bit_identical(rng, xs, ks):
    """Both backends accumulate forward sums in float64, so the rounded
    float32 outputs agree exactly."""
    x, k, b = _pair(rng, xs, ks)
    np.testing.assert_array_equal(
        native.conv2d_forward(x, k, b), numpy_backend.conv2d_forward(x, k, b)
    )


@pytest.mark.parametrize("xs,ks", SHAPES)
def test_backward_agrees_to_float32_accuracy(rng, xs, ks):
    x, k, b = _pair(rng, xs, ks)
    y = native.conv2d_forward(x, k, b)
    gy = rng.standard_normal(y.shape).astype(np.float32)
    ga = native.conv2d_backward(x, k, gy)
    gb = numpy_backend.conv2d_backward(x, k, gy)
    for a, bb in zip(ga, gb):
        np.testing.assert_allclose(a, bb, rtol=2e-3, atol=2e-4)


def test_backward_float64_agrees_tightly(rng):
    x = rng.standard_normal((4, 10, 12))
    k = rng.standard_normal((6, 4, 3, 3)) * 0.2
    b = rng.standard_normal(6) * 0.1
    gy = rng.standard_normal((6, 8, 10))
    ga = native.conv2d_backward(x, k, gy)
    gb = numpy_backend.conv2d_backward(x, k, gy)
    for a, bb in zip(ga, gb):
        np.testing.assert_allclose(a, bb, rtol=1e-10, atol=1e-12)


def test_pool_bit_identical(rng):
    x = rng.standard_normal((8, 12, 16)).astype(np.float32)
    ya, ia = native.maxpool2_forward(x)
    yb, ib = numpy_backend.maxpool2_forward(x)
    np.testing.assert_array_equal(ya, yb)
    np.testing.assert_array_equal(ia, ib)
    gy = rng.standard_normal(ya.shape).astype(np.float32)
    np.testing.assert_array_equal(
        native.maxpool2_backward(ia, gy), numpy_backend.maxpool2_backward(ib, gy)
    )


def test_pool_ties_identical(rng):
    x = np.repeat(np.repeat(rng.standard_normal((3, 4, 4)).astype(np.float32), 2, 1), 2, 2)
    _, ia = native.maxpool2_forward(x)
    _, ib = numpy_backend.maxpool2_forward(x)
    np.testing.assert_array_equal(ia, ib)
    assert (ia == 0).all()  # ties resolve to the first cell in row-major order


def test_dense_scores_agree_across_backends(rng):
    spec = nets.build_net("bigram-shared")
    params = nets.init_params(spec, 0)
    img = nets.normalize_image(rng.integers(0, 256, (80, 96)))
    prev = kernels.get_backend()
    try:
        kernels.set_backend("native")
        a = nets.forward_dense(spec, params, img).scores
        kernels.set_backend("numpy")
        b = nets.forward_dense(spec, params, img).scores
    finally:
        kernels.set_backend(prev)
    np.testing.assert_allclose(a, b, atol=1e-6)


def test_backend_selection_api():
    avail = kernels.available_backends()
    assert "numpy" in avail
    prev = kernels.get_backend()
    try:
        for name in avail:
            kernels.set_backend(name)
            assert kernels.get_backend() == name
        with pytest.raises(ValueError, match="unknown backend"):
            kernels.set_backend("cuda")
    finally:
        kernels.set_backend(prev)
