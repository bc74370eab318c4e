import numpy as np
import pytest

from spotter import kernels, nets, synth, train


@pytest.fixture(params=kernels.available_backends())
def backend(request):
    """Run a test once per available kernel backend."""
    prev = kernels.get_backend()
    kernels.set_backend(request.param)
    yield request.param
    kernels.set_backend(prev)


def quick_train(net_name, kind, n_train=1200, n_val=300, epochs=3, seed=11):
    ds = synth.generate_dataset(synth.GenConfig(kind, n_train, seed=seed))
    val = synth.generate_dataset(synth.GenConfig(kind, n_val, seed=seed + 1))
    spec = nets.build_net(net_name)
    params, log = train.train(spec, ds, val, train.TrainConfig(epochs=epochs, seed=seed + 2))
    return spec, params, log, val


@pytest.fixture(scope="session")
def small_unigram():
    """A lightly trained unigram model for sanity-level assertions."""
    spec, params, log, val = quick_train("unigram", "unigram")
    return spec, params, log, val


@pytest.fixture(scope="session")
def small_bigram():
    spec, params, log, val = quick_train("bigram-shared", "bigram")
    return spec, params, log, val


@pytest.fixture()
def rng():
    return np.random.default_rng(1234)
