#!/usr/bin/env python3
"""Compare the compiled kernels against the numpy fallback.

Times the two workloads that dominate real use: dense whole-image
inference and single-sample training steps (forward + backward + update).

Usage: python benchmarks/compare_backends.py [--size 512] [--train-samples 40]
"""

import argparse
import time

import numpy as np

from spotter import kernels, nets, ops, synth, train


def time_fn(fn, repeats):
    fn()  # warm-up
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return float(np.median(times))


def bench_dense(kind, size, repeats=5):
    spec = nets.build_net(kind)
    params = nets.init_params(spec, 0)
    img = nets.normalize_image(
        np.random.default_rng(0).integers(0, 256, (size, size), dtype=np.uint8)
    )
    macs = nets.count_macs(spec).total * size * size
    sec = time_fn(lambda: nets.forward_dense(spec, params, img), repeats)
    return sec, macs


def bench_train_step(kind, n_samples):
    net = "bigram-shared" if kind == "bigram" else "unigram"
    spec = nets.build_net(net)
    ds = synth.generate_dataset(synth.GenConfig(kind, n_samples, seed=1))
    cfg = train.TrainConfig(epochs=1, batch_size=n_samples, seed=2)
    t0 = time.perf_counter()
    train.train(spec, ds, None, cfg)
    return (time.perf_counter() - t0) / n_samples


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--size", type=int, default=512, help="dense image size")
    ap.add_argument("--train-samples", type=int, default=40)
    args = ap.parse_args()

    backends = kernels.available_backends()
    print(f"backends: {', '.join(backends)}  (numpy = pure-Python fallback)\n")

    rows = []
    for backend in backends:
        kernels.set_backend(backend)
        for kind in nets.KINDS:
            sec, macs = bench_dense(kind, args.size)
            rows.append((backend, f"dense {kind} {args.size}px",
                         f"{sec * 1e3:9.1f} ms", f"{macs / sec / 1e9:6.2f} GMAC/s"))
        for kind in ("unigram", "bigram"):
            per = bench_train_step(kind, args.train_samples)
            rows.append((backend, f"train step {kind}", f"{per * 1e3:9.2f} ms", ""))

    width = max(len(r[1]) for r in rows)
    for backend in backends:
        print(f"--- {backend}")
        for r in rows:
            if r[0] == backend:
                print(f"  {r[1]:<{width}}  {r[2]} {r[3]}")
    kernels.set_backend(backends[-1])


if __name__ == "__main__":
    main()
