"""Desk-scale replication of the bigram-vs-unigram comparison.

Generates synthetic train/test sets for both window kinds, trains the
single-character and shared-computation bigram detectors, and reads the
false-positive rate of each at a fixed precision floor on its held-out
set. All seeds are fixed, so the whole experiment is reproducible byte
for byte.
"""

import os
from dataclasses import dataclass

from . import evaluate, nets, synth, train


@dataclass
class ArmResult:
    kind: str
    net: str
    model_path: str
    curve: list
    op: evaluate.OperatingPoint
    val_accuracy: float


@dataclass
class ReproResult:
    arms: list  # [unigram, bigram-shared]
    reduction: float
    precision: float


def _dataset(path, cfg, resume):
    if resume and os.path.exists(path):
        return synth.read_dataset(path)
    ds = synth.generate_dataset(cfg)
    synth.write_dataset(ds, path)
    return ds


def run_experiment(
    outdir,
    train_count=20000,
    test_count=4000,
    epochs=10,
    seed=7,
    precision=0.9,
    resume=False,
    log=print,
):
    """Run (or resume) the full comparison; returns a ReproResult."""
    os.makedirs(outdir, exist_ok=True)
    arms = []
    for kind, net_name, off in (("unigram", "unigram", 0), ("bigram", "bigram-shared", 100)):
        train_path = os.path.join(outdir, f"{kind}-train.bgds")
        test_path = os.path.join(outdir, f"{kind}-test.bgds")
        model_path = os.path.join(outdir, f"{net_name}.bgnm")

        log(f"[{net_name}] generating {train_count} train / {test_count} test samples")
        ds_train = _dataset(train_path, synth.GenConfig(kind, train_count, seed=seed + off + 1), resume)
        ds_test = _dataset(test_path, synth.GenConfig(kind, test_count, seed=seed + off + 2), resume)

        spec = nets.build_net(net_name)
        if resume and os.path.exists(model_path):
            spec, params = train.load_model(model_path)
            val_acc = float("nan")
            log(f"[{net_name}] resuming from {model_path}")
        else:
            log(f"[{net_name}] training {epochs} epochs")
            cfg = train.TrainConfig(epochs=epochs, seed=seed + off + 3)
            params, tlog = train.train(spec, ds_train, ds_test, cfg)
            for e in tlog.epochs:
                log(
                    f"[{net_name}] epoch {e.epoch:2d}: train loss {e.train_loss:.4f}  "
                    f"val loss {e.val_loss:.4f}  val acc {e.val_accuracy:.4f}"
                )
            train.save_model(spec, params, model_path)
            val_acc = tlog.epochs[-1].val_accuracy
        scored = evaluate.score_dataset(spec, params, ds_test)
        curve = evaluate.roc_curve(scored)
        evaluate.write_roc_csv(curve, os.path.join(outdir, f"{net_name}-roc.csv"))
        op = evaluate.operating_point(curve, precision)
        arms.append(ArmResult(kind, net_name, model_path, curve, op, val_acc))

    reduction = evaluate.compare(arms[0].curve, arms[1].curve, precision)
    return ReproResult(arms, reduction, precision)


def format_table(result: ReproResult) -> str:
    lines = [
        f"operating points at precision floor {result.precision:.0%} (held-out synthetic sets)",
        f"{'net':<15} {'threshold':>9} {'precision':>9} {'recall':>7} {'f-score':>8} {'FPR':>8}",
    ]
    for arm in result.arms:
        op = arm.op
        lines.append(
            f"{arm.net:<15} {op.threshold:>9.6f} {op.precision:>9.4f} "
            f"{op.recall:>7.4f} {op.f_score:>8.4f} {op.fpr:>8.4f}"
        )
    lines.append(
        f"relative FPR reduction (bigram-shared vs unigram): {result.reduction:.2%}"
    )
    return "\n".join(lines)
