"""The `spotter` command line: generate, train, evaluate, detect, count
MACs, benchmark, compare, and replicate the headline experiment.

Exit codes: 0 success, 1 usage error, 2 runtime or data error. Every
random choice flows from an explicit --seed, so identical invocations on
identical inputs write identical bytes.
"""

import argparse
import os
import sys

from . import detect as detect_mod
from . import evaluate, nets, pgm, repro, synth, train
from .errors import SpotterError
from .kernels import available_backends, get_backend, set_backend


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        sys.exit(1)


def _add_gen(sub):
    p = sub.add_parser("gen", help="generate a synthetic dataset")
    p.add_argument("--kind", required=True, choices=("unigram", "bigram"))
    p.add_argument("--count", required=True, type=int, help="number of samples")
    p.add_argument("--pos-frac", type=float, default=0.5, help="fraction labeled text (default 0.5)")
    p.add_argument("--seed", type=int, default=0, help="dataset seed (default 0)")
    p.add_argument("--out", required=True, help="output .bgds path")
    p.add_argument("--rot", type=float, default=15.0, help="rotation range, degrees (default 15)")
    p.add_argument("--persp", type=float, default=0.08, help="perspective magnitude (default 0.08)")
    p.add_argument("--noise", type=float, default=8.0, help="noise sigma, grey levels (default 8)")
    p.add_argument("--bg-dir", default=None, help="optional directory of PGM background images")


def _add_train(sub):
    p = sub.add_parser("train", help="train a detector")
    p.add_argument("--net", required=True, choices=nets.KINDS)
    p.add_argument("--data", required=True, help="training .bgds path")
    p.add_argument("--val", default=None, help="validation .bgds path")
    p.add_argument("--epochs", type=int, default=10, help="training epochs (default 10)")
    p.add_argument("--seed", type=int, default=0, help="training seed (default 0)")
    p.add_argument("--lr", type=float, default=0.001, help="Adam learning rate (default 0.001)")
    p.add_argument("--batch", type=int, default=100, help="batch size (default 100)")
    p.add_argument("--out", required=True, help="output .bgnm model path")
    p.add_argument("--log", default=None, help="optional per-epoch CSV log path")


def _add_eval(sub):
    p = sub.add_parser("eval", help="ROC evaluation of a model on a dataset")
    p.add_argument("--model", required=True, help="trained .bgnm model")
    p.add_argument("--data", required=True, help="labeled .bgds dataset")
    p.add_argument("--roc", required=True, help="output ROC CSV path")
    p.add_argument("--svg", default=None, help="optional ROC SVG plot path")
    p.add_argument("--precision", type=float, default=0.9,
                   help="precision floor for the operating point (default 0.9)")


def _add_detect(sub):
    p = sub.add_parser("detect", help="multi-scale detection on a PGM image")
    p.add_argument("--model", required=True, help="trained .bgnm model")
    p.add_argument("--image", required=True, help="input PGM (P5) image")
    p.add_argument("--threshold", required=True, type=float,
                   help="decision threshold on the text probability, in [0, 1]")
    p.add_argument("--out-map", required=True, help="score-map PGM path (level 0; deeper levels get _s<k>)")
    p.add_argument("--out-mask", required=True, help="binary-mask PGM path (level 0; deeper levels get _s<k>)")
    p.add_argument("--pyramid", type=float, default=2 ** -0.5,
                   help="pyramid scale factor (default 0.7071)")


def _add_macs(sub):
    p = sub.add_parser("macs", help="analytic MACs-per-pixel of a network")
    p.add_argument("--net", required=True, choices=nets.KINDS)


def _add_bench(sub):
    p = sub.add_parser("bench", help="dense-inference throughput")
    p.add_argument("--model", required=True, help="trained .bgnm model")
    p.add_argument("--size", type=int, default=512, help="square image size (default 512)")
    p.add_argument("--iters", type=int, default=10, help="timing iterations (default 10)")
    p.add_argument("--backend", choices=("auto",) + tuple(available_backends()), default="auto",
                   help="kernel backend (default auto)")


def _add_compare(sub):
    p = sub.add_parser("compare", help="relative FPR reduction between two ROC CSVs")
    p.add_argument("--roc-a", required=True, help="baseline curve CSV")
    p.add_argument("--roc-b", required=True, help="improved curve CSV")
    p.add_argument("--precision", type=float, default=0.9,
                   help="precision floor (default 0.9)")


def _add_repro(sub):
    p = sub.add_parser("repro-paper", help="desk-scale bigram-vs-unigram replication")
    p.add_argument("--outdir", required=True, help="working directory for datasets/models/curves")
    p.add_argument("--train-count", type=int, default=20000, help="training samples per arm (default 20000)")
    p.add_argument("--test-count", type=int, default=4000, help="held-out samples per arm (default 4000)")
    p.add_argument("--epochs", type=int, default=10, help="training epochs (default 10)")
    p.add_argument("--seed", type=int, default=7, help="experiment base seed (default 7)")
    p.add_argument("--precision", type=float, default=0.9, help="precision floor (default 0.9)")
    p.add_argument("--resume", action="store_true",
                   help="reuse datasets/models already present in --outdir")


def _load_bg_images(bg_dir):
    images = []
    for name in sorted(os.listdir(bg_dir)):
        if name.lower().endswith((".pgm", ".pnm")):
            images.append(pgm.read_pgm(os.path.join(bg_dir, name)))
    if not images:
        raise SpotterError(f"{bg_dir}: no PGM images found")
    return tuple(images)


def cmd_gen(args):
    bg = _load_bg_images(args.bg_dir) if args.bg_dir else ()
    cfg = synth.GenConfig(
        args.kind, args.count, pos_frac=args.pos_frac, seed=args.seed,
        rot_deg=args.rot, persp=args.persp, noise_sigma=args.noise, bg_images=bg,
    )
    ds = synth.generate_dataset(cfg)
    synth.write_dataset(ds, args.out)
    print(
        f"wrote {len(ds)} {args.kind} samples ({ds.width}x{ds.height}, "
        f"{int(ds.labels.sum())} positive) to {args.out}"
    )
    return 0


def cmd_train(args):
    ds = synth.read_dataset(args.data)
    val = synth.read_dataset(args.val) if args.val else None
    spec = nets.build_net(args.net)
    cfg = train.TrainConfig(
        learning_rate=args.lr, batch_size=args.batch, epochs=args.epochs, seed=args.seed
    )
    params, log = train.train(spec, ds, val, cfg)
    for e in log.epochs:
        print(
            f"epoch {e.epoch:3d}: train loss {e.train_loss:.4f}  "
            f"val loss {e.val_loss:.4f}  val acc {e.val_accuracy:.4f}"
        )
    train.save_model(spec, params, args.out)
    print(f"saved {args.net} model to {args.out}")
    if args.log:
        with open(args.log, "w", newline="\n") as f:
            f.write("epoch,train_loss,val_loss,val_accuracy\n")
            for e in log.epochs:
                f.write(f"{e.epoch},{e.train_loss:.6f},{e.val_loss:.6f},{e.val_accuracy:.6f}\n")
        print(f"wrote training log to {args.log}")
    return 0


def cmd_eval(args):
    spec, params = train.load_model(args.model)
    ds = synth.read_dataset(args.data)
    scored = evaluate.score_dataset(spec, params, ds)
    curve = evaluate.roc_curve(scored)
    evaluate.write_roc_csv(curve, args.roc)
    print(f"wrote {len(curve)}-point ROC to {args.roc}")
    if args.svg:
        evaluate.write_roc_svg(curve, args.svg)
        print(f"wrote ROC plot to {args.svg}")
    op = evaluate.operating_point(curve, args.precision)
    print(
        f"at precision >= {args.precision:.2f}: threshold {op.threshold:.6f}  "
        f"precision {op.precision:.4f}  recall {op.recall:.4f}  "
        f"f-score {op.f_score:.4f}  FPR {op.fpr:.4f}"
    )
    return 0


def _suffixed(path, k):
    root, ext = os.path.splitext(path)
    return f"{root}_s{k}{ext}" if k else path


def cmd_detect(args):
    spec, params = train.load_model(args.model)
    image = pgm.read_pgm(args.image)
    result = detect_mod.detect(spec, params, image, args.threshold, args.pyramid)
    for k, (rm, mask) in enumerate(zip(result.levels, result.masks)):
        map_path = _suffixed(args.out_map, k)
        mask_path = _suffixed(args.out_mask, k)
        pgm.write_pgm(detect_mod.score_image(rm), map_path)
        pgm.write_pgm(detect_mod.mask_image(mask), mask_path)
        print(
            f"level {k}: scale {rm.scale:.4f}  grid {rm.scores.shape[0]}x{rm.scores.shape[1]}  "
            f"{int(mask.sum())} positive cells -> {map_path}, {mask_path}"
        )
    return 0


def cmd_macs(args):
    spec = nets.build_net(args.net)
    report = nets.count_macs(spec)
    print(f"{args.net} ({spec.window_w}x{spec.window_h} window)")
    print(f"{'layer':>5}  {'type':<22} {'MACs/pixel':>11}")
    for entry in report.entries:
        layer = spec.layers[entry.layer_index]
        desc = f"conv {layer.out_channels}x{layer.kernel_h}x{layer.kernel_w}"
        print(f"{entry.layer_index:>5}  {desc:<22} {entry.macs_per_pixel:>11.2f}")
    print(f"{'':>5}  {'total':<22} {report.total:>11.2f}")
    base = nets.count_macs(nets.build_net("unigram")).total
    print(f"ratio vs unigram: {report.total / base:.4f}")
    return 0


def cmd_bench(args):
    if args.backend != "auto":
        set_backend(args.backend)
    spec, params = train.load_model(args.model)
    report = detect_mod.benchmark_fps(spec, params, args.size, args.iters)
    print(
        f"{spec.kind} on {args.size}x{args.size} ({get_backend()} backend): "
        f"{report.fps:.2f} frames/s (median {report.median_seconds * 1e3:.1f} ms over "
        f"{args.iters} runs)"
    )
    print(
        f"analytic cost: {report.macs_per_frame / 1e9:.3f} GMAC/frame -> "
        f"{report.effective_gmacs:.2f} effective GMAC/s"
    )
    return 0


def cmd_compare(args):
    curve_a = evaluate.read_roc_csv(args.roc_a)
    curve_b = evaluate.read_roc_csv(args.roc_b)
    op_a = evaluate.operating_point(curve_a, args.precision)
    op_b = evaluate.operating_point(curve_b, args.precision)
    reduction = evaluate.compare(curve_a, curve_b, args.precision)
    print(f"baseline  FPR {op_a.fpr:.4f} (recall {op_a.recall:.4f}) at precision >= {args.precision:.2f}")
    print(f"candidate FPR {op_b.fpr:.4f} (recall {op_b.recall:.4f})")
    print(f"relative FPR reduction: {reduction:.2%}")
    return 0


def cmd_repro(args):
    result = repro.run_experiment(
        args.outdir,
        train_count=args.train_count,
        test_count=args.test_count,
        epochs=args.epochs,
        seed=args.seed,
        precision=args.precision,
        resume=args.resume,
    )
    print()
    print(repro.format_table(result))
    return 0


_COMMANDS = {
    "gen": cmd_gen,
    "train": cmd_train,
    "eval": cmd_eval,
    "detect": cmd_detect,
    "macs": cmd_macs,
    "bench": cmd_bench,
    "compare": cmd_compare,
    "repro-paper": cmd_repro,
}


def build_parser():
    parser = _Parser(prog="spotter", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")
    for add in (_add_gen, _add_train, _add_eval, _add_detect, _add_macs,
                _add_bench, _add_compare, _add_repro):
        add(sub)
    return parser


def run(argv) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command is None:
        parser.print_usage(sys.stderr)
        sys.stderr.write("spotter: error: a command is required\n")
        return 1
    try:
        return _COMMANDS[args.command](args)
    except (SpotterError, ValueError, OSError) as e:
        sys.stderr.write(f"spotter {args.command}: error: {e}\n")
        return 2


def main():
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()
