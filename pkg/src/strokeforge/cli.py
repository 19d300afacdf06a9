"""Command line entry point: convert, train, eval, generate, classify, profile.

Exit codes: 0 success, 1 training aborted on a non-finite loss, 2 usage or
I/O error. Every training run writes a ``run.txt`` manifest of the fully
resolved configuration; re-running from that manifest reproduces the
metrics stream bit-exactly.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__, generate as gen, idx
from .pipeline import convert_dataset
from .seeding import derive_seed
from .strokes import StrokeFormatError, read_dataset, write_dataset
from .training import (
    CheckpointError,
    TrainConfig,
    Trainer,
    TrainingAborted,
    config_from_pairs,
    config_to_pairs,
    evaluate_metrics,
    load_checkpoint,
    loss_by_position,
    parse_kv_text,
)

CURRICULUM_NAMES = {
    "regular": "regular",
    "length": "incremental_length",
    "size": "incremental_set_size",
    "classes": "incremental_classes",
}
LAYER_NAMES = {"lstm": "recurrent", "ff": "feedforward"}


class CliError(Exception):
    """Usage or I/O failure; printed to stderr with exit code 2."""


def _threads(value: int | None) -> int:
    if value is not None:
        return value
    env = os.environ.get("STROKEFORGE_THREADS")
    return int(env) if env else 1


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="strokeforge", description=__doc__)
    parser.add_argument("--version", action="version", version=f"strokeforge {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("convert", help="convert IDX images to a stroke dataset")
    p.add_argument("--images", required=True)
    p.add_argument("--labels", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--limit", type=int, default=None, help="convert only the first N images")
    p.add_argument("--log", default=None, help="write skipped image indices to this file")
    p.add_argument("--threads", type=int, default=None)

    p = sub.add_parser("train", help="train a model on stroke datasets")
    p.add_argument("--config", default=None, help="key = value config file")
    p.add_argument("--train", dest="train_data", default=None)
    p.add_argument("--test", dest="test_data", default=None)
    p.add_argument("--curriculum", choices=sorted(CURRICULUM_NAMES), default=None)
    p.add_argument("--batch-mode", choices=["sequences", "points"], default=None)
    p.add_argument("--batch-size", type=int, default=None)
    p.add_argument("--layer", choices=["lstm", "ff"], default=None)
    p.add_argument("--hidden", default=None, help="comma-separated layer sizes, e.g. 200,200")
    p.add_argument("--mixtures", type=int, default=None)
    p.add_argument("--lr", type=float, default=None)
    p.add_argument("--decay", type=float, default=None)
    p.add_argument("--reg-lambda", type=float, default=None)
    p.add_argument("--task", choices=["prediction", "classification"], default=None)
    p.add_argument("--beta", type=int, choices=[0, 1], default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--budget-points", type=int, default=None)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--resume", default=None, help="checkpoint to continue training from")
    p.add_argument("--init-from", default=None, help="checkpoint whose weights seed this run")
    p.add_argument("--threads", type=int, default=None)

    p = sub.add_parser("eval", help="evaluate a checkpoint on a dataset")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--data", required=True)

    p = sub.add_parser("generate", help="sample unguided sequences to SVG")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--n", type=int, default=3)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--svg", required=True)
    p.add_argument("--max-steps", type=int, default=gen.DEFAULT_MAX_STEPS)
    p.add_argument("--temperature", type=float, default=1.0)

    p = sub.add_parser("classify", help="classify sequences; optionally dump traces")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--trace", default=None, help="write per-step class probabilities to this CSV")

    p = sub.add_parser("profile", help="mean loss per sequence position")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--max-pos", type=int, required=True)
    p.add_argument("--out", required=True)
    return parser


def _cmd_convert(args: argparse.Namespace) -> int:
    try:
        images = idx.load_idx_images(args.images)
        labels = idx.load_idx_labels(args.labels)
    except (OSError, idx.IdxFormatError) as exc:
        raise CliError(str(exc)) from exc
    if len(images) != len(labels):
        raise CliError(f"{args.images} has {len(images)} images but {args.labels} has {len(labels)} labels")
    if args.limit is not None:
        images = images[: args.limit]
        labels = labels[: args.limit]
    sequences, skipped = convert_dataset(images, labels, workers=_threads(args.threads))
    write_dataset(sequences, args.out)
    lengths = np.array([len(s) for s in sequences])
    print(f"converted {len(sequences)} of {len(images)} images -> {args.out}")
    if len(lengths):
        pct = np.percentile(lengths, [10, 50, 90])
        print(
            f"sequence length: mean {lengths.mean():.2f}, "
            f"p10 {pct[0]:.0f}, p50 {pct[1]:.0f}, p90 {pct[2]:.0f}"
        )
    if skipped:
        print(f"skipped {len(skipped)} degenerate images")
        if args.log:
            Path(args.log).write_text("\n".join(str(i) for i in skipped) + "\n")
    return 0


def _resolve_train_config(args: argparse.Namespace) -> tuple[TrainConfig, str, str]:
    pairs: dict[str, str] = {}
    if args.config:
        try:
            pairs = parse_kv_text(Path(args.config).read_text(), source=args.config)
        except OSError as exc:
            raise CliError(str(exc)) from exc
    train_path = pairs.pop("train_data", None)
    test_path = pairs.pop("test_data", None)
    try:
        config = config_from_pairs(pairs)
    except ValueError as exc:
        raise CliError(f"{args.config}: {exc}") from exc

    model_kwargs = {}
    if args.layer:
        model_kwargs["layer_kind"] = LAYER_NAMES[args.layer]
    if args.hidden:
        model_kwargs["hidden_sizes"] = tuple(int(v) for v in args.hidden.split(","))
    if args.mixtures:
        model_kwargs["num_mixtures"] = args.mixtures
    if model_kwargs:
        from dataclasses import replace

        config = replace(config, model=replace(config.model, **model_kwargs))
    train_kwargs = {
        "curriculum": CURRICULUM_NAMES[args.curriculum] if args.curriculum else None,
        "batch_mode": args.batch_mode,
        "batch_size": args.batch_size,
        "learning_rate": args.lr,
        "decay": args.decay,
        "reg_lambda": args.reg_lambda,
        "task_mode": args.task,
        "beta": args.beta,
        "seed": args.seed,
        "budget_points": args.budget_points,
    }
    train_kwargs = {k: v for k, v in train_kwargs.items() if v is not None}
    if train_kwargs:
        from dataclasses import replace

        config = replace(config, **train_kwargs)

    train_path = args.train_data or train_path
    test_path = args.test_data or test_path
    if not train_path or not test_path:
        raise CliError("--train and --test are required (via flags or config file)")
    return config, train_path, test_path


def _write_manifest(path: Path, config: TrainConfig, train_path: str, test_path: str) -> None:
    lines = [f"# strokeforge {__version__} run manifest"]
    lines += [f"{key} = {value}" for key, value in config_to_pairs(config)]
    lines.append(f"train_data = {train_path}")
    lines.append(f"test_data = {test_path}")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def _cmd_train(args: argparse.Namespace) -> int:
    config, train_path, test_path = _resolve_train_config(args)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    try:
        train_seqs = read_dataset(train_path)
        test_seqs = read_dataset(test_path)
    except (OSError, StrokeFormatError) as exc:
        raise CliError(str(exc)) from exc

    try:
        if args.resume:
            trainer = load_checkpoint(args.resume)
            if args.budget_points is not None:
                from dataclasses import replace

                trainer.config = replace(trainer.config, budget_points=args.budget_points)
        elif args.init_from:
            source = load_checkpoint(args.init_from)
            if source.config.model != config.model:
                raise CliError("--init-from checkpoint has a different model shape")
            trainer = Trainer(config, model=source.model)
        else:
            trainer = Trainer(config)
    except CheckpointError as exc:
        raise CliError(str(exc)) from exc

    _write_manifest(out_dir / "run.txt", trainer.config, train_path, test_path)
    metrics_path = out_dir / "metrics.csv"
    mode = "a" if args.resume else "w"
    try:
        with open(metrics_path, mode, encoding="utf-8") as metrics_out:
            trainer.run(
                train_seqs,
                test_seqs,
                metrics_out=metrics_out,
                abort_checkpoint=out_dir / "aborted.ckpt",
            )
    except TrainingAborted as exc:
        print(f"training aborted: {exc}", file=sys.stderr)
        if exc.checkpoint_path:
            print(f"post-mortem checkpoint: {exc.checkpoint_path}", file=sys.stderr)
        return 1
    trainer.save_checkpoint(out_dir / "checkpoint.txt")
    print(f"trained to {trainer.points_processed} points; artifacts in {out_dir}")
    return 0


def _load_model(checkpoint: str):
    try:
        return load_checkpoint(checkpoint).model
    except CheckpointError as exc:
        raise CliError(str(exc)) from exc


def _cmd_eval(args: argparse.Namespace) -> int:
    model = _load_model(args.checkpoint)
    try:
        data = read_dataset(args.data)
    except (OSError, StrokeFormatError) as exc:
        raise CliError(str(exc)) from exc
    result = evaluate_metrics(model, data)
    print(f"rmse_px {result.rmse:.6f}")
    print(f"loss_per_point {result.loss_per_point:.6f}")
    print(f"accuracy {result.accuracy:.4f}")
    if result.skipped:
        print(f"skipped {result.skipped} length-1 sequences")
    return 0


def _cmd_generate(args: argparse.Namespace) -> int:
    model = _load_model(args.checkpoint)
    rng = np.random.default_rng(derive_seed(args.seed, "generate"))
    sequences = [
        gen.generate_unguided(model, rng, max_steps=args.max_steps, temperature=args.temperature)
        for _ in range(args.n)
    ]
    Path(args.svg).write_text(gen.render_svg(sequences), encoding="utf-8")
    lengths = ", ".join(str(len(s)) for s in sequences)
    print(f"generated {args.n} sequences (lengths {lengths}) -> {args.svg}")
    return 0


def _cmd_classify(args: argparse.Namespace) -> int:
    model = _load_model(args.checkpoint)
    try:
        data = read_dataset(args.data)
    except (OSError, StrokeFormatError) as exc:
        raise CliError(str(exc)) from exc
    result = evaluate_metrics(model, data)
    print(f"accuracy {result.accuracy:.4f} over {len(data) - result.skipped} sequences")
    if args.trace:
        rows = ["sequence,step," + ",".join(f"p{d}" for d in range(10))]
        for i, seq in enumerate(data):
            trace = gen.classify_trace(model, seq)
            for t in range(trace.shape[0]):
                rows.append(f"{i},{t + 1}," + ",".join(f"{v:.6f}" for v in trace[t]))
        Path(args.trace).write_text("\n".join(rows) + "\n", encoding="utf-8")
        print(f"classification traces -> {args.trace}")
    return 0


def _cmd_profile(args: argparse.Namespace) -> int:
    model = _load_model(args.checkpoint)
    try:
        data = read_dataset(args.data)
    except (OSError, StrokeFormatError) as exc:
        raise CliError(str(exc)) from exc
    means = loss_by_position(model, data, args.max_pos)
    rows = ["position,mean_loss"]
    rows += [f"{p + 1},{value:.10g}" for p, value in enumerate(means)]
    Path(args.out).write_text("\n".join(rows) + "\n", encoding="utf-8")
    print(f"loss-by-position profile (1..{args.max_pos}) -> {args.out}")
    return 0


_COMMANDS = {
    "convert": _cmd_convert,
    "train": _cmd_train,
    "eval": _cmd_eval,
    "generate": _cmd_generate,
    "classify": _cmd_classify,
    "profile": _cmd_profile,
}


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
