"""
Command-line entry point.

    artiphon synth  --out corpus/ [--config run.toml] [--seed 7]
    artiphon stats  --manifest corpus/manifest.json [--dimension voicing]
    artiphon train  --manifest corpus/manifest.json --dimension voicing --mode contrast --fold 0
    artiphon eval   --checkpoint runs/voicing/contrast/fold0/best.acck --manifest corpus/manifest.json
    artiphon report --results runs/ --out reports/

Exit codes: 0 ok, 1 unexpected error, 2 usage or configuration error,
3 data error, 4 numeric failure. Logs go to stderr, results to stdout.
"""

import argparse
import json
import sys
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence

from pydantic import ValidationError as PydanticValidationError
from rich.console import Console
from rich.table import Table

from artiphon.cli.run_config import RunConfig
from artiphon.core.config import settings
from artiphon.core.exceptions import ConfigurationError, exit_code_for, handle_exception
from artiphon.core.logging import get_logger, setup_logging
from artiphon.features.alignment import AlignmentConfig, build_example_set
from artiphon.features.corpus import ClassHistogram, class_histogram, synthesize_corpus
from artiphon.features.evaluation import (
    METRICS_FILE,
    FoldResult,
    MetricsSummary,
    emit_report,
    evaluate_examples,
    find_fold_results,
    results_table,
    write_fold_result,
)
from artiphon.features.model import Mode, model_from_checkpoint
from artiphon.features.training import FoldPolicy, Split, make_folds, train
from artiphon.platform.phonology import Dimension, PhonemeMap, class_names, default_phoneme_map, load_phoneme_map
from artiphon.platform.storage_layer import load_checkpoint, load_manifest
from artiphon.platform.tensor import set_debug_numerics, set_precision

logger = get_logger(__name__)

console = Console()
err_console = Console(stderr=True)


def _phoneme_map(args: argparse.Namespace) -> PhonemeMap:
    path = getattr(args, "phoneme_map", None)
    return load_phoneme_map(path) if path else default_phoneme_map()


def _overrides(**sections: Dict[str, Any]) -> Dict[str, Any]:
    """Drop unset flags so lower-precedence sources still apply."""
    out: Dict[str, Any] = {}
    for name, values in sections.items():
        if isinstance(values, dict):
            kept = {k: v for k, v in values.items() if v is not None}
            if kept:
                out[name] = kept
        elif values is not None:
            out[name] = values
    return out


def _histogram_table(hist: ClassHistogram) -> Table:
    table = Table(title=f"Frames per class: {hist.dimension.value}")
    table.add_column("Class")
    table.add_column("Frames", justify="right")
    table.add_column("%", justify="right")
    for c in hist.classes:
        table.add_row(c.name, str(c.frames), f"{c.percentage:.2f}")
    table.add_row("Total", str(hist.total), "100.00" if hist.total else "0.00", style="bold")
    if hist.masked:
        table.add_row("(masked)", str(hist.masked), "", style="dim")
    return table


def _metrics_table(title: str, names: Sequence[str], metrics: MetricsSummary) -> Table:
    table = Table(title=title)
    for column in ("Class", "Prec", "Rec", "F1"):
        table.add_column(column, justify="left" if column == "Class" else "right")
    pc = metrics.per_class
    for name, p, r, f in zip(names, pc.precision, pc.recall, pc.f1):
        table.add_row(name, f"{p:.2f}", f"{r:.2f}", f"{f:.2f}")
    m = metrics.macro
    table.add_row("AVG", f"{m.precision:.2f}", f"{m.recall:.2f}", f"{m.f1:.2f}", style="bold")
    return table


def _dimensions(args: argparse.Namespace) -> List[Dimension]:
    return [Dimension(args.dimension)] if args.dimension else list(Dimension)


def cmd_synth(args: argparse.Namespace) -> int:
    config = RunConfig.load(args.config, **_overrides(seed=args.seed))
    out_dir = Path(args.out)
    phoneme_map = _phoneme_map(args)
    manifest = synthesize_corpus(config.synth, out_dir, phoneme_map)
    console.print(f"Manifest: {out_dir / 'manifest.json'} ({len(manifest)} utterances)")
    for dim in _dimensions(args):
        console.print(_histogram_table(class_histogram(manifest, dim, config.alignment, phoneme_map)))
    return 0


def cmd_stats(args: argparse.Namespace) -> int:
    config = RunConfig.load(args.config)
    manifest = load_manifest(args.manifest, require_audio=False)
    phoneme_map = _phoneme_map(args)
    for dim in _dimensions(args):
        console.print(_histogram_table(class_histogram(manifest, dim, config.alignment, phoneme_map)))
    return 0


def cmd_train(args: argparse.Namespace) -> int:
    config = RunConfig.load(
        args.config,
        **_overrides(
            seed=args.seed,
            out_dir=args.out,
            mode={"mode": args.mode, "dimension": args.dimension},
            train={"fold": args.fold, "epochs": args.epochs, "batch_size": args.batch_size, "lr": args.lr},
        ),
    )
    mode_config = config.mode
    manifest = load_manifest(args.manifest, require_audio=mode_config.needs_audio_for_training)
    run_dir = config.out_dir / mode_config.dimension.value / mode_config.mode.value / f"fold{config.train.fold}"
    run_dir.mkdir(parents=True, exist_ok=True)
    (run_dir / "run_config.json").write_text(
        json.dumps(config.canonical(), indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    console.print_json(data=config.canonical())

    phoneme_map = _phoneme_map(args)
    audio_weights = load_checkpoint(args.audio_weights) if args.audio_weights else None
    result = train(
        manifest,
        mode_config,
        config.train,
        out_dir=run_dir,
        alignment_config=config.alignment,
        vit_config=config.vit,
        audio_config=config.audio,
        phoneme_map=phoneme_map,
        audio_weights=audio_weights,
        config_hash=config.config_hash(phoneme_map),
    )

    table = Table(title=f"Training: {mode_config.mode.value} / {mode_config.dimension.value} / fold {config.train.fold}")
    for column in ("Epoch", "Steps", "Loss", "L_cls", "L_cos", "Val macro-F1"):
        table.add_column(column, justify="right")
    for e in result.epochs:
        table.add_row(
            str(e.epoch),
            str(e.steps),
            f"{e.mean_loss:.4f}",
            f"{e.mean_loss_cls:.4f}",
            f"{e.mean_loss_cos:.4f}",
            f"{e.val_macro_f1:.4f}",
            style="bold" if e.epoch == result.best_epoch else None,
        )
    console.print(table)
    console.print(f"Best checkpoint: {result.best_checkpoint}")
    console.print(f"Final checkpoint: {result.final_checkpoint}")
    return 0


def cmd_eval(args: argparse.Namespace) -> int:
    config = RunConfig.load(args.config)
    checkpoint = load_checkpoint(args.checkpoint)
    model = model_from_checkpoint(checkpoint)
    meta = checkpoint.metadata
    dim = model.mode_config.dimension

    manifest = load_manifest(args.manifest, require_audio=model.mode_config.needs_audio_for_inference)
    fold_index = args.fold if args.fold is not None else int(meta.get("fold", 0))
    plan = make_folds(
        manifest.speakers(),
        k=int(meta.get("k", config.train.k)),
        seed=int(meta.get("seed", config.train.seed)),
        policy=FoldPolicy(meta.get("fold_policy", config.train.fold_policy)),
    )
    fold = plan.fold(fold_index)
    alignment = config.alignment
    if "alignment_config" in meta:
        alignment = AlignmentConfig.model_validate({**meta["alignment_config"], "cache_dir": alignment.cache_dir})

    phoneme_map = _phoneme_map(args)
    trained_with = meta.get("phoneme_map")
    if trained_with is not None and trained_with != phoneme_map.digest():
        logger.warning("phoneme_map_differs_from_training", checkpoint=str(args.checkpoint))

    examples = build_example_set(
        fold.utterances(manifest, Split(args.split)),
        dim,
        alignment,
        phoneme_map,
        load_audio=model.mode_config.needs_audio_for_inference,
        manifest_digest=manifest.digest,
    )
    metrics = evaluate_examples(model, examples, config.train.eval_batch_size)
    names = class_names(dim)
    result = FoldResult(
        fold=fold_index,
        mode=model.mode,
        dimension=dim,
        split=args.split,
        checkpoint=str(args.checkpoint),
        class_names=names,
        metrics=metrics,
    )

    out_dir = Path(args.out) if args.out else Path(args.checkpoint).parent
    metrics_path = write_fold_result(out_dir / METRICS_FILE, result)
    console.print(
        _metrics_table(f"{model.mode.value} / {dim.value} / fold {fold_index} ({args.split})", names, metrics)
    )
    console.print(f"Metrics: {metrics_path}")

    if args.report:
        formats = [f.strip() for f in args.report.split(",") if f.strip()]
        for path in emit_report([result], out_dir, formats):
            console.print(f"Report: {path}")
    return 0


def cmd_report(args: argparse.Namespace) -> int:
    results = find_fold_results(args.results)
    if not results:
        raise ConfigurationError(f"No {METRICS_FILE} files under {args.results}")
    formats = [f.strip() for f in args.formats.split(",") if f.strip()]
    written = emit_report(results, args.out, formats)

    for dim in Dimension:
        dim_results = [r for r in results if r.dimension == dim]
        if not dim_results:
            continue
        table = results_table(dim_results)
        view = Table(title=f"{dim.value} (pooled over {len({r.fold for r in dim_results})} folds)")
        view.add_column("Class")
        modes = [m for m in Mode if any(r.mode == m for r in dim_results)]
        for mode in modes:
            for short in ("prec", "rec", "f1"):
                view.add_column(f"{mode.value} {short}", justify="right")
        for name, row in table.iterrows():
            cells = [f"{row[f'{m.value}.{s}.pooled']:.2f}" for m in modes for s in ("prec", "rec", "f1")]
            view.add_row(str(name), *cells, style="bold" if name == "AVG" else None)
        console.print(view)

    for path in written:
        console.print(f"Report: {path}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="artiphon",
        description="Frame-level articulatory-phonology classification",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--config", type=Path, help="TOML run config")
        p.add_argument("--phoneme-map", type=Path, help="Phoneme → class mapping file")

    dims = [d.value for d in Dimension]

    p = sub.add_parser("synth", help="Generate a synthetic corpus")
    common(p)
    p.add_argument("--out", type=Path, required=True, help="Corpus directory")
    p.add_argument("--seed", type=int)
    p.add_argument("--dimension", choices=dims, help="Histogram dimension (default: all)")
    p.set_defaults(handler=cmd_synth)

    p = sub.add_parser("stats", help="Frames per class of a corpus")
    common(p)
    p.add_argument("--manifest", type=Path, required=True)
    p.add_argument("--dimension", choices=dims, help="Default: all")
    p.set_defaults(handler=cmd_stats)

    p = sub.add_parser("train", help="Train one mode on one fold")
    common(p)
    p.add_argument("--manifest", type=Path, required=True)
    p.add_argument("--dimension", choices=dims, required=True)
    p.add_argument("--mode", choices=[m.value for m in Mode])
    p.add_argument("--fold", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--epochs", type=int)
    p.add_argument("--batch-size", type=int)
    p.add_argument("--lr", type=float)
    p.add_argument("--out", type=Path, help="Runs directory")
    p.add_argument("--audio-weights", type=Path, help="Checkpoint with audio_encoder.* parameters")
    p.set_defaults(handler=cmd_train)

    p = sub.add_parser("eval", help="Score a checkpoint on a fold")
    common(p)
    p.add_argument("--checkpoint", type=Path, required=True)
    p.add_argument("--manifest", type=Path, required=True)
    p.add_argument("--fold", type=int, help="Default: the checkpoint's fold")
    p.add_argument("--split", choices=[Split.TEST.value, Split.VAL.value], default=Split.TEST.value)
    p.add_argument("--report", help="Comma-separated report formats: csv,svg")
    p.add_argument("--out", type=Path, help="Default: the checkpoint's directory")
    p.set_defaults(handler=cmd_eval)

    p = sub.add_parser("report", help="Aggregate per-fold metrics into CSV/SVG reports")
    p.add_argument("--results", type=Path, required=True, help="Directory searched for metrics.json")
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--formats", default="csv,svg")
    p.set_defaults(handler=cmd_report)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)

    setup_logging(settings.log_level, settings.json_logs or settings.is_production)
    set_precision(settings.precision)
    set_debug_numerics(settings.debug_numerics)

    handler: Callable[[argparse.Namespace], int] = args.handler
    logger.info("command_started", command=args.command, **settings.summary())
    try:
        code = handler(args)
    except PydanticValidationError as exc:
        err_console.print(f"[red]Invalid configuration[/red]\n{exc}")
        logger.error("command_failed", command=args.command, error="validation")
        return 2
    except Exception as exc:
        err_console.print_json(data=handle_exception(exc), default=str)
        logger.error("command_failed", command=args.command, error=exc.__class__.__name__)
        return exit_code_for(exc)
    logger.info("command_finished", command=args.command, exit_code=code)
    return code


if __name__ == "__main__":
    sys.exit(main())
