"""
Deterministic training loop.

One call trains one (fold, mode, dimension) combination:

1. build unmasked training examples and validation examples for the fold
2. shuffle the training set per epoch with a generator keyed by
   (seed, epoch) and step through fixed-size batches
3. after every epoch, score macro-F1 on the validation split
4. write per-step and per-epoch histories plus best and final checkpoints

Identical inputs and seed give byte-identical histories and checkpoints.
"""

import hashlib
import json
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from artiphon.core.exceptions import CorpusIOError, EmptyBatchError, NonFiniteLossError
from artiphon.core.logging import LoggerAdapter, get_logger
from artiphon.core.utils.decorators import timer
from artiphon.features.alignment import AlignmentConfig, ExampleSet, build_example_set
from artiphon.features.encoders import AudioConfig, VitConfig
from artiphon.features.evaluation.inference import predict_examples
from artiphon.features.evaluation.metrics import summarize
from artiphon.features.model import ClassifierModel, ModeConfig, import_audio_weights, total_loss
from artiphon.features.training.folds import Fold, FoldPolicy, Split, make_folds
from artiphon.features.training.optimizer import AdamW
from artiphon.platform.phonology import PhonemeMap, default_phoneme_map, n_classes
from artiphon.platform.storage_layer import Checkpoint, Manifest, save_checkpoint
from artiphon.platform.tensor import Tape
from artiphon.platform.tensor.nn import dropout_stream

logger = get_logger(__name__)

HISTORY_FILE = "history.jsonl"
EPOCHS_FILE = "epochs.jsonl"
BEST_CHECKPOINT = "best.acck"
FINAL_CHECKPOINT = "final.acck"


class TrainConfig(BaseModel):
    """Optimisation and protocol settings."""

    model_config = ConfigDict(extra="forbid")

    epochs: int = Field(default=5, ge=1)
    batch_size: int = Field(default=16, ge=1)
    eval_batch_size: int = Field(default=64, ge=1)
    lr: float = Field(default=1e-4, gt=0.0)
    weight_decay: float = Field(default=5e-4, ge=0.0)
    seed: int = Field(default=0, ge=0)
    fold: int = Field(default=0, ge=0)
    k: int = Field(default=5, ge=1)
    fold_policy: FoldPolicy = FoldPolicy.DISJOINT
    patience: Optional[int] = Field(default=None, ge=1, description="Epochs without val improvement before stopping")


class StepRecord(BaseModel):
    model_config = ConfigDict(frozen=True)

    step: int
    epoch: int
    loss: float
    loss_cls: float
    loss_cos: float
    lr: float


class EpochRecord(BaseModel):
    model_config = ConfigDict(frozen=True)

    epoch: int
    steps: int
    mean_loss: float
    mean_loss_cls: float
    mean_loss_cos: float
    val_macro_f1: float


class TrainResult(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    model: ClassifierModel
    history: List[StepRecord]
    epochs: List[EpochRecord]
    best_epoch: int
    best_checkpoint: Path
    final_checkpoint: Path


def configs_digest(**configs: Union[BaseModel, str]) -> str:
    """SHA-256 over the canonical JSON of the given configs; strings (digests) go in as-is."""
    payload = {
        name: config if isinstance(config, str) else config.model_dump(mode="json")
        for name, config in sorted(configs.items())
    }
    blob = json.dumps(payload, sort_keys=True, separators=(",", ":")).encode("utf-8")
    return hashlib.sha256(blob).hexdigest()


def _write_jsonl(path: Path, records: List[BaseModel]) -> None:
    lines = [json.dumps(r.model_dump(mode="json"), sort_keys=True, separators=(",", ":")) for r in records]
    try:
        path.write_text("".join(line + "\n" for line in lines), encoding="utf-8")
    except OSError as exc:
        raise CorpusIOError(f"Cannot write {path}", details={"error": str(exc)}) from exc


def _batches(n: int, batch_size: int, rng: np.random.Generator) -> List[np.ndarray]:
    order = rng.permutation(n)
    batches = [order[i : i + batch_size] for i in range(0, n, batch_size)]
    if batches and len(batches[-1]) < 2:
        batches.pop()
    return batches


def _dump_batch(out_dir: Path, step: int, batch: ExampleSet) -> Path:
    path = out_dir / f"nonfinite_step{step:06d}.npz"
    arrays: Dict[str, Any] = {
        "frames": batch.frames,
        "labels": batch.labels,
        "frame_indices": batch.frame_indices,
        "utterance_ids": np.array(batch.utterance_ids),
    }
    if batch.windows is not None:
        arrays["windows"] = batch.windows
    try:
        np.savez(path, **arrays)
    except OSError as exc:
        raise CorpusIOError(f"Cannot write batch dump {path}", details={"error": str(exc)}) from exc
    return path


def _validation_f1(model: ClassifierModel, examples: ExampleSet, batch_size: int) -> float:
    if len(examples) == 0 or examples.masked.all():
        return 0.0
    preds = predict_examples(model, examples, batch_size)
    return summarize(preds, examples.labels, ~examples.masked, model.n_classes).macro.f1


@timer
def train(
    manifest: Manifest,
    mode_config: ModeConfig,
    train_config: Optional[TrainConfig] = None,
    out_dir: Union[str, Path] = "runs",
    alignment_config: Optional[AlignmentConfig] = None,
    vit_config: Optional[VitConfig] = None,
    audio_config: Optional[AudioConfig] = None,
    fold: Optional[Fold] = None,
    phoneme_map: Optional[PhonemeMap] = None,
    audio_weights: Optional[Checkpoint] = None,
    config_hash: Optional[str] = None,
) -> TrainResult:
    """
    Train one mode on one fold.

    Args:
        manifest: Corpus
        mode_config: Mode and dimension (dimension required)
        train_config: Optimisation and protocol settings
        out_dir: Receives history, epoch records and checkpoints
        alignment_config: Example preprocessing
        vit_config: Image encoder settings
        audio_config: Speech encoder settings
        fold: Explicit fold; default is ``train_config.fold`` of a plan
            built from the manifest's speakers
        phoneme_map: Phoneme → class mapping
        audio_weights: Checkpoint whose ``audio_encoder.*`` parameters
            initialise the speech encoder
        config_hash: Run identity stored in checkpoints; derived from the
            configs when omitted

    Returns:
        The trained model (final weights) with histories and checkpoint paths

    Raises:
        EmptyBatchError: The training split yields fewer than two frames
        NonFiniteLossError: A step produced NaN or Inf; the batch is dumped
    """
    train_config = train_config or TrainConfig()
    alignment_config = alignment_config or AlignmentConfig()
    vit_config = vit_config or VitConfig()
    audio_config = audio_config or AudioConfig()
    phoneme_map = phoneme_map if phoneme_map is not None else default_phoneme_map()
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    if config_hash is None:
        config_hash = configs_digest(
            phoneme_map=phoneme_map.digest(),
            mode=mode_config,
            train=train_config,
            alignment=alignment_config,
            vit=vit_config,
            audio=audio_config,
        )
    if fold is None:
        plan = make_folds(manifest.speakers(), train_config.k, train_config.seed, train_config.fold_policy)
        fold = plan.fold(train_config.fold)

    dim = mode_config.dimension
    log = LoggerAdapter(logger, run=config_hash[:8], fold=fold.index, mode=mode_config.mode.value)

    train_set = build_example_set(
        fold.utterances(manifest, Split.TRAIN),
        dim,
        alignment_config,
        phoneme_map,
        load_audio=mode_config.needs_audio_for_training,
        manifest_digest=manifest.digest,
    ).unmasked()
    val_set = build_example_set(
        fold.utterances(manifest, Split.VAL),
        dim,
        alignment_config,
        phoneme_map,
        load_audio=mode_config.needs_audio_for_inference,
        manifest_digest=manifest.digest,
    )
    if len(train_set) < 2:
        raise EmptyBatchError("Training split has fewer than two labelled frames", details={"fold": fold.index})

    C = n_classes(dim)
    counts = train_set.class_counts(C)
    model = ClassifierModel(
        mode_config,
        vit_config,
        audio_config,
        alignment_config.window_length,
        np.random.default_rng(train_config.seed),
        class_frequencies=counts / counts.sum(),
    )
    if audio_weights is not None:
        import_audio_weights(model, audio_weights)

    optimizer = AdamW(model.parameters(), lr=train_config.lr, weight_decay=train_config.weight_decay)
    windows_for_training = mode_config.needs_audio_for_training
    log.info(
        "training_started",
        dimension=dim.value,
        train_frames=len(train_set),
        val_frames=len(val_set),
        class_counts=counts.tolist(),
    )

    history: List[StepRecord] = []
    epochs: List[EpochRecord] = []
    best_f1, best_epoch, best_state = -1.0, 0, model.state_dict()
    stale = 0
    step = 0

    for epoch in range(1, train_config.epochs + 1):
        model.train()
        epoch_records: List[StepRecord] = []
        for index in _batches(len(train_set), train_config.batch_size, np.random.default_rng([train_config.seed, epoch])):
            step += 1
            batch = train_set.select(index)
            optimizer.zero_grad()
            with Tape() as tape, dropout_stream(train_config.seed, step):
                out = model(batch.frames, batch.windows if windows_for_training else None)
                loss = total_loss(
                    out.logits,
                    batch.labels,
                    ~batch.masked,
                    model.class_weight_vector(),
                    out.img,
                    out.aud,
                    mode_config.contrastive_weight,
                    mode_config.negatives,
                    mode_config.margin,
                )

            value = loss.total.item()
            if not np.isfinite(value):
                dump = _dump_batch(out_dir, step, batch)
                log.error("non_finite_loss", step=step, epoch=epoch, loss=value, dump=str(dump))
                raise NonFiniteLossError(step, str(dump), details={"epoch": epoch})

            tape.backward(loss.total)
            optimizer.step()
            record = StepRecord(
                step=step,
                epoch=epoch,
                loss=value,
                loss_cls=loss.loss_cls,
                loss_cos=loss.loss_cos,
                lr=train_config.lr,
            )
            epoch_records.append(record)
            log.debug("train_step", step=step, loss=round(value, 6))

        history.extend(epoch_records)
        val_f1 = _validation_f1(model, val_set, train_config.eval_batch_size)
        summary = EpochRecord(
            epoch=epoch,
            steps=len(epoch_records),
            mean_loss=float(np.mean([r.loss for r in epoch_records])) if epoch_records else float("nan"),
            mean_loss_cls=float(np.mean([r.loss_cls for r in epoch_records])) if epoch_records else float("nan"),
            mean_loss_cos=float(np.mean([r.loss_cos for r in epoch_records])) if epoch_records else float("nan"),
            val_macro_f1=val_f1,
        )
        epochs.append(summary)
        log.info(
            "epoch_complete",
            epoch=epoch,
            steps=summary.steps,
            mean_loss=round(summary.mean_loss, 6),
            val_macro_f1=round(val_f1, 4),
        )

        if val_f1 > best_f1:
            best_f1, best_epoch, best_state = val_f1, epoch, model.state_dict()
            stale = 0
        else:
            stale += 1
        if train_config.patience is not None and stale >= train_config.patience:
            log.info("early_stopping", epoch=epoch, best_epoch=best_epoch, patience=train_config.patience)
            break

    metadata = model.metadata()
    metadata.update(
        fold=fold.index,
        seed=train_config.seed,
        k=train_config.k,
        fold_policy=train_config.fold_policy.value,
        phoneme_map=phoneme_map.digest(),
        alignment_config=alignment_config.model_dump(mode="json", exclude={"cache_dir"}),
    )
    best_path = save_checkpoint(
        out_dir / BEST_CHECKPOINT,
        Checkpoint(config_hash=config_hash, metadata={**metadata, "epoch": best_epoch, "kind": "best"}, params=best_state),
    )
    final_path = save_checkpoint(
        out_dir / FINAL_CHECKPOINT,
        Checkpoint(
            config_hash=config_hash,
            metadata={**metadata, "epoch": len(epochs), "kind": "final"},
            params=model.state_dict(),
        ),
    )
    _write_jsonl(out_dir / HISTORY_FILE, history)
    _write_jsonl(out_dir / EPOCHS_FILE, epochs)
    log.info("training_complete", epochs=len(epochs), best_epoch=best_epoch, best_val_macro_f1=round(best_f1, 4))

    return TrainResult(
        model=model,
        history=history,
        epochs=epochs,
        best_epoch=best_epoch,
        best_checkpoint=best_path,
        final_checkpoint=final_path,
    )


def read_history(path: Union[str, Path]) -> List[StepRecord]:
    """Parse a history.jsonl file."""
    path = Path(path)
    try:
        lines = path.read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise CorpusIOError(f"Cannot read {path}", details={"error": str(exc)}) from exc
    return [StepRecord.model_validate_json(line) for line in lines if line.strip()]
