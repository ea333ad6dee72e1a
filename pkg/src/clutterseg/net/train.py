"""Dataset assembly, training loop and evaluation for the segmentation networks."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from ..accum import AccumConfig, iter_clouds
from ..core import CLASSES, Scan
from ..errors import ContractError, TrainingError
from ..eval import EvalReport, confusion, nn_postprocess
from ..features import Standardizer, apply, assemble, fit
from ..relabel import RelabelParams, relabel_dataset
from . import checkpoint as ckpt
from .config import NetworkConfig, TrainConfig
from .loss import class_weights, cyclical_lr
from .model import Model, forward, loss_and_grad, make_plan
from .optim import Adam

log = logging.getLogger(__name__)


@dataclass
class Sample:
    """One processed cloud ready for the network."""

    feats: np.ndarray  # raw feature matrix (N, 11)
    pos: np.ndarray  # metric (x, y), (N, 2)
    labels: np.ndarray  # class index, -1 when unlabeled
    replica: np.ndarray
    latest: np.ndarray  # dt == 0
    recording: int = 0
    scan_id: int = 0
    # latest-scan points dropped by downsampling (evaluated via label copying)
    removed_pos: np.ndarray = field(default_factory=lambda: np.zeros((0, 2)))
    removed_labels: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    covered: bool = True
    raw_size: int = 0

    @property
    def loss_mask(self):
        return ~self.replica & (self.labels >= 0)

    @property
    def eval_mask(self):
        return self.latest & ~self.replica


def samples_from_recording(scans: Sequence[Scan], mounts, accum: AccumConfig, seed: int = 0,
                           recording: int = 0, relabel: RelabelParams | None = RelabelParams()) -> list[Sample]:
    """Relabel (unless ``relabel`` is None), accumulate/resample and assemble features."""
    if relabel is not None:
        scans, _dist = relabel_dataset(list(scans), relabel)
    out = []
    for pc in iter_clouds(scans, mounts, accum, seed=seed):
        c = pc.cloud
        if len(c) == 0:
            log.debug("skipping empty cloud at scan %d", pc.latest_scan_id)
            continue
        rem = pc.removed[(pc.removed["dt"] == 0) & (pc.removed["label"] >= 0)]
        out.append(
            Sample(
                feats=assemble(c),
                pos=np.stack([c["x"], c["y"]], axis=1).astype(float),
                labels=c["label"].astype(np.int64),
                replica=c["is_replica"].copy(),
                latest=c["dt"] == 0,
                recording=recording,
                scan_id=pc.latest_scan_id,
                removed_pos=np.stack([rem["x"], rem["y"]], axis=1).astype(float),
                removed_labels=rem["label"].astype(np.int64),
                covered=pc.latest_covered,
                raw_size=pc.raw_size,
            )
        )
    return out


def split_recordings(n: int, val_fraction: float = 0.2, seed: int = 0) -> tuple[np.ndarray, np.ndarray]:
    """Held-out split by recording index."""
    if not 0 < val_fraction < 1:
        raise ContractError("val_fraction must be in (0, 1)")
    order = np.random.default_rng([seed, 0xDA7A]).permutation(n)
    n_val = max(1, int(round(n * val_fraction)))
    return np.sort(order[n_val:]), np.sort(order[:n_val])


def fit_standardizer(samples: Sequence[Sample]) -> Standardizer:
    return fit([s.feats for s in samples], [s.replica for s in samples])


def label_frequencies(samples: Sequence[Sample]) -> np.ndarray:
    counts = np.zeros(len(CLASSES))
    for s in samples:
        lab = s.labels[s.loss_mask]
        counts += np.bincount(lab, minlength=len(CLASSES))[: len(CLASSES)]
    if counts.sum() == 0:
        raise ContractError("no labeled points")
    return counts / counts.sum()


def derive_class_weights(samples: Sequence[Sample], w_stationary: float = 0.6) -> tuple[float, float, float]:
    f = label_frequencies(samples)
    w_o, w_c = class_weights(*f, w_stationary=w_stationary)
    return (w_o, w_c, w_stationary)


def _stack(samples, std):
    feats = np.stack([apply(std, s.feats) for s in samples])
    pos = np.stack([s.pos for s in samples])
    labels = np.stack([np.maximum(s.labels, 0) for s in samples])
    mask = np.stack([s.loss_mask for s in samples])
    return feats, pos, labels, mask


def evaluate(model: Model, samples: Sequence[Sample], seed: int = 0, batch_size: int = 16) -> EvalReport:
    """Confusion over the latest-scan, non-replica points of every sample.

    Latest-scan points removed by downsampling get the prediction of their
    nearest surviving point and are counted too.
    """
    conf = np.zeros((3, 3), dtype=np.int64)
    for start in range(0, len(samples), batch_size):
        chunk = samples[start : start + batch_size]
        feats, pos, _labels, _mask = _stack(chunk, model.standardizer)
        plan = make_plan(model.config, pos, rng=np.random.default_rng([seed, 0xE7A1, start]))
        logits = forward(model, feats, plan=plan)
        pred = logits.argmax(axis=2)
        for i, s in enumerate(chunk):
            m = s.eval_mask & (s.labels >= 0)
            conf += confusion(pred[i], np.maximum(s.labels, 0), m)
            if len(s.removed_labels):
                keep = ~s.replica
                copied = nn_postprocess(s.pos[keep], pred[i][keep], s.removed_pos, model.standardizer.xy_scale)
                conf += confusion(copied, s.removed_labels)
    return EvalReport.from_confusion(
        conf, n_clouds=len(samples), latest_scan_coverage=bool(all(s.covered for s in samples))
    )


def majority_report(train: Sequence[Sample], test: Sequence[Sample]) -> EvalReport:
    """Scores of always predicting the most frequent training class."""
    major = int(np.argmax(label_frequencies(train)))
    conf = np.zeros((3, 3), dtype=np.int64)
    for s in test:
        m = s.eval_mask & (s.labels >= 0)
        conf += confusion(np.full(len(s.labels), major), np.maximum(s.labels, 0), m)
    return EvalReport.from_confusion(conf, n_clouds=len(test))


def default_half_cycle(epochs: int, steps_per_epoch: int) -> int:
    """About two epochs, stretched so the run spans an even number of half-cycles.

    The schedule then ends at ``lr_min`` instead of on a crest.
    """
    total = max(epochs * steps_per_epoch, 1)
    nominal = 2 * steps_per_epoch
    n_half = max(2, 2 * round(total / (2 * nominal)))
    return max(1, math.ceil(total / n_half))


@dataclass
class TrainResult:
    model: Model
    log: list[dict] = field(default_factory=list)
    class_weights: tuple[float, float, float] = (1.0, 1.0, 1.0)


def train(
    train_samples: Sequence[Sample],
    val_samples: Sequence[Sample],
    net_config: NetworkConfig,
    train_config: TrainConfig,
    checkpoint_path=None,
    resume=None,
    on_epoch: Callable[[dict], None] | None = None,
    extra: dict | None = None,
) -> TrainResult:
    """Train with Adam, focal loss and a cyclical learning rate.

    The standardizer is fitted on ``train_samples`` only. When ``resume`` is
    a checkpoint path, parameters, optimizer state, standardizer and log are
    restored and training continues at the next epoch. A checkpoint is
    written after every epoch when ``checkpoint_path`` is set.
    """
    if not train_samples:
        raise ContractError("empty training set")
    tc = train_config
    if resume is not None:
        state = ckpt.load(resume)
        if state.model.config != net_config:
            raise ContractError("checkpoint network config differs from the requested one")
        model = state.model
        opt = Adam(model.params, tc.adam_betas, tc.adam_eps)
        if state.optimizer_state is not None:
            opt.load_state_dict(state.optimizer_state)
        start_epoch = state.epoch
        history = list(state.log)
    else:
        model = Model.create(net_config, seed=tc.seed, standardizer=fit_standardizer(train_samples))
        opt = Adam(model.params, tc.adam_betas, tc.adam_eps)
        start_epoch = 0
        history = []
    weights = tc.class_weights or derive_class_weights(train_samples, tc.w_stationary)
    n = len(train_samples)
    steps_per_epoch = math.ceil(n / tc.batch_size)
    half_cycle = tc.half_cycle or default_half_cycle(tc.epochs, steps_per_epoch)
    meta = {"class_weights": list(weights), "half_cycle": half_cycle, **(extra or {})}

    for epoch in range(start_epoch, tc.epochs):
        order = np.random.default_rng([tc.seed, epoch]).permutation(n)
        losses, lrs = [], []
        for step in range(steps_per_epoch):
            idx = order[step * tc.batch_size : (step + 1) * tc.batch_size]
            feats, pos, labels, mask = _stack([train_samples[i] for i in idx], model.standardizer)
            plan = make_plan(net_config, pos, rng=np.random.default_rng([tc.seed, epoch, step]))
            loss, grads = loss_and_grad(model, feats, labels, weights, tc.gamma, plan, mask=mask)
            for name, g in grads.items():
                if not np.all(np.isfinite(g)):
                    log.error("non-finite gradient in %s at epoch %d step %d", name, epoch + 1, step)
                    raise TrainingError(f"non-finite gradient for parameter {name}")
            lr = cyclical_lr(epoch * steps_per_epoch + step, tc.lr_min, tc.lr_max, half_cycle)
            opt.step(model.params, grads, lr)
            losses.append(loss)
            lrs.append(lr)
        record = {
            "epoch": epoch + 1,
            "train_loss": float(np.mean(losses)),
            "lr_min": float(min(lrs)),
            "lr_max": float(max(lrs)),
        }
        if val_samples:
            rep = evaluate(model, val_samples)
            record["val_mean_f1"] = rep.mean_f1
            record["val_f1"] = rep.scores.f1.tolist()
        history.append(record)
        log.info("epoch %d: loss %.5f%s", record["epoch"], record["train_loss"],
                 f", val mean F1 {record['val_mean_f1']:.4f}" if "val_mean_f1" in record else "")
        if checkpoint_path is not None:
            ckpt.save(checkpoint_path, model, tc, epoch + 1, history, opt, meta)
        if on_epoch is not None:
            on_epoch(record)
    if checkpoint_path is not None and start_epoch >= tc.epochs:
        # nothing to train; still leave a loadable checkpoint behind
        ckpt.save(checkpoint_path, model, tc, start_epoch, history, opt, meta)
    return TrainResult(model, history, tuple(weights))
