"""Versioned JSON checkpoints.

Layout (all keys at top level)::

    format        "clutterseg-checkpoint"
    version       1
    network       NetworkConfig as a dict
    train         TrainConfig as a dict (or null)
    standardizer  {"mean": [...], "scale": [...], "clamped": [...]}
    manifest      [[name, shape], ...] in parameter order
    params        base64 of the little-endian float64 flat parameter vector
    epoch         completed epochs
    log           per-epoch records
    optimizer     {"t", "m", "v"} with m/v encoded like params (or null)
    extra         free-form metadata (class weights, data split, ...)

Parameters round-trip bit for bit.
"""
from __future__ import annotations

import base64
import json

import numpy as np

from ..errors import CheckpointError
from ..features import Standardizer
from ..io import atomic_write_text
from .config import NetworkConfig, TrainConfig
from .model import Model, flatten, param_manifest, unflatten

FORMAT = "clutterseg-checkpoint"
VERSION = 1


def _encode(arr: np.ndarray) -> str:
    return base64.b64encode(np.ascontiguousarray(arr, dtype="<f8").tobytes()).decode("ascii")


def _decode(text: str) -> np.ndarray:
    return np.frombuffer(base64.b64decode(text), dtype="<f8").astype(np.float64)


def to_dict(model: Model, train_config: TrainConfig | None = None, epoch: int = 0, log=None,
            optimizer=None, extra=None) -> dict:
    cfg = model.config
    opt = None
    if optimizer is not None:
        state = optimizer.state_dict()
        opt = {"t": state["t"], "m": _encode(flatten(state["m"], cfg)), "v": _encode(flatten(state["v"], cfg))}
    return {
        "format": FORMAT,
        "version": VERSION,
        "network": cfg.to_dict(),
        "train": train_config.to_dict() if train_config is not None else None,
        "standardizer": model.standardizer.to_dict(),
        "manifest": [[name, list(shape)] for name, shape in param_manifest(cfg)],
        "params": _encode(flatten(model.params, cfg)),
        "epoch": int(epoch),
        "log": list(log or []),
        "optimizer": opt,
        "extra": dict(extra or {}),
    }


def save(path, model: Model, train_config=None, epoch=0, log=None, optimizer=None, extra=None) -> None:
    atomic_write_text(path, json.dumps(to_dict(model, train_config, epoch, log, optimizer, extra)))


class Checkpoint:
    def __init__(self, model: Model, train_config, epoch, log, optimizer_state, extra):
        self.model = model
        self.train_config = train_config
        self.epoch = epoch
        self.log = log
        self.optimizer_state = optimizer_state
        self.extra = extra


def from_dict(d: dict) -> Checkpoint:
    if d.get("format") != FORMAT:
        raise CheckpointError(f"not a checkpoint (format={d.get('format')!r})")
    if d.get("version") != VERSION:
        raise CheckpointError(f"unsupported checkpoint version {d.get('version')!r}; expected {VERSION}")
    try:
        cfg = NetworkConfig.from_dict(d["network"])
        manifest = [(n, tuple(s)) for n, s in d["manifest"]]
        if manifest != param_manifest(cfg):
            raise CheckpointError("parameter manifest does not match the network config")
        params = unflatten(_decode(d["params"]), cfg)
        model = Model(cfg, params, Standardizer.from_dict(d["standardizer"]))
        train_cfg = TrainConfig.from_dict(d["train"]) if d.get("train") else None
        opt = d.get("optimizer")
        opt_state = None
        if opt:
            opt_state = {"t": opt["t"], "m": unflatten(_decode(opt["m"]), cfg), "v": unflatten(_decode(opt["v"]), cfg)}
    except CheckpointError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise CheckpointError(f"malformed checkpoint: {exc}") from exc
    return Checkpoint(model, train_cfg, int(d.get("epoch", 0)), list(d.get("log", [])), opt_state, dict(d.get("extra", {})))


def load(path) -> Checkpoint:
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise CheckpointError(f"cannot read checkpoint {path}: {exc}") from exc
    return from_dict(data)
