"""Command-line entry point: ``clutterseg <command> ...``.

Commands: synth, relabel, train, eval, bench, plot. Exit codes are 0 on
success, 1 on data/contract errors and 2 on configuration errors. Set
``CLUTTERSEG_LOG`` (DEBUG, INFO, WARNING, ...) to change log verbosity.
"""
from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__, io, synth
from .accum import ACCUM_PRESETS, STRATEGIES, AccumConfig, iter_clouds, upsample
from .core import CLASSES
from .errors import ClutterSegError, ConfigError, DataError
from .relabel import RelabelParams, relabel_dataset

log = logging.getLogger("clutterseg")

STRATEGY_ALIASES = {"old-only": "old_only_random", "queue": "fixed_queue", "nn-postprocess": "nn_postprocess_baseline"}


# ---------------------------------------------------------------------------
# helpers


def _emit(obj, path=None):
    text = json.dumps(obj, indent=2, sort_keys=True) + "\n"
    if path:
        io.atomic_write_text(path, text)
    else:
        sys.stdout.write(text)


def _strategy(name: str) -> str:
    s = STRATEGY_ALIASES.get(name, name.replace("-", "_"))
    if s not in STRATEGIES:
        raise ConfigError("--strategy", f"unknown strategy {name!r}")
    return s


def _seeds(text: str) -> list[int]:
    """``"3"``, ``"1..5"`` or ``"1,2,7"``."""
    try:
        if ".." in text:
            lo, hi = text.split("..")
            out = list(range(int(lo), int(hi) + 1))
        else:
            out = [int(v) for v in text.split(",")]
    except ValueError:
        raise ConfigError("--seeds", f"cannot parse {text!r}") from None
    if not out:
        raise ConfigError("--seeds", "empty seed range")
    return out


def _recording_paths(paths) -> list[Path]:
    out = []
    for p in map(Path, paths):
        if p.is_dir():
            out += sorted(p.glob("*.jsonl"))
        elif p.exists():
            out.append(p)
        else:
            raise DataError(f"no such file or directory: {p}")
    if not out:
        raise DataError("no recordings found")
    return out


def _accum_config(args, default_variant="b") -> AccumConfig:
    variant = (getattr(args, "variant", None) or default_variant).lower()
    base = ACCUM_PRESETS["variant_a" if variant == "a" else "variant_b"]
    window = base.window if args.window_ms is None else args.window_ms / 1000.0
    points = base.target_points if args.points is None else args.points
    strategy = base.strategy if args.strategy is None else _strategy(args.strategy)
    return AccumConfig(window, points, strategy)


def _network_config(args, n_points):
    from .net.config import NETWORK_PRESETS

    name = args.net or ("a" if args.variant.lower() == "a" else "b")
    if name not in NETWORK_PRESETS:
        raise ConfigError("--net", f"unknown network {name!r}; choose from {', '.join(NETWORK_PRESETS)}")
    factory = NETWORK_PRESETS[name]
    return factory() if name == "tiny-b" else factory(n_points)


def _load_samples(paths, accum, seed):
    from .net.train import samples_from_recording

    samples = []
    for i, p in enumerate(paths):
        rec = io.read(p)
        samples += samples_from_recording(rec.scans, rec.mounts, accum, seed=seed, recording=i, relabel=None)
    return samples


def _split(samples, n_recordings, val_fraction, split_seed):
    from .net.train import split_recordings

    if n_recordings < 2:
        return samples, samples
    tr, va = split_recordings(n_recordings, val_fraction, split_seed)
    tr, va = set(tr.tolist()), set(va.tolist())
    return [s for s in samples if s.recording in tr], [s for s in samples if s.recording in va]


def _seed_path(path: Path, seed: int, multi: bool) -> Path:
    return path.with_name(f"{path.stem}-seed{seed}{path.suffix}") if multi else path


# ---------------------------------------------------------------------------
# commands


def cmd_synth(args):
    if args.config:
        base = synth.load_config(args.config)
        make = lambda i: dataclasses.replace(base, seed=args.seed + i)  # noqa: E731
    else:
        name = args.preset or "default"
        if name not in synth.PRESETS:
            raise ConfigError("--preset", f"unknown preset {name!r}; choose from {', '.join(synth.PRESETS)}")
        make = lambda i: synth.preset(name, variant=args.seed + i)  # noqa: E731
    if args.recordings < 1:
        raise ConfigError("--recordings", "must be >= 1")
    out = Path(args.out)
    multi = args.recordings > 1
    summary = {"recordings": [], "scans": 0, "detections": 0, "true_source": {}}
    for i in range(args.recordings):
        cfg = make(i)
        scans = synth.generate_recording(cfg)
        meta = {"generator": "clutterseg.synth", "version": __version__, "seed": cfg.seed,
                "config": synth.config_to_dict(cfg)}
        path = out / f"rec_{i:04d}.jsonl" if multi else out
        io.write(path, io.RecordingFile(cfg.mounts, scans, meta))
        tally = synth.source_tally(scans)
        n_det = sum(len(s) for s in scans)
        summary["recordings"].append({"path": str(path), "scans": len(scans), "detections": n_det})
        summary["scans"] += len(scans)
        summary["detections"] += n_det
        for k, v in tally.items():
            summary["true_source"][k] = summary["true_source"].get(k, 0) + v
    _emit(summary)
    return 0


def _parse_az_tol(text):
    try:
        lo, hi = (float(v) for v in text.split(":"))
    except ValueError:
        raise ConfigError("--az-tol", f"expected MIN:MAX, got {text!r}") from None
    return lo, hi


def cmd_relabel(args):
    lo, hi = _parse_az_tol(args.az_tol)
    params = RelabelParams(range_tol=args.range_tol, az_tol_min=lo, az_tol_max=hi, v_threshold=args.v_thresh)
    rec = io.read(args.inp)
    scans, dist = relabel_dataset(rec.scans, params)
    rec.scans = scans
    io.write(args.out, rec)
    counts = {c.value: 0 for c in CLASSES}
    for s in scans:
        for d in s.detections:
            counts[d.label.value] += 1
    report = {
        "distribution": dist,
        "percent": {k: 100.0 * v for k, v in dist.items()},
        "counts": counts,
        "total": sum(counts.values()),
        "params": dataclasses.asdict(params),
    }
    if args.report:
        _emit(report, args.report)
    _emit({"out": args.out, **report})
    return 0


def cmd_train(args):
    from .net.config import TrainConfig
    from .net.train import evaluate, train

    paths = _recording_paths(args.data)
    accum = _accum_config(args)
    net = _network_config(args, accum.target_points)
    samples = _load_samples(paths, accum, args.data_seed)
    tr, va = _split(samples, len(paths), args.val_fraction, args.data_seed)
    seeds = _seeds(args.seeds) if args.seeds else [args.seed]
    model_path = Path(args.model)
    multi = len(seeds) > 1
    per_seed = []
    for seed in seeds:
        tc = TrainConfig(epochs=args.epochs, batch_size=args.batch_size, seed=seed, gamma=args.gamma)
        extra = {
            "data": [str(p) for p in paths],
            "data_seed": args.data_seed,
            "val_fraction": args.val_fraction,
            "accum": dataclasses.asdict(accum),
        }
        resume = args.resume if args.resume else None
        result = train(tr, va, net, tc, checkpoint_path=_seed_path(model_path, seed, multi), resume=resume, extra=extra)
        rep = evaluate(result.model, va)
        per_seed.append({"seed": seed, "model": str(_seed_path(model_path, seed, multi)), "log": result.log,
                         "val": rep.to_dict()})
    mean = float(np.mean([r["val"]["mean_f1"] for r in per_seed]))
    report = {"per_seed": per_seed, "mean_f1": mean,
              "mean_per_class_f1": {c.value: float(np.mean([r["val"]["per_class"][c.value]["f1"] for r in per_seed]))
                                    for c in CLASSES}}
    _emit(report, args.report)
    if args.report:
        _emit({"mean_f1": mean, "seeds": seeds, "report": args.report})
    return 0


def cmd_eval(args):
    from .net import checkpoint as ckpt
    from .net.train import evaluate

    state = ckpt.load(args.model)
    extra = state.extra
    paths = _recording_paths(args.data) if args.data else [Path(p) for p in extra.get("data", [])]
    if not paths:
        raise DataError("no evaluation data: pass --data")
    stored = AccumConfig(**extra["accum"]) if "accum" in extra else ACCUM_PRESETS["variant_b"]
    accum = AccumConfig(
        stored.window if args.window_ms is None else args.window_ms / 1000.0,
        stored.target_points if args.points is None else args.points,
        stored.strategy if args.strategy is None else _strategy(args.strategy),
    )
    if accum.target_points != state.model.config.n_points:
        raise ConfigError("--points", f"model expects {state.model.config.n_points} points")
    data_seed = extra.get("data_seed", 0)
    samples = _load_samples(paths, accum, data_seed)
    if args.split == "all":
        chosen = samples
    else:
        tr, va = _split(samples, len(paths), extra.get("val_fraction", 0.2), data_seed)
        chosen = va if args.split == "val" else tr
    rep = evaluate(state.model, chosen)
    rep.extra["strategy"] = accum.strategy
    rep.extra["split"] = args.split
    _emit(rep.to_dict(), args.report)
    if args.csv:
        io.atomic_write_text(args.csv, rep.confusion_csv())
    if args.report:
        _emit({"mean_f1": rep.mean_f1, "report": args.report})
    return 0


def cmd_bench(args):
    from .eval import bench
    from .features import apply, assemble
    from .net import checkpoint as ckpt
    from .net.model import Model, forward

    accum = _accum_config(args)
    if args.model:
        model = ckpt.load(args.model).model
    else:
        model = Model.create(_network_config(args, accum.target_points), seed=args.seed)
    paths = _recording_paths(args.data)
    rng = np.random.default_rng(args.seed)

    def stream():
        for p in paths:
            rec = io.read(p)
            yield from iter_clouds(rec.scans, rec.mounts, accum, seed=args.seed)

    def run(pc):
        cloud = pc.cloud
        feats = apply(model.standardizer, assemble(cloud))
        pos = np.stack([cloud["x"], cloud["y"]], axis=1)
        forward(model, feats, pos, rng=rng, check_size=False)
        return len(cloud)

    res = bench(run, stream(), warmup=args.warmup)
    out = {"strategy": accum.strategy, "target_points": accum.target_points, **res.to_dict()}
    _emit(out, args.report)
    if args.report:
        _emit({"mean_ms": res.mean_ms, "var_ms2": res.var_ms2, "report": args.report})
    return 0


def cmd_plot(args):
    from . import plot

    rec = io.read(args.inp)
    mounts = rec.mount_map()
    latest = next((s for s in rec.scans if s.scan_id == args.scan_id), None)
    if latest is None:
        raise DataError(f"unknown scan id {args.scan_id}")
    accum = AccumConfig(args.window_ms / 1000.0, max(len(latest), 1), "none")
    scans = [s for s in rec.scans if s.timestamp <= latest.timestamp]
    cloud = None
    for pc in iter_clouds(scans, mounts, accum, pad=False):
        if pc.latest_scan_id == latest.scan_id:
            cloud = pc.cloud
    if args.mode == "labels":
        sensors = {sid: (m.x, m.y) for sid, m in mounts.items()}
        svg = plot.render_labels(cloud, sensors, title=f"scan {latest.scan_id}")
    else:
        if not args.model:
            raise ConfigError("--model", "confusion mode needs a trained model")
        from .features import apply, assemble
        from .net import checkpoint as ckpt
        from .net.model import forward

        model = ckpt.load(args.model).model
        if len(cloud) == 0:
            pred = np.zeros(0, dtype=np.int64)
        else:
            n = len(cloud)
            padded = upsample(cloud, max(n, model.config.n_points), seed=0)
            feats = apply(model.standardizer, assemble(padded))
            pos = np.stack([padded["x"], padded["y"]], axis=1)
            logits = forward(model, feats, pos, rng=np.random.default_rng(0), check_size=False)
            pred = logits[0].argmax(axis=1)[:n]
        svg = plot.render_confusion(cloud, pred, title=f"scan {latest.scan_id}")
    io.atomic_write_text(args.out, svg)
    return 0


# ---------------------------------------------------------------------------
# parser


def _add_pipeline_args(p, with_model_out=False):
    p.add_argument("--variant", default="b", choices=["a", "b", "A", "B"], help="network/accumulation variant")
    p.add_argument("--net", default=None, help="network preset (a, b, b-small, tiny-b); default from --variant")
    p.add_argument("--window-ms", type=float, default=None, help="accumulation window")
    p.add_argument("--points", type=int, default=None, help="points per processed cloud")
    p.add_argument("--strategy", default=None, help=f"resampling strategy: {', '.join(STRATEGIES)}")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--report", default=None, help="write the JSON report here (default: stdout)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="clutterseg", description=__doc__.split("\n")[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate synthetic recordings")
    p.add_argument("config", nargs="?", help="scenario config (TOML)")
    p.add_argument("--preset", default=None, help=f"one of {', '.join(synth.PRESETS)}")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--recordings", type=int, default=1, help="number of recordings (>1 writes a directory)")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("relabel", help="generate moving/clutter/stationary labels")
    p.add_argument("--in", dest="inp", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--range-tol", type=float, default=RelabelParams.range_tol)
    p.add_argument("--az-tol", default=f"{RelabelParams.az_tol_min:g}:{RelabelParams.az_tol_max:g}")
    p.add_argument("--v-thresh", type=float, default=RelabelParams.v_threshold)
    p.add_argument("--report", default=None, help="class-distribution JSON")
    p.set_defaults(func=cmd_relabel)

    p = sub.add_parser("train", help="train a segmentation network")
    p.add_argument("--data", nargs="+", required=True, help="labeled recordings or directories")
    _add_pipeline_args(p)
    p.add_argument("--seeds", default=None, help="seed range such as 1..5")
    p.add_argument("--epochs", type=int, default=20)
    p.add_argument("--batch-size", type=int, default=8)
    p.add_argument("--gamma", type=float, default=2.0)
    p.add_argument("--val-fraction", type=float, default=0.2)
    p.add_argument("--data-seed", type=int, default=0, help="seed for resampling and the train/val split")
    p.add_argument("--model", required=True, help="checkpoint path")
    p.add_argument("--resume", default=None, help="continue from this checkpoint")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="evaluate a checkpoint")
    p.add_argument("--data", nargs="*", default=None)
    _add_pipeline_args(p)
    p.add_argument("--model", required=True)
    p.add_argument("--split", choices=["val", "train", "all"], default="val")
    p.add_argument("--csv", default=None, help="confusion matrix CSV")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("bench", help="time resampling plus forward pass")
    p.add_argument("--data", nargs="+", required=True)
    _add_pipeline_args(p)
    p.add_argument("--model", default=None, help="checkpoint (default: untrained network)")
    p.add_argument("--warmup", type=int, default=3)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("plot", help="SVG of one scan")
    p.add_argument("--in", dest="inp", required=True)
    p.add_argument("--scan-id", type=int, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--mode", choices=["labels", "confusion"], default="labels")
    p.add_argument("--window-ms", type=float, default=0.0)
    p.add_argument("--model", default=None)
    p.set_defaults(func=cmd_plot)
    return parser


def main(argv=None) -> int:
    logging.basicConfig(
        level=os.environ.get("CLUTTERSEG_LOG", "WARNING").upper(),
        format="%(levelname)s %(name)s: %(message)s",
    )
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ClutterSegError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
