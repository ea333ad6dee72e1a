"""Scan accumulation, resampling and the fixed-capacity point queue.

Clouds are numpy structured arrays with dtype :data:`CLOUD_DTYPE`. Each point
keeps its position in the vehicle frame of its own scan (``sx``, ``sy``) and
the ego pose of that scan, so a cloud can be re-aligned to any later scan.
``x``, ``y`` and ``dt`` are relative to the latest scan of the cloud.
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from typing import Iterator, Mapping, Sequence

import numpy as np

from .core import CLASS_INDEX, SOURCE_INDEX, BACKGROUND, Label, Scan, SensorMount, to_vehicle_frame
from .errors import ConfigError, ContractError, DataError, InfeasibleError, OrderingError

CLOUD_DTYPE = np.dtype(
    [
        ("x", "f8"),
        ("y", "f8"),
        ("dt", "f8"),
        ("sx", "f8"),
        ("sy", "f8"),
        ("pose_x", "f8"),
        ("pose_y", "f8"),
        ("pose_yaw", "f8"),
        ("t_us", "i8"),
        ("range", "f8"),
        ("azimuth", "f8"),
        ("v_rel", "f8"),
        ("v_comp", "f8"),
        ("v_comp_true", "f8"),
        ("rcs", "f8"),
        ("sensor_id", "i1"),
        ("scan_id", "i8"),
        ("annotated", "?"),
        ("label", "i1"),  # index into core.CLASSES, -1 when unlabeled
        ("source", "i1"),  # index into core.SOURCES
        ("is_replica", "?"),
    ]
)

STRATEGIES = ("none", "random", "lowest_rcs", "old_only_random", "fixed_queue", "nn_postprocess_baseline")


@dataclass(frozen=True)
class AccumConfig:
    window: float = 0.3  # seconds
    target_points: int = 1280
    strategy: str = "old_only_random"

    def __post_init__(self):
        if self.target_points <= 0:
            raise ConfigError("target_points", "must be positive")
        if self.window < 0:
            raise ConfigError("window", "must be non-negative")
        if self.strategy not in STRATEGIES:
            raise ConfigError("strategy", f"unknown strategy {self.strategy!r}")


ACCUM_PRESETS = {
    "baseline": AccumConfig(0.5, 3072, "nn_postprocess_baseline"),
    "variant_a": AccumConfig(0.3, 1280, "old_only_random"),
    "variant_a_queue": AccumConfig(0.3, 1280, "fixed_queue"),
    "variant_b": AccumConfig(0.0, 330, "none"),
    "sensor_specific": AccumConfig(1.1, 1280, "old_only_random"),
}

# single scans are padded to the largest expected scan size
SINGLE_SCAN_CAP = 330


def empty_cloud(n: int = 0) -> np.ndarray:
    return np.zeros(n, dtype=CLOUD_DTYPE)


def scan_to_cloud(scan: Scan, mount: SensorMount) -> np.ndarray:
    """Columnar copy of a scan in its own vehicle frame (``dt = 0``)."""
    n = len(scan.detections)
    cloud = empty_cloud(n)
    if n == 0:
        return cloud
    dets = scan.detections
    rng_ = np.fromiter((d.range for d in dets), float, n)
    az = np.fromiter((d.azimuth for d in dets), float, n)
    sx, sy = to_vehicle_frame(rng_, az, mount)
    cloud["sx"] = cloud["x"] = sx
    cloud["sy"] = cloud["y"] = sy
    cloud["pose_x"] = scan.ego.x
    cloud["pose_y"] = scan.ego.y
    cloud["pose_yaw"] = scan.ego.yaw
    cloud["t_us"] = scan.timestamp
    cloud["range"] = rng_
    cloud["azimuth"] = az
    cloud["v_rel"] = [d.v_rel for d in dets]
    cloud["v_comp"] = [d.v_comp for d in dets]
    cloud["v_comp_true"] = [np.nan if d.v_comp_true is None else d.v_comp_true for d in dets]
    cloud["rcs"] = [d.rcs for d in dets]
    cloud["sensor_id"] = scan.sensor_id
    cloud["scan_id"] = scan.scan_id
    cloud["annotated"] = [d.original_annotation not in (BACKGROUND, None) for d in dets]
    cloud["label"] = [CLASS_INDEX.get(Label(d.label), -1) for d in dets]
    cloud["source"] = [SOURCE_INDEX[d.true_source] for d in dets]
    return cloud


def align(cloud: np.ndarray, pose, t_us: int) -> np.ndarray:
    """Re-express ``x``, ``y`` and ``dt`` relative to pose ``(x, y, yaw)`` at ``t_us``."""
    out = cloud.copy()
    if len(out) == 0:
        return out
    xn, yn, thn = (float(v) for v in pose)
    th = out["pose_yaw"]
    c, s = np.cos(th), np.sin(th)
    wx = c * out["sx"] - s * out["sy"] + out["pose_x"] - xn
    wy = s * out["sx"] + c * out["sy"] + out["pose_y"] - yn
    cn, sn = np.cos(thn), np.sin(thn)
    out["x"] = cn * wx + sn * wy
    out["y"] = -sn * wx + cn * wy
    same = (out["pose_x"] == xn) & (out["pose_y"] == yn) & (out["pose_yaw"] == thn)
    out["x"][same] = out["sx"][same]
    out["y"][same] = out["sy"][same]
    out["dt"] = (out["t_us"] - t_us) * 1e-6
    return out


def _mount_map(mounts) -> Mapping[int, SensorMount]:
    if isinstance(mounts, Mapping):
        return mounts
    return {m.sensor_id: m for m in mounts}


def accumulate(scans: Sequence[Scan], latest_scan: Scan, mounts, window: float | None = None) -> np.ndarray:
    """Concatenate ``scans`` plus ``latest_scan`` aligned to the latest scan's frame.

    ``scans`` may or may not include ``latest_scan``; it is always placed last.
    With ``window`` given, scans older than ``window`` seconds are skipped.
    """
    mounts = _mount_map(mounts)
    parts = []
    for scan in scans:
        if scan.scan_id == latest_scan.scan_id:
            continue
        if scan.timestamp >= latest_scan.timestamp:
            raise OrderingError(
                f"scan {scan.scan_id} (t={scan.timestamp}) is not older than latest scan "
                f"{latest_scan.scan_id} (t={latest_scan.timestamp})"
            )
        if window is not None and latest_scan.timestamp - scan.timestamp > window * 1e6 + 0.5:
            continue
        parts.append(scan_to_cloud(scan, mounts[scan.sensor_id]))
    parts.append(scan_to_cloud(latest_scan, mounts[latest_scan.sensor_id]))
    cloud = np.concatenate(parts)
    return align(cloud, latest_scan.ego.pose, latest_scan.timestamp)


def push_order(points: np.ndarray) -> np.ndarray:
    """Indices ordering a scan's points slowest first (|v_comp|, then RCS, then input order)."""
    n = len(points)
    return np.lexsort((np.arange(n), points["rcs"], np.abs(points["v_comp"])))


def _split_by_scan(cloud: np.ndarray) -> list[np.ndarray]:
    """Index groups per scan, in order of first appearance."""
    _, first, inverse = np.unique(cloud["scan_id"], return_index=True, return_inverse=True)
    groups = []
    for g in np.argsort(first):
        groups.append(np.flatnonzero(inverse == g))
    return groups


def downsample_indices(cloud: np.ndarray, target_points: int, strategy: str, seed=None) -> np.ndarray:
    """Sorted indices of surviving points."""
    n = len(cloud)
    if n == 0:
        raise ContractError("downsample: empty cloud")
    if strategy not in STRATEGIES:
        raise ConfigError("strategy", f"unknown strategy {strategy!r}")
    if n <= target_points or strategy == "none":
        return np.arange(n)
    n_remove = n - target_points
    rng = np.random.default_rng(seed)
    if strategy in ("random", "nn_postprocess_baseline"):
        removed = rng.choice(n, n_remove, replace=False)
    elif strategy == "lowest_rcs":
        removed = np.argsort(cloud["rcs"], kind="stable")[:n_remove]
    elif strategy == "old_only_random":
        old = np.flatnonzero(cloud["dt"] < 0)
        if old.size < n_remove:
            raise InfeasibleError(
                f"old_only_random: need to remove {n_remove} points but only {old.size} old points exist "
                f"(latest scan has {n - old.size} points, target {target_points})"
            )
        removed = rng.choice(old, n_remove, replace=False)
    else:  # fixed_queue: same result as streaming the scans through a queue
        order = np.argsort(cloud["t_us"], kind="stable")
        history = [g[push_order(cloud[g])] for g in _split_by_scan(cloud[order])]
        history = [order[h] for h in history]
        return np.sort(queue_equivalence_oracle(history, target_points))
    keep = np.ones(n, dtype=bool)
    keep[removed] = False
    return np.flatnonzero(keep)


def downsample(cloud: np.ndarray, target_points: int, strategy: str, seed=None) -> np.ndarray:
    """Reduce ``cloud`` to ``min(len, target_points)`` points, keeping relative order."""
    return cloud[downsample_indices(cloud, target_points, strategy, seed)]


def upsample(cloud: np.ndarray, target_points: int, seed=None) -> np.ndarray:
    """Pad with replicas of randomly chosen points up to ``target_points``."""
    n = len(cloud)
    if n == 0:
        raise DataError("upsample: empty cloud")
    if n >= target_points:
        return cloud
    rng = np.random.default_rng(seed)
    src = rng.integers(0, n, target_points - n)
    extra = cloud[src].copy()
    extra["is_replica"] = True
    return np.concatenate([cloud, extra])


class FixedQueue:
    """Fixed-capacity FIFO of cloud points backed by a ring buffer.

    Pushing into a full queue evicts the same number of the oldest points.
    :meth:`snapshot` returns the content oldest first (push order).
    """

    def __init__(self, capacity: int, dtype=CLOUD_DTYPE):
        if capacity < 0:
            raise ConfigError("capacity", "must be non-negative")
        self.capacity = capacity
        self._buf = np.zeros(capacity, dtype=dtype)
        self._start = 0
        self._len = 0

    def __len__(self):
        return self._len

    def push(self, items: np.ndarray) -> None:
        n = len(items)
        cap = self.capacity
        if n == 0 or cap == 0:
            return
        if n >= cap:
            self._buf[:] = items[n - cap :]
            self._start = 0
            self._len = cap
            return
        pos = (self._start + self._len + np.arange(n)) % cap
        self._buf[pos] = items
        overflow = max(0, self._len + n - cap)
        self._start = (self._start + overflow) % cap
        self._len = min(cap, self._len + n)

    def snapshot(self) -> np.ndarray:
        idx = (self._start + np.arange(self._len)) % max(self.capacity, 1)
        return self._buf[idx].copy()

    def clear(self) -> None:
        self._start = 0
        self._len = 0


def queue_push_scan(queue: FixedQueue, points: np.ndarray) -> FixedQueue:
    """Push one scan's points so that its slowest points are evicted first."""
    queue.push(points[push_order(points)])
    return queue


def queue_equivalence_oracle(history: Sequence[np.ndarray], capacity: int):
    """Reference content of a queue after pushing ``history`` (one entry per scan).

    Whole oldest scans are dropped while the rest still fills the capacity;
    of the oldest remaining scan only its latest-pushed points are kept.
    """
    sizes = [len(h) for h in history]
    total = sum(sizes)
    i = 0
    while i < len(history) and total - sizes[i] >= capacity:
        total -= sizes[i]
        i += 1
    if i == len(history):
        return history[0][:0] if history else np.zeros(0, dtype=np.int64)
    parts = list(history[i:])
    excess = total - capacity
    if excess > 0:
        parts[0] = parts[0][excess:]
    return np.concatenate(parts)


@dataclass
class ProcessedCloud:
    """A resampled cloud ready for feature assembly, plus bookkeeping."""

    cloud: np.ndarray
    latest_scan_id: int
    raw_size: int  # points before resampling
    processed_size: int  # points that enter the network
    removed: np.ndarray  # points dropped by downsampling (aligned)
    latest_covered: bool  # every latest-scan point survived downsampling


def _finish(cloud, raw_size, removed, latest_scan_id, target, pad, seed):
    latest_in = int(np.count_nonzero(cloud["scan_id"] == latest_scan_id))
    latest_removed = int(np.count_nonzero(removed["scan_id"] == latest_scan_id))
    covered = latest_removed == 0 and latest_in > 0
    if pad and len(cloud):
        cloud = upsample(cloud, target, seed)
    return ProcessedCloud(cloud, latest_scan_id, raw_size, len(cloud), removed, covered)


def iter_clouds(
    recording: Sequence[Scan],
    mounts,
    config: AccumConfig,
    seed: int = 0,
    pad: bool = True,
    sensor_id: int | None = None,
) -> Iterator[ProcessedCloud]:
    """One processed cloud per scan of ``recording`` (optionally one sensor only).

    Each scan in turn acts as the latest scan. Randomness for downsampling and
    upsampling is derived from ``seed`` and the latest scan id.
    """
    mounts = _mount_map(mounts)
    scans = sorted(recording, key=lambda s: s.timestamp)
    if sensor_id is not None:
        scans = [s for s in scans if s.sensor_id == sensor_id]
    queue = FixedQueue(config.target_points) if config.strategy == "fixed_queue" else None
    win_us = config.window * 1e6 + 0.5
    lo = 0
    for k, latest in enumerate(scans):
        rng_seed = [seed, latest.scan_id]
        if queue is not None:
            queue_push_scan(queue, scan_to_cloud(latest, mounts[latest.sensor_id]))
            snap = queue.snapshot()
            snap = snap[latest.timestamp - snap["t_us"] <= win_us]
            cloud = align(snap, latest.ego.pose, latest.timestamp)
            # raw size: what the window would hold without the queue
            while latest.timestamp - scans[lo].timestamp > win_us:
                lo += 1
            raw = sum(len(s) for s in scans[lo : k + 1])
            yield _finish(cloud, raw, empty_cloud(), latest.scan_id, config.target_points, pad, rng_seed)
            continue
        while latest.timestamp - scans[lo].timestamp > win_us:
            lo += 1
        acc = accumulate(scans[lo:k], latest, mounts)
        keep = downsample_indices(acc, config.target_points, config.strategy, rng_seed) if len(acc) else []
        mask = np.zeros(len(acc), dtype=bool)
        mask[keep] = True
        yield _finish(acc[mask], len(acc), acc[~mask], latest.scan_id, config.target_points, pad, rng_seed)
