"""Recording files: JSON Lines, one header line followed by one scan per line.

Header::

    {"format": "clutterseg-recording", "version": 1,
     "mounts": [{"sensor_id": 1, "x": ..., "y": ..., "yaw": ..., ...}, ...],
     "meta": {...provenance...}}

Scan line::

    {"scan_id": 0, "sensor_id": 1, "timestamp": 0,
     "ego": {"x", "y", "yaw", "speed", "yaw_rate", "timestamp"},
     "detections": [{"range", "azimuth", "v_rel", "v_comp", "rcs",
                     "annotation", "label", "true_source", "v_comp_true"}, ...]}

Keys the reader does not know are kept and written back unchanged, so a
read/write round trip is byte-stable. Other datasets plug in through an
adapter: any callable that turns one foreign record into a :class:`Scan`
(see :func:`from_records`).
"""
from __future__ import annotations

import dataclasses
import json
import os
import tempfile
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Iterable, Mapping

from .core import Detection, EgoState, Label, Scan, SensorMount, TrueSource
from .errors import DataError

FORMAT = "clutterseg-recording"
VERSION = 1

_SCAN_KEYS = ("scan_id", "sensor_id", "timestamp", "ego", "detections")
_EGO_KEYS = ("x", "y", "yaw", "speed", "yaw_rate", "timestamp")
_DET_REQUIRED = ("range", "azimuth", "v_rel", "v_comp", "rcs")
_DET_OPTIONAL = ("annotation", "label", "true_source", "v_comp_true")
_MOUNT_KEYS = tuple(f.name for f in dataclasses.fields(SensorMount))

Adapter = Callable[[Mapping[str, Any]], Scan]


@dataclass
class RecordingFile:
    mounts: tuple[SensorMount, ...]
    scans: list[Scan]
    meta: dict = field(default_factory=dict)
    # unknown keys: header-level, and per scan {"scan": {...}, "detections": [{...}, ...]}
    header_extra: dict = field(default_factory=dict)
    scan_extra: list[dict] = field(default_factory=list)

    def mount_map(self):
        return {m.sensor_id: m for m in self.mounts}


def _dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), allow_nan=False)


def _det_to_dict(d: Detection, extra: Mapping | None) -> dict:
    out = {
        "range": d.range,
        "azimuth": d.azimuth,
        "v_rel": d.v_rel,
        "v_comp": d.v_comp,
        "rcs": d.rcs,
        "label": d.label.value,
        "true_source": d.true_source.value,
    }
    if d.original_annotation is not None:
        out["annotation"] = d.original_annotation
    if d.v_comp_true is not None:
        out["v_comp_true"] = d.v_comp_true
    if extra:
        out.update({k: v for k, v in extra.items() if k not in out})
    return out


def scan_to_dict(scan: Scan, extra: Mapping | None = None) -> dict:
    extra = extra or {}
    det_extra = extra.get("detections") or [None] * len(scan.detections)
    out = {
        "scan_id": scan.scan_id,
        "sensor_id": scan.sensor_id,
        "timestamp": scan.timestamp,
        "ego": {k: getattr(scan.ego, k) for k in _EGO_KEYS},
        "detections": [_det_to_dict(d, e) for d, e in zip(scan.detections, det_extra)],
    }
    out.update({k: v for k, v in (extra.get("scan") or {}).items() if k not in out})
    return out


def _num(obj, key, where, kind=float):
    if key not in obj:
        raise DataError(f"{where}: missing '{key}'")
    v = obj[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise DataError(f"{where}: '{key}' must be a number")
    if kind is int:
        if isinstance(v, float) and not v.is_integer():
            raise DataError(f"{where}: '{key}' must be an integer")
        return int(v)
    return float(v)


def scan_from_dict(obj: Mapping[str, Any], where: str = "scan") -> tuple[Scan, dict]:
    """Parse and validate one scan record; returns the scan and its unknown keys."""
    if not isinstance(obj, Mapping):
        raise DataError(f"{where}: expected an object")
    ego_obj = obj.get("ego")
    if not isinstance(ego_obj, Mapping):
        raise DataError(f"{where}: missing 'ego' object")
    ego = EgoState(
        *(_num(ego_obj, k, f"{where}.ego", int if k == "timestamp" else float) for k in _EGO_KEYS)
    )
    dets_obj = obj.get("detections")
    if not isinstance(dets_obj, list):
        raise DataError(f"{where}: 'detections' must be a list")
    dets, det_extra = [], []
    for i, d in enumerate(dets_obj):
        w = f"{where}.detections[{i}]"
        if not isinstance(d, Mapping):
            raise DataError(f"{w}: expected an object")
        vals = [_num(d, k, w) for k in _DET_REQUIRED]
        try:
            label = Label(d.get("label", Label.UNLABELED.value))
            source = TrueSource(d.get("true_source", TrueSource.UNKNOWN.value))
        except ValueError as exc:
            raise DataError(f"{w}: {exc}") from None
        # a missing annotation stays None so that relabeling can refuse it
        annotation = d.get("annotation")
        if annotation is not None and not isinstance(annotation, str):
            raise DataError(f"{w}: 'annotation' must be a string")
        v_true = d.get("v_comp_true")
        if v_true is not None:
            v_true = _num(d, "v_comp_true", w)
        dets.append(Detection(*vals, annotation, label, source, v_true))
        det_extra.append({k: v for k, v in d.items() if k not in _DET_REQUIRED + _DET_OPTIONAL})
    scan = Scan(
        _num(obj, "scan_id", where, int),
        _num(obj, "sensor_id", where, int),
        _num(obj, "timestamp", where, int),
        ego,
        tuple(dets),
    )
    extra = {"scan": {k: v for k, v in obj.items() if k not in _SCAN_KEYS}}
    if any(det_extra):
        extra["detections"] = det_extra
    return scan, extra


def atomic_write_text(path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name + ".", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def dumps(rec: RecordingFile) -> str:
    header = {"format": FORMAT, "version": VERSION,
              "mounts": [dataclasses.asdict(m) for m in rec.mounts], "meta": rec.meta}
    header.update({k: v for k, v in rec.header_extra.items() if k not in header})
    lines = [_dumps(header)]
    extras = rec.scan_extra or [None] * len(rec.scans)
    for scan, extra in zip(rec.scans, extras):
        lines.append(_dumps(scan_to_dict(scan, extra)))
    return "\n".join(lines) + "\n"


def loads(text: str, source: str = "<string>") -> RecordingFile:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise DataError(f"{source}: empty recording file")
    try:
        header = json.loads(lines[0])
    except json.JSONDecodeError as exc:
        raise DataError(f"{source}:1: invalid JSON: {exc}") from None
    if not isinstance(header, dict) or header.get("format") != FORMAT:
        raise DataError(f"{source}:1: not a recording header")
    if header.get("version") != VERSION:
        raise DataError(f"{source}:1: unsupported version {header.get('version')!r}")
    mounts = []
    for i, m in enumerate(header.get("mounts", [])):
        if not isinstance(m, dict) or set(m) - set(_MOUNT_KEYS):
            raise DataError(f"{source}:1: mounts[{i}] has unexpected shape")
        try:
            mounts.append(SensorMount(**m))
        except (TypeError, ValueError) as exc:
            raise DataError(f"{source}:1: mounts[{i}]: {exc}") from None
    header_extra = {k: v for k, v in header.items() if k not in ("format", "version", "mounts", "meta")}
    scans, extras = [], []
    for lineno, line in enumerate(lines[1:], start=2):
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise DataError(f"{source}:{lineno}: invalid JSON: {exc}") from None
        scan, extra = scan_from_dict(obj, f"{source}:{lineno}")
        scans.append(scan)
        extras.append(extra)
    known = {m.sensor_id for m in mounts}
    for s in scans:
        if s.sensor_id not in known:
            raise DataError(f"{source}: scan {s.scan_id} references unknown sensor {s.sensor_id}")
    return RecordingFile(tuple(mounts), scans, dict(header.get("meta", {})), header_extra, extras)


def read(path) -> RecordingFile:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from None
    return loads(text, str(path))


def write(path, rec: RecordingFile) -> None:
    atomic_write_text(path, dumps(rec))


def from_records(records: Iterable[Mapping[str, Any]], adapter: Adapter, mounts, meta=None) -> RecordingFile:
    """Build a recording from foreign records with ``adapter(record) -> Scan``.

    This is the single extension point for external datasets: write one
    function that maps a record to a :class:`Scan`, then pass it here.
    """
    scans = [adapter(r) for r in records]
    scans.sort(key=lambda s: (s.timestamp, s.sensor_id))
    return RecordingFile(tuple(mounts), scans, dict(meta or {}))


def native_adapter(record: Mapping[str, Any]) -> Scan:
    """Adapter for records already in this package's scan layout."""
    return scan_from_dict(record)[0]
