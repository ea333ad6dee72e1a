"""Automatic label generation from object/background annotations.

Rules, applied per scan:

1. detections annotated with an object class become ``moving_object``;
2. background detections within a polar tolerance (range and
   view-angle-dependent azimuth) of any rule-1 detection of the same scan
   become ``moving_object`` as well;
3. remaining background detections with ``|v_comp| >= v_threshold`` become
   ``clutter``;
4. everything else is ``stationary``.
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .core import BACKGROUND, CLASSES, Label, Scan
from .errors import ConfigError, DataError


@dataclass(frozen=True)
class RelabelParams:
    range_tol: float = 0.3
    az_tol_min: float = 2.0
    az_tol_max: float = 4.0
    az_tol_max_angle: float = 60.0
    v_threshold: float = 0.5

    def __post_init__(self):
        for name in ("range_tol", "az_tol_min", "az_tol_max", "az_tol_max_angle"):
            if not getattr(self, name) > 0:
                raise ConfigError(name, "must be positive")
        if self.v_threshold < 0:
            raise ConfigError("v_threshold", "must be non-negative")
        if self.az_tol_min > self.az_tol_max:
            raise ConfigError("az_tol_min", "must not exceed az_tol_max")


def azimuth_tolerance(view_angle, params: RelabelParams = RelabelParams()):
    """Azimuth tolerance in degrees, linear in ``|view_angle|``."""
    frac = np.abs(np.asarray(view_angle, dtype=float)) / params.az_tol_max_angle
    tol = params.az_tol_min + (params.az_tol_max - params.az_tol_min) * frac
    return float(tol) if tol.ndim == 0 else tol


def label_codes(rng_, az, v_comp, is_object, params: RelabelParams) -> np.ndarray:
    """Vectorized rules on column arrays; returns indices into ``CLASSES``."""
    rng_ = np.asarray(rng_, dtype=float)
    az = np.asarray(az, dtype=float)
    v_comp = np.asarray(v_comp, dtype=float)
    is_object = np.asarray(is_object, dtype=bool)
    codes = np.full(rng_.shape, 2, dtype=np.int8)
    codes[is_object] = 0
    bg = np.flatnonzero(~is_object)
    if bg.size == 0:
        return codes
    near = np.zeros(bg.size, dtype=bool)
    obj = np.flatnonzero(is_object)
    if obj.size:
        tol = azimuth_tolerance(az[bg], params)
        d_r = np.abs(rng_[bg, None] - rng_[None, obj])
        d_az = np.abs(az[bg, None] - az[None, obj])
        near = ((d_r <= params.range_tol) & (d_az <= tol[:, None])).any(axis=1)
    codes[bg[near]] = 0
    rest = bg[~near]
    codes[rest[np.abs(v_comp[rest]) >= params.v_threshold]] = 1
    return codes


def relabel_scan(scan: Scan, params: RelabelParams = RelabelParams()) -> Scan:
    """Return a copy of ``scan`` with ``label`` set on every detection."""
    dets = scan.detections
    if not dets:
        return scan
    for i, d in enumerate(dets):
        if not isinstance(d.original_annotation, str) or not d.original_annotation:
            raise DataError(f"scan {scan.scan_id}: detection {i} has no original annotation")
        if d.v_comp is None:
            raise DataError(f"scan {scan.scan_id}: detection {i} has no compensated velocity")
    codes = label_codes(
        [d.range for d in dets],
        [d.azimuth for d in dets],
        [d.v_comp for d in dets],
        [d.original_annotation != BACKGROUND for d in dets],
        params,
    )
    new = tuple(dataclasses.replace(d, label=CLASSES[c]) for d, c in zip(dets, codes))
    return dataclasses.replace(scan, detections=new)


def class_distribution(scans: Iterable[Scan]) -> dict[str, float]:
    counts = {c.value: 0 for c in CLASSES}
    total = 0
    for scan in scans:
        for d in scan.detections:
            if d.label == Label.UNLABELED:
                raise DataError(f"scan {scan.scan_id}: unlabeled detection")
            counts[d.label.value] += 1
            total += 1
    if total == 0:
        return {k: 0.0 for k in counts}
    return {k: v / total for k, v in counts.items()}


def relabel_dataset(scans: Sequence[Scan], params: RelabelParams = RelabelParams()):
    """Relabel every scan; returns ``(scans, class_distribution)``."""
    if not scans:
        raise DataError("empty dataset")
    out = [relabel_scan(s, params) for s in scans]
    return out, class_distribution(out)
