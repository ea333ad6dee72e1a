"""Per-point feature matrix and isotropic standardization."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from .errors import ContractError, DataError

log = logging.getLogger(__name__)

FEATURE_NAMES = ("x", "y", "range", "azimuth", "v_comp", "rcs", "dt", "sensor_1", "sensor_2", "sensor_3", "sensor_4")
N_FEATURES = len(FEATURE_NAMES)
N_CONTINUOUS = 7
_CLOUD_FIELDS = ("x", "y", "range", "azimuth", "v_comp", "rcs", "dt", "sensor_id")


def assemble(cloud: np.ndarray) -> np.ndarray:
    """Feature matrix ``N x 11`` in cloud order; replicas yield identical rows."""
    names = cloud.dtype.names or ()
    missing = [f for f in _CLOUD_FIELDS if f not in names]
    if missing:
        raise DataError(f"cloud lacks fields {missing}")
    n = len(cloud)
    out = np.zeros((n, N_FEATURES))
    for j, f in enumerate(_CLOUD_FIELDS[:N_CONTINUOUS]):
        out[:, j] = cloud[f]
    sid = cloud["sensor_id"].astype(np.int64)
    if np.any((sid < 1) | (sid > 4)):
        raise DataError("sensor_id outside 1..4")
    out[np.arange(n), N_CONTINUOUS + sid - 1] = 1.0
    return out


@dataclass
class Standardizer:
    """Mean/scale for the continuous features; x and y share one scale."""

    mean: np.ndarray
    scale: np.ndarray
    clamped: tuple[str, ...] = field(default_factory=tuple)

    @property
    def xy_scale(self) -> float:
        return float(self.scale[0])

    def to_dict(self):
        return {"mean": self.mean.tolist(), "scale": self.scale.tolist(), "clamped": list(self.clamped)}

    @classmethod
    def from_dict(cls, d):
        return cls(np.asarray(d["mean"], float), np.asarray(d["scale"], float), tuple(d.get("clamped", ())))

    @classmethod
    def identity(cls):
        return cls(np.zeros(N_CONTINUOUS), np.ones(N_CONTINUOUS))


def fit(matrices: np.ndarray | Iterable[np.ndarray], replica_masks=None) -> Standardizer:
    """Population moments over all rows; rows flagged in ``replica_masks`` are skipped."""
    if isinstance(matrices, np.ndarray):
        matrices = [matrices]
        if replica_masks is not None:
            replica_masks = [replica_masks]
    count = 0
    s1 = np.zeros(N_CONTINUOUS)
    rows = []
    for i, m in enumerate(matrices):
        m = np.asarray(m, dtype=float)
        if m.ndim != 2 or m.shape[1] != N_FEATURES:
            raise DataError(f"expected N x {N_FEATURES} matrix, got {m.shape}")
        if replica_masks is not None:
            m = m[~np.asarray(replica_masks[i], dtype=bool)]
        rows.append(m[:, :N_CONTINUOUS])
        count += len(m)
    if count < 2:
        raise ContractError(f"fit needs at least 2 samples, got {count}")
    data = np.concatenate(rows)
    mean = data.mean(axis=0)
    var = ((data - mean) ** 2).mean(axis=0)
    var_xy = 0.5 * (var[0] + var[1])
    var[0] = var[1] = var_xy
    scale = np.sqrt(var)
    clamped = []
    for j in range(N_CONTINUOUS):
        if not scale[j] > 0:
            scale[j] = 1.0
            clamped.append(FEATURE_NAMES[j])
    if clamped:
        log.warning("zero variance for %s; scale clamped to 1", ", ".join(clamped))
    return Standardizer(mean, scale, tuple(clamped))


def apply(std: Standardizer, matrix: np.ndarray) -> np.ndarray:
    m = np.asarray(matrix, dtype=float)
    if m.ndim != 2 or m.shape[1] != N_FEATURES:
        raise DataError(f"expected N x {N_FEATURES} matrix, got {m.shape}")
    out = m.copy()
    out[:, :N_CONTINUOUS] = (m[:, :N_CONTINUOUS] - std.mean) / std.scale
    return out
