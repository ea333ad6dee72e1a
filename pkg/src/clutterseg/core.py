"""Domain types, frame transforms and ego-motion velocity compensation.

Conventions
-----------
* Angles are stored in degrees on every public type and converted to
  radians only inside the transforms.
* Radial velocities are positive when the target recedes from the sensor.
* The vehicle frame has x pointing forward and y to the left; the world
  frame is an arbitrary fixed 2D frame per recording.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import DataError, DomainError

BACKGROUND = "background"


class Label(str, enum.Enum):
    MOVING_OBJECT = "moving_object"
    CLUTTER = "clutter"
    STATIONARY = "stationary"
    UNLABELED = "unlabeled"


class TrueSource(str, enum.Enum):
    REAL_MOVING = "real_moving"
    REAL_STATIONARY = "real_stationary"
    MIRROR_GHOST = "mirror_ghost"
    AMBIGUITY_GHOST = "ambiguity_ghost"
    NOISE = "noise"
    UNKNOWN = "unknown"


# class index order used by the network, metrics and reports
CLASSES = (Label.MOVING_OBJECT, Label.CLUTTER, Label.STATIONARY)
CLASS_INDEX = {label: i for i, label in enumerate(CLASSES)}
SOURCES = tuple(TrueSource)
SOURCE_INDEX = {src: i for i, src in enumerate(SOURCES)}


@dataclass(frozen=True)
class SensorMount:
    sensor_id: int
    x: float
    y: float
    yaw: float  # degrees
    fov_half_angle: float = 60.0
    max_range: float = 100.0

    def __post_init__(self):
        if not 1 <= self.sensor_id <= 4:
            raise DomainError("sensor_id", f"must be in 1..4, got {self.sensor_id}")
        if not 0.0 < self.fov_half_angle <= 90.0:
            raise DomainError("fov_half_angle", f"must be in (0, 90], got {self.fov_half_angle}")
        if not self.max_range > 0.0:
            raise DomainError("max_range", f"must be positive, got {self.max_range}")

    @property
    def position(self) -> np.ndarray:
        return np.array([self.x, self.y])

    def in_fov(self, range_, azimuth) -> bool:
        return 0.0 <= range_ <= self.max_range and abs(azimuth) <= self.fov_half_angle


@dataclass(frozen=True)
class EgoState:
    x: float
    y: float
    yaw: float  # radians
    speed: float
    yaw_rate: float
    timestamp: int  # microseconds

    @property
    def pose(self) -> tuple[float, float, float]:
        return (self.x, self.y, self.yaw)


@dataclass(frozen=True)
class Detection:
    range: float
    azimuth: float
    v_rel: float
    v_comp: float
    rcs: float
    original_annotation: str | None = BACKGROUND  # None when the source had none
    label: Label = Label.UNLABELED
    true_source: TrueSource = TrueSource.UNKNOWN
    # noise-free compensated velocity, known only for generated data
    v_comp_true: float | None = None


@dataclass(frozen=True)
class Scan:
    scan_id: int
    sensor_id: int
    timestamp: int
    ego: EgoState
    detections: tuple[Detection, ...] = field(default_factory=tuple)

    def __len__(self):
        return len(self.detections)


def validate_scan(scan: Scan, mount: SensorMount) -> None:
    """Raise :class:`DataError` if a detection violates the mount's FOV/range."""
    if scan.sensor_id != mount.sensor_id:
        raise DataError(f"scan {scan.scan_id}: sensor {scan.sensor_id} does not match mount {mount.sensor_id}")
    for i, det in enumerate(scan.detections):
        if not mount.in_fov(det.range, det.azimuth):
            raise DataError(
                f"scan {scan.scan_id}: detection {i} at range={det.range:.3f}, "
                f"azimuth={det.azimuth:.3f} is outside the mount's field of view"
            )


def rotation(theta: float) -> np.ndarray:
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, -s], [s, c]])


def to_vehicle_frame(range_, azimuth, mount: SensorMount, check: bool = True):
    """Polar sensor measurement to Cartesian vehicle coordinates.

    Accepts scalars or arrays. With ``check`` set, out-of-FOV input raises a
    :class:`DomainError` naming ``range`` or ``azimuth``.
    """
    r = np.asarray(range_, dtype=float)
    az = np.asarray(azimuth, dtype=float)
    if check:
        if np.any((r < 0.0) | (r > mount.max_range)) or not np.all(np.isfinite(r)):
            raise DomainError("range", f"outside [0, {mount.max_range}]")
        if np.any(np.abs(az) > mount.fov_half_angle) or not np.all(np.isfinite(az)):
            raise DomainError("azimuth", f"outside +-{mount.fov_half_angle} deg")
    ang = np.radians(mount.yaw + az)
    x = mount.x + r * np.cos(ang)
    y = mount.y + r * np.sin(ang)
    if x.ndim == 0:
        return float(x), float(y)
    return x, y


def to_sensor_frame(x, y, mount: SensorMount):
    """Inverse of :func:`to_vehicle_frame`; returns ``(range, azimuth_deg)``.

    Azimuth is wrapped to (-180, 180]. No FOV check is applied.
    """
    dx = np.asarray(x, dtype=float) - mount.x
    dy = np.asarray(y, dtype=float) - mount.y
    r = np.hypot(dx, dy)
    az = np.degrees(np.arctan2(dy, dx)) - mount.yaw
    az = (az + 180.0) % 360.0 - 180.0
    az = np.where(az == -180.0, 180.0, az)
    if r.ndim == 0:
        return float(r), float(az)
    return r, az


def sensor_velocity(ego: EgoState, mount: SensorMount) -> np.ndarray:
    """Velocity of the sensor over ground, expressed in the vehicle frame."""
    # rigid body: v_ego + omega x r_mount
    return np.array([ego.speed - ego.yaw_rate * mount.y, ego.yaw_rate * mount.x])


def compensate_velocity(v_rel, det_position, ego: EgoState, mount: SensorMount):
    """Remove the sensor's own motion from a measured radial velocity.

    ``det_position`` is the vehicle-frame position (shape ``(2,)`` or
    ``(n, 2)``). A stationary target yields exactly zero in noise-free data.
    """
    pos = np.asarray(det_position, dtype=float)
    los = pos - mount.position
    norm = np.linalg.norm(los, axis=-1)
    if np.any(norm == 0.0):
        raise DomainError("det_position", "coincides with the sensor position (zero line of sight)")
    u = los / norm[..., None]
    v_comp = np.asarray(v_rel, dtype=float) + u @ sensor_velocity(ego, mount)
    if v_comp.ndim == 0:
        return float(v_comp)
    return v_comp


def transform_to_latest(position, pose_old: Sequence[float], pose_new: Sequence[float]):
    """Map vehicle-frame points recorded at ``pose_old`` into the frame at ``pose_new``.

    Poses are ``(x, y, yaw_rad)`` in the world frame; ``position`` has shape
    ``(2,)`` or ``(n, 2)``.
    """
    p = np.asarray(position, dtype=float)
    xo, yo, tho = (float(v) for v in pose_old)
    xn, yn, thn = (float(v) for v in pose_new)
    if not all(map(math.isfinite, (xo, yo, tho, xn, yn, thn))) or not np.all(np.isfinite(p)):
        raise DomainError("pose", "non-finite input")
    if (xo, yo, tho) == (xn, yn, thn):
        return p.copy()
    # inverse(P_new) o P_old as a single rotation + translation
    rot = rotation(tho - thn)
    shift = rotation(-thn) @ np.array([xo - xn, yo - yn])
    return p @ rot.T + shift


def integrate_pose(ego: EgoState, speed: float, yaw_rate: float, dt_us: int) -> EgoState:
    """Advance the ego pose by ``dt_us`` microseconds under constant speed and yaw rate."""
    dt = dt_us * 1e-6
    if abs(yaw_rate) < 1e-12:
        x = ego.x + speed * dt * math.cos(ego.yaw)
        y = ego.y + speed * dt * math.sin(ego.yaw)
    else:
        rad = speed / yaw_rate
        x = ego.x + rad * (math.sin(ego.yaw + yaw_rate * dt) - math.sin(ego.yaw))
        y = ego.y - rad * (math.cos(ego.yaw + yaw_rate * dt) - math.cos(ego.yaw))
    return EgoState(x, y, ego.yaw + yaw_rate * dt, speed, yaw_rate, ego.timestamp + dt_us)
