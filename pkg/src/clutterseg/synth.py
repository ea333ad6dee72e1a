"""Scenario-driven generator for labeled radar recordings.

Recordings contain moving objects, stationary background, specular
multipath ghosts behind reflector segments, velocity/angle ambiguity ghosts
and random noise detections. Every detection carries its true cause, which
makes generated data an oracle for the label-generation rules.
"""
from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from typing import Any, Iterable, Sequence

import numpy as np

from .core import (
    BACKGROUND,
    Detection,
    EgoState,
    Scan,
    SensorMount,
    TrueSource,
    compensate_velocity,
    integrate_pose,
    rotation,
    sensor_velocity,
    to_sensor_frame,
    to_vehicle_frame,
)
from .errors import ConfigError


@dataclass(frozen=True)
class EgoSegment:
    duration: float
    speed: float
    yaw_rate: float = 0.0


@dataclass(frozen=True)
class ObjectSpec:
    """A rigid object moving at constant velocity (world frame)."""

    x: float
    y: float
    vx: float
    vy: float
    length: float = 4.5
    width: float = 1.8
    category: str = "car"
    det_min: int = 3
    det_max: int = 12
    # share of returns that land just outside the annotated box
    spill_fraction: float = 0.0


@dataclass(frozen=True)
class Reflector:
    """Specular line segment; ``frame`` is ``"world"`` or ``"vehicle"``."""

    x1: float
    y1: float
    x2: float
    y2: float
    reflectivity: float = 0.5
    frame: str = "world"

    def __post_init__(self):
        if (self.x1, self.y1) == (self.x2, self.y2):
            raise ConfigError("reflector", "degenerate segment")
        if not 0.0 <= self.reflectivity <= 1.0:
            raise ConfigError("reflector.reflectivity", "must be in [0, 1]")
        if self.frame not in ("world", "vehicle"):
            raise ConfigError("reflector.frame", f"unknown frame {self.frame!r}")


@dataclass(frozen=True)
class NoiseModel:
    sigma_range: float = 0.05
    sigma_azimuth: float = 0.25  # degrees at boresight, doubles at 60 deg
    sigma_v: float = 0.1
    comp_error: float = 0.2  # uniform bound, m/s
    truncate: float | None = 3.0  # noise clipped at this many sigmas

    def range_bound(self):
        return math.inf if self.truncate is None else self.truncate * self.sigma_range

    def azimuth_bound(self, view_angle):
        return math.inf if self.truncate is None else self.truncate * self.sigma_az(view_angle)

    def sigma_az(self, view_angle):
        return self.sigma_azimuth * (1.0 + abs(view_angle) / 60.0)


@dataclass(frozen=True)
class ClutterRates:
    velocity_alias: float = 0.0  # probability per moving-object detection
    angle_alias: float = 0.0
    v_span: float = 25.0
    angle_offset: float = 20.0
    noise_per_scan: float = 0.0  # Poisson mean
    noise_v_max: float = 10.0
    # reject clutter whose noise-free polar position is this close to an
    # object return of the same scan (0 disables)
    clearance_range: float = 0.0
    clearance_azimuth: float = 0.0


@dataclass(frozen=True)
class ScenarioConfig:
    duration: float
    mounts: tuple[SensorMount, ...]
    scan_interval: float = 0.075
    ego: tuple[EgoSegment, ...] = (EgoSegment(1e9, 10.0),)
    objects: tuple[ObjectSpec, ...] = ()
    reflectors: tuple[Reflector, ...] = ()
    noise: NoiseModel = NoiseModel()
    clutter: ClutterRates = ClutterRates()
    stationary_min: int = 20
    stationary_max: int = 150
    # share of stationary returns placed on reflector segments
    stationary_on_reflectors: float = 0.3
    min_detections: int = 20
    max_detections: int = 330
    seed: int = 0

    def __post_init__(self):
        if not self.mounts:
            raise ConfigError("mounts", "at least one sensor mount is required")
        ids = [m.sensor_id for m in self.mounts]
        if len(set(ids)) != len(ids):
            raise ConfigError("mounts", f"duplicate sensor ids {ids}")
        if not self.duration > 0:
            raise ConfigError("duration", "must be positive")
        if not self.scan_interval > 0:
            raise ConfigError("scan_interval", "must be positive")
        for name in ("velocity_alias", "angle_alias", "noise_per_scan"):
            if getattr(self.clutter, name) < 0:
                raise ConfigError(f"clutter.{name}", "rates must be >= 0")
        if not 0 <= self.stationary_min <= self.stationary_max:
            raise ConfigError("stationary_min", "need 0 <= stationary_min <= stationary_max")
        if not 0 <= self.min_detections <= self.max_detections:
            raise ConfigError("min_detections", "need 0 <= min_detections <= max_detections")


DEFAULT_MOUNTS = (
    SensorMount(1, 3.6, -0.8, -40.0),
    SensorMount(2, 3.6, 0.8, 40.0),
    SensorMount(3, -0.5, 0.9, 90.0),
    SensorMount(4, -0.5, -0.9, -90.0),
)


# ---------------------------------------------------------------------------
# geometry helpers


def _reflect(point, a, b):
    """Mirror ``point`` across the infinite line through ``a`` and ``b``."""
    d = b - a
    d = d / np.linalg.norm(d)
    rel = point - a
    proj = a + d * (rel @ d)
    return 2.0 * proj - point


def _reflect_vector(v, a, b):
    d = b - a
    d = d / np.linalg.norm(d)
    return 2.0 * d * (v @ d) - v


def _side(point, a, b):
    d = b - a
    rel = point - a
    return d[0] * rel[1] - d[1] * rel[0]


def _segments_cross(p1, p2, a, b):
    """True if segment p1-p2 intersects segment a-b (touching counts)."""
    d1, d2 = _side(p1, a, b), _side(p2, a, b)
    d3, d4 = _side(a, p1, p2), _side(b, p1, p2)
    return d1 * d2 <= 0.0 and d3 * d4 <= 0.0


def _reflector_in_vehicle(refl: Reflector, ego: EgoState):
    a = np.array([refl.x1, refl.y1])
    b = np.array([refl.x2, refl.y2])
    if refl.frame == "vehicle":
        return a, b
    rot = rotation(-ego.yaw)
    t = np.array([ego.x, ego.y])
    return rot @ (a - t), rot @ (b - t)


def _make_detection(pos, v_comp_true, rcs, mount, ego, source, annotation=BACKGROUND, noise=None, rng=None):
    """Measure a point: add bounded noise, derive v_rel consistently."""
    r, az = to_sensor_frame(pos[0], pos[1], mount)
    v_comp = v_comp_true
    if noise is not None:
        r += _bounded(rng, noise.sigma_range, noise.truncate)
        az += _bounded(rng, noise.sigma_az(az), noise.truncate)
        v_comp += _bounded(rng, noise.sigma_v, noise.truncate)
        if noise.comp_error > 0:
            v_comp += rng.uniform(-noise.comp_error, noise.comp_error)
    r = min(max(r, 0.0), mount.max_range)
    az = min(max(az, -mount.fov_half_angle), mount.fov_half_angle)
    mx, my = to_vehicle_frame(r, az, mount, check=False)
    los = np.array([mx, my]) - mount.position
    u = los / np.linalg.norm(los)
    v_rel = v_comp - float(u @ sensor_velocity(ego, mount))
    return Detection(
        range=float(r),
        azimuth=float(az),
        v_rel=float(v_rel),
        v_comp=float(v_comp),
        rcs=float(rcs),
        original_annotation=annotation,
        true_source=source,
        v_comp_true=float(v_comp_true),
    )


def _bounded(rng, sigma, truncate):
    if sigma <= 0:
        return 0.0
    x = rng.normal(0.0, sigma)
    if truncate is not None:
        x = min(max(x, -truncate * sigma), truncate * sigma)
    return x


# ---------------------------------------------------------------------------
# ghost models


def mirror_ghost(target_pos, target_vel, reflector, mount: SensorMount, ego: EgoState | None = None):
    """Specular multipath ghost of a target behind a reflector.

    Positions and velocities are in the vehicle frame; ``target_vel`` is the
    velocity over ground. ``reflector`` is either a :class:`Reflector` in the
    vehicle frame or a pair of endpoints. Returns ``None`` when the target and
    sensor are on opposite sides of the reflector line, when the
    sensor-to-ghost ray misses the finite segment, or when the ghost falls
    outside the sensor's field of view. The ghost is returned noise-free.
    """
    if isinstance(reflector, Reflector):
        a, b = np.array([reflector.x1, reflector.y1]), np.array([reflector.x2, reflector.y2])
    else:
        a, b = (np.asarray(p, dtype=float) for p in reflector)
    target = np.asarray(target_pos, dtype=float)
    sensor = mount.position
    s_side, t_side = _side(sensor, a, b), _side(target, a, b)
    if s_side == 0.0 or s_side * t_side <= 0.0:
        return None
    ghost = _reflect(target, a, b)
    if not _segments_cross(sensor, ghost, a, b):
        return None
    r, az = to_sensor_frame(ghost[0], ghost[1], mount)
    if not mount.in_fov(r, az) or r == 0.0:
        return None
    ghost_vel = _reflect_vector(np.asarray(target_vel, dtype=float), a, b)
    u = (ghost - sensor) / r
    v_comp = float(ghost_vel @ u)
    if ego is None:
        ego = EgoState(0.0, 0.0, 0.0, 0.0, 0.0, 0)
    v_rel = v_comp - float(u @ sensor_velocity(ego, mount))
    return Detection(
        range=r,
        azimuth=az,
        v_rel=v_rel,
        v_comp=v_comp,
        rcs=0.0,
        true_source=TrueSource.MIRROR_GHOST,
        v_comp_true=v_comp,
    )


@dataclass(frozen=True)
class VelocityAlias:
    v_span: float
    direction: int = 1  # +1 or -1


@dataclass(frozen=True)
class AngleAlias:
    offset: float  # signed degrees


def ambiguity_ghost(det: Detection, mode, mount: SensorMount, ego: EgoState | None = None):
    """Ghost from wrong ambiguity resolution; ``None`` when it leaves the FOV.

    Velocity aliasing keeps the position and shifts the radial velocity by
    one ambiguity span. Angle aliasing keeps range and radial velocity and
    moves the azimuth, which also changes the compensated velocity.
    """
    if ego is None:
        ego = EgoState(0.0, 0.0, 0.0, 0.0, 0.0, 0)
    if isinstance(mode, VelocityAlias):
        shift = mode.direction * mode.v_span
        v_true = None if det.v_comp_true is None else det.v_comp_true + shift
        return dataclasses.replace(
            det,
            v_rel=det.v_rel + shift,
            v_comp=det.v_comp + shift,
            true_source=TrueSource.AMBIGUITY_GHOST,
            original_annotation=BACKGROUND,
            v_comp_true=v_true,
        )
    if isinstance(mode, AngleAlias):
        az = det.azimuth + mode.offset
        if not mount.in_fov(det.range, az):
            return None
        pos = np.array(to_vehicle_frame(det.range, az, mount))
        v_comp = compensate_velocity(det.v_rel, pos, ego, mount)
        v_true = None
        if det.v_comp_true is not None:
            # noise-free radial velocity re-projected at the aliased angle
            pos_true = pos
            v_rel_true = det.v_rel - (det.v_comp - det.v_comp_true)
            v_true = compensate_velocity(v_rel_true, pos_true, ego, mount)
        return dataclasses.replace(
            det,
            azimuth=az,
            v_comp=v_comp,
            true_source=TrueSource.AMBIGUITY_GHOST,
            original_annotation=BACKGROUND,
            v_comp_true=v_true,
        )
    raise ConfigError("mode", f"unknown ambiguity mode {mode!r}")


# ---------------------------------------------------------------------------
# recording generation


def _ego_at(config: ScenarioConfig, times_us: Sequence[int]) -> list[EgoState]:
    """Integrate the piecewise-constant ego trajectory at sorted timestamps."""
    segs = list(config.ego) or [EgoSegment(math.inf, 0.0)]
    ends = np.cumsum([round(s.duration * 1e6) if math.isfinite(s.duration) else 2**62 for s in segs])
    seg_i = 0
    state = EgoState(0.0, 0.0, 0.0, segs[0].speed, segs[0].yaw_rate, 0)
    out = []
    for t in times_us:
        while state.timestamp < t:
            last = seg_i == len(segs) - 1
            stop = t if last else min(t, int(ends[seg_i]))
            seg = segs[seg_i]
            state = integrate_pose(state, seg.speed, seg.yaw_rate, stop - state.timestamp)
            if not last and state.timestamp >= ends[seg_i]:
                seg_i += 1
        while seg_i < len(segs) - 1 and t >= ends[seg_i]:
            seg_i += 1
        state = dataclasses.replace(state, speed=segs[seg_i].speed, yaw_rate=segs[seg_i].yaw_rate)
        out.append(state)
    return out


def _object_points(obj: ObjectSpec, t: float, ego: EgoState, n: int, rng):
    """Sample ``n`` scatterers inside the object's box (vehicle frame)."""
    heading = math.atan2(obj.vy, obj.vx) if (obj.vx or obj.vy) else 0.0
    center_w = np.array([obj.x + obj.vx * t, obj.y + obj.vy * t])
    local = np.column_stack(
        [rng.uniform(-obj.length / 2, obj.length / 2, n), rng.uniform(-obj.width / 2, obj.width / 2, n)]
    )
    pts_w = local @ rotation(heading).T + center_w
    rot = rotation(-ego.yaw)
    t_e = np.array([ego.x, ego.y])
    pts_v = (pts_w - t_e) @ rot.T
    center_v = rot @ (center_w - t_e)
    vel_v = rot @ np.array([obj.vx, obj.vy])
    return center_v, vel_v, pts_v, heading - ego.yaw


def _inside_box(point, center, heading, obj: ObjectSpec):
    local = rotation(-heading) @ (np.asarray(point) - center)
    return abs(local[0]) <= obj.length / 2 and abs(local[1]) <= obj.width / 2


def _uniform_fov_point(mount: SensorMount, rng, r_min=1.0):
    r = rng.uniform(r_min, mount.max_range * 0.98)
    az = rng.uniform(-mount.fov_half_angle * 0.98, mount.fov_half_angle * 0.98)
    return np.array(to_vehicle_frame(r, az, mount, check=False))


def _too_close(det_pos, obj_polar, mount, clutter: ClutterRates):
    if clutter.clearance_range <= 0 and clutter.clearance_azimuth <= 0:
        return False
    if not obj_polar:
        return False
    r, az = to_sensor_frame(det_pos[0], det_pos[1], mount)
    arr = np.asarray(obj_polar)
    close = (np.abs(arr[:, 0] - r) <= clutter.clearance_range) & (np.abs(arr[:, 1] - az) <= clutter.clearance_azimuth)
    return bool(close.any())


def _generate_scan(config: ScenarioConfig, mount: SensorMount, ego: EgoState, scan_id: int, rng) -> Scan:
    t = ego.timestamp * 1e-6
    noise = config.noise
    clutter = config.clutter
    dets: list[Detection] = []
    obj_polar: list[tuple[float, float]] = []
    moving: list[tuple[Detection, np.ndarray]] = []
    refl_v = [(_reflector_in_vehicle(rf, ego), rf) for rf in config.reflectors]
    sens_v = sensor_velocity(ego, mount)

    for obj in config.objects:
        n = int(rng.integers(obj.det_min, obj.det_max + 1))
        center, vel, pts, heading = _object_points(obj, t, ego, max(n, 1), rng)
        r_c, az_c = to_sensor_frame(center[0], center[1], mount)
        if not mount.in_fov(r_c, az_c):
            continue
        anchors = []
        for k in range(n):
            p = pts[k]
            spill = k > 0 and anchors and rng.random() < obj.spill_fraction
            if spill:
                # slight offset from an in-box return, as seen by the sensor
                ar, aaz = anchors[int(rng.integers(len(anchors)))]
                pr = ar + rng.uniform(-0.15, 0.15)
                paz = aaz + rng.uniform(-1.0, 1.0)
                p = np.array(to_vehicle_frame(pr, paz, mount, check=False))
            r, az = to_sensor_frame(p[0], p[1], mount)
            if not mount.in_fov(r, az) or r == 0.0:
                continue
            if not spill:
                anchors.append((r, az))
            u = (p - mount.position) / r
            v_true = float(vel @ u)
            inside = _inside_box(p, center, heading, obj)
            det = _make_detection(
                p, v_true, rng.normal(5.0, 5.0), mount, ego, TrueSource.REAL_MOVING,
                obj.category if inside else BACKGROUND, noise, rng,
            )
            dets.append(det)
            obj_polar.append((r, az))
            moving.append((det, p))
        # specular ghosts of the object center
        for (a, b), rf in refl_v:
            if rf.reflectivity <= 0 or rng.random() >= rf.reflectivity:
                continue
            g = mirror_ghost(center, vel, (a, b), mount, ego)
            if g is None:
                continue
            gpos = np.array(to_vehicle_frame(g.range, g.azimuth, mount))
            if _too_close(gpos, obj_polar, mount, clutter):
                continue
            dets.append(
                _make_detection(gpos, g.v_comp_true, rng.normal(-8.0, 4.0), mount, ego, TrueSource.MIRROR_GHOST, BACKGROUND, noise, rng)
            )

    for det, p in moving:
        if clutter.velocity_alias > 0 and rng.random() < clutter.velocity_alias:
            g = ambiguity_ghost(det, VelocityAlias(clutter.v_span, 1 if rng.random() < 0.5 else -1), mount, ego)
            g = dataclasses.replace(g, rcs=det.rcs - 6.0)
            if not _too_close(p, obj_polar, mount, clutter):
                dets.append(g)
        if clutter.angle_alias > 0 and rng.random() < clutter.angle_alias:
            off = clutter.angle_offset * (1 if rng.random() < 0.5 else -1)
            g = ambiguity_ghost(det, AngleAlias(off), mount, ego)
            if g is not None:
                gpos = np.array(to_vehicle_frame(g.range, g.azimuth, mount))
                if not _too_close(gpos, obj_polar, mount, clutter):
                    dets.append(dataclasses.replace(g, rcs=det.rcs - 6.0))

    n_noise = int(rng.poisson(clutter.noise_per_scan)) if clutter.noise_per_scan > 0 else 0
    for _ in range(n_noise):
        p = _uniform_fov_point(mount, rng)
        if _too_close(p, obj_polar, mount, clutter):
            continue
        v = rng.uniform(-clutter.noise_v_max, clutter.noise_v_max)
        dets.append(_make_detection(p, v, rng.normal(-15.0, 4.0), mount, ego, TrueSource.NOISE, BACKGROUND, noise, rng))

    if len(dets) > config.max_detections:
        keep = np.sort(rng.choice(len(dets), config.max_detections, replace=False))
        dets = [dets[i] for i in keep]

    lo = max(config.stationary_min, config.min_detections - len(dets))
    hi = min(config.stationary_max, config.max_detections - len(dets))
    n_stat = int(rng.integers(min(lo, hi), hi + 1)) if hi > 0 else 0
    visible = []
    for (a, b), _rf in refl_v:
        visible.append((a, b))
    for _ in range(n_stat):
        p = None
        if visible and rng.random() < config.stationary_on_reflectors:
            a, b = visible[int(rng.integers(len(visible)))]
            for _try in range(4):
                q = a + (b - a) * rng.random()
                r, az = to_sensor_frame(q[0], q[1], mount)
                if mount.in_fov(r, az) and r > 0.5:
                    p = q
                    break
        if p is None:
            p = _uniform_fov_point(mount, rng)
        dets.append(_make_detection(p, 0.0, rng.normal(-5.0, 6.0), mount, ego, TrueSource.REAL_STATIONARY, BACKGROUND, noise, rng))

    return Scan(scan_id=scan_id, sensor_id=mount.sensor_id, timestamp=ego.timestamp, ego=ego, detections=tuple(dets))


def scan_schedule(config: ScenarioConfig) -> list[tuple[int, SensorMount]]:
    """Staggered ``(timestamp_us, mount)`` pairs sorted by time."""
    period = int(round(config.scan_interval * 1e6))
    n_mounts = len(config.mounts)
    end = int(round(config.duration * 1e6))
    events = []
    for i, mount in enumerate(config.mounts):
        t = (period * i) // n_mounts
        while t < end:
            events.append((t, i, mount))
            t += period
    events.sort(key=lambda e: (e[0], e[1]))
    return [(t, m) for t, _i, m in events]


def generate_recording(config: ScenarioConfig) -> list[Scan]:
    """Generate a deterministic recording from ``config`` (seeded by ``config.seed``)."""
    rng = np.random.default_rng(config.seed)
    schedule = scan_schedule(config)
    egos = _ego_at(config, [t for t, _m in schedule])
    return [_generate_scan(config, mount, ego, i, rng) for i, ((_t, mount), ego) in enumerate(zip(schedule, egos))]


def source_tally(scans: Iterable[Scan]) -> dict[str, int]:
    out = {s.value: 0 for s in TrueSource}
    for scan in scans:
        for det in scan.detections:
            out[det.true_source.value] += 1
    return out


# ---------------------------------------------------------------------------
# presets and (de)serialization


def _with_seed(cfg: ScenarioConfig, seed):
    return cfg if seed is None else dataclasses.replace(cfg, seed=int(seed))


def preset(name: str, seed: int | None = None, variant: int = 0) -> ScenarioConfig:
    """Named scenario. ``variant`` perturbs object placement deterministically."""
    rng = np.random.default_rng([variant, 7919])
    if name == "default":
        objects = tuple(
            ObjectSpec(
                x=float(rng.uniform(-20, 80)), y=float(rng.choice([-5.5, -2.0, 3.5, 7.0])),
                vx=float(rng.uniform(-15, 15)), vy=0.0,
                det_min=4, det_max=14, spill_fraction=0.1,
            )
            for _ in range(6)
        )
        cfg = ScenarioConfig(
            duration=2.0,
            mounts=DEFAULT_MOUNTS,
            ego=(EgoSegment(1.0, 10.0), EgoSegment(1.0, 10.0, 0.1)),
            objects=objects,
            reflectors=(Reflector(-50, 11.0, 200, 11.0, 0.6), Reflector(-50, -9.0, 200, -9.0, 0.6)),
            clutter=ClutterRates(velocity_alias=0.02, angle_alias=0.03, noise_per_scan=3.0),
        )
    elif name == "bridge-guardrail":
        lanes = (-5.25, -1.75, 1.75, 5.25)
        objects = tuple(
            ObjectSpec(x=float(x0), y=lane, vx=float(v), vy=0.0, det_min=5, det_max=14, spill_fraction=0.1)
            for x0, lane, v in zip(rng.uniform(-10, 60, 5), rng.choice(lanes, 5), rng.choice([-22.0, -18.0, 18.0, 24.0], 5))
        )
        cfg = ScenarioConfig(
            duration=2.0,
            mounts=DEFAULT_MOUNTS[:2],
            ego=(EgoSegment(10.0, 20.0),),
            objects=objects,
            reflectors=(Reflector(-100, 7.5, 400, 7.5, 0.9), Reflector(-100, -7.5, 400, -7.5, 0.9)),
            clutter=ClutterRates(noise_per_scan=1.0),
            stationary_on_reflectors=0.6,
        )
    elif name == "noise-bounded":
        # noise within the relabel tolerances; velocity noise and
        # compensation error together stay below 0.2 m/s
        objects = tuple(
            ObjectSpec(
                x=float(rng.uniform(10, 60)), y=float(rng.choice([-3.0, 0.0, 3.0])),
                vx=float(rng.choice([-1, 1]) * rng.uniform(3, 15)), vy=0.0,
                det_min=3, det_max=12, spill_fraction=0.3,
            )
            for _ in range(4)
        )
        cfg = ScenarioConfig(
            duration=3.0,
            mounts=DEFAULT_MOUNTS,
            ego=(EgoSegment(10.0, 8.0, 0.05),),
            objects=objects,
            reflectors=(Reflector(-100, 8.5, 300, 8.5, 0.8), Reflector(-100, -8.5, 300, -8.5, 0.8)),
            noise=NoiseModel(sigma_range=0.02, sigma_azimuth=0.1, sigma_v=0.03, comp_error=0.1, truncate=3.0),
            clutter=ClutterRates(
                angle_alias=0.05, angle_offset=25.0, noise_per_scan=2.0,
                clearance_range=0.3 + 0.12 + 0.05, clearance_azimuth=4.0 + 1.2 + 0.5,
            ),
        )
    elif name == "separable":
        # single front sensor; moving objects in the corridor between two
        # guardrails, ghosts behind them
        n_obj = int(rng.integers(2, 5))
        objects = tuple(
            ObjectSpec(
                x=float(rng.uniform(12, 60)), y=float(rng.uniform(-4.0, 4.0)),
                vx=float(rng.choice([-1, 1]) * rng.uniform(4, 14)), vy=0.0,
                det_min=6, det_max=14, spill_fraction=0.1,
            )
            for _ in range(n_obj)
        )
        cfg = ScenarioConfig(
            duration=0.3,
            scan_interval=0.075,
            mounts=(SensorMount(1, 3.6, 0.0, 0.0),),
            ego=(EgoSegment(10.0, float(rng.uniform(5, 12))),),
            objects=objects,
            reflectors=(Reflector(-100, 7.0, 300, 7.0, 1.0), Reflector(-100, -7.0, 300, -7.0, 1.0)),
            clutter=ClutterRates(noise_per_scan=0.0),
            stationary_min=30,
            stationary_max=120,
            stationary_on_reflectors=0.5,
        )
    else:
        raise ConfigError("preset", f"unknown preset {name!r}; choose from {', '.join(PRESETS)}")
    return _with_seed(cfg, seed if seed is not None else variant)


PRESETS = ("default", "bridge-guardrail", "noise-bounded", "separable")


_NESTED = {
    "mounts": SensorMount,
    "ego": EgoSegment,
    "objects": ObjectSpec,
    "reflectors": Reflector,
}
_SINGLE = {"noise": NoiseModel, "clutter": ClutterRates}


def _build(cls, data: dict, path: str):
    if not isinstance(data, dict):
        raise ConfigError(path, f"expected a table, got {type(data).__name__}")
    names = {f.name for f in dataclasses.fields(cls)}
    unknown = set(data) - names
    if unknown:
        raise ConfigError(f"{path}.{sorted(unknown)[0]}", "unknown key")
    try:
        return cls(**data)
    except ConfigError as exc:
        raise ConfigError(f"{path}.{exc.path}", str(exc).split(": ", 1)[-1]) from None
    except (TypeError, ValueError) as exc:
        raise ConfigError(path, str(exc)) from None


def config_from_dict(data: dict[str, Any]) -> ScenarioConfig:
    """Build a :class:`ScenarioConfig` from parsed TOML; errors carry a field path.

    A ``preset = "name"`` key starts from that preset and overrides scalars.
    """
    data = dict(data)
    base = None
    if "preset" in data:
        base = preset(str(data.pop("preset")), variant=int(data.pop("variant", 0)))
    kwargs: dict[str, Any] = {}
    for key, value in data.items():
        if key in _NESTED:
            if not isinstance(value, list):
                raise ConfigError(key, "expected an array of tables")
            kwargs[key] = tuple(_build(_NESTED[key], v, f"{key}[{i}]") for i, v in enumerate(value))
        elif key in _SINGLE:
            kwargs[key] = _build(_SINGLE[key], value, key)
        else:
            kwargs[key] = value
    if base is not None:
        try:
            return dataclasses.replace(base, **kwargs)
        except TypeError as exc:
            raise ConfigError("config", str(exc)) from None
    if "duration" not in kwargs:
        raise ConfigError("duration", "missing")
    if "mounts" not in kwargs:
        kwargs["mounts"] = DEFAULT_MOUNTS
    return _build(ScenarioConfig, kwargs, "config")


def config_to_dict(config: ScenarioConfig) -> dict[str, Any]:
    """Plain dict (lists, not tuples) that :func:`config_from_dict` accepts."""
    out = dataclasses.asdict(config)
    for key in _NESTED:
        out[key] = list(out[key])
    return out


def load_config(path) -> ScenarioConfig:
    try:
        import tomllib
    except ModuleNotFoundError:  # Python < 3.11
        import tomli as tomllib
    with open(path, "rb") as fh:
        try:
            data = tomllib.load(fh)
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(str(path), f"invalid TOML: {exc}") from None
    return config_from_dict(data)
