"""Network and training configurations for the two segmentation variants."""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field

from ..errors import ConfigError


@dataclass(frozen=True)
class NetworkConfig:
    variant: str
    n_points: int
    sa_samples: tuple[int, ...]
    sa_radii: tuple[tuple[float, ...], ...]  # meters, per level per scale
    sa_mlps: tuple[tuple[int, ...], ...]  # per level, shared by all scales
    fp_mlps: tuple[tuple[int, ...], ...]  # coarse to fine
    group_size: int = 32
    fp_k: int = 3
    preproc: tuple[int, ...] = ()  # unit PointNet in front of the encoder
    head: tuple[int, ...] = (64,)
    n_classes: int = 3
    n_features: int = 11

    def __post_init__(self):
        if self.variant not in ("A", "B"):
            raise ConfigError("variant", f"must be 'A' or 'B', got {self.variant!r}")
        n_levels = len(self.sa_samples)
        if not (len(self.sa_radii) == len(self.sa_mlps) == len(self.fp_mlps) == n_levels):
            raise ConfigError("sa_samples", "sa_samples, sa_radii, sa_mlps and fp_mlps must have one entry per level")
        if self.sa_samples[0] > self.n_points:
            raise ConfigError("sa_samples", f"first level samples {self.sa_samples[0]} > n_points {self.n_points}")
        if any(b >= a for a, b in zip(self.sa_samples, self.sa_samples[1:])):
            raise ConfigError("sa_samples", "must be strictly decreasing")
        for i, radii in enumerate(self.sa_radii):
            if not radii or any(r <= 0 for r in radii):
                raise ConfigError(f"sa_radii[{i}]", "radii must be positive")
            if any(b <= a for a, b in zip(radii, radii[1:])):
                raise ConfigError(f"sa_radii[{i}]", "radii must be strictly increasing across scales")
        if self.group_size < 1:
            raise ConfigError("group_size", "must be >= 1")
        if self.fp_k < 1:
            raise ConfigError("fp_k", "must be >= 1")
        if self.variant == "B" and not self.preproc:
            raise ConfigError("preproc", "variant B requires preprocessing channels")
        if self.variant == "A" and self.preproc:
            raise ConfigError("preproc", "variant A has no preprocessing module")

    def to_dict(self):
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        for key in ("sa_samples", "preproc", "head"):
            d[key] = tuple(d[key])
        for key in ("sa_radii", "sa_mlps", "fp_mlps"):
            d[key] = tuple(tuple(v) for v in d[key])
        return cls(**d)


def variant_a(n_points: int = 1280, **overrides) -> NetworkConfig:
    cfg = NetworkConfig(
        variant="A",
        n_points=n_points,
        sa_samples=(1024, 512, 256),
        sa_radii=((1.0, 3.0), (2.0, 5.0), (4.0, 10.0)),
        sa_mlps=((32, 32, 64), (64, 64, 128), (128, 128, 256)),
        fp_mlps=((128, 128), (128, 64), (64, 64)),
        head=(64,),
    )
    return dataclasses.replace(cfg, **overrides)


def variant_b(n_points: int = 330, **overrides) -> NetworkConfig:
    cfg = NetworkConfig(
        variant="B",
        n_points=n_points,
        sa_samples=(256, 128, 64),
        sa_radii=((1.0, 3.0, 6.0), (2.0, 4.0, 8.0), (3.0, 6.0, 12.0)),
        sa_mlps=((16, 16, 32), (32, 32, 64), (64, 64, 128)),
        fp_mlps=((128, 128), (128, 64), (64, 64)),
        preproc=(64, 64, 32),
        head=(64,),
    )
    return dataclasses.replace(cfg, **overrides)


def variant_b_small(n_points: int = 330, **overrides) -> NetworkConfig:
    """Variant B topology with reduced widths for CPU training."""
    cfg = variant_b(
        n_points,
        sa_mlps=((8, 16), (16, 32), (32, 32)),
        fp_mlps=((32,), (32,), (16,)),
        preproc=(16, 16, 16),
        head=(16,),
        group_size=8,
    )
    return dataclasses.replace(cfg, **overrides)


def tiny_b(**overrides) -> NetworkConfig:
    """16-point variant-B topology used for finite-difference checks."""
    cfg = NetworkConfig(
        variant="B",
        n_points=16,
        sa_samples=(8, 4, 2),
        sa_radii=((1.0, 3.0, 6.0), (2.0, 4.0, 8.0), (3.0, 6.0, 12.0)),
        sa_mlps=((4, 8), (8, 8), (8, 8)),
        fp_mlps=((8,), (8,), (8, 8)),
        preproc=(8, 8, 4),
        head=(8,),
        group_size=4,
    )
    return dataclasses.replace(cfg, **overrides)


NETWORK_PRESETS = {"a": variant_a, "b": variant_b, "b-small": variant_b_small, "tiny-b": tiny_b}


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 20
    batch_size: int = 8
    lr_min: float = 1e-9
    lr_max: float = 1e-3
    half_cycle: int | None = None  # steps; None = two epochs
    gamma: float = 2.0
    class_weights: tuple[float, float, float] | None = None  # None = derive from data
    w_stationary: float = 0.6
    seed: int = 0
    adam_betas: tuple[float, float] = (0.9, 0.999)
    adam_eps: float = 1e-8

    def __post_init__(self):
        if not 0 < self.lr_min < self.lr_max:
            raise ConfigError("lr_min", "need 0 < lr_min < lr_max")
        if self.gamma < 0:
            raise ConfigError("gamma", "must be >= 0")
        if self.class_weights is not None and any(w <= 0 for w in self.class_weights):
            raise ConfigError("class_weights", "weights must be positive")
        if self.epochs < 0:
            raise ConfigError("epochs", "must be >= 0")
        if self.batch_size < 1:
            raise ConfigError("batch_size", "must be >= 1")
        if self.half_cycle is not None and self.half_cycle < 1:
            raise ConfigError("half_cycle", "must be >= 1")

    def to_dict(self):
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        if d.get("class_weights") is not None:
            d["class_weights"] = tuple(d["class_weights"])
        d["adam_betas"] = tuple(d.get("adam_betas", (0.9, 0.999)))
        return cls(**d)
