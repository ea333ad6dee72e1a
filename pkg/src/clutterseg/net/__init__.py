"""Point-cloud segmentation networks (numpy, CPU)."""
from .config import NETWORK_PRESETS, NetworkConfig, TrainConfig, tiny_b, variant_a, variant_b, variant_b_small
from .model import (
    Model,
    Plan,
    backward,
    ball_query,
    farthest_point_sample,
    forward,
    fp_forward,
    loss_and_grad,
    make_plan,
    param_manifest,
    predict,
    sa_forward,
)

__all__ = [
    "NETWORK_PRESETS",
    "NetworkConfig",
    "TrainConfig",
    "Model",
    "Plan",
    "backward",
    "ball_query",
    "farthest_point_sample",
    "fp_forward",
    "sa_forward",
    "forward",
    "loss_and_grad",
    "make_plan",
    "param_manifest",
    "predict",
    "tiny_b",
    "variant_a",
    "variant_b",
    "variant_b_small",
]
