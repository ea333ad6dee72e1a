"""Central-difference gradient check for the numpy network."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import Model, loss_and_grad, make_plan


@dataclass
class GradCheckResult:
    max_rel_error: float
    worst_param: str
    n_checked: int


def rel_error(a, b, floor: float = 1e-6):
    """``|a - b| / max(|a| + |b|, floor)``; the floor keeps near-zero pairs from dominating."""
    return np.abs(a - b) / np.maximum(np.abs(a) + np.abs(b), floor)


def check(model: Model, feats, positions, labels, weights=(1.0, 1.0, 1.0), gamma=2.0, h=1e-4,
          max_per_param=None, seed=0) -> GradCheckResult:
    """Compare analytic gradients with central differences under a pinned plan.

    The plan is computed once so the sampling and grouping do not move while
    parameters are perturbed.
    """
    plan = make_plan(model.config, positions, rng=np.random.default_rng(seed))
    _loss, grads = loss_and_grad(model, feats, labels, weights, gamma, plan)
    rng = np.random.default_rng(seed + 1)
    worst, worst_name, count = 0.0, "", 0
    for name, p in model.params.items():
        flat = p.reshape(-1)
        idx = np.arange(flat.size)
        if max_per_param is not None and flat.size > max_per_param:
            idx = rng.choice(flat.size, max_per_param, replace=False)
        g = grads[name].reshape(-1)
        for i in idx:
            old = flat[i]
            flat[i] = old + h
            lp, _ = loss_and_grad(model, feats, labels, weights, gamma, plan)
            flat[i] = old - h
            lm, _ = loss_and_grad(model, feats, labels, weights, gamma, plan)
            flat[i] = old
            num = (lp - lm) / (2 * h)
            err = float(rel_error(g[i], num))
            count += 1
            if err > worst:
                worst, worst_name = err, f"{name}[{i}]"
    return GradCheckResult(worst, worst_name, count)


def kink_margin(model: Model, feats, plan) -> float:
    """Smallest distance of the current state from a non-differentiable point.

    Takes the minimum over every ReLU pre-activation ``|z|`` and every
    max-pool gap between the winning member and the runner-up (distinct
    points only). Central differences are only meaningful when this margin
    is large compared with the step size.
    """
    from .model import forward

    _logits, cache = forward(model, feats, plan=plan, keep_cache=True)
    cfg = model.config
    margin = np.inf
    for key, acts in cache.items():
        if not isinstance(acts, list) or not acts or not isinstance(acts[0], np.ndarray):
            continue
        start = cache[key + ".start"]
        for i in range(len(acts) // 2):
            layer = start + i
            z = acts[2 * i] @ model.params[f"{key}.{layer}.W"] + model.params[f"{key}.{layer}.b"]
            margin = min(margin, float(np.abs(z).min()))
        if key + ".z0" in cache:
            margin = min(margin, float(np.abs(cache[key + ".z0"]).min()))
    k = cfg.group_size
    for lvl in range(len(cfg.sa_samples)):
        for sc in range(len(cfg.sa_radii[lvl])):
            y = cache[f"sa{lvl}.s{sc}"][-1]
            y = y.reshape(-1, k, y.shape[1]).copy()
            idx = plan.groups[lvl][sc].reshape(-1, k)
            for j in range(1, k):
                dup = (idx[:, :j] == idx[:, j : j + 1]).any(axis=1)
                y[dup, j, :] = -np.inf
            top = np.sort(y, axis=1)
            best, second = top[:, -1, :], np.maximum(top[:, -2, :], 0.0)
            live = best > 0
            if live.any():
                margin = min(margin, float((best - second)[live].min()))
    return margin


def smooth_case(config, min_margin: float = 1e-3, batch: int = 1, max_tries: int = 500):
    """First seeded random case whose kink margin is at least ``min_margin``.

    Returns ``(seed, model, feats, positions, labels)``. Biases are drawn
    from a small normal so that dead units do not sit exactly on a kink.
    """
    from .model import Model

    for seed in range(max_tries):
        rng = np.random.default_rng(seed)
        model = Model.create(config, seed=seed)
        for name, value in model.params.items():
            if name.endswith(".b"):
                value[:] = rng.normal(0.0, 0.1, value.shape)
        pos = rng.uniform(-5.0, 5.0, (batch, config.n_points, 2))
        feats = rng.normal(size=(batch, config.n_points, config.n_features))
        labels = rng.integers(0, config.n_classes, (batch, config.n_points))
        plan = make_plan(config, pos, rng=np.random.default_rng(seed))
        if kink_margin(model, feats, plan) >= min_margin:
            return seed, model, feats, pos, labels
    raise RuntimeError(f"no case with kink margin >= {min_margin} in {max_tries} tries")
