"""PointNet++-style encoder/decoder with multi-scale grouping, in numpy.

The forward pass is split in two stages:

* :func:`make_plan` runs the non-differentiable geometry (farthest point
  sampling, ball queries, 3-NN interpolation weights) on the compiled
  kernels;
* :func:`forward` evaluates the layers for a batch under a fixed plan and
  optionally keeps a cache for :func:`backward`, which returns exact
  reverse-mode gradients for every parameter.

All arrays are float64. Batches have a fixed number of points per cloud, so
level ``l`` holds ``B * sa_samples[l]`` rows and grouping uses flat indices.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .. import kernels
from ..errors import ContractError, TrainingError
from ..features import Standardizer
from .config import NetworkConfig


# ---------------------------------------------------------------------------
# parameters


def _mlp_shapes(prefix, c_in, widths):
    shapes = []
    for i, c_out in enumerate(widths):
        shapes.append((f"{prefix}.{i}.W", (c_in, c_out)))
        shapes.append((f"{prefix}.{i}.b", (c_out,)))
        c_in = c_out
    return shapes, c_in


def param_manifest(config: NetworkConfig) -> list[tuple[str, tuple[int, ...]]]:
    """Ordered ``(name, shape)`` list; a pure function of the config."""
    shapes = []
    c = config.n_features
    if config.preproc:
        s, c = _mlp_shapes("pre", c, config.preproc)
        shapes += s
    skip_channels = [c]
    for lvl, widths in enumerate(config.sa_mlps):
        c_out = 0
        for sc in range(len(config.sa_radii[lvl])):
            s, co = _mlp_shapes(f"sa{lvl}.s{sc}", c + 2, widths)
            shapes += s
            c_out += co
        c = c_out
        skip_channels.append(c)
    # decoder: coarsest level back to the input points
    n_levels = len(config.sa_samples)
    for j, widths in enumerate(config.fp_mlps):
        fine = n_levels - 1 - j
        s, c = _mlp_shapes(f"fp{j}", c + skip_channels[fine], widths)
        shapes += s
    s, c = _mlp_shapes("head", c, config.head)
    shapes += s
    shapes.append(("out.W", (c, config.n_classes)))
    shapes.append(("out.b", (config.n_classes,)))
    return shapes


def n_params(config: NetworkConfig) -> int:
    return int(sum(np.prod(shape) for _n, shape in param_manifest(config)))


def init_params(config: NetworkConfig, seed: int = 0) -> dict[str, np.ndarray]:
    """He-normal weights, zero biases."""
    rng = np.random.default_rng([seed, 0x5EED])
    params = {}
    for name, shape in param_manifest(config):
        if name.endswith(".W"):
            params[name] = rng.normal(0.0, np.sqrt(2.0 / shape[0]), shape)
        else:
            params[name] = np.zeros(shape)
    return params


def flatten(params: dict[str, np.ndarray], config: NetworkConfig) -> np.ndarray:
    return np.concatenate([params[n].ravel() for n, _s in param_manifest(config)])


def unflatten(flat: np.ndarray, config: NetworkConfig) -> dict[str, np.ndarray]:
    out = {}
    off = 0
    for name, shape in param_manifest(config):
        size = int(np.prod(shape))
        out[name] = np.array(flat[off : off + size], dtype=float).reshape(shape)
        off += size
    if off != len(flat):
        raise ContractError(f"flat parameter vector has {len(flat)} entries, config needs {off}")
    return out


@dataclass
class Model:
    config: NetworkConfig
    params: dict[str, np.ndarray]
    standardizer: Standardizer = field(default_factory=Standardizer.identity)

    @classmethod
    def create(cls, config: NetworkConfig, seed: int = 0, standardizer: Standardizer | None = None):
        return cls(config, init_params(config, seed), standardizer or Standardizer.identity())

    def copy(self):
        return Model(self.config, {k: v.copy() for k, v in self.params.items()}, self.standardizer)


# ---------------------------------------------------------------------------
# geometry plan


@dataclass
class Plan:
    """Sampling/grouping/interpolation indices for one batch (flat, global)."""

    batch: int
    sizes: list[int]  # points per cloud at each level, input first
    positions: list[np.ndarray]  # per level, (B*n_l, 2)
    centers: list[np.ndarray]  # per SA level, global row into previous level
    groups: list[list[np.ndarray]]  # per SA level, per scale: (B*m*K,) global rows
    degenerate: list[list[np.ndarray]]
    interp_idx: list[np.ndarray]  # per FP stage: (B*n_fine, k) global rows
    interp_w: list[np.ndarray]


def make_plan(config: NetworkConfig, positions: np.ndarray, starts=None, rng=None) -> Plan:
    """Run sampling and grouping for a batch of clouds ``(B, N, 2)``.

    ``starts`` gives the first FPS index per cloud and level as an array of
    shape ``(B, n_levels)``; otherwise it is drawn from ``rng`` (or 0 when
    ``rng`` is None).
    """
    pos = np.asarray(positions, dtype=np.float64)
    if pos.ndim == 2:
        pos = pos[None]
    b, n, _ = pos.shape
    n_levels = len(config.sa_samples)
    if starts is None:
        if rng is None:
            starts = np.zeros((b, n_levels), dtype=np.int64)
        else:
            sizes = (n,) + tuple(config.sa_samples[:-1])
            starts = np.stack([rng.integers(0, s, b) for s in sizes], axis=1)
    starts = np.asarray(starts, dtype=np.int64).reshape(b, n_levels)
    level_pos = [pos]
    sizes = [n]
    centers, groups, degenerate = [], [], []
    for lvl, m in enumerate(config.sa_samples):
        prev = level_pos[-1]
        n_prev = prev.shape[1]
        if m > n_prev:
            raise ContractError(f"level {lvl}: cannot sample {m} of {n_prev} points")
        c_idx = np.empty((b, m), dtype=np.int64)
        g_scales = [np.empty((b, m, config.group_size), dtype=np.int64) for _ in config.sa_radii[lvl]]
        d_scales = [np.empty((b, m), dtype=bool) for _ in config.sa_radii[lvl]]
        for i in range(b):
            c_idx[i] = kernels.fps(prev[i], m, int(starts[i, lvl]))
            cpos = prev[i][c_idx[i]]
            for sc, radius in enumerate(config.sa_radii[lvl]):
                g, d = kernels.ball_query(prev[i], cpos, radius, config.group_size)
                g_scales[sc][i] = g
                d_scales[sc][i] = d
        offs = (np.arange(b) * n_prev)[:, None]
        centers.append((c_idx + offs).ravel())
        groups.append([(g + offs[:, :, None]).ravel() for g in g_scales])
        degenerate.append([d.ravel() for d in d_scales])
        level_pos.append(np.take_along_axis(prev, c_idx[:, :, None], axis=1))
        sizes.append(m)
    interp_idx, interp_w = [], []
    for j in range(n_levels):
        coarse = level_pos[n_levels - j]
        fine = level_pos[n_levels - 1 - j]
        k = min(config.fp_k, coarse.shape[1])
        idx = np.empty((b, fine.shape[1], k), dtype=np.int64)
        w = np.empty((b, fine.shape[1], k))
        for i in range(b):
            idx[i], w[i] = kernels.three_nn(fine[i], coarse[i], k)
        idx += (np.arange(b) * coarse.shape[1])[:, None, None]
        interp_idx.append(idx.reshape(-1, k))
        interp_w.append(w.reshape(-1, k))
    return Plan(
        batch=b,
        sizes=sizes,
        positions=[p.reshape(-1, 2) for p in level_pos],
        centers=centers,
        groups=groups,
        degenerate=degenerate,
        interp_idx=interp_idx,
        interp_w=interp_w,
    )


# ---------------------------------------------------------------------------
# layers


def _mlp_forward(params, prefix, x, n_layers, cache, start=0):
    acts = []
    for i in range(start, n_layers):
        z = x @ params[f"{prefix}.{i}.W"] + params[f"{prefix}.{i}.b"]
        acts.append(x)
        x = np.maximum(z, 0.0)
        acts.append(x)
    if cache is not None:
        cache[prefix] = acts
        cache[prefix + ".start"] = start
    return x


def _mlp_backward(params, prefix, g, n_layers, cache, grads):
    acts = cache[prefix]
    start = cache[prefix + ".start"]
    for i in reversed(range(start, n_layers)):
        x_in, x_out = acts[2 * (i - start)], acts[2 * (i - start) + 1]
        g = g * (x_out > 0.0)
        W = params[f"{prefix}.{i}.W"]
        grads[f"{prefix}.{i}.W"] = x_in.T @ g
        grads[f"{prefix}.{i}.b"] = g.sum(axis=0)
        g = g @ W.T
    return g


def _group_first_layer(params, prefix, h, rel, g_idx):
    """First shared-MLP layer on ``[rel, h[g_idx]]`` without materializing the concatenation.

    The feature part is projected once per source point and then gathered,
    which is exact and much cheaper than projecting every group member.
    """
    W = params[prefix + ".0.W"]
    proj = h @ W[2:]
    return rel @ W[:2] + proj[g_idx] + params[prefix + ".0.b"]


def forward(model: Model, feats: np.ndarray, positions: np.ndarray | None = None, plan: Plan | None = None,
            rng=None, check_size: bool = True, keep_cache: bool = False):
    """Per-point logits for a batch.

    ``feats`` is the standardized feature tensor ``(B, N, F)`` (or ``(N, F)``),
    ``positions`` the metric vehicle-frame coordinates ``(B, N, 2)``. Returns
    ``logits`` of shape ``(B, N, n_classes)``; with ``keep_cache`` also the
    cache needed by :func:`backward`.
    """
    cfg = model.config
    params = model.params
    x = np.asarray(feats, dtype=np.float64)
    if x.ndim == 2:
        x = x[None]
    b, n, f = x.shape
    if f != cfg.n_features:
        raise ContractError(f"expected {cfg.n_features} features, got {f}")
    if check_size and n != cfg.n_points:
        raise ContractError(f"expected clouds of {cfg.n_points} points, got {n}")
    if plan is None:
        if positions is None:
            raise ContractError("positions or a precomputed plan are required")
        plan = make_plan(cfg, positions, rng=rng)
    elif plan.batch != b or plan.sizes[0] != n:
        raise ContractError("plan does not match the batch shape")
    cache = {"plan": plan} if keep_cache else None

    h = x.reshape(b * n, f)
    if cfg.preproc:
        h = _mlp_forward(params, "pre", h, len(cfg.preproc), cache)
    level_feats = [h]
    for lvl, widths in enumerate(cfg.sa_mlps):
        prev_pos = plan.positions[lvl]
        center_pos = prev_pos[plan.centers[lvl]]
        k = cfg.group_size
        pooled = []
        for sc, radius in enumerate(cfg.sa_radii[lvl]):
            g_idx = plan.groups[lvl][sc]
            rel = (prev_pos[g_idx] - np.repeat(center_pos, k, axis=0)) / radius
            prefix = f"sa{lvl}.s{sc}"
            z0 = _group_first_layer(params, prefix, h, rel, g_idx)
            y = _mlp_forward(params, prefix, np.maximum(z0, 0.0), len(widths), cache, start=1)
            y = y.reshape(-1, k, y.shape[1])
            arg = y.argmax(axis=1)
            pooled.append(np.take_along_axis(y, arg[:, None, :], axis=1)[:, 0, :])
            if cache is not None:
                cache[prefix + ".arg"] = arg
                cache[prefix + ".z0"] = z0
                cache[prefix + ".rel"] = rel
        if cache is not None:
            cache[f"sa{lvl}.in"] = h
        h = np.concatenate(pooled, axis=1)
        level_feats.append(h)

    n_levels = len(cfg.sa_samples)
    for j, widths in enumerate(cfg.fp_mlps):
        fine = n_levels - 1 - j
        idx, w = plan.interp_idx[j], plan.interp_w[j]
        interp = np.einsum("nk,nkc->nc", w, h[idx])
        h = np.concatenate([interp, level_feats[fine]], axis=1)
        h = _mlp_forward(params, f"fp{j}", h, len(widths), cache)
        if cache is not None:
            cache[f"fp{j}.split"] = interp.shape[1]

    h = _mlp_forward(params, "head", h, len(cfg.head), cache)
    if cache is not None:
        cache["out.in"] = h
    logits = h @ params["out.W"] + params["out.b"]
    logits = logits.reshape(b, n, cfg.n_classes)
    if keep_cache:
        cache["level_channels"] = [lf.shape[1] for lf in level_feats]
        return logits, cache
    return logits


def backward(model: Model, cache, dlogits: np.ndarray) -> dict[str, np.ndarray]:
    """Gradients of a scalar objective w.r.t. every parameter, given ``dL/dlogits``."""
    cfg = model.config
    params = model.params
    plan: Plan = cache["plan"]
    grads: dict[str, np.ndarray] = {}
    g = np.asarray(dlogits, dtype=np.float64).reshape(-1, cfg.n_classes)
    grads["out.W"] = cache["out.in"].T @ g
    grads["out.b"] = g.sum(axis=0)
    g = g @ params["out.W"].T
    g = _mlp_backward(params, "head", g, len(cfg.head), cache, grads)

    n_levels = len(cfg.sa_samples)
    channels = cache["level_channels"]
    level_grads = [np.zeros((plan.batch * plan.sizes[i], channels[i])) for i in range(n_levels + 1)]

    # decoder, finest stage first; g is dL/d(output of fp{j})
    for j in reversed(range(len(cfg.fp_mlps))):
        g = _mlp_backward(params, f"fp{j}", g, len(cfg.fp_mlps[j]), cache, grads)
        split = cache[f"fp{j}.split"]
        fine = n_levels - 1 - j
        level_grads[fine] += g[:, split:]
        idx, w = plan.interp_idx[j], plan.interp_w[j]
        contrib = (w[:, :, None] * g[:, None, :split]).reshape(-1, split)
        g = kernels.scatter_add(plan.batch * plan.sizes[fine + 1], idx.ravel(), contrib)
    level_grads[n_levels] += g

    # encoder, coarsest level first
    k = cfg.group_size
    for lvl in reversed(range(n_levels)):
        g_out = level_grads[lvl + 1]
        width = cfg.sa_mlps[lvl][-1]
        rows = g_out.shape[0]
        n_prev_rows = level_grads[lvl].shape[0]
        for sc in range(len(cfg.sa_radii[lvl])):
            prefix = f"sa{lvl}.s{sc}"
            arg = cache[prefix + ".arg"]
            dy = np.zeros((rows, k, width))
            np.put_along_axis(dy, arg[:, None, :], g_out[:, sc * width : (sc + 1) * width][:, None, :], axis=1)
            g0 = _mlp_backward(params, prefix, dy.reshape(rows * k, width), len(cfg.sa_mlps[lvl]), cache, grads)
            g0 = g0 * (cache[prefix + ".z0"] > 0.0)
            W = params[prefix + ".0.W"]
            # relative coordinates depend only on fixed positions
            per_point = kernels.scatter_add(n_prev_rows, plan.groups[lvl][sc], g0)
            grads[prefix + ".0.W"] = np.concatenate([cache[prefix + ".rel"].T @ g0, cache[f"sa{lvl}.in"].T @ per_point])
            grads[prefix + ".0.b"] = g0.sum(axis=0)
            level_grads[lvl] += per_point @ W[2:].T

    if cfg.preproc:
        _mlp_backward(params, "pre", level_grads[0], len(cfg.preproc), cache, grads)
    return grads


def loss_and_grad(model: Model, feats, labels, weights, gamma, plan: Plan, mask=None, check_size=True):
    """Focal loss over a batch and its parameter gradients."""
    from .loss import focal_loss

    logits, cache = forward(model, feats, plan=plan, check_size=check_size, keep_cache=True)
    loss, dlogits = focal_loss(logits, labels, weights, gamma, mask=mask, return_grad=True)
    if not np.isfinite(loss):
        raise TrainingError(f"non-finite loss {loss}")
    return loss, backward(model, cache, dlogits)


def predict(model: Model, feats, positions, seed: int = 0, check_size: bool = True) -> np.ndarray:
    """Class indices for one standardized cloud ``(N, F)`` with metric positions ``(N, 2)``."""
    rng = np.random.default_rng(seed)
    logits = forward(model, feats, positions, rng=rng, check_size=check_size)
    return logits[0].argmax(axis=1)


# ---------------------------------------------------------------------------
# single-cloud building blocks (validated wrappers around the kernels)


def farthest_point_sample(points, m: int, seed=0) -> np.ndarray:
    """``m`` FPS indices; the first one is drawn uniformly from ``seed``."""
    pts = np.asarray(points, dtype=np.float64).reshape(-1, 2)
    n = len(pts)
    if not 0 <= m <= n:
        raise ContractError(f"cannot sample {m} of {n} points")
    if m == 0:
        return np.zeros(0, dtype=np.int64)
    start = int(np.random.default_rng(seed).integers(0, n))
    return kernels.fps(pts, m, start)


def ball_query(points, centers, radius: float, k: int):
    """Groups of ``k`` indices per center and the degenerate (empty ball) flags."""
    if not radius > 0:
        raise ContractError("radius must be positive")
    if k < 1:
        raise ContractError("group size must be >= 1")
    return kernels.ball_query(np.asarray(points, float).reshape(-1, 2),
                              np.asarray(centers, float).reshape(-1, 2), float(radius), int(k))


def _apply_mlp(layers, x):
    for W, b in layers:
        x = np.maximum(x @ W + b, 0.0)
    return x


def sa_forward(positions, features, m: int, radii, group_size: int, mlps, seed=0):
    """One set-abstraction level on a single cloud.

    ``mlps`` holds one list of ``(W, b)`` layers per radius. Returns the
    sampled positions and the concatenated per-scale pooled features.
    """
    pos = np.asarray(positions, dtype=float).reshape(-1, 2)
    feats = np.asarray(features, dtype=float).reshape(len(pos), -1)
    centers = farthest_point_sample(pos, m, seed)
    cpos = pos[centers]
    pooled = []
    for radius, layers in zip(radii, mlps):
        idx, _deg = ball_query(pos, cpos, radius, group_size)
        rel = (pos[idx] - cpos[:, None, :]) / radius
        grouped = np.concatenate([rel, feats[idx]], axis=2)
        pooled.append(_apply_mlp(layers, grouped).max(axis=1))
    return cpos, np.concatenate(pooled, axis=1)


def fp_forward(coarse_pos, coarse_feats, fine_pos, skip, mlp, k: int = 3):
    """Inverse-distance interpolation onto ``fine_pos``, skip concatenation, shared MLP."""
    idx, w = kernels.three_nn(np.asarray(fine_pos, float).reshape(-1, 2),
                              np.asarray(coarse_pos, float).reshape(-1, 2), k)
    interp = np.einsum("nk,nkc->nc", w, np.asarray(coarse_feats, float)[idx])
    h = interp if skip is None else np.concatenate([interp, np.asarray(skip, float)], axis=1)
    return _apply_mlp(mlp, h)
