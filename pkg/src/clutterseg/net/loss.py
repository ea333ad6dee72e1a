"""Focal loss, class weighting and the cyclical learning-rate schedule."""
from __future__ import annotations

import numpy as np

from ..errors import ContractError, InfeasibleError


def class_weights(f_moving: float, f_clutter: float, f_stationary: float, w_stationary: float = 0.6):
    """Weights for moving objects and clutter given class frequencies.

    Both classes get the same weighted share of the remaining mass, so
    ``w_o*f_o == w_c*f_c`` and ``w_o*f_o + w_c*f_c + w_s*f_s == 1``.
    """
    freqs = (f_moving, f_clutter, f_stationary)
    if any(not f > 0 for f in freqs):
        raise InfeasibleError(f"class frequencies must be positive, got {freqs}")
    if abs(sum(freqs) - 1.0) > 1e-9:
        raise InfeasibleError(f"class frequencies must sum to 1, got {sum(freqs)}")
    share = 1.0 - w_stationary * f_stationary
    if not share > 0:
        raise InfeasibleError(f"w_s*f_s = {w_stationary * f_stationary} leaves no weight for the other classes")
    half = share / 2.0
    return half / f_moving, half / f_clutter


def log_softmax(logits):
    z = logits - logits.max(axis=-1, keepdims=True)
    return z - np.log(np.exp(z).sum(axis=-1, keepdims=True))


def focal_loss(logits, labels, weights, gamma, mask=None, return_grad=False):
    """Mean over masked points of ``-w_y * (1 - p_t)**gamma * log(p_t)``.

    ``logits`` is ``(..., C)``, ``labels`` integer class indices with the
    same leading shape. With ``return_grad`` the gradient w.r.t. ``logits``
    is returned as well.
    """
    logits = np.asarray(logits, dtype=float)
    c = logits.shape[-1]
    z = logits.reshape(-1, c)
    y = np.asarray(labels).reshape(-1).astype(np.int64)
    m = np.ones(len(y), dtype=bool) if mask is None else np.asarray(mask, dtype=bool).reshape(-1)
    n = int(m.sum())
    if n == 0:
        raise ContractError("focal_loss: empty mask")
    w = np.asarray(weights, dtype=float)[y]
    logp_all = log_softmax(z)
    logp = logp_all[np.arange(len(y)), y]
    p = np.exp(logp)
    one_minus = np.clip(1.0 - p, 0.0, None)
    mod = one_minus**gamma if gamma else np.ones_like(p)
    per_point = -w * mod * logp
    loss = float(per_point[m].sum() / n)
    if not return_grad:
        return loss
    # (dL/dp_t) * p_t, then chain through softmax: dp_t/dz_j = p_t (delta_tj - p_j)
    if gamma:
        dmod = gamma * one_minus ** (gamma - 1) if gamma != 1 else np.ones_like(p)
        coef = -w * (mod - dmod * p * logp)
    else:
        coef = -w
    probs = np.exp(logp_all)
    onehot = np.zeros_like(z)
    onehot[np.arange(len(y)), y] = 1.0
    g = coef[:, None] * (onehot - probs)
    g[~m] = 0.0
    g /= n
    return loss, g.reshape(logits.shape)


def cross_entropy(logits, labels, weights, mask=None):
    """Weighted cross-entropy, mean over masked points (reference for focal loss)."""
    z = np.asarray(logits, dtype=float).reshape(-1, np.shape(logits)[-1])
    y = np.asarray(labels).reshape(-1)
    m = np.ones(len(y), dtype=bool) if mask is None else np.asarray(mask, dtype=bool).reshape(-1)
    total = 0.0
    for zi, yi, keep in zip(z, y, m):
        if not keep:
            continue
        zmax = max(zi)
        lse = zmax + np.log(sum(np.exp(v - zmax) for v in zi))
        total += -weights[yi] * (zi[yi] - lse)
    return total / m.sum()


def cyclical_lr(step: int, lr_min: float = 1e-9, lr_max: float = 1e-3, half_cycle: int = 1000) -> float:
    """Triangular wave between ``lr_min`` (step 0) and ``lr_max`` (step ``half_cycle``)."""
    if step < 0:
        raise ContractError("step must be >= 0")
    pos = step % (2 * half_cycle)
    frac = pos / half_cycle if pos <= half_cycle else (2 * half_cycle - pos) / half_cycle
    return lr_min + (lr_max - lr_min) * frac
