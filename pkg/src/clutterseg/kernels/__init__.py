"""Point-cloud kernels with a compiled core and a numpy fallback.

The compiled extension is used when it imports cleanly. Setting
``CLUTTERSEG_KERNELS=python`` forces the fallback. ``BACKEND`` reports the
active choice.

Functions
---------
fps(points, m, start)
    Farthest point sampling; returns ``m`` indices starting at ``start``,
    lowest index wins ties, already chosen points are never repeated.
ball_query(points, centers, radius, k)
    Up to ``k`` in-radius indices per center, nearest first (index breaks
    ties), padded with the nearest one. Empty balls fall back to the center's
    nearest point repeated and set the ``degenerate`` flag.
three_nn(fine, coarse, k)
    ``k`` nearest coarse points per fine point with normalized inverse
    squared-distance weights; an exact coincidence takes all the weight.
scatter_add(n_rows, idx, values)
    Row-wise accumulation ``out[idx[i]] += values[i]``.
"""
import os

from . import _pykernels

BACKEND = "python"
if os.environ.get("CLUTTERSEG_KERNELS", "").lower() != "python":
    try:
        from . import _ckernels as _impl

        BACKEND = "cython"
    except ImportError:
        _impl = _pykernels
else:
    _impl = _pykernels

fps = _impl.fps
ball_query = _impl.ball_query
three_nn = _impl.three_nn
scatter_add = _impl.scatter_add

__all__ = ["BACKEND", "fps", "ball_query", "three_nn", "scatter_add"]
