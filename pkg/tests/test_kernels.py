import importlib

import numpy as np
import pytest

from clutterseg import kernels
from clutterseg.kernels import _pykernels as py

try:
    from clutterseg.kernels import _ckernels as cy
except ImportError:  # extension not built
    cy = None

IMPLS = [py] + ([cy] if cy is not None else [])
needs_cy = pytest.mark.skipif(cy is None, reason="compiled kernels not built")


@pytest.mark.parametrize("impl", IMPLS)
def test_fps_collinear(impl):
    pts = np.array([[0.0, 0], [1, 0], [10, 0]])
    assert impl.fps(pts, 2, 0).tolist() == [0, 2]


@pytest.mark.parametrize("impl", IMPLS)
def test_fps_full_and_duplicates(impl):
    pts = np.array([[0.0, 0], [0, 0], [1, 0], [1, 0], [5, 5]])
    idx = impl.fps(pts, 5, 0)
    assert sorted(idx.tolist()) == [0, 1, 2, 3, 4]
    # the three distinct positions come first
    assert len({tuple(pts[i]) for i in idx[:3]}) == 3


@pytest.mark.parametrize("impl", IMPLS)
def test_ball_query_examples(impl):
    pts = np.array([[0.0, 0], [0.1, 0], [0.2, 0], [0.3, 0], [0.4, 0], [5, 5]])
    idx, degen = impl.ball_query(pts, np.array([[0.0, 0]]), 1.0, 3)
    assert idx[0].tolist() == [0, 1, 2] and not degen[0]
    idx, degen = impl.ball_query(pts, np.array([[5.0, 5.1]]), 0.5, 4)
    assert idx[0].tolist() == [5, 5, 5, 5]
    idx, degen = impl.ball_query(pts, np.array([[20.0, 20]]), 0.5, 2)
    assert idx[0].tolist() == [5, 5] and degen[0]


@pytest.mark.parametrize("impl", IMPLS)
def test_three_nn_weights(impl):
    coarse = np.array([[1.0, 0], [0, 2], [0, -2]])
    idx, w = impl.three_nn(np.array([[0.0, 0]]), coarse, 3)
    got = dict(zip(idx[0].tolist(), w[0].tolist()))
    assert got[0] == pytest.approx(4 / 6) and got[1] == pytest.approx(1 / 6) and got[2] == pytest.approx(1 / 6)
    idx, w = impl.three_nn(np.array([[0.0, 2]]), coarse, 3)
    assert idx[0][0] == 1 and w[0][0] == 1.0 and w[0][1:].sum() == 0.0


@needs_cy
def test_backends_agree(rng):
    for _ in range(20):
        pts = np.round(rng.uniform(-5, 5, (200, 2)), 1)  # rounding forces ties
        start = int(rng.integers(200))
        assert np.array_equal(py.fps(pts, 64, start), cy.fps(pts, 64, start))
        centers = pts[py.fps(pts, 32, start)]
        for r, k in ((0.5, 8), (2.0, 16)):
            a, da = py.ball_query(pts, centers, r, k)
            b, db = cy.ball_query(pts, centers, r, k)
            assert np.array_equal(a, b) and np.array_equal(da, db)
        ia, wa = py.three_nn(pts, centers, 3)
        ib, wb = cy.three_nn(pts, centers, 3)
        assert np.array_equal(ia, ib) and np.allclose(wa, wb, rtol=0, atol=1e-14)
        vals = rng.normal(size=(500, 4))
        idx = rng.integers(0, 50, 500)
        assert np.allclose(py.scatter_add(50, idx, vals), cy.scatter_add(50, idx, vals), atol=1e-12)


def test_fallback_selected_by_env(monkeypatch):
    monkeypatch.setenv("CLUTTERSEG_KERNELS", "python")
    mod = importlib.reload(kernels)
    try:
        assert mod.BACKEND == "python"
    finally:
        monkeypatch.delenv("CLUTTERSEG_KERNELS")
        importlib.reload(kernels)
