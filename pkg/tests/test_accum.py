import numpy as np
import pytest

from clutterseg.accum import (
    AccumConfig,
    FixedQueue,
    accumulate,
    downsample,
    empty_cloud,
    iter_clouds,
    push_order,
    queue_equivalence_oracle,
    queue_push_scan,
    upsample,
)
from clutterseg.core import EgoState, SensorMount
from clutterseg.errors import DataError, InfeasibleError, OrderingError
from clutterseg.synth import generate_recording, preset
from conftest import FRONT, make_det, make_scan


def _cloud(n_latest, n_old, rng, n_scans=3):
    c = empty_cloud(n_latest + n_old)
    c["dt"][:n_old] = -rng.uniform(0.01, 0.3, n_old)
    c["scan_id"][:n_old] = rng.integers(0, n_scans, n_old)
    c["scan_id"][n_old:] = 99
    c["rcs"] = rng.normal(size=len(c))
    c["x"] = np.arange(len(c))
    return c


def test_window_zero_is_latest_only():
    s0 = make_scan(0, 0, [make_det(10, 0)])
    s1 = make_scan(1, 100_000, [make_det(20, 0), make_det(30, 5)])
    out = accumulate([s0, s1], s1, [FRONT], window=0.0)
    assert len(out) == 2 and np.all(out["dt"] == 0)


def test_stationary_ego_keeps_positions():
    s0 = make_scan(0, 0, [make_det(10, 0)])
    s1 = make_scan(1, 100_000, [make_det(20, 0)])
    out = accumulate([s0], s1, [FRONT])
    assert out["dt"][0] == pytest.approx(-0.1)
    assert (out["x"][0], out["y"][0]) == (10.0, 0.0)


def test_moving_ego_shifts_old_points():
    s0 = make_scan(0, 0, [make_det(10, 0)], ego=EgoState(0, 0, 0, 10, 0, 0))
    s1 = make_scan(1, 100_000, [make_det(20, 0)], ego=EgoState(1.0, 0, 0, 10, 0, 100_000))
    out = accumulate([s0], s1, [FRONT])
    assert out["x"][0] == pytest.approx(9.0)


def test_newer_scan_is_an_ordering_error():
    s0 = make_scan(0, 0, [make_det(10, 0)])
    s1 = make_scan(1, 100_000, [make_det(20, 0)])
    with pytest.raises(OrderingError):
        accumulate([s1], s0, [FRONT])


@pytest.mark.parametrize("strategy", ["random", "lowest_rcs", "old_only_random", "fixed_queue", "none"])
def test_small_cloud_unchanged(strategy, rng):
    c = _cloud(30, 20, rng)
    assert np.array_equal(downsample(c, 100, strategy, seed=0), c)


def test_old_only_random_counts(rng):
    c = _cloud(200, 1300, rng)
    out = downsample(c, 1280, "old_only_random", seed=5)
    assert len(out) == 1280
    assert np.count_nonzero(out["dt"] == 0) == 200
    assert np.all(np.diff(out["x"]) > 0)  # relative order kept


def test_old_only_random_infeasible(rng):
    c = _cloud(300, 10, rng)
    with pytest.raises(InfeasibleError, match="300"):
        downsample(c, 200, "old_only_random", seed=0)


def test_lowest_rcs_removes_weakest(rng):
    c = _cloud(50, 50, rng)
    out = downsample(c, 60, "lowest_rcs")
    assert out["rcs"].min() >= np.sort(c["rcs"])[40]


def test_upsample_counts_and_membership(rng):
    c = _cloud(100, 0, rng)
    out = upsample(c, 1280, seed=3)
    assert len(out) == 1280
    assert np.count_nonzero(out["is_replica"]) == 1180
    assert np.array_equal(out[:100], c)
    rep = out[out["is_replica"]]
    assert np.isin(rep["x"], c["x"]).all()
    assert np.array_equal(upsample(c, 1280, seed=3), out)


def test_upsample_identity_and_empty(rng):
    c = _cloud(10, 0, rng)
    assert np.array_equal(upsample(c, 10, seed=0), c)
    with pytest.raises(DataError):
        upsample(empty_cloud(), 5)


def _ids(n, offset):
    return np.arange(offset, offset + n)


def test_queue_capacity_five():
    q = FixedQueue(5, dtype=np.int64)
    a = np.array([10, 11, 12])  # pushed in this order, 10 is the slowest
    b = np.array([20, 21, 22])
    q.push(a)
    q.push(b)
    assert q.snapshot().tolist() == [11, 12, 20, 21, 22]


def test_queue_push_scan_slowest_evicted(rng):
    pts = empty_cloud(3)
    pts["v_comp"] = [5.0, -0.1, 2.0]
    pts["x"] = [0, 1, 2]
    q = FixedQueue(5)
    queue_push_scan(q, pts)
    later = empty_cloud(3)
    later["x"] = [10, 11, 12]
    queue_push_scan(q, later)
    assert sorted(q.snapshot()["x"][:2].tolist()) == [0, 2]  # the two fastest of A survive


def test_push_order_ties():
    pts = empty_cloud(4)
    pts["v_comp"] = [1.0, -1.0, 1.0, 0.5]
    pts["rcs"] = [3.0, 2.0, 2.0, 9.0]
    assert push_order(pts).tolist() == [3, 1, 2, 0]


def test_oracle_examples():
    hist = [_ids(100, 100 * i) for i in range(4)]
    out = queue_equivalence_oracle(hist, 250)
    assert out.tolist() == list(range(150, 400))
    assert queue_equivalence_oracle(hist, 1000).tolist() == list(range(400))
    assert queue_equivalence_oracle(hist, 100).tolist() == list(range(300, 400))


def test_queue_is_suffix(rng):
    for _ in range(50):
        cap = int(rng.integers(1, 50))
        q = FixedQueue(cap, dtype=np.int64)
        stream = []
        for _ in range(int(rng.integers(1, 10))):
            chunk = rng.integers(0, 1000, int(rng.integers(0, 20)))
            q.push(chunk)
            stream.extend(chunk.tolist())
        assert q.snapshot().tolist() == stream[len(stream) - min(cap, len(stream)) :]


def test_fixed_size_after_resampling():
    scans = generate_recording(preset("default", seed=1))
    for strategy in ("old_only_random", "fixed_queue", "random"):
        cfg = AccumConfig(0.3, 1280, strategy)
        sizes = {pc.processed_size for pc in iter_clouds(scans, preset("default").mounts, cfg)}
        assert sizes == {1280}


def test_replica_flags_propagate():
    scans = generate_recording(preset("separable", seed=0))
    cfg = AccumConfig(0.0, 330, "none")
    for pc in iter_clouds(scans, preset("separable").mounts, cfg):
        assert np.count_nonzero(~pc.cloud["is_replica"]) == pc.raw_size
