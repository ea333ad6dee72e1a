import numpy as np
import pytest

from clutterseg.accum import empty_cloud, upsample
from clutterseg.errors import DataError
from clutterseg.features import N_CONTINUOUS, Standardizer, apply, assemble, fit


def _matrix(rng, n=50):
    c = empty_cloud(n)
    for f in ("x", "y", "range", "azimuth", "v_comp", "rcs"):
        c[f] = rng.normal(size=n) * 10
    c["dt"] = -rng.uniform(0, 0.3, n)
    c["sensor_id"] = rng.integers(1, 5, n)
    return c


def test_assemble_row():
    c = empty_cloud(1)
    c["x"], c["range"], c["sensor_id"] = 10.0, 10.0, 3
    row = assemble(c)[0]
    assert row[:4].tolist() == [10.0, 0.0, 10.0, 0.0]
    assert row[7:].tolist() == [0, 0, 1, 0]


def test_assemble_replicas_identical(rng):
    c = upsample(_matrix(rng, 10), 30, seed=0)
    m = assemble(c)
    src = [np.flatnonzero((m[:10] == row).all(axis=1)) for row in m[10:]]
    assert all(len(s) >= 1 for s in src)


def test_assemble_missing_field():
    c = np.zeros(2, dtype=[("x", "f8")])
    with pytest.raises(DataError):
        assemble(c)


def test_fit_shared_scale():
    m = np.zeros((2, 11))
    m[:, 0] = [0.0, 2.0]
    m[:, 7] = 1
    std = fit(m)
    assert std.scale[0] == std.scale[1] == pytest.approx(np.sqrt(0.5))


def test_constant_column_clamped():
    m = np.zeros((4, 11))
    m[:, 0] = [1, 2, 3, 4]
    m[:, 5] = 7.0
    std = fit(m)
    assert std.scale[5] == 1.0 and std.mean[5] == 7.0
    assert "rcs" in std.clamped


def test_fit_deterministic_and_centered(rng):
    m = assemble(_matrix(rng))
    a, b = fit(m), fit(m)
    assert np.array_equal(a.mean, b.mean) and np.array_equal(a.scale, b.scale)
    z = apply(a, m)
    assert np.all(np.abs(z[:, :N_CONTINUOUS].mean(axis=0)) < 1e-9)
    assert np.array_equal(z[:, N_CONTINUOUS:], m[:, N_CONTINUOUS:])


def test_fit_skips_replicas(rng):
    c = upsample(_matrix(rng, 20), 60, seed=1)
    m = assemble(c)
    with_mask = fit([m], [c["is_replica"]])
    plain = fit(m[:20])
    assert np.allclose(with_mask.mean, plain.mean) and np.allclose(with_mask.scale, plain.scale)


def test_isotropy_example():
    std = Standardizer(np.zeros(7), np.array([1.5, 1.5, 1, 1, 1, 1, 1.0]))
    m = np.zeros((2, 11))
    m[1, 0], m[1, 1] = 3 * np.cos(0.3), 3 * np.sin(0.3)
    z = apply(std, m)
    assert np.hypot(*(z[1, :2] - z[0, :2])) == pytest.approx(2.0, abs=1e-12)


def test_apply_dimension_mismatch():
    with pytest.raises(DataError):
        apply(Standardizer.identity(), np.zeros((3, 5)))
