import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from clutterseg.core import BACKGROUND, Label, TrueSource
from clutterseg.errors import DataError
from clutterseg.relabel import (
    RelabelParams,
    azimuth_tolerance,
    class_distribution,
    label_codes,
    relabel_dataset,
    relabel_scan,
)
from clutterseg.synth import generate_recording, preset, source_tally
from conftest import make_det, make_scan


@pytest.mark.parametrize("angle,tol", [(0, 2.0), (60, 4.0), (30, 3.0), (-30, 3.0)])
def test_azimuth_tolerance(angle, tol):
    assert azimuth_tolerance(angle) == pytest.approx(tol)


def test_rules():
    dets = [
        make_det(20.0, 0.0, annotation="car"),
        make_det(20.2, 1.5),  # near the car
        make_det(50.0, -30.0, v=0.49),
        make_det(50.0, 30.0, v=0.51),
        make_det(60.0, 30.0, v=-0.51),
    ]
    out = relabel_scan(make_scan(0, 0, dets))
    assert [d.label for d in out.detections] == [
        Label.MOVING_OBJECT, Label.MOVING_OBJECT, Label.STATIONARY, Label.CLUTTER, Label.CLUTTER,
    ]


def test_outside_tolerance_not_grown():
    dets = [make_det(20.0, 0.0, annotation="car"), make_det(20.31, 0.0, v=3.0), make_det(20.0, 2.1, v=0.0)]
    labels = [d.label for d in relabel_scan(make_scan(0, 0, dets)).detections]
    assert labels == [Label.MOVING_OBJECT, Label.CLUTTER, Label.STATIONARY]


def test_not_transitive():
    # second point is near the first background point only
    dets = [make_det(20.0, 0.0, annotation="car"), make_det(20.25, 0.0), make_det(20.5, 0.0)]
    labels = [d.label for d in relabel_scan(make_scan(0, 0, dets)).detections]
    assert labels[2] == Label.STATIONARY


def test_missing_annotation():
    bad = make_det(10.0, 0.0, annotation="")
    with pytest.raises(DataError, match="scan 7"):
        relabel_scan(make_scan(7, 0, [bad]))


def test_distribution_all_stationary():
    scans, dist = relabel_dataset([make_scan(0, 0, [make_det(10, 0), make_det(20, 5)])])
    assert dist == {"moving_object": 0.0, "clutter": 0.0, "stationary": 1.0}


def test_per_scan_isolation():
    a = make_scan(0, 0, [make_det(20.0, 0.0, annotation="car")])
    b = make_scan(1, 10, [make_det(20.0, 0.0, v=0.0)])
    out, _ = relabel_dataset([a, b])
    assert out[1].detections[0].label == Label.STATIONARY


def test_distribution_vs_generator_tally():
    scans = generate_recording(preset("noise-bounded", seed=4))
    tally = source_tally(scans)
    out, dist = relabel_dataset(scans)
    total = sum(tally.values())
    assert sum(dist.values()) == pytest.approx(1.0, abs=1e-12)
    # moving labels = all real movers plus some background grown into tolerance bands
    assert dist["moving_object"] * total >= tally["real_moving"]
    assert dist["clutter"] * total <= tally["mirror_ghost"] + tally["ambiguity_ghost"] + tally["noise"]


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 10_000), r1=st.floats(0.0, 1.0), r2=st.floats(0.0, 1.0), a=st.floats(0.5, 5.0))
def test_monotone_in_tolerances(seed, r1, r2, a):
    rng = np.random.default_rng(seed)
    n = 60
    r = rng.uniform(5, 30, n)
    az = rng.uniform(-60, 60, n)
    v = rng.normal(0, 2, n)
    obj = rng.random(n) < 0.2
    lo, hi = sorted((r1, r2))
    small = RelabelParams(range_tol=max(lo, 1e-3), az_tol_min=a, az_tol_max=a * 2)
    big = RelabelParams(range_tol=max(hi, 1e-3), az_tol_min=a * 1.5, az_tol_max=a * 3)
    n_small = np.sum(label_codes(r, az, v, obj, small) == 0)
    n_big = np.sum(label_codes(r, az, v, obj, big) == 0)
    assert n_big >= n_small


def test_exhaustive_labels():
    scans, _ = relabel_dataset(generate_recording(preset("default", seed=0)))
    assert all(d.label in (Label.MOVING_OBJECT, Label.CLUTTER, Label.STATIONARY) for s in scans for d in s.detections)


def test_class_distribution_rejects_unlabeled():
    with pytest.raises(DataError):
        class_distribution([make_scan(0, 0, [make_det(1, 0)])])
