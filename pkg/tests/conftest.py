import numpy as np
import pytest

from clutterseg.core import BACKGROUND, Detection, EgoState, Label, Scan, SensorMount, TrueSource

FRONT = SensorMount(1, 0.0, 0.0, 0.0)


def make_det(r, az, v=0.0, rcs=0.0, annotation=BACKGROUND, label=Label.UNLABELED,
             source=TrueSource.UNKNOWN):
    return Detection(r, az, v, v, rcs, annotation, label, source)


def make_scan(scan_id, t_us, dets, sensor_id=1, ego=None):
    ego = ego or EgoState(0.0, 0.0, 0.0, 0.0, 0.0, t_us)
    return Scan(scan_id, sensor_id, t_us, ego, tuple(dets))


@pytest.fixture
def front_mount():
    return FRONT


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
