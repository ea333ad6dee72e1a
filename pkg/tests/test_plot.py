import re
import xml.etree.ElementTree as ET

import numpy as np

from clutterseg.accum import empty_cloud, upsample
from clutterseg.eval import eval_mask
from clutterseg.plot import COLORS, render_confusion, render_labels


def _markers(svg):
    root = ET.fromstring(svg)
    return [e for e in root.iter() if e.tag.endswith("circle") and "marker" in e.get("class", "")]


def test_empty_scan_axes_only():
    svg = render_labels(empty_cloud())
    assert _markers(svg) == []
    assert 'class="frame"' in svg


def test_one_clutter_point_one_red_marker():
    c = empty_cloud(1)
    c["x"], c["label"] = 10.0, 1
    marks = _markers(render_labels(c, {1: (0.0, 0.0)}))
    assert len(marks) == 1 and marks[0].get("fill") == COLORS["clutter"]
    assert len(re.findall(COLORS["clutter"], render_labels(c))) == 2  # marker plus legend swatch


def test_confusion_counts_equal_mask(rng):
    c = empty_cloud(40)
    c["x"], c["y"] = rng.normal(size=(2, 40)) * 10
    c["label"] = rng.integers(0, 3, 40)
    c["dt"][:15] = -0.1
    c = upsample(c, 60, seed=0)
    pred = rng.integers(0, 3, 60)
    assert len(_markers(render_confusion(c, pred))) == int(eval_mask(c).sum())


def test_y_axis_mirrored():
    c = empty_cloud(2)
    c["x"] = [10.0, 10.0]
    c["y"] = [5.0, -5.0]
    left, right = (float(m.get("cx")) for m in _markers(render_labels(c)))
    assert left < right  # positive y drawn on the left
