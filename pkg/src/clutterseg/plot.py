"""SVG scatter plots of a processed cloud in vehicle coordinates.

The vehicle's x axis points up and the y axis is mirrored so that positive
y (left of the vehicle) appears on the left. Markers are ``<circle>``
elements with class ``marker``; the legend uses ``<rect>`` swatches so
marker counts stay exact.
"""
from __future__ import annotations

from xml.sax.saxutils import escape

import numpy as np

from .core import CLASSES

COLORS = {"moving_object": "#1f4fd8", "clutter": "#d62728", "stationary": "#808080"}
# confusion mode: correct (dark) and incorrect (light) shade per true class
CONFUSION_COLORS = {
    "moving_object": ("#0b2a8a", "#9fb6ff"),
    "clutter": ("#8b0000", "#ff9f9f"),
    "stationary": ("#404040", "#c8c8c8"),
}
UNLABELED_COLOR = "#000000"
OLD_OPACITY = 0.3
ARROW_SECONDS = 0.5  # arrow length = |v_comp| times this

_SIZE = 600
_MARGIN = 40


def _frame(x, y, extra=()):
    xs = np.concatenate([np.asarray(x, float), *[np.asarray(e[0], float) for e in extra]]) if len(x) or extra else np.zeros(0)
    ys = np.concatenate([np.asarray(y, float), *[np.asarray(e[1], float) for e in extra]]) if len(y) or extra else np.zeros(0)
    if xs.size == 0:
        return 0.0, 0.0, 10.0
    cx, cy = (xs.max() + xs.min()) / 2, (ys.max() + ys.min()) / 2
    half = max(xs.max() - xs.min(), ys.max() - ys.min(), 2.0) / 2 * 1.1
    return cx, cy, half


class _Canvas:
    def __init__(self, cx, cy, half):
        self.cx, self.cy, self.half = cx, cy, half
        self.scale = (_SIZE - 2 * _MARGIN) / (2 * half)
        self.parts: list[str] = []

    def to_px(self, x, y):
        # horizontal: -y (mirrored), vertical: -x (forward is up)
        u = _SIZE / 2 - (y - self.cy) * self.scale
        v = _SIZE / 2 - (x - self.cx) * self.scale
        return u, v

    def axes(self):
        lo, hi = _MARGIN, _SIZE - _MARGIN
        self.parts.append(f'<rect class="frame" x="{lo}" y="{lo}" width="{hi - lo}" height="{hi - lo}" fill="none" stroke="#000"/>')
        u0, v0 = self.to_px(0.0, 0.0)
        if lo <= u0 <= hi:
            self.parts.append(f'<line class="axis" x1="{u0:.2f}" y1="{lo}" x2="{u0:.2f}" y2="{hi}" stroke="#bbb"/>')
        if lo <= v0 <= hi:
            self.parts.append(f'<line class="axis" x1="{lo}" y1="{v0:.2f}" x2="{hi}" y2="{v0:.2f}" stroke="#bbb"/>')
        self.parts.append(f'<text x="{_SIZE / 2}" y="{_SIZE - 10}" text-anchor="middle" font-size="12">y [m] (mirrored)</text>')
        self.parts.append(f'<text x="12" y="{_SIZE / 2}" font-size="12" transform="rotate(-90 12 {_SIZE / 2})">x [m]</text>')

    def marker(self, x, y, color, opacity, cls):
        u, v = self.to_px(x, y)
        self.parts.append(f'<circle class="marker {cls}" cx="{u:.2f}" cy="{v:.2f}" r="3" fill="{color}" fill-opacity="{opacity}"/>')

    def arrow(self, x0, y0, x1, y1, color):
        u0, v0 = self.to_px(x0, y0)
        u1, v1 = self.to_px(x1, y1)
        self.parts.append(f'<line class="arrow" x1="{u0:.2f}" y1="{v0:.2f}" x2="{u1:.2f}" y2="{v1:.2f}" stroke="{color}" marker-end="url(#head)"/>')

    def legend(self, entries):
        for i, (name, color) in enumerate(entries):
            y = _MARGIN + 8 + 16 * i
            self.parts.append(f'<rect class="legend" x="{_SIZE - _MARGIN - 120}" y="{y}" width="10" height="10" fill="{color}"/>')
            self.parts.append(f'<text x="{_SIZE - _MARGIN - 105}" y="{y + 9}" font-size="11">{escape(name)}</text>')

    def svg(self, title):
        head = (
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{_SIZE}" height="{_SIZE}" viewBox="0 0 {_SIZE} {_SIZE}">'
            '<defs><marker id="head" markerWidth="6" markerHeight="6" refX="5" refY="3" orient="auto">'
            '<path d="M0,0 L6,3 L0,6 z" fill="#333"/></marker></defs>'
            f'<title>{escape(title)}</title>'
        )
        return head + "".join(self.parts) + "</svg>\n"


def _class_name(code):
    return CLASSES[code].value if 0 <= code < len(CLASSES) else None


def render_labels(cloud: np.ndarray, sensor_positions=None, title: str = "labels") -> str:
    """Points colored by label; older scans pale; velocity arrows on the latest scan.

    ``sensor_positions`` maps sensor id to its (x, y) mount position and is
    used to orient the radial velocity arrows.
    """
    pts = cloud[~cloud["is_replica"]] if len(cloud) else cloud
    canvas = _Canvas(*_frame(pts["x"], pts["y"]))
    canvas.axes()
    for p in pts:
        name = _class_name(int(p["label"]))
        color = COLORS.get(name, UNLABELED_COLOR)
        latest = p["dt"] == 0
        canvas.marker(p["x"], p["y"], color, 1.0 if latest else OLD_OPACITY, name or "unlabeled")
        if latest and sensor_positions is not None and int(p["sensor_id"]) in sensor_positions and p["v_comp"] != 0:
            sx, sy = sensor_positions[int(p["sensor_id"])]
            los = np.array([p["x"] - sx, p["y"] - sy])
            norm = np.hypot(*los)
            if norm > 0:
                d = los / norm * p["v_comp"] * ARROW_SECONDS
                canvas.arrow(p["x"], p["y"], p["x"] + d[0], p["y"] + d[1], color)
    canvas.legend([(n.replace("_", " "), c) for n, c in COLORS.items()])
    return canvas.svg(title)


def render_confusion(cloud: np.ndarray, predictions, title: str = "confusion") -> str:
    """Latest-scan, non-replica points: hue = truth, dark = correct, light = wrong."""
    pred = np.asarray(predictions)
    mask = (cloud["dt"] == 0) & ~cloud["is_replica"] & (cloud["label"] >= 0)
    pts, pred = cloud[mask], pred[mask]
    canvas = _Canvas(*_frame(pts["x"], pts["y"]))
    canvas.axes()
    for p, yhat in zip(pts, pred):
        name = _class_name(int(p["label"]))
        ok = int(yhat) == int(p["label"])
        color = CONFUSION_COLORS[name][0 if ok else 1]
        canvas.marker(p["x"], p["y"], color, 1.0, f"{name} {'correct' if ok else 'wrong'}")
    entries = []
    for name, (dark, light) in CONFUSION_COLORS.items():
        entries += [(f"{name.replace('_', ' ')} correct", dark), (f"{name.replace('_', ' ')} wrong", light)]
    canvas.legend(entries)
    return canvas.svg(title)
