"""Run artefacts: CSV frames, SVG plots and the run manifest."""
from __future__ import annotations

import csv
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path
from xml.sax.saxutils import escape

import numpy as np

from .core import Frame, Units

TRAJECTORY_COLUMNS = ("frame", "time", "ray_index", "x", "z", "px", "pz", "amplitude", "q_value", "e_mech")
PROFILE_COLUMNS = ("frame", "x", "intensity")
SVG_KINDS = ("trajectories", "profiles", "width_vs_z")


def _fmt(value) -> str:
    return f"{value:.12g}"


def write_frames(frames: list[Frame], directory) -> list[Path]:
    """Write ``trajectories.csv`` and ``profiles.csv``; returns the two paths."""
    if not frames:
        raise ValueError("no frames to write")
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    traj = directory / "trajectories.csv"
    with traj.open("w", newline="") as fh:
        out = csv.writer(fh, lineterminator="\n")
        out.writerow(TRAJECTORY_COLUMNS)
        for k, f in enumerate(frames):
            columns = (f.x, f.z, f.px, f.pz, f.amplitude, f.q_value, f.e_mech)
            t = _fmt(f.time)
            for j, row in enumerate(zip(*columns)):
                out.writerow((k, t, j, *map(_fmt, row)))
    prof = directory / "profiles.csv"
    with prof.open("w", newline="") as fh:
        out = csv.writer(fh, lineterminator="\n")
        out.writerow(PROFILE_COLUMNS)
        last = len(frames) - 1
        for k in sorted({0, last}):
            f = frames[k]
            for x, r in zip(f.x, f.amplitude):
                out.writerow((k, _fmt(x), _fmt(r * r)))
    return [traj, prof]


def read_trajectories(path) -> dict[str, np.ndarray]:
    data = np.genfromtxt(path, delimiter=",", names=True)
    return {name: np.atleast_1d(data[name]) for name in data.dtype.names}


class _Canvas:
    """Minimal SVG plot: one data box with linear axes."""

    W, H = 640, 420
    L, R, T, B = 70, 20, 20, 50

    def __init__(self, xlim, ylim, xlabel, ylabel):
        self.x0, self.x1 = self._pad(*xlim)
        self.y0, self.y1 = self._pad(*ylim)
        self.parts = [
            f'<rect x="{self.L}" y="{self.T}" width="{self.W - self.L - self.R}" '
            f'height="{self.H - self.T - self.B}" fill="none" stroke="black"/>',
            f'<text x="{(self.L + self.W - self.R) / 2}" y="{self.H - 12}" text-anchor="middle">{escape(xlabel)}</text>',
            f'<text x="16" y="{(self.T + self.H - self.B) / 2}" text-anchor="middle" '
            f'transform="rotate(-90 16 {(self.T + self.H - self.B) / 2})">{escape(ylabel)}</text>',
        ]
        for v, anchor in ((self.x0, "start"), (self.x1, "end")):
            self.parts.append(f'<text x="{self.px(v):.1f}" y="{self.H - self.B + 16}" '
                              f'text-anchor="{anchor}" font-size="11">{v:.4g}</text>')
        for v in (self.y0, self.y1):
            self.parts.append(f'<text x="{self.L - 4}" y="{self.py(v) + 4:.1f}" '
                              f'text-anchor="end" font-size="11">{v:.4g}</text>')

    @staticmethod
    def _pad(lo, hi):
        lo, hi = float(lo), float(hi)
        if not np.isfinite(lo) or not np.isfinite(hi):
            return 0.0, 1.0
        if hi - lo < 1e-12 * max(1.0, abs(lo)):
            return lo - 0.5, hi + 0.5
        return lo, hi

    def px(self, v):
        return self.L + (v - self.x0) / (self.x1 - self.x0) * (self.W - self.L - self.R)

    def py(self, v):
        return self.H - self.B - (v - self.y0) / (self.y1 - self.y0) * (self.H - self.T - self.B)

    def line(self, xs, ys, stroke="steelblue", width=0.6, cls=None):
        pts = " ".join(f"{self.px(a):.2f},{self.py(b):.2f}" for a, b in zip(xs, ys) if np.isfinite(a) and np.isfinite(b))
        attr = f' class="{cls}"' if cls else ""
        self.parts.append(f'<polyline{attr} points="{pts}" fill="none" stroke="{stroke}" stroke-width="{width}"/>')

    def svg(self):
        body = "\n".join(self.parts)
        return (f'<?xml version="1.0" encoding="UTF-8"?>\n'
                f'<svg xmlns="http://www.w3.org/2000/svg" width="{self.W}" height="{self.H}" '
                f'viewBox="0 0 {self.W} {self.H}" font-family="sans-serif" font-size="13">\n{body}\n</svg>\n')


def _launch_unit_rays(first: Frame) -> list[int]:
    hits = [int(np.argmin(np.abs(first.x - s))) for s in (-1.0, 1.0)]
    return [j for j in hits if abs(first.x[j] - round(first.x[j])) < 1e-9]


def render_svg(frames: list[Frame], kind: str, path, units: Units | None = None, free_space: bool = False) -> Path:
    """Write one SVG plot.

    ``trajectories`` draws every ray as x against z, with the rays launched at
    x = +-1 drawn heavy. ``profiles`` overlays first and last intensity.
    ``width_vs_z`` plots twice the rms half-width (the 1/e amplitude
    half-width for a Gaussian) and, for free space, the analytic waist.
    """
    if not frames:
        raise ValueError("no frames to render")
    if kind not in SVG_KINDS:
        raise ValueError(f"kind must be one of {SVG_KINDS}, got {kind!r}")
    path = Path(path)
    xs = np.array([f.x for f in frames])
    zs = np.array([f.z for f in frames])
    centre = frames[0].n_rays // 2
    if kind == "trajectories":
        c = _Canvas((zs.min(), zs.max()), (xs.min(), xs.max()), "z / w0", "x / w0")
        heavy = set(_launch_unit_rays(frames[0]))
        for j in range(xs.shape[1]):
            if j not in heavy:
                c.line(zs[:, j], xs[:, j], cls="ray")
        for j in sorted(heavy):
            c.line(zs[:, j], xs[:, j], stroke="black", width=2.5, cls="ray heavy")
    elif kind == "profiles":
        first, last = frames[0], frames[-1]
        top = max(np.max(first.amplitude ** 2), np.max(last.amplitude ** 2))
        lo = min(first.x.min(), last.x.min())
        hi = max(first.x.max(), last.x.max())
        c = _Canvas((lo, hi), (0.0, top), "x / w0", "intensity R^2")
        c.line(first.x, first.amplitude ** 2, stroke="gray", width=1.5, cls="initial")
        c.line(last.x, last.amplitude ** 2, stroke="crimson", width=1.5, cls="final")
    else:
        zc = zs[:, centre]
        width = 2.0 * np.array([f.half_width for f in frames])
        curves = [width]
        if free_space and units is not None:
            curves.append(np.sqrt(1.0 + (units.epsilon * zc / np.pi) ** 2))
        c = _Canvas((zc.min(), zc.max()), (0.0, max(np.nanmax(v) for v in curves)), "z / w0", "half-width / w0")
        c.line(zc, width, stroke="steelblue", width=2.0, cls="measured")
        if len(curves) > 1:
            c.line(zc, curves[1], stroke="black", width=1.0, cls="analytic")
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(c.svg())
    return path


@dataclass
class RunManifest:
    config: dict
    version: str
    started: str
    stopped: str
    status: str
    outputs: list[str] = field(default_factory=list)
    report: dict = field(default_factory=dict)
    validations: dict = field(default_factory=dict)

    def write(self, directory) -> Path:
        path = Path(directory) / "manifest.json"
        path.write_text(json.dumps(asdict(self), indent=2, default=_json_default) + "\n")
        return path


def _json_default(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, float):
        return repr(obj)
    raise TypeError(f"not serialisable: {type(obj).__name__}")
