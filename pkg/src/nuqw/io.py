"""CSV/JSON/SVG writers.

Floats are written with ``repr`` (shortest round-trip form) so reruns of the
same configuration produce byte-identical files.
"""
from __future__ import annotations

import csv
import json
import math
from fractions import Fraction
from pathlib import Path

import numpy as np


def format_value(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return "" if math.isnan(v) else repr(v)
    if isinstance(v, Fraction):
        return str(v)
    return str(v)


def write_csv(path, header, rows) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            if isinstance(row, dict):
                row = [row[h] for h in header]
            w.writerow([format_value(v) for v in row])
    return path


def to_jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return None if math.isnan(v) or math.isinf(v) else v
    if isinstance(obj, Fraction):
        return str(obj)
    if hasattr(obj, "value") and hasattr(obj, "name"):  # enums
        return obj.value
    return obj


def write_json(path, payload) -> Path:
    path = Path(path)
    path.write_text(json.dumps(to_jsonable(payload), indent=2, sort_keys=True) + "\n")
    return path


# ----------------------------------------------------------------------- svg

_W, _H, _PAD = 640, 400, 50
_COLORS = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"]


def _scale(lo, hi, a, b):
    if hi == lo:
        hi = lo + 1.0
    return lambda v: a + (v - lo) * (b - a) / (hi - lo)


def svg_lines(path, series: dict, xlabel: str = "", ylabel: str = "", title: str = "") -> Path:
    """Line plot; ``series`` maps a label to ``(xs, ys)``."""
    xs_all = np.concatenate([np.asarray(x, float) for x, _ in series.values()])
    ys_all = np.concatenate([np.asarray(y, float) for _, y in series.values()])
    ys_all = ys_all[np.isfinite(ys_all)]
    sx = _scale(xs_all.min(), xs_all.max(), _PAD, _W - _PAD)
    sy = _scale(ys_all.min() if ys_all.size else 0.0, ys_all.max() if ys_all.size else 1.0, _H - _PAD, _PAD)
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}">',
        f'<rect width="{_W}" height="{_H}" fill="white"/>',
        f'<line x1="{_PAD}" y1="{_H - _PAD}" x2="{_W - _PAD}" y2="{_H - _PAD}" stroke="black"/>',
        f'<line x1="{_PAD}" y1="{_PAD}" x2="{_PAD}" y2="{_H - _PAD}" stroke="black"/>',
        f'<text x="{_W / 2}" y="{_H - 10}" text-anchor="middle">{xlabel}</text>',
        f'<text x="15" y="{_H / 2}" transform="rotate(-90 15 {_H / 2})" text-anchor="middle">{ylabel}</text>',
        f'<text x="{_W / 2}" y="20" text-anchor="middle">{title}</text>',
    ]
    for i, (label, (x, y)) in enumerate(series.items()):
        color = _COLORS[i % len(_COLORS)]
        pts = " ".join(f"{sx(a):.2f},{sy(b):.2f}" for a, b in zip(x, y) if np.isfinite(b))
        out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{pts}"/>')
        out.append(f'<text x="{_W - _PAD + 5}" y="{_PAD + 15 * i}" fill="{color}" font-size="10">{label}</text>')
    out.append("</svg>")
    Path(path).write_text("\n".join(out) + "\n")
    return Path(path)


def svg_heatmap(path, values, xs, ys, xlabel: str = "", ylabel: str = "", title: str = "") -> Path:
    """Cell heatmap of ``values[j, i]`` at column ``xs[i]``, row ``ys[j]``; NaN cells are grey."""
    values = np.asarray(values, float)
    finite = values[np.isfinite(values)]
    lo, hi = (finite.min(), finite.max()) if finite.size else (0.0, 1.0)
    norm = _scale(lo, hi, 0.0, 1.0)
    nx, ny = len(xs), len(ys)
    cw, ch = (_W - 2 * _PAD) / nx, (_H - 2 * _PAD) / ny
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}">',
        f'<rect width="{_W}" height="{_H}" fill="white"/>',
        f'<text x="{_W / 2}" y="20" text-anchor="middle">{title}</text>',
        f'<text x="{_W / 2}" y="{_H - 10}" text-anchor="middle">{xlabel}</text>',
        f'<text x="15" y="{_H / 2}" transform="rotate(-90 15 {_H / 2})" text-anchor="middle">{ylabel}</text>',
    ]
    for j in range(ny):
        for i in range(nx):
            v = values[j, i]
            if np.isfinite(v):
                g = norm(v)
                fill = f"rgb({int(255 * g)},{int(80 + 100 * (1 - abs(2 * g - 1)))},{int(255 * (1 - g))})"
            else:
                fill = "#bbbbbb"
            x = _PAD + i * cw
            y = _H - _PAD - (j + 1) * ch
            out.append(f'<rect x="{x:.2f}" y="{y:.2f}" width="{cw:.2f}" height="{ch:.2f}" fill="{fill}"/>')
    out.append(f'<text x="{_PAD}" y="{_H - _PAD + 15}" font-size="10">{format_value(float(xs[0]))}</text>')
    out.append(
        f'<text x="{_W - _PAD}" y="{_H - _PAD + 15}" font-size="10" text-anchor="end">{format_value(float(xs[-1]))}</text>'
    )
    out.append("</svg>")
    Path(path).write_text("\n".join(out) + "\n")
    return Path(path)
