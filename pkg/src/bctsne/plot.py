"""Deterministic dependency-free SVG scatter plots of 2-D embeddings.

Fixed 800x600 canvas, categorical color palette and marker shapes, legend on
the right, no axes (embedding coordinates are unitless).  Identical inputs
produce byte-identical output.
"""
from __future__ import annotations

import warnings

import numpy as np

from .errors import ValidationError

CANVAS_W = 800
CANVAS_H = 600
_PLOT_W = 620  # leaves room for the legend column
_MARGIN = 30
_R = 4.0

PALETTE = (
    "#1b9e77", "#d95f02", "#7570b3", "#e7298a",
    "#66a61e", "#e6ab02", "#a6761d", "#666666",
)
SHAPES = ("circle", "square", "triangle", "diamond", "cross")


def _fmt(v):
    return f"{v:.2f}"


def _marker(shape, x, y, color):
    if shape == "circle":
        return f'<circle cx="{_fmt(x)}" cy="{_fmt(y)}" r="{_fmt(_R)}" fill="{color}"/>'
    if shape == "square":
        s = _R * 1.8
        return (
            f'<rect x="{_fmt(x - s / 2)}" y="{_fmt(y - s / 2)}" '
            f'width="{_fmt(s)}" height="{_fmt(s)}" fill="{color}"/>'
        )
    if shape == "triangle":
        pts = [(x, y - _R * 1.2), (x - _R * 1.1, y + _R), (x + _R * 1.1, y + _R)]
        p = " ".join(f"{_fmt(a)},{_fmt(b)}" for a, b in pts)
        return f'<polygon points="{p}" fill="{color}"/>'
    if shape == "diamond":
        pts = [(x, y - _R * 1.3), (x + _R * 1.3, y), (x, y + _R * 1.3), (x - _R * 1.3, y)]
        p = " ".join(f"{_fmt(a)},{_fmt(b)}" for a, b in pts)
        return f'<polygon points="{p}" fill="{color}"/>'
    if shape == "cross":
        r = _R * 1.2
        return (
            f'<path d="M {_fmt(x - r)} {_fmt(y)} H {_fmt(x + r)} '
            f'M {_fmt(x)} {_fmt(y - r)} V {_fmt(y + r)}" '
            f'stroke="{color}" stroke-width="2" fill="none"/>'
        )
    raise ValueError(shape)


def _level_map(labels, options, kind):
    levels = sorted(set(np.asarray(labels).tolist()), key=str)
    if len(levels) > len(options):
        warnings.warn(
            f"{len(levels)} levels exceed the {len(options)} available "
            f"{kind}s; cycling"
        )
    return levels, {lev: options[i % len(options)] for i, lev in enumerate(levels)}


def render_scatter(Y, color_labels=None, shape_labels=None, title=None):
    """Return the SVG document for a scatter of the first two embedding axes."""
    Y = np.asarray(Y, dtype=np.float64)
    if Y.ndim != 2 or Y.shape[1] < 2:
        raise ValidationError("embedding must have at least 2 columns")
    n = Y.shape[0]
    xy = Y[:, :2]
    lo = xy.min(axis=0)
    span = xy.max(axis=0) - lo
    span[span == 0] = 1.0
    scaled = (xy - lo) / span
    px = _MARGIN + scaled[:, 0] * (_PLOT_W - 2 * _MARGIN)
    py = CANVAS_H - _MARGIN - scaled[:, 1] * (CANVAS_H - 2 * _MARGIN)

    color_levels, color_of = ([], {})
    if color_labels is not None:
        color_levels, color_of = _level_map(color_labels, PALETTE, "color")
    shape_levels, shape_of = ([], {})
    if shape_labels is not None:
        shape_levels, shape_of = _level_map(shape_labels, SHAPES, "shape")

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{CANVAS_W}" '
        f'height="{CANVAS_H}" viewBox="0 0 {CANVAS_W} {CANVAS_H}">',
        f'<rect width="{CANVAS_W}" height="{CANVAS_H}" fill="#ffffff"/>',
    ]
    if title:
        parts.append(
            f'<text x="{_PLOT_W // 2}" y="20" text-anchor="middle" '
            f'font-family="sans-serif" font-size="14">{title}</text>'
        )
    for i in range(n):
        color = color_of[color_labels[i]] if color_labels is not None else PALETTE[0]
        shape = shape_of[shape_labels[i]] if shape_labels is not None else SHAPES[0]
        parts.append(_marker(shape, px[i], py[i], color))

    ly = 40
    lx = _PLOT_W + 10
    for lev in color_levels:
        parts.append(_marker("circle", lx + 6, ly - 4, color_of[lev]))
        parts.append(
            f'<text x="{lx + 18}" y="{ly}" font-family="sans-serif" '
            f'font-size="12">{lev}</text>'
        )
        ly += 20
    ly += 10
    for lev in shape_levels:
        parts.append(_marker(shape_of[lev], lx + 6, ly - 4, "#333333"))
        parts.append(
            f'<text x="{lx + 18}" y="{ly}" font-family="sans-serif" '
            f'font-size="12">{lev}</text>'
        )
        ly += 20
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def write_scatter_svg(path, Y, color_labels=None, shape_labels=None, title=None):
    svg = render_scatter(Y, color_labels, shape_labels, title)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(svg)
