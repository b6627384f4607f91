"""Deterministic SVG rendering for confusion matrices and accuracy series.

The output is plain hand-assembled SVG with fixed-precision coordinates,
so identical inputs yield byte-identical documents; nothing here depends
on an imaging library or fonts being installed.
"""

from __future__ import annotations

import numpy as np

from .episode import ConfusionMatrix
from .learning import AccuracySeries

_FONT = "font-family=\"Helvetica, Arial, sans-serif\""


def _f(v: float) -> str:
    # fixed two-decimal coordinates keep the bytes stable
    return f"{v:.2f}"


def _cell_color(frac: float) -> str:
    """White through mid blue to dark navy, proportional to frac in [0,1]."""
    r = round(255 + (28 - 255) * frac)
    g = round(255 + (63 - 255) * frac)
    b = round(255 + (120 - 255) * frac)
    return f"#{r:02x}{g:02x}{b:02x}"


def render_confusion_svg(cm: ConfusionMatrix, names) -> str:
    """Heatmap of the 6x6 counts, cells annotated, intended rows on the
    left and chosen columns on top."""
    n = cm.counts.shape[0]
    if len(names) != n:
        raise ValueError(f"need {n} names, got {len(names)}")
    cell, left, top, pad = 52, 86, 64, 14
    width = left + n * cell + pad
    height = top + n * cell + pad
    peak = max(1, int(cm.counts.max()))

    parts = [
        f"<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width}\" "
        f"height=\"{height}\" viewBox=\"0 0 {width} {height}\">",
        f"<rect width=\"{width}\" height=\"{height}\" fill=\"white\"/>",
        f"<text x=\"{_f(left + n * cell / 2)}\" y=\"16\" {_FONT} "
        f"font-size=\"12\" text-anchor=\"middle\" fill=\"#444\">chosen</text>",
        f"<text x=\"14\" y=\"{_f(top + n * cell / 2)}\" {_FONT} "
        f"font-size=\"12\" text-anchor=\"middle\" fill=\"#444\" "
        f"transform=\"rotate(-90 14 {_f(top + n * cell / 2)})\">intended</text>",
    ]
    for j, name in enumerate(names):
        x = left + j * cell + cell / 2
        parts.append(
            f"<text x=\"{_f(x)}\" y=\"{top - 10}\" {_FONT} font-size=\"11\" "
            f"text-anchor=\"middle\" fill=\"#222\">{name}</text>")
    for i, name in enumerate(names):
        y = top + i * cell + cell / 2 + 4
        parts.append(
            f"<text x=\"{left - 8}\" y=\"{_f(y)}\" {_FONT} font-size=\"11\" "
            f"text-anchor=\"end\" fill=\"#222\">{name}</text>")
    for i in range(n):
        for j in range(n):
            count = int(cm.counts[i, j])
            frac = count / peak
            x, y = left + j * cell, top + i * cell
            fg = "#ffffff" if frac > 0.55 else "#1a1a1a"
            parts.append(
                f"<rect x=\"{x}\" y=\"{y}\" width=\"{cell}\" height=\"{cell}\" "
                f"fill=\"{_cell_color(frac)}\" stroke=\"#cccccc\" "
                f"stroke-width=\"1\"/>")
            parts.append(
                f"<text x=\"{_f(x + cell / 2)}\" y=\"{_f(y + cell / 2 + 4)}\" "
                f"{_FONT} font-size=\"13\" text-anchor=\"middle\" "
                f"fill=\"{fg}\">{count}</text>")
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def render_series_svg(series: AccuracySeries, chance: float,
                      initial: float) -> str:
    """Accuracy transitions: thin per-run lines, a thick mean line, and
    dotted chance/initial reference lines."""
    width, height = 480, 320
    left, right, top, bottom = 58, 16, 16, 44
    plot_w = width - left - right
    plot_h = height - top - bottom
    trials = series.trials
    m = series.matrix

    def sx(t: float) -> float:
        return left + (t / max(trials, 1)) * plot_w

    def sy(a: float) -> float:
        return top + (1.0 - a) * plot_h

    parts = [
        f"<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width}\" "
        f"height=\"{height}\" viewBox=\"0 0 {width} {height}\">",
        f"<rect width=\"{width}\" height=\"{height}\" fill=\"white\"/>",
        f"<rect x=\"{left}\" y=\"{top}\" width=\"{plot_w}\" "
        f"height=\"{plot_h}\" fill=\"none\" stroke=\"#333\" "
        f"stroke-width=\"1\"/>",
    ]
    for k in range(6):
        a = k / 5.0
        y = sy(a)
        parts.append(
            f"<line x1=\"{left - 4}\" y1=\"{_f(y)}\" x2=\"{left}\" "
            f"y2=\"{_f(y)}\" stroke=\"#333\" stroke-width=\"1\"/>")
        parts.append(
            f"<text x=\"{left - 8}\" y=\"{_f(y + 4)}\" {_FONT} "
            f"font-size=\"11\" text-anchor=\"end\" fill=\"#222\">{a:.1f}</text>")
    step = max(1, trials // 10)
    for t in range(0, trials + 1, step):
        x = sx(t)
        parts.append(
            f"<line x1=\"{_f(x)}\" y1=\"{top + plot_h}\" x2=\"{_f(x)}\" "
            f"y2=\"{top + plot_h + 4}\" stroke=\"#333\" stroke-width=\"1\"/>")
        parts.append(
            f"<text x=\"{_f(x)}\" y=\"{top + plot_h + 18}\" {_FONT} "
            f"font-size=\"11\" text-anchor=\"middle\" fill=\"#222\">{t}</text>")
    parts.append(
        f"<text x=\"{_f(left + plot_w / 2)}\" y=\"{height - 8}\" {_FONT} "
        f"font-size=\"12\" text-anchor=\"middle\" fill=\"#444\">trial</text>")
    parts.append(
        f"<text x=\"16\" y=\"{_f(top + plot_h / 2)}\" {_FONT} "
        f"font-size=\"12\" text-anchor=\"middle\" fill=\"#444\" "
        f"transform=\"rotate(-90 16 {_f(top + plot_h / 2)})\">accuracy</text>")

    for level, label in ((chance, "chance"), (initial, "initial")):
        y = sy(level)
        parts.append(
            f"<line x1=\"{left}\" y1=\"{_f(y)}\" x2=\"{left + plot_w}\" "
            f"y2=\"{_f(y)}\" stroke=\"#777\" stroke-width=\"1\" "
            f"stroke-dasharray=\"4 3\"/>")
        parts.append(
            f"<text x=\"{left + plot_w - 4}\" y=\"{_f(y - 4)}\" {_FONT} "
            f"font-size=\"10\" text-anchor=\"end\" fill=\"#777\">{label}</text>")

    def polyline(ys, color, width_px):
        pts = " ".join(f"{_f(sx(t))},{_f(sy(float(a)))}"
                       for t, a in enumerate(ys))
        parts.append(
            f"<polyline points=\"{pts}\" fill=\"none\" stroke=\"{color}\" "
            f"stroke-width=\"{width_px}\"/>")

    for r in range(series.runs):
        polyline(m[r], "#a8c4e0", 1)
    polyline(m.mean(axis=0), "#1f4e8c", 2.5)
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
