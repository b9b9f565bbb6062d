"""Tiny static SVG plotter: heatmaps and line charts. No dependencies."""

from __future__ import annotations

import numpy as np

_PALETTE = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd"]


def _color(v: float) -> str:
    # blue (-1) .. white (0) .. red (+1)
    v = float(np.clip(v, -1, 1))
    if v >= 0:
        c = int(255 * (1 - v))
        return f"rgb(255,{c},{c})"
    c = int(255 * (1 + v))
    return f"rgb({c},{c},255)"


def heatmap(values: np.ndarray, path, title: str = "", max_cells: int = 128) -> None:
    V = np.asarray(values, dtype=float)
    si = max(1, V.shape[0] // max_cells)
    sj = max(1, V.shape[1] // max_cells)
    V = V[::si, ::sj]
    scale = np.max(np.abs(V)) or 1.0
    n, m = V.shape
    cw, ch = 600.0 / m, 400.0 / n
    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="640" height="460">',
             f'<text x="20" y="20" font-size="14">{title} (max |v| = {scale:.3e})</text>']
    for i in range(n):
        y = 440 - (i + 1) * ch
        for j in range(m):
            parts.append(f'<rect x="{20 + j * cw:.2f}" y="{y:.2f}" width="{cw + 0.05:.2f}" '
                         f'height="{ch + 0.05:.2f}" fill="{_color(V[i, j] / scale)}"/>')
    parts.append("</svg>")
    with open(path, "w") as fh:
        fh.write("\n".join(parts))


def line_chart(x, series: dict, path, title: str = "", xlabel: str = "", ylabel: str = "") -> None:
    x = np.asarray(x, dtype=float)
    ys = {k: np.asarray(v, dtype=float) for k, v in series.items()}
    allv = np.concatenate([v for v in ys.values()]) if ys else np.zeros(1)
    lo, hi = float(np.min(allv)), float(np.max(allv))
    if hi == lo:
        hi = lo + 1.0
    x0, x1 = float(x.min()), float(x.max()) if x.max() > x.min() else float(x.min()) + 1

    def px(v):
        return 60 + 520 * (v - x0) / (x1 - x0)

    def py(v):
        return 400 - 340 * (v - lo) / (hi - lo)

    parts = ['<svg xmlns="http://www.w3.org/2000/svg" width="640" height="460">',
             f'<text x="60" y="30" font-size="14">{title}</text>',
             '<line x1="60" y1="400" x2="580" y2="400" stroke="black"/>',
             '<line x1="60" y1="60" x2="60" y2="400" stroke="black"/>',
             f'<text x="300" y="440" font-size="12">{xlabel}</text>',
             f'<text x="5" y="230" font-size="12">{ylabel}</text>',
             f'<text x="5" y="405" font-size="10">{lo:.3g}</text>',
             f'<text x="5" y="65" font-size="10">{hi:.3g}</text>']
    for n, (name, y) in enumerate(ys.items()):
        col = _PALETTE[n % len(_PALETTE)]
        pts = " ".join(f"{px(a):.1f},{py(b):.1f}" for a, b in zip(x, y))
        parts.append(f'<polyline points="{pts}" fill="none" stroke="{col}" stroke-width="2"/>')
        for a, b in zip(x, y):
            parts.append(f'<circle cx="{px(a):.1f}" cy="{py(b):.1f}" r="3" fill="{col}"/>')
        parts.append(f'<text x="420" y="{80 + 16 * n}" font-size="12" fill="{col}">{name}</text>')
    parts.append("</svg>")
    with open(path, "w") as fh:
        fh.write("\n".join(parts))
