"""Figure writers for experiment outputs.

The SVG writer is deliberately dependency-free and byte-deterministic: one
``<polyline>`` per series on a log-scale y axis, points with nonpositive or
non-finite values dropped.  The PNG writers render the same data through
matplotlib's Agg canvas for people who want the usual toolchain output.
"""

from __future__ import annotations

import math

import numpy as np

_PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")

_WIDTH, _HEIGHT = 860, 520
_LEFT, _RIGHT, _TOP, _BOTTOM = 72, 24, 36, 48


def _finite_positive(times, values):
    t = np.asarray(times, dtype=float)
    v = np.asarray(values, dtype=float)
    keep = np.isfinite(v) & (v > 0.0) & np.isfinite(t)
    return t[keep], v[keep]


def write_series_svg(path: str, times, series: dict, title: str = "") -> None:
    """Write a log-y line chart with one polyline per named series."""
    cleaned = {}
    for name, values in series.items():
        t, v = _finite_positive(times, values)
        if t.size:
            cleaned[name] = (t, v)
    lines = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_WIDTH}" height="{_HEIGHT}" '
        f'viewBox="0 0 {_WIDTH} {_HEIGHT}">',
        f'<rect width="{_WIDTH}" height="{_HEIGHT}" fill="white"/>',
    ]
    plot_w = _WIDTH - _LEFT - _RIGHT
    plot_h = _HEIGHT - _TOP - _BOTTOM
    if cleaned:
        x_min = min(t.min() for t, _ in cleaned.values())
        x_max = max(t.max() for t, _ in cleaned.values())
        y_min = math.log10(min(v.min() for _, v in cleaned.values()))
        y_max = math.log10(max(v.max() for _, v in cleaned.values()))
        if x_max == x_min:
            x_max = x_min + 1.0
        if y_max - y_min < 1e-9:
            y_min, y_max = y_min - 0.5, y_max + 0.5

        def sx(x: float) -> float:
            return _LEFT + (x - x_min) / (x_max - x_min) * plot_w

        def sy(v: float) -> float:
            frac = (math.log10(v) - y_min) / (y_max - y_min)
            return _TOP + (1.0 - frac) * plot_h

        # Axis frame and ticks.
        lines.append(
            f'<rect x="{_LEFT}" y="{_TOP}" width="{plot_w}" height="{plot_h}" '
            'fill="none" stroke="#333" stroke-width="1"/>'
        )
        for frac in (0.0, 0.25, 0.5, 0.75, 1.0):
            x_val = x_min + frac * (x_max - x_min)
            px = sx(x_val)
            lines.append(
                f'<line x1="{px:.2f}" y1="{_TOP + plot_h}" x2="{px:.2f}" '
                f'y2="{_TOP + plot_h + 5}" stroke="#333"/>'
            )
            lines.append(
                f'<text x="{px:.2f}" y="{_TOP + plot_h + 20}" font-size="12" '
                f'text-anchor="middle" fill="#333">{x_val:.0f}</text>'
            )
        lo_decade = math.floor(y_min)
        hi_decade = math.ceil(y_max)
        stride = max(1, (hi_decade - lo_decade) // 6)
        for decade in range(lo_decade, hi_decade + 1, stride):
            if not y_min <= decade <= y_max:
                continue
            py = sy(10.0**decade)
            lines.append(
                f'<line x1="{_LEFT - 5}" y1="{py:.2f}" x2="{_LEFT}" y2="{py:.2f}" stroke="#333"/>'
            )
            lines.append(
                f'<text x="{_LEFT - 9}" y="{py + 4:.2f}" font-size="12" '
                f'text-anchor="end" fill="#333">1e{decade}</text>'
            )
        for idx, (name, (t, v)) in enumerate(cleaned.items()):
            color = _PALETTE[idx % len(_PALETTE)]
            points = " ".join(f"{sx(x):.2f},{sy(y):.2f}" for x, y in zip(t, v))
            lines.append(
                f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{points}"/>'
            )
            ly = _TOP + 16 + 16 * idx
            lx = _LEFT + plot_w - 8
            lines.append(
                f'<text x="{lx}" y="{ly}" font-size="12" text-anchor="end" '
                f'fill="{color}">{name}</text>'
            )
    else:
        lines.append(
            f'<text x="{_WIDTH / 2:.0f}" y="{_HEIGHT / 2:.0f}" font-size="14" '
            'text-anchor="middle" fill="#333">no positive values to plot</text>'
        )
    if title:
        lines.append(
            f'<text x="{_WIDTH / 2:.0f}" y="22" font-size="14" text-anchor="middle" '
            f'fill="#111">{title}</text>'
        )
    lines.append(f'<text x="{_LEFT + plot_w / 2:.0f}" y="{_HEIGHT - 8}" font-size="12" '
                 'text-anchor="middle" fill="#333">t</text>')
    lines.append("</svg>")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def _new_figure(title: str):
    from matplotlib.figure import Figure

    fig = Figure(figsize=(8.6, 5.2), dpi=100)
    ax = fig.add_subplot(111)
    if title:
        ax.set_title(title)
    return fig, ax


def _save(fig, path: str) -> None:
    from matplotlib.backends.backend_agg import FigureCanvasAgg

    FigureCanvasAgg(fig)
    fig.savefig(path, bbox_inches="tight")


def write_series_png(
    path: str,
    times,
    series: dict,
    bands: dict | None = None,
    title: str = "",
) -> None:
    """Render the same chart through matplotlib (log-y, optional bands)."""
    fig, ax = _new_figure(title)
    for idx, (name, values) in enumerate(series.items()):
        t, v = _finite_positive(times, values)
        if not t.size:
            continue
        color = _PALETTE[idx % len(_PALETTE)]
        ax.plot(t, v, label=name, color=color, linewidth=1.5)
        if bands and name in bands:
            lo, hi = bands[name]
            lo = np.asarray(lo, dtype=float)
            hi = np.asarray(hi, dtype=float)
            keep = np.isfinite(lo) & np.isfinite(hi) & (lo > 0.0)
            ax.fill_between(
                np.asarray(times, dtype=float)[keep], lo[keep], hi[keep],
                color=color, alpha=0.2, linewidth=0,
            )
    ax.set_yscale("log")
    ax.set_xlabel("t")
    ax.grid(True, which="both", alpha=0.3)
    ax.legend(loc="best", fontsize=9)
    _save(fig, path)


def write_sweep_png(path: str, param_name: str, dist_rows, gap_rows, title: str = "") -> None:
    """Two-panel summary of a parameter sweep (final distance and final gap)."""
    from matplotlib.figure import Figure

    fig = Figure(figsize=(10.0, 4.4), dpi=100)
    panels = (("final squared distance", dist_rows), ("final gap", gap_rows))
    for i, (label, rows) in enumerate(panels):
        ax = fig.add_subplot(1, 2, i + 1)
        values = np.array([r[0] for r in rows], dtype=float)
        mean = np.array([r[1] for r in rows], dtype=float)
        lo = np.array([r[2] for r in rows], dtype=float)
        hi = np.array([r[3] for r in rows], dtype=float)
        bound = np.array([r[4] for r in rows], dtype=float)
        ax.plot(values, mean, "o-", color=_PALETTE[0], label="mean")
        keep = np.isfinite(lo) & np.isfinite(hi)
        if keep.any():
            ax.fill_between(values[keep], lo[keep], hi[keep], color=_PALETTE[0], alpha=0.2)
        if np.isfinite(bound).any():
            ax.plot(values, bound, "--", color=_PALETTE[1], label="bound")
        if (mean > 0).all() and (values > 0).all():
            ax.set_xscale("log")
            ax.set_yscale("log")
        ax.set_xlabel(param_name)
        ax.set_title(label)
        ax.grid(True, which="both", alpha=0.3)
        ax.legend(fontsize=9)
    if title:
        fig.suptitle(title)
    _save(fig, path)
