"""Self-contained SVG rendering for step-function curves.

No plotting dependency: the output is a small hand-assembled SVG with one
polyline per curve, axis ticks, and a legend. Good enough for performance
profiles and convergence traces, and trivially diffable.
"""

from __future__ import annotations

from xml.sax.saxutils import escape

PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")

_WIDTH, _HEIGHT = 760, 480
_LEFT, _RIGHT, _TOP, _BOTTOM = 70, 170, 46, 56


def _ticks(lo: float, hi: float, count: int = 5) -> list[float]:
    if hi == lo:
        return [lo]
    step = (hi - lo) / (count - 1)
    return [lo + i * step for i in range(count)]


def render_step_curves(
    curves: list[tuple[str, list[tuple[float, float]]]],
    path,
    title: str,
    xlabel: str,
    ylabel: str,
    y_range: tuple[float, float] | None = None,
    step: bool = True,
) -> None:
    """Write an SVG plot of labelled curves.

    With `step=True` each curve is drawn as a right-continuous staircase
    (value holds until the next sample); otherwise points are joined
    directly.
    """
    xs = [x for _, pts in curves for x, _ in pts]
    ys = [y for _, pts in curves for _, y in pts]
    if not xs:
        raise ValueError("nothing to plot")
    x_lo, x_hi = min(xs), max(xs)
    if x_hi == x_lo:
        x_hi = x_lo + 1.0
    if y_range is not None:
        y_lo, y_hi = y_range
    else:
        y_lo, y_hi = min(ys), max(ys)
        if y_hi == y_lo:
            y_hi = y_lo + 1.0

    plot_w = _WIDTH - _LEFT - _RIGHT
    plot_h = _HEIGHT - _TOP - _BOTTOM

    def px(x: float) -> float:
        return _LEFT + (x - x_lo) / (x_hi - x_lo) * plot_w

    def py(y: float) -> float:
        return _TOP + (y_hi - y) / (y_hi - y_lo) * plot_h

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_WIDTH}" height="{_HEIGHT}" '
        f'viewBox="0 0 {_WIDTH} {_HEIGHT}">',
        f'<rect width="{_WIDTH}" height="{_HEIGHT}" fill="white"/>',
        f'<text x="{_WIDTH / 2:.1f}" y="24" text-anchor="middle" font-size="16" '
        f'font-family="sans-serif">{escape(title)}</text>',
        f'<rect x="{_LEFT}" y="{_TOP}" width="{plot_w}" height="{plot_h}" '
        f'fill="none" stroke="#444"/>',
    ]

    for tick in _ticks(x_lo, x_hi):
        x = px(tick)
        parts.append(f'<line x1="{x:.1f}" y1="{_TOP + plot_h}" x2="{x:.1f}" '
                     f'y2="{_TOP + plot_h + 5}" stroke="#444"/>')
        parts.append(f'<text x="{x:.1f}" y="{_TOP + plot_h + 20}" text-anchor="middle" '
                     f'font-size="11" font-family="sans-serif">{tick:g}</text>')
    for tick in _ticks(y_lo, y_hi):
        y = py(tick)
        parts.append(f'<line x1="{_LEFT - 5}" y1="{y:.1f}" x2="{_LEFT}" y2="{y:.1f}" '
                     f'stroke="#444"/>')
        parts.append(f'<text x="{_LEFT - 9}" y="{y + 4:.1f}" text-anchor="end" '
                     f'font-size="11" font-family="sans-serif">{tick:g}</text>')

    parts.append(f'<text x="{_LEFT + plot_w / 2:.1f}" y="{_HEIGHT - 14}" text-anchor="middle" '
                 f'font-size="13" font-family="sans-serif">{escape(xlabel)}</text>')
    parts.append(f'<text x="20" y="{_TOP + plot_h / 2:.1f}" text-anchor="middle" '
                 f'font-size="13" font-family="sans-serif" '
                 f'transform="rotate(-90 20 {_TOP + plot_h / 2:.1f})">{escape(ylabel)}</text>')

    for idx, (label, pts) in enumerate(curves):
        color = PALETTE[idx % len(PALETTE)]
        coords: list[str] = []
        prev_y = None
        for x, y in pts:
            if step and prev_y is not None:
                coords.append(f"{px(x):.2f},{py(prev_y):.2f}")
            coords.append(f"{px(x):.2f},{py(y):.2f}")
            prev_y = y
        parts.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.8" '
                     f'points="{" ".join(coords)}"/>')
        ly = _TOP + 14 + idx * 20
        lx = _LEFT + plot_w + 14
        parts.append(f'<line x1="{lx}" y1="{ly - 4}" x2="{lx + 26}" y2="{ly - 4}" '
                     f'stroke="{color}" stroke-width="2.5"/>')
        parts.append(f'<text x="{lx + 32}" y="{ly}" font-size="12" '
                     f'font-family="sans-serif">{escape(label)}</text>')

    parts.append("</svg>")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(parts) + "\n")
