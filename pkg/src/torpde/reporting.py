"""Deterministic CSV emission and dependency-free SVG line charts.

Floats are rendered with 17 significant digits so identical runs produce
bit-identical artifacts; wall-clock and other nondeterministic data never
enter these files.
"""

from __future__ import annotations

import math
from typing import Sequence

from .hyperbolic import EnergyLedger

__all__ = ["fmt", "csv_table", "ledger_csv", "svg_line_chart"]


def fmt(x) -> str:
    if isinstance(x, float):
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return format(x, ".17g")
    return str(x)


def csv_table(header: Sequence[str], rows: Sequence[Sequence]) -> str:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(fmt(v) for v in row))
    return "\n".join(lines) + "\n"


def ledger_csv(ledger: EnergyLedger, c_star: float) -> str:
    """Columns: t, u-norm, velocity norm, running forcing integral, conserved
    energy, and the certified bound C* e^{C* t} (rhs)."""
    lhs_is_u = ledger.u_norms is not None
    rows = []
    rhs0 = ledger.rhs_base()
    for i, t in enumerate(ledger.times):
        bound = math.exp(c_star * t) * rhs0[i]
        if ledger.uses_prefactor:
            bound *= c_star
        rows.append(
            (
                t,
                ledger.u_norms[i] if lhs_is_u else math.sqrt(ledger.lhs_squared()[i]),
                ledger.v2_norms[i],
                ledger.forcing_integral[i],
                ledger.conserved_energy[i] if ledger.conserved_energy is not None else 0.0,
                bound,
            )
        )
    header = ["t", "u_norm_Hs", "ut_norm_Hs_minus_nu_half", "forcing_integral", "conserved_energy", "bound_rhs"]
    return csv_table(header, rows)


def svg_line_chart(
    series: dict[str, tuple[Sequence[float], Sequence[float]]],
    title: str,
    width: int = 640,
    height: int = 400,
    log_y: bool = False,
) -> str:
    """Minimal multi-series line chart; returns the SVG document as text."""
    colors = ["#1f6fb2", "#c23b22", "#2e8540", "#8661c5", "#b58900", "#3aa6a6"]
    margin = 54
    xs_all = [x for xs, _ in series.values() for x in xs]
    ys_all = [y for _, ys in series.values() for y in ys if not (math.isnan(y) or math.isinf(y))]
    if log_y:
        ys_all = [y for y in ys_all if y > 0]
    if not xs_all or not ys_all:
        xs_all, ys_all = [0.0, 1.0], [0.0, 1.0]
    x0, x1 = min(xs_all), max(xs_all)
    y0, y1 = min(ys_all), max(ys_all)
    if log_y:
        y0, y1 = math.log10(y0), math.log10(y1)
    if x1 == x0:
        x1 = x0 + 1.0
    if y1 == y0:
        y1 = y0 + 1.0

    def px(x: float) -> float:
        return margin + (x - x0) / (x1 - x0) * (width - 2 * margin)

    def py(y: float) -> float:
        if log_y:
            y = math.log10(y) if y > 0 else y0
        return height - margin - (y - y0) / (y1 - y0) * (height - 2 * margin)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<text x="{width / 2:.1f}" y="20" text-anchor="middle" font-size="14" '
        f'font-family="sans-serif">{title}</text>',
        f'<line x1="{margin}" y1="{height - margin}" x2="{width - margin}" '
        f'y2="{height - margin}" stroke="#333"/>',
        f'<line x1="{margin}" y1="{margin}" x2="{margin}" y2="{height - margin}" stroke="#333"/>',
        f'<text x="{margin}" y="{height - margin + 16}" font-size="10" '
        f'font-family="sans-serif">{x0:.3g}</text>',
        f'<text x="{width - margin}" y="{height - margin + 16}" text-anchor="end" '
        f'font-size="10" font-family="sans-serif">{x1:.3g}</text>',
        f'<text x="{margin - 4}" y="{height - margin}" text-anchor="end" font-size="10" '
        f'font-family="sans-serif">{(10 ** y0 if log_y else y0):.3g}</text>',
        f'<text x="{margin - 4}" y="{margin + 4}" text-anchor="end" font-size="10" '
        f'font-family="sans-serif">{(10 ** y1 if log_y else y1):.3g}</text>',
    ]
    for i, (label, (xs, ys)) in enumerate(series.items()):
        color = colors[i % len(colors)]
        pts = " ".join(
            f"{px(x):.2f},{py(y):.2f}"
            for x, y in zip(xs, ys)
            if not (math.isnan(y) or math.isinf(y)) and (not log_y or y > 0)
        )
        parts.append(f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="1.5"/>')
        parts.append(
            f'<text x="{width - margin + 4}" y="{margin + 14 * i + 10}" font-size="10" '
            f'fill="{color}" font-family="sans-serif">{label}</text>'
        )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
