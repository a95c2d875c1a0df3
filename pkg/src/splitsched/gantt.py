"""Deterministic SVG gantt rendering of a solve outcome.

One row per helper; forward slots in the client's base color, backward slots
darker, and a thin trailing bar for the client-side tail up to each client's
completion. Pure string assembly, no drawing dependencies, stable output for
a fixed outcome.
"""

from __future__ import annotations

from .model import SolveOutcome

_PALETTE = ["#4e79a7", "#f28e2b", "#59a14f", "#e15759", "#b07aa1",
            "#76b7b2", "#edc948", "#ff9da7", "#9c755f", "#bab0ac"]

_SLOT_W = 18
_ROW_H = 34
_BAR_H = 22
_LEFT = 70
_TOP = 34


def _darken(color: str) -> str:
    r, g, b = (int(color[k:k + 2], 16) for k in (1, 3, 5))
    return "#%02x%02x%02x" % (int(r * 0.6), int(g * 0.6), int(b * 0.6))


def render_gantt(outcome: SolveOutcome, title: str = "schedule") -> str:
    helpers = sorted({i for (i, _, _) in outcome.schedule.fwd}
                     | {i for (i, _, _) in outcome.schedule.bwd}
                     | set(outcome.assignment.by_client.values()))
    clients = sorted(outcome.c)
    span = max(outcome.makespan, 1)
    width = _LEFT + span * _SLOT_W + 20
    height = _TOP + max(len(helpers), 1) * _ROW_H + 46
    color = {j: _PALETTE[k % len(_PALETTE)] for k, j in enumerate(clients)}
    rows = {i: k for k, i in enumerate(helpers)}

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" '
        f'height="{height}" font-family="sans-serif" font-size="11">',
        f'<text x="{_LEFT}" y="16" font-size="13">{title}</text>',
    ]
    for i in helpers:
        y = _TOP + rows[i] * _ROW_H
        parts.append(f'<text x="6" y="{y + _BAR_H - 6}">helper {i}</text>')
        parts.append(f'<line x1="{_LEFT}" y1="{y + _BAR_H + 2}" '
                     f'x2="{_LEFT + span * _SLOT_W}" y2="{y + _BAR_H + 2}" '
                     f'stroke="#999" stroke-width="0.5"/>')
    for kind, triples in (("fwd", outcome.schedule.fwd), ("bwd", outcome.schedule.bwd)):
        for (i, j, t) in sorted(triples):
            y = _TOP + rows[i] * _ROW_H
            fill = color[j] if kind == "fwd" else _darken(color[j])
            parts.append(
                f'<rect x="{_LEFT + t * _SLOT_W}" y="{y}" width="{_SLOT_W - 1}" '
                f'height="{_BAR_H}" fill="{fill}">'
                f'<title>client {j} {kind} slot {t}</title></rect>')
    # client-side tails after the last backward slot
    for j in clients:
        i = outcome.assignment.by_client.get(j)
        if i is None or j not in outcome.phi:
            continue
        y = _TOP + rows[i] * _ROW_H
        x0 = _LEFT + outcome.phi[j] * _SLOT_W
        x1 = _LEFT + outcome.c[j] * _SLOT_W
        if x1 > x0:
            parts.append(f'<rect x="{x0}" y="{y + _BAR_H // 3}" '
                         f'width="{x1 - x0}" height="4" fill="{color[j]}" '
                         f'opacity="0.55"><title>client {j} tail</title></rect>')
    axis_y = _TOP + max(len(helpers), 1) * _ROW_H + 14
    step = max(1, span // 12)
    for t in range(0, span + 1, step):
        parts.append(f'<text x="{_LEFT + t * _SLOT_W}" y="{axis_y}" '
                     f'fill="#555">{t}</text>')
    parts.append(f'<text x="{_LEFT}" y="{axis_y + 18}" fill="#333">'
                 f'makespan {outcome.makespan} slots, method '
                 f'{outcome.stats.method}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
