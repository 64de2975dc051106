"""Zone classification, monotonicity ratios, CSV tables and SVG scatter plots."""
from __future__ import annotations

import csv
import math
import os
from typing import Optional, Sequence
from xml.sax.saxutils import escape

from .effects import FIRST, EffectSample, EffectsSummary
from .exceptions import ClassificationError

NEGLIGIBLE = "negligible"
ALMOST_LINEAR = "almost_linear"
MONOTONIC = "monotonic"
ALMOST_MONOTONIC = "almost_monotonic"
NONMONOTONIC = "nonmonotonic_or_interacting"
ZONES = (NEGLIGIBLE, ALMOST_LINEAR, MONOTONIC, ALMOST_MONOTONIC, NONMONOTONIC)

# sigma / mu* boundaries between the linear, monotonic, almost-monotonic and
# non-monotonic zones
ZONE_SLOPES = (0.1, 0.5, 1.0)

SUMMARY_COLUMNS = ("kind", "i", "j", "mu", "mu_star", "sigma", "ratio_star", "ratio_abs", "n")
EFFECTS_COLUMNS = ("kind", "i", "j", "replicate", "value")
ZONES_COLUMNS = ("kind", "i", "j", "label", "mu_star", "sigma", "ratio_star", "zone")

SIGMA_AXIS = "sigma"
RATIO_AXIS = "ratio"
PRESENTATIONS = (SIGMA_AXIS, RATIO_AXIS)


def monotonicity_ratios(summary: EffectsSummary):
    """``(sigma / mu*, sigma / |mu|)``; an undefined ratio is None."""
    if summary.sigma is None:
        raise ClassificationError("ratios need at least two replicates")
    if summary.mu_star == 0:
        return None, None
    ratio_abs = summary.sigma / abs(summary.mu) if summary.mu != 0 else None
    return summary.sigma / summary.mu_star, ratio_abs


def classify(summary: EffectsSummary, max_mu_star: float, negligible_rel: float = 0.01) -> str:
    """Zone of one parameter given the largest mu* of its analysis."""
    if summary.n < 2 or summary.sigma is None:
        raise ClassificationError(f"cannot classify {summary.label}: sigma needs n >= 2 (n={summary.n})")
    threshold = negligible_rel * max_mu_star
    if summary.mu_star == 0 or (summary.mu_star < threshold and summary.sigma < threshold):
        return NEGLIGIBLE
    ratio = summary.sigma / summary.mu_star
    if ratio < ZONE_SLOPES[0]:
        return ALMOST_LINEAR
    if ratio < ZONE_SLOPES[1]:
        return MONOTONIC
    if ratio < ZONE_SLOPES[2]:
        return ALMOST_MONOTONIC
    return NONMONOTONIC


def classify_all(summaries: Sequence[EffectsSummary], negligible_rel: float = 0.01) -> list:
    """Zones for a list of summaries; first- and second-order rows are scaled separately."""
    peak = {}
    for s in summaries:
        peak[s.kind] = max(peak.get(s.kind, 0.0), s.mu_star)
    return [classify(s, peak[s.kind], negligible_rel) for s in summaries]


# --- CSV ---------------------------------------------------------------------

def _cell(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _index_cell(i):
    return "" if i is None else str(i + 1)


def write_effects_csv(samples: Sequence[EffectSample], path) -> None:
    """Effect samples; parameter numbers ``i``/``j`` are 1-based."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(EFFECTS_COLUMNS)
        for s in samples:
            w.writerow([s.kind, _index_cell(s.i), _index_cell(s.j), s.replicate + 1, _cell(s.value)])


def write_summary_csv(summaries: Sequence[EffectsSummary], path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SUMMARY_COLUMNS)
        for s in summaries:
            w.writerow([
                s.kind, _index_cell(s.i), _index_cell(s.j), _cell(s.mu), _cell(s.mu_star),
                _cell(s.sigma), _cell(s.ratio_star), _cell(s.ratio_abs), s.n,
            ])


def read_summary_csv(path) -> list:
    def num(cell):
        return None if cell == "" else float(cell)

    out = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != SUMMARY_COLUMNS:
            raise ValueError(f"{path}: expected columns {SUMMARY_COLUMNS}")
        for row in reader:
            out.append(EffectsSummary(
                row["kind"], int(row["i"]) - 1, None if row["j"] == "" else int(row["j"]) - 1,
                float(row["mu"]), float(row["mu_star"]), num(row["sigma"]),
                num(row["ratio_star"]), num(row["ratio_abs"]), int(row["n"]),
            ))
    return out


def write_zones_csv(summaries, zones, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(ZONES_COLUMNS)
        for s, zone in zip(summaries, zones):
            w.writerow([
                s.kind, _index_cell(s.i), _index_cell(s.j), s.label,
                _cell(s.mu_star), _cell(s.sigma), _cell(s.ratio_star), zone,
            ])


# --- SVG ---------------------------------------------------------------------

WIDTH, HEIGHT = 800, 600
MARGIN_LEFT, MARGIN_RIGHT, MARGIN_TOP, MARGIN_BOTTOM = 80, 30, 50, 60
GUIDE_COLORS = ("#2a9d8f", "#e9c46a", "#e76f51")


def _fmt(v: float) -> str:
    return f"{v:.2f}"


def _nice_ticks(hi: float, n: int = 5):
    raw = hi / n
    mag = 10 ** math.floor(math.log10(raw))
    step = next(m * mag for m in (1, 2, 2.5, 5, 10) if m * mag >= raw)
    count = int(math.floor(hi / step * (1 + 1e-12))) + 1
    return [t * step for t in range(count)]


def _tick_label(v: float) -> str:
    return f"{v:.4g}"


def scatter_svg(
    summaries: Sequence[EffectsSummary],
    presentation: str = SIGMA_AXIS,
    title: Optional[str] = None,
) -> str:
    """Self-contained SVG of mu* against sigma (or sigma / mu*).

    Guides: lines of slope 0.1, 0.5, 1 through the origin on the sigma axis,
    horizontal lines at the same values on the ratio axis. Points whose
    ratio is undefined (mu* = 0) are left out of the ratio presentation.
    """
    if not summaries:
        raise ValueError("no summaries to plot")
    if presentation not in PRESENTATIONS:
        raise ValueError(f"presentation must be one of {PRESENTATIONS}")
    pts = []
    for s in summaries:
        sigma = s.sigma if s.sigma is not None else 0.0
        if presentation == SIGMA_AXIS:
            pts.append((s.label, s.mu_star, sigma))
        elif s.mu_star > 0:
            pts.append((s.label, s.mu_star, sigma / s.mu_star))

    x_hi = max([p[1] for p in pts], default=0.0)
    y_hi = max([p[2] for p in pts], default=0.0)
    # keep the first guide in view when every sigma is ~0
    if presentation == RATIO_AXIS:
        y_hi = max(y_hi, ZONE_SLOPES[-1])
    else:
        y_hi = max(y_hi, ZONE_SLOPES[0] * x_hi)
    x_hi = x_hi * 1.05 if x_hi > 0 else 1.0
    y_hi = y_hi * 1.05 if y_hi > 0 else 1.0

    pw = WIDTH - MARGIN_LEFT - MARGIN_RIGHT
    ph = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM

    def px(x):
        return MARGIN_LEFT + x / x_hi * pw

    def py(y):
        return MARGIN_TOP + ph - y / y_hi * ph

    ylabel = "sigma" if presentation == SIGMA_AXIS else "sigma / mu*"
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}" data-presentation="{presentation}" '
        f'data-x-max="{x_hi!r}" data-y-max="{y_hi!r}">',
        '<style>text{font-family:sans-serif;font-size:12px;fill:#222}'
        '.title{font-size:15px;font-weight:bold}.axis{stroke:#222;stroke-width:1}'
        '.grid{stroke:#ddd;stroke-width:1}.guide{stroke-width:1.5;stroke-dasharray:6 4}'
        '.pt{fill:#264653;stroke:#fff;stroke-width:1}</style>',
        f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="#ffffff"/>',
        '<defs><clipPath id="plot"><rect '
        f'x="{MARGIN_LEFT}" y="{MARGIN_TOP}" width="{pw}" height="{ph}"/></clipPath></defs>',
    ]
    if title:
        out.append(f'<text class="title" x="{WIDTH / 2:.1f}" y="28" text-anchor="middle">{escape(title)}</text>')

    for t in _nice_ticks(x_hi):
        x = px(t)
        out.append(f'<line class="grid" x1="{_fmt(x)}" y1="{MARGIN_TOP}" x2="{_fmt(x)}" y2="{MARGIN_TOP + ph}"/>')
        out.append(f'<text x="{_fmt(x)}" y="{MARGIN_TOP + ph + 18}" text-anchor="middle">{_tick_label(t)}</text>')
    for t in _nice_ticks(y_hi):
        y = py(t)
        out.append(f'<line class="grid" x1="{MARGIN_LEFT}" y1="{_fmt(y)}" x2="{MARGIN_LEFT + pw}" y2="{_fmt(y)}"/>')
        out.append(f'<text x="{MARGIN_LEFT - 8}" y="{_fmt(y + 4)}" text-anchor="end">{_tick_label(t)}</text>')

    out.append(f'<g clip-path="url(#plot)">')
    for slope, color in zip(ZONE_SLOPES, GUIDE_COLORS):
        if presentation == SIGMA_AXIS:
            x1, y1, x2, y2 = px(0), py(0), px(x_hi), py(slope * x_hi)
        else:
            x1, y1, x2, y2 = px(0), py(slope), px(x_hi), py(slope)
        out.append(
            f'<line class="guide" data-slope="{slope}" stroke="{color}" '
            f'x1="{_fmt(x1)}" y1="{_fmt(y1)}" x2="{_fmt(x2)}" y2="{_fmt(y2)}"/>'
        )
    out.append("</g>")
    # guide labels sit at the right edge, inside the plot when visible
    for slope, color in zip(ZONE_SLOPES, GUIDE_COLORS):
        y_at = slope * x_hi if presentation == SIGMA_AXIS else slope
        if y_at <= y_hi:
            out.append(
                f'<text x="{MARGIN_LEFT + pw - 4}" y="{_fmt(py(y_at) - 4)}" text-anchor="end" '
                f'fill="{color}">sigma/mu* = {slope}</text>'
            )

    out.append(
        f'<line class="axis" x1="{MARGIN_LEFT}" y1="{MARGIN_TOP + ph}" x2="{MARGIN_LEFT + pw}" y2="{MARGIN_TOP + ph}"/>'
    )
    out.append(f'<line class="axis" x1="{MARGIN_LEFT}" y1="{MARGIN_TOP}" x2="{MARGIN_LEFT}" y2="{MARGIN_TOP + ph}"/>')
    out.append(f'<text x="{MARGIN_LEFT + pw / 2:.1f}" y="{HEIGHT - 15}" text-anchor="middle">mu*</text>')
    out.append(
        f'<text x="20" y="{MARGIN_TOP + ph / 2:.1f}" text-anchor="middle" '
        f'transform="rotate(-90 20 {MARGIN_TOP + ph / 2:.1f})">{ylabel}</text>'
    )

    for label, x, y in pts:
        cx, cy = px(x), py(y)
        out.append(
            f'<circle class="pt" data-label="{escape(label)}" data-x="{x!r}" data-y="{y!r}" '
            f'cx="{_fmt(cx)}" cy="{_fmt(cy)}" r="4"/>'
        )
        out.append(f'<text x="{_fmt(cx + 6)}" y="{_fmt(cy - 6)}">{escape(label)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def emit_scatter_svg(summaries, presentation, path, title=None) -> None:
    """Write :func:`scatter_svg` to ``path``; nothing is written on error."""
    text = scatter_svg(summaries, presentation, title)
    directory = os.path.dirname(os.path.abspath(path))
    if not os.path.isdir(directory):
        raise OSError(f"cannot write {path}: directory does not exist")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def split_kinds(summaries):
    first = [s for s in summaries if s.kind == FIRST]
    second = [s for s in summaries if s.kind != FIRST]
    return first, second
