"""Tabular results with pass/fail flags, written as CSV and optional SVG."""

from __future__ import annotations

import io
import math
import os
import tempfile
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "1" if v else "0"
    if isinstance(v, (int,)):
        return str(v)
    v = float(v)
    if math.isnan(v):
        return "nan"
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return format(v, ".17g")


@dataclass
class ReportTable:
    """Rows of reals under named columns.

    ``flags`` holds one entry per row: True (inequality holds), False
    (violated) or None (row not asserted). ``checks`` holds table-level
    assertions such as boundedness of a whole column.
    """

    title: str
    columns: list[str]
    rows: list[list[float]] = field(default_factory=list)
    flags: list[bool | None] = field(default_factory=list)
    checks: dict[str, bool] = field(default_factory=dict)
    footer: dict[str, float | str] = field(default_factory=dict)

    def add(self, row: Sequence[float], ok: bool | None = None) -> None:
        if len(row) != len(self.columns):
            raise ValueError(f"row has {len(row)} entries, table has {len(self.columns)} columns")
        self.rows.append([float(v) for v in row])
        self.flags.append(None if ok is None else bool(ok))

    def column(self, name: str) -> list[float]:
        k = self.columns.index(name)
        return [r[k] for r in self.rows]

    def failing_rows(self) -> list[int]:
        return [i for i, f in enumerate(self.flags) if f is False]

    def failing_checks(self) -> list[str]:
        return [k for k, v in self.checks.items() if not v]

    @property
    def passed(self) -> bool:
        return not self.failing_rows() and not self.failing_checks()

    def to_csv(self) -> str:
        out = io.StringIO()
        asserted = any(f is not None for f in self.flags)
        head = list(self.columns) + (["pass"] if asserted else [])
        out.write(",".join(head) + "\n")
        for row, flag in zip(self.rows, self.flags):
            cells = [_fmt(v) for v in row]
            if asserted:
                cells.append("" if flag is None else _fmt(flag))
            out.write(",".join(cells) + "\n")
        for key, ok in self.checks.items():
            out.write(f"# check {key}={'PASS' if ok else 'FAIL'}\n")
        for key, val in self.footer.items():
            out.write(f"# {key}={val if isinstance(val, str) else _fmt(val)}\n")
        return out.getvalue()

    def to_svg(self, x: str, ys: Sequence[str], logx: bool = True, logy: bool = True) -> str:
        return line_plot_svg(self.title, self.column(x), {y: self.column(y) for y in ys}, x, logx, logy)


def write_atomic(path, data: str | bytes) -> None:
    """Write via a temporary file in the same directory, then rename."""
    path = Path(path)
    mode = "wb" if isinstance(data, bytes) else "w"
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=".tmp-", suffix=path.suffix)
    try:
        with os.fdopen(fd, mode) as fh:
            fh.write(data)
        os.chmod(tmp, 0o644)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


# --- svg -----------------------------------------------------------------------

WIDTH, HEIGHT = 800, 600
MARGIN = dict(left=80, right=160, top=50, bottom=60)
PALETTE = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"]


def _transform(vals, log):
    if log:
        return [math.log10(v) if v > 0 and math.isfinite(v) else None for v in vals]
    return [v if math.isfinite(v) else None for v in vals]


def _esc(s: str) -> str:
    return s.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")


def line_plot_svg(title: str, xs, series: dict, xlabel: str = "",
                  logx: bool = True, logy: bool = True) -> str:
    tx = _transform(xs, logx)
    ty = {k: _transform(v, logy) for k, v in series.items()}
    xv = [v for v in tx if v is not None]
    yv = [v for vals in ty.values() for v in vals if v is not None]
    x0, x1 = (min(xv), max(xv)) if xv else (0.0, 1.0)
    y0, y1 = (min(yv), max(yv)) if yv else (0.0, 1.0)
    if x1 == x0:
        x1 = x0 + 1
    if y1 == y0:
        y1 = y0 + 1
    pw = WIDTH - MARGIN["left"] - MARGIN["right"]
    ph = HEIGHT - MARGIN["top"] - MARGIN["bottom"]

    def px(v):
        return MARGIN["left"] + (v - x0) / (x1 - x0) * pw

    def py(v):
        return MARGIN["top"] + (1 - (v - y0) / (y1 - y0)) * ph

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {WIDTH} {HEIGHT}" '
        f'width="{WIDTH}" height="{HEIGHT}" font-family="sans-serif" font-size="12">',
        f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<text x="{WIDTH / 2:.1f}" y="25" text-anchor="middle" font-size="15">{_esc(title)}</text>',
        f'<rect x="{MARGIN["left"]}" y="{MARGIN["top"]}" width="{pw}" height="{ph}" '
        f'fill="none" stroke="black"/>',
    ]
    for k in range(6):
        fx = x0 + (x1 - x0) * k / 5
        fy = y0 + (y1 - y0) * k / 5
        lx = f"1e{fx:.1f}" if logx else f"{fx:.3g}"
        ly = f"1e{fy:.1f}" if logy else f"{fy:.3g}"
        parts.append(f'<text x="{px(fx):.1f}" y="{HEIGHT - MARGIN["bottom"] + 18}" '
                     f'text-anchor="middle">{lx}</text>')
        parts.append(f'<text x="{MARGIN["left"] - 6}" y="{py(fy) + 4:.1f}" text-anchor="end">{ly}</text>')
    parts.append(f'<text x="{MARGIN["left"] + pw / 2:.1f}" y="{HEIGHT - 15}" '
                 f'text-anchor="middle">{_esc(xlabel)}</text>')
    for idx, (name, vals) in enumerate(ty.items()):
        colour = PALETTE[idx % len(PALETTE)]
        pts = [f"{px(a):.2f},{py(b):.2f}" for a, b in zip(tx, vals) if a is not None and b is not None]
        if pts:
            parts.append(f'<polyline fill="none" stroke="{colour}" stroke-width="1.5" points="{" ".join(pts)}"/>')
        ly = MARGIN["top"] + 20 + 18 * idx
        lx = WIDTH - MARGIN["right"] + 10
        parts.append(f'<line x1="{lx}" y1="{ly}" x2="{lx + 20}" y2="{ly}" stroke="{colour}" stroke-width="2"/>')
        parts.append(f'<text x="{lx + 26}" y="{ly + 4}">{_esc(name)}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
