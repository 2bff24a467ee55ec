"""Result tables, log-log slope fits and the files written per run."""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import InsufficientData, SlopeUnavailable

CSV_COLUMNS = ("scenario", "k", "t", "quantity", "value", "err_quadrature", "err_fd")


def fmt(x) -> str:
    """17 significant digits, enough to round-trip a double."""
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return f"{float(x):.17g}"


@dataclass(frozen=True)
class Fit:
    """value ~ constant * k^slope, fitted on log-log axes."""

    slope: float
    stderr: float
    constant: float
    n_used: int
    n_filtered: int

    def as_dict(self):
        return {
            "slope": self.slope,
            "stderr": self.stderr,
            "constant": self.constant,
            "n_used": self.n_used,
            "n_filtered": self.n_filtered,
        }


def fit_slope(pairs) -> Fit:
    """Least squares of log(value) on log(k); non-positive values are dropped."""
    pairs = [(float(k), float(v)) for k, v in pairs]
    usable = [(k, v) for k, v in pairs if k > 0 and v > 0 and math.isfinite(v)]
    if len(usable) < 2:
        raise InsufficientData(f"need at least 2 positive values, got {len(usable)}")
    lk = np.log([k for k, _ in usable])
    lv = np.log([v for _, v in usable])
    A = np.column_stack([lk, np.ones_like(lk)])
    (slope, intercept), *_ = np.linalg.lstsq(A, lv, rcond=None)
    n = len(usable)
    if n > 2:
        resid = lv - A @ np.array([slope, intercept])
        s2 = float(resid @ resid) / (n - 2)
        stderr = math.sqrt(s2 / float(np.sum((lk - lk.mean()) ** 2)))
    else:
        stderr = float("nan")
    return Fit(float(slope), stderr, float(math.exp(intercept)), n, len(pairs) - n)


@dataclass(frozen=True)
class Row:
    scenario: str
    k: int
    t: float
    quantity: str
    value: float
    err_quadrature: float = 0.0
    err_fd: float = 0.0

    def key(self):
        return (self.scenario, self.k, self.t, self.quantity)

    def cells(self):
        return [self.scenario, fmt(self.k), fmt(self.t), self.quantity, fmt(self.value),
                fmt(self.err_quadrature), fmt(self.err_fd)]


@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    detail: str


@dataclass
class ResultTable:
    """Rows of one scenario, their fitted slopes and window checks."""

    scenario: str
    rows: list[Row] = field(default_factory=list)
    fits: dict[str, Fit] = field(default_factory=dict)
    checks: list[Check] = field(default_factory=list)
    info: dict = field(default_factory=dict)

    def add(self, k, t, quantity, value, err_quadrature=0.0, err_fd=0.0):
        self.rows.append(Row(self.scenario, int(k), float(t), quantity, float(value),
                             float(err_quadrature), float(err_fd)))

    def sort(self):
        self.rows.sort(key=Row.key)
        return self

    def values(self, quantity: str) -> list[tuple[int, float]]:
        return [(r.k, r.value) for r in sorted(self.rows, key=Row.key) if r.quantity == quantity]

    def value(self, quantity: str, k: int) -> float:
        for r in self.rows:
            if r.quantity == quantity and r.k == k:
                return r.value
        raise KeyError((quantity, k))

    def fit(self, quantity: str) -> Fit:
        pairs = self.values(quantity)
        if len({k for k, _ in pairs}) < 3:
            raise SlopeUnavailable(f"{self.scenario}/{quantity}: a slope needs at least 3 distinct k")
        f = fit_slope(pairs)
        self.fits[quantity] = f
        return f

    def try_fit(self, quantity: str) -> Fit | None:
        try:
            return self.fit(quantity)
        except (SlopeUnavailable, InsufficientData):
            return None

    def check(self, name: str, passed: bool, detail: str) -> Check:
        c = Check(name, bool(passed), detail)
        self.checks.append(c)
        return c

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def summary(self) -> dict:
        return {
            "fits": {q: f.as_dict() for q, f in sorted(self.fits.items())},
            "checks": [{"name": c.name, "passed": c.passed, "detail": c.detail} for c in self.checks],
            "passed": self.passed,
            "info": self.info,
        }


def write_csv(tables, path: Path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for table in tables:
            for r in sorted(table.rows, key=Row.key):
                w.writerow(r.cells())


def _json_safe(obj):
    if isinstance(obj, dict):
        return {k: _json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_safe(v) for v in obj]
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, np.integer):
        return int(obj)
    return obj


def write_summary(tables, path: Path) -> None:
    data = {t.scenario: t.summary() for t in tables}
    path.write_text(json.dumps(_json_safe(data), indent=2, sort_keys=True) + "\n")


def write_svg(table: ResultTable, path: Path, width: int = 640, height: int = 420) -> None:
    """Log-log polylines, one per positive-valued quantity; plain SVG, no assets."""
    series = {}
    for q in sorted({r.quantity for r in table.rows}):
        pts = [(k, v) for k, v in table.values(q) if v > 0 and k > 0]
        if len(pts) >= 2:
            series[q] = pts
    margin = 60
    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
             f'font-family="sans-serif" font-size="11">',
             f'<rect width="{width}" height="{height}" fill="white"/>']
    if series:
        lk = [math.log10(k) for pts in series.values() for k, _ in pts]
        lv = [math.log10(v) for pts in series.values() for _, v in pts]
        x0, x1 = min(lk), max(lk) if max(lk) > min(lk) else min(lk) + 1
        y0, y1 = min(lv), max(lv) if max(lv) > min(lv) else min(lv) + 1

        def px(a):
            return margin + (a - x0) / (x1 - x0) * (width - 2 * margin)

        def py(b):
            return height - margin - (b - y0) / (y1 - y0) * (height - 2 * margin)

        parts.append(f'<line x1="{margin}" y1="{height - margin}" x2="{width - margin}" '
                     f'y2="{height - margin}" stroke="black"/>')
        parts.append(f'<line x1="{margin}" y1="{margin}" x2="{margin}" y2="{height - margin}" stroke="black"/>')
        parts.append(f'<text x="{width / 2}" y="{height - 20}" text-anchor="middle">log10 k</text>')
        parts.append(f'<text x="15" y="{height / 2}" transform="rotate(-90 15 {height / 2})" '
                     f'text-anchor="middle">log10 value</text>')
        parts.append(f'<text x="{margin}" y="{height - margin + 15}">{x0:.2f}</text>')
        parts.append(f'<text x="{width - margin}" y="{height - margin + 15}" text-anchor="end">{x1:.2f}</text>')
        parts.append(f'<text x="{margin - 5}" y="{height - margin}" text-anchor="end">{y0:.2f}</text>')
        parts.append(f'<text x="{margin - 5}" y="{margin + 4}" text-anchor="end">{y1:.2f}</text>')
        palette = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"]
        for i, (q, pts) in enumerate(series.items()):
            colour = palette[i % len(palette)]
            coords = " ".join(f"{px(math.log10(k)):.1f},{py(math.log10(v)):.1f}" for k, v in pts)
            parts.append(f'<polyline fill="none" stroke="{colour}" stroke-width="1.5" points="{coords}"/>')
            parts.append(f'<text x="{width - margin + 5}" y="{margin + 14 * i}" fill="{colour}" '
                         f'text-anchor="end">{q}</text>')
    parts.append(f'<text x="{width / 2}" y="20" text-anchor="middle">{table.scenario}</text>')
    parts.append("</svg>")
    path.write_text("\n".join(parts) + "\n")
