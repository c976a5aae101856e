"""CSV and SVG emitters for experiment artifacts.

Everything here writes plain inspectable text: CSV for tabular results
and a self-contained SVG (no plotting dependency) for the log-log excess
risk chart with its fitted line and the uncalibrated reference curve.
"""

from __future__ import annotations

import io
import math

import numpy as np

__all__ = ["trajectory_csv", "dependence_csv", "rate_csv", "rate_svg"]


def trajectory_csv(values, labels=None) -> str:
    out = io.StringIO()
    if labels is None:
        out.write("index,x\n")
        for i, v in enumerate(np.asarray(values).ravel()):
            out.write(f"{i},{float(v)!r}\n")
    else:
        out.write("index,x,y\n")
        for i, (v, y) in enumerate(zip(np.asarray(values).ravel(), np.asarray(labels).ravel())):
            out.write(f"{i},{float(v)!r},{float(y)!r}\n")
    return out.getvalue()


def dependence_csv(estimate) -> str:
    out = io.StringIO()
    out.write("lag,cov_abs\n")
    for lag, cov in zip(estimate.lags, estimate.cov_abs):
        out.write(f"{lag},{float(cov)!r}\n")
    return out.getvalue()


def rate_csv(report) -> str:
    """Per-cell table; column names follow the class-cap parameter names."""
    out = io.StringIO()
    out.write("n,replication,excess,est_error,approx_error,L_n,N_n,S_n,B_n\n")
    caps = {p["n"]: p["class_params"] for p in report.per_n}
    for cell in report.cells:
        if cell.get("status") != "ok":
            continue
        cp = caps[cell["n"]]
        out.write(
            f"{cell['n']},{cell['replication']},{float(cell['excess'])!r},"
            f"{float(cell['est_error'])!r},{float(cell['approx_error'])!r},"
            f"{cp['depth_cap']},{cp['width_cap']},{cp['sparsity_cap']},"
            f"{float(cp['weight_cap'])!r}\n"
        )
    return out.getvalue()


def _ticks_log(lo: float, hi: float) -> list[float]:
    lo_e = math.floor(math.log10(lo))
    hi_e = math.ceil(math.log10(hi))
    return [10.0**e for e in range(lo_e, hi_e + 1)]


def rate_svg(report, width: int = 640, height: int = 480) -> str:
    """Log-log chart: median excess vs n, fitted line, reference curve."""
    pts = [
        (p["n"], p["excess_risk_median"])
        for p in report.per_n
        if p["excess_risk_median"] is not None and p["excess_risk_median"] > 0
    ]
    ref = [
        (p["n"], r)
        for p, r in zip(report.per_n, report.reference_bound)
        if r is not None and np.isfinite(r) and r > 0
    ]
    margin = 56
    if not pts:
        return (
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">'
            '<text x="20" y="40">no positive excess-risk medians to plot</text></svg>'
        )
    xs = [p[0] for p in pts] + [p[0] for p in ref]
    ys = [p[1] for p in pts] + [p[1] for p in ref]
    x_lo, x_hi = min(xs) / 1.3, max(xs) * 1.3
    y_lo, y_hi = min(ys) / 1.5, max(ys) * 1.5

    def sx(v):
        return margin + (math.log(v) - math.log(x_lo)) / (
            math.log(x_hi) - math.log(x_lo)
        ) * (width - 2 * margin)

    def sy(v):
        return height - margin - (math.log(v) - math.log(y_lo)) / (
            math.log(y_hi) - math.log(y_lo)
        ) * (height - 2 * margin)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="12">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<rect x="{margin}" y="{margin}" width="{width - 2 * margin}" '
        f'height="{height - 2 * margin}" fill="none" stroke="#999"/>',
    ]
    for t in _ticks_log(x_lo, x_hi):
        if x_lo <= t <= x_hi:
            parts.append(
                f'<line x1="{sx(t):.1f}" y1="{height - margin}" x2="{sx(t):.1f}" '
                f'y2="{height - margin + 5}" stroke="#333"/>'
                f'<text x="{sx(t):.1f}" y="{height - margin + 18}" text-anchor="middle">{t:g}</text>'
            )
    for t in _ticks_log(y_lo, y_hi):
        if y_lo <= t <= y_hi:
            parts.append(
                f'<line x1="{margin - 5}" y1="{sy(t):.1f}" x2="{margin}" y2="{sy(t):.1f}" stroke="#333"/>'
                f'<text x="{margin - 8}" y="{sy(t):.1f}" text-anchor="end" dominant-baseline="middle">{t:g}</text>'
            )
    parts.append(
        f'<text x="{width / 2:.0f}" y="{height - 12}" text-anchor="middle">sample size n (log)</text>'
    )
    parts.append(
        f'<text x="16" y="{height / 2:.0f}" text-anchor="middle" '
        f'transform="rotate(-90 16 {height / 2:.0f})">median excess risk (log)</text>'
    )

    if len(ref) >= 2:
        path = " ".join(f"{sx(n):.1f},{sy(v):.1f}" for n, v in ref)
        parts.append(
            f'<polyline points="{path}" fill="none" stroke="#777" stroke-dasharray="6 4"/>'
        )
        parts.append(
            f'<text x="{width - margin - 4}" y="{margin + 16}" text-anchor="end" fill="#777">'
            "reference curve (uncalibrated shape)</text>"
        )
    if report.fitted_slope is not None and len(pts) >= 2:
        lx = np.log([p[0] for p in pts])
        ly = np.log([p[1] for p in pts])
        slope = report.fitted_slope
        intercept = float(np.mean(ly) - slope * np.mean(lx))
        n0, n1 = min(p[0] for p in pts), max(p[0] for p in pts)
        y0 = math.exp(intercept + slope * math.log(n0))
        y1 = math.exp(intercept + slope * math.log(n1))
        parts.append(
            f'<line x1="{sx(n0):.1f}" y1="{sy(y0):.1f}" x2="{sx(n1):.1f}" y2="{sy(y1):.1f}" '
            'stroke="#1f77b4" stroke-width="1.5"/>'
        )
        parts.append(
            f'<text x="{width - margin - 4}" y="{margin + 32}" text-anchor="end" fill="#1f77b4">'
            f"fitted slope {slope:.3f} (target {report.target_slope:.3f})</text>"
        )
    for n, v in pts:
        parts.append(
            f'<circle cx="{sx(n):.1f}" cy="{sy(v):.1f}" r="4" fill="#d62728"/>'
        )
    parts.append("</svg>")
    return "\n".join(parts)
