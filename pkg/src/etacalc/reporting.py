"""Report emitters: residual CSV tables, JSON dumps, SVG line plots.

CSV output is bit-identical for a fixed config and seed: floats are
formatted with %.17g, rows keep a fixed column order, and nothing
time-dependent goes into the table.  Runtimes live only in the JSON.
"""

import json

import numpy as np


def fmt_float(x):
    if isinstance(x, float):
        return "%.17g" % x
    return str(x)


def rows_to_csv(rows, cols):
    lines = [",".join(cols)]
    for r in rows:
        lines.append(",".join(fmt_float(r.get(c, "")) for c in cols))
    return "\n".join(lines) + "\n"


def write_csv(path, rows, cols):
    with open(path, "w") as f:
        f.write(rows_to_csv(rows, cols))


class _Encoder(json.JSONEncoder):
    def default(self, o):
        if isinstance(o, complex):
            return {"re": o.real, "im": o.imag}
        if isinstance(o, np.complexfloating):
            return {"re": float(o.real), "im": float(o.imag)}
        if isinstance(o, np.floating):
            return float(o)
        if isinstance(o, np.integer):
            return int(o)
        if isinstance(o, np.ndarray):
            return o.tolist()
        if isinstance(o, np.bool_):
            return bool(o)
        if hasattr(o, "as_dict"):
            return o.as_dict()
        return json.JSONEncoder.default(self, o)


def write_json(path, obj):
    with open(path, "w") as f:
        json.dump(obj, f, cls=_Encoder, indent=1, sort_keys=True)
        f.write("\n")


def identity_row(identity, degree, seed, residual, tol):
    return {
        "identity": identity,
        "degree": int(degree),
        "seed": int(seed),
        "residual": float(residual),
        "tolerance": float(tol),
        "pass": int(float(residual) <= float(tol)),
    }


IDENTITY_COLS = ("identity", "degree", "seed", "residual", "tolerance",
                 "pass")


# ---------------------------------------------------------------------------
# SVG line plots (hand rolled; deterministic, no plotting dependency)


def _ticks(lo, hi, n=5):
    if hi <= lo:
        hi = lo + 1.0
    raw = np.linspace(lo, hi, n)
    return raw


def svg_line_plot(series, path, title="", xlabel="", ylabel="",
                  logy=False, width=640, height=420):
    """Write a minimal SVG line plot.

    series: list of (label, xs, ys).  With logy, nonpositive ys are
    dropped before taking log10.
    """
    mL, mR, mT, mB = 64, 16, 28, 44
    pw, ph = width - mL - mR, height - mT - mB
    pts = []
    for label, xs, ys in series:
        xs = np.asarray(xs, dtype=float)
        ys = np.asarray(ys, dtype=float)
        if logy:
            keep = ys > 0
            xs, ys = xs[keep], np.log10(ys[keep])
        pts.append((label, xs, ys))
    xsall = np.concatenate([p[1] for p in pts if len(p[1])] or [np.zeros(1)])
    ysall = np.concatenate([p[2] for p in pts if len(p[2])] or [np.zeros(1)])
    x0, x1 = float(xsall.min()), float(xsall.max())
    y0, y1 = float(ysall.min()), float(ysall.max())
    if x1 <= x0:
        x1 = x0 + 1.0
    if y1 <= y0:
        y1 = y0 + 1.0

    def X(x):
        return mL + pw * (x - x0) / (x1 - x0)

    def Y(y):
        return mT + ph * (1.0 - (y - y0) / (y1 - y0))

    palette = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e",
               "#8c564b")
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" '
        f'height="{height}" viewBox="0 0 {width} {height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<text x="{width / 2:.1f}" y="18" text-anchor="middle" '
        f'font-size="13" font-family="sans-serif">{title}</text>',
    ]
    for tx in _ticks(x0, x1):
        out.append(
            f'<line x1="{X(tx):.1f}" y1="{mT}" x2="{X(tx):.1f}" '
            f'y2="{mT + ph}" stroke="#ddd"/>')
        out.append(
            f'<text x="{X(tx):.1f}" y="{mT + ph + 16}" '
            f'text-anchor="middle" font-size="10" '
            f'font-family="sans-serif">{tx:.3g}</text>')
    for ty in _ticks(y0, y1):
        out.append(
            f'<line x1="{mL}" y1="{Y(ty):.1f}" x2="{mL + pw}" '
            f'y2="{Y(ty):.1f}" stroke="#ddd"/>')
        lab = f"1e{ty:.1f}" if logy else f"{ty:.3g}"
        out.append(
            f'<text x="{mL - 6}" y="{Y(ty) + 3:.1f}" text-anchor="end" '
            f'font-size="10" font-family="sans-serif">{lab}</text>')
    out.append(
        f'<rect x="{mL}" y="{mT}" width="{pw}" height="{ph}" fill="none" '
        f'stroke="#333"/>')
    for i, (label, xs, ys) in enumerate(pts):
        color = palette[i % len(palette)]
        if len(xs):
            d = " ".join(f"{X(x):.2f},{Y(y):.2f}" for x, y in zip(xs, ys))
            out.append(
                f'<polyline points="{d}" fill="none" stroke="{color}" '
                f'stroke-width="1.5"/>')
        out.append(
            f'<text x="{mL + 8}" y="{mT + 14 + 13 * i}" font-size="11" '
            f'font-family="sans-serif" fill="{color}">{label}</text>')
    out.append(
        f'<text x="{width / 2:.1f}" y="{height - 8}" text-anchor="middle" '
        f'font-size="11" font-family="sans-serif">{xlabel}</text>')
    out.append(
        f'<text x="14" y="{height / 2:.1f}" text-anchor="middle" '
        f'font-size="11" font-family="sans-serif" '
        f'transform="rotate(-90 14 {height / 2:.1f})">{ylabel}</text>')
    out.append("</svg>")
    with open(path, "w") as f:
        f.write("\n".join(out) + "\n")
