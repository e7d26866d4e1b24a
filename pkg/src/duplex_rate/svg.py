"""Static SVG views of region and band artifacts (derived from their JSON)."""

from __future__ import annotations

from xml.sax.saxutils import escape

COLORS = {
    "reflectionless": "#d62728",
    "low-rank-jacobian": "#2ca02c",
    "time-sharing": "#7f7f7f",
    "axis-capacity": "#1f77b4",
}
W = H = 480
M = 60  # margin


def _f(x: float) -> str:
    return f"{x:.3f}"


def _header(title: str) -> list:
    return [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">',
        f'<title>{escape(title)}</title>',
        f'<rect x="0" y="0" width="{W}" height="{H}" fill="white"/>',
    ]


def _placeholder(title: str, notice: str) -> str:
    out = _header(title)
    out.append(f'<text class="notice" x="{W / 2}" y="{H / 2}" text-anchor="middle" '
               f'font-family="sans-serif" font-size="16">{escape(notice)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def _num(x) -> float:
    # "inf" strings parse too
    return float(x)


def _axes(out, xlabel, ylabel, xmax, ymax, xmin=0.0):
    x0, y0, x1, y1 = M, H - M, W - M / 2, M / 2
    out.append(f'<line class="axis" x1="{x0}" y1="{y0}" x2="{x1}" y2="{y0}" stroke="black"/>')
    out.append(f'<line class="axis" x1="{x0}" y1="{y0}" x2="{x0}" y2="{y1}" stroke="black"/>')
    out.append(f'<text x="{(x0 + x1) / 2}" y="{H - 15}" text-anchor="middle" '
               f'font-family="sans-serif" font-size="13">{escape(xlabel)}</text>')
    out.append(f'<text x="15" y="{(y0 + y1) / 2}" text-anchor="middle" font-family="sans-serif" '
               f'font-size="13" transform="rotate(-90 15 {(y0 + y1) / 2})">{escape(ylabel)}</text>')
    for val, x in ((xmin, x0), (xmax, x1)):
        out.append(f'<text x="{_f(x)}" y="{y0 + 16}" text-anchor="middle" font-family="sans-serif" '
                   f'font-size="11">{val:.3g}</text>')
    for val, y in ((0.0, y0), (ymax, y1)):
        out.append(f'<text x="{x0 - 6}" y="{_f(y + 4)}" text-anchor="end" font-family="sans-serif" '
                   f'font-size="11">{val:.3g}</text>')


def render_region_svg(data: dict, title: str = "rate region") -> str:
    """Region plot: hull, boundary colored by protocol, dashed time-sharing line."""
    hull = [(_num(a), _num(b)) for a, b in data.get("hull", [])]
    if len(hull) < 2 or max(max(p) for p in hull) <= 0:
        return _placeholder(title, "empty region: only the origin is achievable")
    scale = max(max(p) for p in hull)

    def px(p):
        return M + (W - 1.5 * M) * p[0] / scale, (H - M) - (H - 1.5 * M) * p[1] / scale

    out = _header(title)
    _axes(out, "I1 (qubits per use)", "I2 (qubits per use)", scale, scale)
    d = " ".join(("M" if k == 0 else "L") + f" {_f(px(p)[0])} {_f(px(p)[1])}" for k, p in enumerate(hull))
    out.append(f'<path class="hull" d="{d} Z" fill="#f0f0f0" stroke="#bbbbbb" stroke-width="0.5"/>')

    b = data.get("boundary", [])
    a1 = max((_num(v["I1"]) for v in b), default=0.0)
    a2 = max((_num(v["I2"]) for v in b), default=0.0)
    imax = max(a1 if any(_num(v["I2"]) == 0 for v in b) else 0.0,
               a2 if any(_num(v["I1"]) == 0 for v in b) else 0.0)
    if imax > 0:
        p, q = px((imax, 0.0)), px((0.0, imax))
        out.append(f'<line class="time-shared-reference" x1="{_f(p[0])}" y1="{_f(p[1])}" '
                   f'x2="{_f(q[0])}" y2="{_f(q[1])}" stroke="black" stroke-dasharray="6,4"/>')

    # consecutive edges with the same label become one polyline
    k = 0
    while k < len(b) - 1:
        lab = b[k].get("segment") or "time-sharing"
        m = k
        while m + 1 < len(b) - 1 and (b[m + 1].get("segment") or "time-sharing") == lab:
            m += 1
        pts = [px((_num(v["I1"]), _num(v["I2"]))) for v in b[k:m + 2]]
        d = " ".join(("M" if j == 0 else "L") + f" {_f(x)} {_f(y)}" for j, (x, y) in enumerate(pts))
        out.append(f'<path class="segment {lab}" d="{d}" fill="none" '
                   f'stroke="{COLORS.get(lab, "black")}" stroke-width="2.5"/>')
        k = m + 1

    y = M / 2 + 4
    for lab in ("reflectionless", "low-rank-jacobian", "time-sharing"):
        out.append(f'<line x1="{W - 170}" y1="{y}" x2="{W - 150}" y2="{y}" stroke="{COLORS[lab]}" '
                   f'stroke-width="2.5"/>')
        out.append(f'<text x="{W - 145}" y="{y + 4}" font-family="sans-serif" font-size="11">{lab}</text>')
        y += 16
    out.append("</svg>")
    return "\n".join(out) + "\n"


def render_band_svg(summary: dict, title: str = "duplex advantage") -> str:
    """max(I1 + I2) and Imax against detuning with the advantage window shaded."""
    delta = [_num(x) for x in summary.get("delta", [])]
    if not delta:
        return _placeholder(title, "empty frequency grid")
    ms = [_num(x) for x in summary["max_sum"]]
    im = [_num(x) for x in summary["Imax"]]
    adv = summary["advantage"]
    lo, hi = min(delta), max(delta)
    span = hi - lo or 1.0
    top = max(ms + im + [1e-12])
    step = (delta[1] - delta[0]) if len(delta) > 1 else 1.0

    def px(x, y):
        return M + (W - 1.5 * M) * (x - lo) / span, (H - M) - (H - 1.5 * M) * y / top

    out = _header(title)
    _axes(out, "detuning", "rate (qubits per use)", hi, top, lo)
    k = 0
    while k < len(adv):
        if adv[k]:
            m = k
            while m + 1 < len(adv) and adv[m + 1]:
                m += 1
            a = px(max(delta[k] - step / 2, lo), top)
            c = px(min(delta[m] + step / 2, hi), 0.0)
            out.append(f'<rect class="advantage-window" x="{_f(a[0])}" y="{_f(a[1])}" '
                       f'width="{_f(c[0] - a[0])}" height="{_f(c[1] - a[1])}" fill="#cccccc" '
                       f'fill-opacity="0.6"/>')
            k = m + 1
        else:
            k += 1
    for ys, cls, color, dash in ((ms, "max-sum", "#d62728", ""), (im, "imax", "black", ' stroke-dasharray="6,4"')):
        d = " ".join(("M" if j == 0 else "L") + f" {_f(px(x, y)[0])} {_f(px(x, y)[1])}"
                     for j, (x, y) in enumerate(zip(delta, ys)))
        out.append(f'<path class="{cls}" d="{d}" fill="none" stroke="{color}" stroke-width="2"{dash}/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
