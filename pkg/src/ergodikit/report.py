"""Text reports, CSV tables and SVG curves derived from saved documents.

Everything here takes the JSON document written by the CLI, never live
library objects, so outputs can be regenerated from the files alone.
"""

from __future__ import annotations

import math
from typing import Mapping, Sequence

import numpy as np

SWEEP_FORMAT = "ergodikit-sweep/1"

_PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f", "#17becf")

# posterior-mean rows are printed only for orders with at most this many contexts
_MAX_PRINTED_CONTEXTS = 64


def _log10(d: Mapping) -> str:
    return "-inf" if d["zero"] else f"{d['log_total'] / math.log(10):.4f}"


def render_report(doc: Mapping) -> str:
    """Human-readable summary of a posterior document."""
    s = doc["alphabet_size"]
    nu = doc["order_posterior"]
    lines = [f"# config={doc.get('config_hash', '')}", "ergodikit inference report", ""]
    lines.append(f"trajectory length n = {doc['n']}, alphabet size s = {s}")
    lines.append(f"modal order = {int(np.argmax(nu))}")
    lines.append("")
    lines.append("order  posterior            log10 D_n^(N)")
    for N, (p, d) in enumerate(zip(nu, doc["defects"])):
        lines.append(f"{N:>5}  {p:<19.12e}  {_log10(d)}")
    lines.append("")
    lines.append("posterior-mean tensors (context -> next-symbol law)")
    sep = "" if s <= 10 else "."
    for entry in doc["orders"]:
        N = entry["order"]
        alphas = np.asarray(entry["alphas"], dtype=float)
        lines.append(f"order {N}:")
        if alphas.shape[0] > _MAX_PRINTED_CONTEXTS:
            lines.append(f"  ({alphas.shape[0]} contexts, omitted)")
            continue
        means = alphas / alphas.sum(axis=1, keepdims=True)
        for c, row in enumerate(means):
            word = []
            code = c
            for _ in range(N):
                code, v = divmod(code, s)
                word.append(str(v))
            label = sep.join(reversed(word)) or "()"
            lines.append(f"  {label:>{max(N, 2)}} -> " + " ".join(f"{p:.6f}" for p in row))
    return "\n".join(lines) + "\n"


def sweep_csv(doc: Mapping) -> str:
    lines = [f"# config={doc.get('config_hash', '')}", "m,order,mass"]
    for row in doc["rows"]:
        for N, p in enumerate(row["posterior"]):
            lines.append(f"{row['m']},{N},{p!r}")
    return "\n".join(lines) + "\n"


def sweep_svg(doc: Mapping, width: int = 640, height: int = 400) -> str:
    """One polyline per order: posterior mass against log10(m)."""
    ms = [row["m"] for row in doc["rows"]]
    masses = np.array([row["posterior"] for row in doc["rows"]], dtype=float)
    left, right, top, bottom = 60, 110, 20, 50
    pw, ph = width - left - right, height - top - bottom
    lx = [math.log10(m) for m in ms]
    lo, hi = min(lx), max(lx)
    span = hi - lo if hi > lo else 1.0

    def X(v: float) -> str:
        return f"{left + pw * (v - lo) / span:.2f}"

    def Y(p: float) -> str:
        return f"{top + ph * (1.0 - p):.2f}"

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}">',
        f"<!-- config={doc.get('config_hash', '')} -->",
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>',
        f'<line x1="{left}" y1="{top + ph}" x2="{left + pw}" y2="{top + ph}" stroke="black"/>',
        f'<line x1="{left}" y1="{top}" x2="{left}" y2="{top + ph}" stroke="black"/>',
    ]
    for p in (0.0, 0.25, 0.5, 0.75, 1.0):
        out.append(f'<line x1="{left - 4}" y1="{Y(p)}" x2="{left}" y2="{Y(p)}" stroke="black"/>')
        out.append(f'<text x="{left - 8}" y="{Y(p)}" font-size="11" text-anchor="end" dominant-baseline="middle">{p:.2f}</text>')
    for m, v in zip(ms, lx):
        out.append(f'<line x1="{X(v)}" y1="{top + ph}" x2="{X(v)}" y2="{top + ph + 4}" stroke="black"/>')
        out.append(f'<text x="{X(v)}" y="{top + ph + 16}" font-size="11" text-anchor="middle">{m}</text>')
    out.append(f'<text x="{left + pw / 2:.2f}" y="{height - 10}" font-size="12" text-anchor="middle">m (log scale)</text>')
    out.append(f'<text x="14" y="{top + ph / 2:.2f}" font-size="12" text-anchor="middle" transform="rotate(-90 14 {top + ph / 2:.2f})">posterior mass</text>')
    for N in range(masses.shape[1]):
        color = _PALETTE[N % len(_PALETTE)]
        pts = " ".join(f"{X(v)},{Y(p)}" for v, p in zip(lx, masses[:, N]))
        out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{pts}"/>')
        ly = top + 14 * N + 6
        out.append(f'<line x1="{left + pw + 12}" y1="{ly}" x2="{left + pw + 30}" y2="{ly}" stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{left + pw + 36}" y="{ly}" font-size="11" dominant-baseline="middle">N={N}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def median_curve(curves: Sequence[Sequence[float]]) -> np.ndarray:
    return np.median(np.asarray(curves, dtype=float), axis=0)
