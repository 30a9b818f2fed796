"""CSV, JSON and SVG emitters with deterministic formatting.

Floats are written with ``repr`` so values round-trip exactly; nothing
time- or host-dependent is emitted.
"""

import hashlib
import json
import math
import os

import numpy as np

TRACE_TAIL = ("grad_norm", "dual_gap", "primal_dist", "feas_dist", "primal_obj_gap",
              "feas_obj_gap", "running_min_grad", "running_min_primal_dist",
              "c1_envelope", "c2_envelope", "recursion_envelope")


def format_value(x):
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    if math.isnan(x):
        return "nan"
    return repr(x)


def _open(path, mode="w"):
    try:
        return open(path, mode, newline="" if "b" not in mode else None)
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc


def emit_csv(path, columns, rows):
    """Write ``rows`` (sequences aligned with ``columns``); no rows gives a header-only file."""
    with _open(path) as fh:
        fh.write(",".join(columns) + "\n")
        for row in rows:
            fh.write(",".join(format_value(v) for v in row) + "\n")
    return path


def trace_columns(num_dual):
    return ("k", "gamma") + tuple(f"lambda_{i}" for i in range(num_dual)) + TRACE_TAIL


def trace_rows(run, metrics, bounds):
    for i in range(len(run)):
        row = [int(run.k[i]), float(run.gamma[i])]
        row.extend(float(v) for v in run.lam[i])
        row.extend([
            metrics.grad_norm[i], metrics.dual_gap[i], metrics.primal_dist[i], metrics.feas_dist[i],
            metrics.primal_obj_gap[i], metrics.feas_obj_gap[i], metrics.running_min_grad[i],
            metrics.running_min_primal_dist[i], bounds.c1_envelope[i], bounds.c2_envelope[i],
            bounds.recursion_envelope[i],
        ])
        yield row


def emit_trace_csv(path, run, metrics, bounds):
    return emit_csv(path, trace_columns(run.problem.num_dual), trace_rows(run, metrics, bounds))


def emit_metrics_csv(path, metrics):
    cols = metrics.COLUMNS
    rows = zip(*(getattr(metrics, c) for c in cols)) if len(metrics) else []
    return emit_csv(path, cols, rows)


def emit_bounds_csv(path, bounds):
    cols = bounds.COLUMNS
    rows = zip(*(getattr(bounds, c) for c in cols)) if len(bounds) else []
    return emit_csv(path, cols, rows)


def read_csv(path):
    """Read a file written by :func:`emit_csv` into ``(columns, float array)``."""
    with open(path) as fh:
        lines = fh.read().splitlines()
    cols = lines[0].split(",")
    data = np.array([[float(v) for v in ln.split(",")] for ln in lines[1:]]).reshape(-1, len(cols))
    return cols, data


def sanitize(obj):
    """Replace non-finite floats by ``None`` and numpy scalars by Python ones."""
    if isinstance(obj, dict):
        return {str(k): sanitize(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [sanitize(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return sanitize(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else None
    return obj


def canonical_json(doc):
    return json.dumps(sanitize(doc), sort_keys=True, indent=2, allow_nan=False) + "\n"


def problem_hash(problem):
    return hashlib.sha256(canonical_json(problem.to_dict()).encode()).hexdigest()


def emit_summary(path, doc):
    with _open(path) as fh:
        fh.write(canonical_json(doc))
    return path


def load_summary(path):
    with open(path) as fh:
        return json.load(fh)


# -- svg ----------------------------------------------------------------------

WIDTH, HEIGHT = 640, 400
MARGIN = {"left": 70, "right": 150, "top": 30, "bottom": 45}
PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf")


def _fmt(x):
    return f"{x:.2f}"


def emit_svg(path, curves, title="", xlabel="k", ylabel=""):
    """Plot ``curves`` (``[(label, x, y)]``) as polylines on a log-scaled y axis.

    Non-positive and non-finite values are dropped from each polyline.
    """
    cleaned = []
    for label, x, y in curves:
        x = np.asarray(x, dtype=np.float64)
        y = np.asarray(y, dtype=np.float64)
        keep = np.isfinite(y) & (y > 0)
        cleaned.append((label, x[keep], np.log10(y[keep])))
    xs = [c[1] for c in cleaned if len(c[1])]
    ys = [c[2] for c in cleaned if len(c[2])]
    x0, x1 = (min(a.min() for a in xs), max(a.max() for a in xs)) if xs else (0.0, 1.0)
    y0, y1 = (math.floor(min(a.min() for a in ys)), math.ceil(max(a.max() for a in ys))) if ys else (0, 1)
    if x1 == x0:
        x1 = x0 + 1.0
    if y1 == y0:
        y1 = y0 + 1
    pw = WIDTH - MARGIN["left"] - MARGIN["right"]
    ph = HEIGHT - MARGIN["top"] - MARGIN["bottom"]

    def px(v):
        return MARGIN["left"] + (v - x0) / (x1 - x0) * pw

    def py(v):
        return MARGIN["top"] + (1.0 - (v - y0) / (y1 - y0)) * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="11">',
        f'<rect x="{MARGIN["left"]}" y="{MARGIN["top"]}" width="{pw}" height="{ph}" '
        'fill="none" stroke="#000"/>',
        f'<text x="{WIDTH / 2:.0f}" y="18" text-anchor="middle" font-size="13">{_escape(title)}</text>',
        f'<text x="{MARGIN["left"] + pw / 2:.0f}" y="{HEIGHT - 8}" text-anchor="middle">{_escape(xlabel)}</text>',
        f'<text x="14" y="{MARGIN["top"] + ph / 2:.0f}" text-anchor="middle" '
        f'transform="rotate(-90 14 {MARGIN["top"] + ph / 2:.0f})">{_escape(ylabel)} (log10)</text>',
    ]
    step = max(1, (y1 - y0) // 8)
    for e in range(int(y0), int(y1) + 1, int(step)):
        yy = _fmt(py(e))
        out.append(f'<line x1="{MARGIN["left"]}" y1="{yy}" x2="{MARGIN["left"] + pw}" y2="{yy}" '
                   'stroke="#ddd"/>')
        out.append(f'<text x="{MARGIN["left"] - 6}" y="{yy}" text-anchor="end" '
                   f'dominant-baseline="middle">1e{e}</text>')
    for frac in (0.0, 0.25, 0.5, 0.75, 1.0):
        xv = x0 + frac * (x1 - x0)
        out.append(f'<text x="{_fmt(px(xv))}" y="{MARGIN["top"] + ph + 15}" '
                   f'text-anchor="middle">{xv:g}</text>')
    for i, (label, x, y) in enumerate(cleaned):
        color = PALETTE[i % len(PALETTE)]
        if len(x):
            pts = " ".join(f"{_fmt(px(a))},{_fmt(py(b))}" for a, b in zip(x, y))
            out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.2" points="{pts}"/>')
        ly = MARGIN["top"] + 14 * (i + 1)
        lx = MARGIN["left"] + pw + 10
        out.append(f'<line x1="{lx}" y1="{ly}" x2="{lx + 18}" y2="{ly}" stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{lx + 22}" y="{ly}" dominant-baseline="middle">{_escape(label)}</text>')
    out.append("</svg>")
    with _open(path) as fh:
        fh.write("\n".join(out) + "\n")
    return path


def _escape(text):
    return str(text).replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")


def ensure_dir(path):
    try:
        os.makedirs(path, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create output directory {path}: {exc}") from exc
    return path
