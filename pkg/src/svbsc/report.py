"""Static SVG charts and a pass/fail summary from one or more results CSVs."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from html import escape
from pathlib import Path

from .experiment import RESULT_COLUMNS

BER_FLOOR = 1e-7
PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf", "#7f7f7f")


class SchemaError(ValueError):
    pass


class MixedConfigError(ValueError):
    pass


@dataclass(frozen=True)
class Row:
    snr_db: float
    csi_mode: str
    epsilon: float
    codec: str
    frames: int
    mean_ber: float
    violation_rate: float
    mean_se_bpcu: float
    mean_psnr_db: float
    mean_L: float
    max_L: int
    infeasible_rate: float
    config_hash: str


_TYPES = {f: t for f, t in Row.__annotations__.items()}


def read_results(path) -> list[Row]:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(header) != RESULT_COLUMNS:
            raise SchemaError(f"{path}: header does not match the results schema")
        rows = []
        for n, rec in enumerate(reader, 2):
            if len(rec) != len(RESULT_COLUMNS):
                raise SchemaError(f"{path}:{n}: expected {len(RESULT_COLUMNS)} fields")
            try:
                vals = {c: {"float": float, "int": int, "str": str}[_TYPES[c]](v) for c, v in zip(RESULT_COLUMNS, rec)}
            except ValueError as exc:
                raise SchemaError(f"{path}:{n}: {exc}") from None
            rows.append(Row(**vals))
    if not rows:
        raise SchemaError(f"{path}: no data rows")
    return rows


@dataclass
class Series:
    label: str
    csi_mode: str
    epsilon: float
    codec: str
    rows: list[Row]


def split_series(label: str, rows: list[Row]) -> list[Series]:
    keys = []
    for r in rows:
        k = (r.csi_mode, r.epsilon, r.codec)
        if k not in keys:
            keys.append(k)
    out = []
    for mode, eps, codec in keys:
        sel = sorted((r for r in rows if (r.csi_mode, r.epsilon, r.codec) == (mode, eps, codec)), key=lambda r: r.snr_db)
        name = label if len(keys) == 1 else f"{label}: {codec} {mode}" + (f" eps={eps:g}" if mode == "imperfect" else "")
        out.append(Series(name, mode, eps, codec, sel))
    return out


def check_hashes(inputs: dict[str, list[Row]], force: bool) -> None:
    hashes = {r.config_hash for rows in inputs.values() for r in rows}
    if len(hashes) > 1 and not force:
        raise MixedConfigError(f"inputs mix config hashes {sorted(hashes)}; pass --force to overlay anyway")


# -- svg --------------------------------------------------------------------


def _ticks(lo, hi, n=6):
    if hi <= lo:
        hi = lo + 1.0
    raw = (hi - lo) / n
    mag = 10 ** math.floor(math.log10(raw))
    step = min((s * mag for s in (1, 2, 5, 10) if s * mag >= raw), default=raw)
    start = math.ceil(lo / step) * step
    ticks = []
    t = start
    while t <= hi + 1e-9 * step:
        ticks.append(round(t, 10))
        t += step
    return ticks


def svg_chart(series: list[Series], metric: str, title: str, ylabel: str, log_y: bool = False) -> str:
    W, H, ml, mr, mt, mb = 720, 440, 70, 220, 40, 50
    pw, ph = W - ml - mr, H - mt - mb

    def yval(r):
        v = getattr(r, metric)
        return math.log10(max(v, BER_FLOOR)) if log_y else v

    xs = [r.snr_db for s in series for r in s.rows if math.isfinite(r.snr_db)]
    ys = [yval(r) for s in series for r in s.rows]
    x0, x1 = (min(xs), max(xs)) if xs else (0.0, 1.0)
    y0, y1 = min(ys), max(ys)
    if log_y:
        y0, y1 = math.floor(y0), max(math.ceil(y1), math.floor(y0) + 1)
    if x1 == x0:
        x0, x1 = x0 - 1, x1 + 1
    if y1 == y0:
        y0, y1 = y0 - 1, y1 + 1

    def px(x):
        return ml + (x - x0) / (x1 - x0) * pw

    def py(y):
        return mt + ph - (y - y0) / (y1 - y0) * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">',
        f'<rect width="{W}" height="{H}" fill="white"/>',
        f'<text x="{ml + pw / 2}" y="22" text-anchor="middle" font-size="15">{escape(title)}</text>',
        f'<rect x="{ml}" y="{mt}" width="{pw}" height="{ph}" fill="none" stroke="black"/>',
    ]
    for t in _ticks(x0, x1):
        out.append(f'<line x1="{px(t):.1f}" y1="{mt + ph}" x2="{px(t):.1f}" y2="{mt + ph + 5}" stroke="black"/>')
        out.append(f'<text x="{px(t):.1f}" y="{mt + ph + 18}" text-anchor="middle">{t:g}</text>')
    yt = range(int(y0), int(y1) + 1) if log_y else _ticks(y0, y1)
    for t in yt:
        lab = f"1e{t}" if log_y else f"{t:g}"
        out.append(f'<line x1="{ml}" y1="{py(t):.1f}" x2="{ml + pw}" y2="{py(t):.1f}" stroke="#ddd"/>')
        out.append(f'<text x="{ml - 6}" y="{py(t) + 4:.1f}" text-anchor="end">{lab}</text>')
    out.append(f'<text x="{ml + pw / 2}" y="{H - 10}" text-anchor="middle">SNR (dB)</text>')
    out.append(
        f'<text x="16" y="{mt + ph / 2}" text-anchor="middle" transform="rotate(-90 16 {mt + ph / 2})">{escape(ylabel)}</text>'
    )
    for i, s in enumerate(series):
        col = PALETTE[i % len(PALETTE)]
        pts = [(px(r.snr_db), py(yval(r))) for r in s.rows if math.isfinite(r.snr_db)]
        if len(pts) > 1:
            path = " ".join(f"{x:.1f},{y:.1f}" for x, y in pts)
            out.append(f'<polyline points="{path}" fill="none" stroke="{col}" stroke-width="1.5"/>')
        for x, y in pts:
            out.append(f'<circle cx="{x:.1f}" cy="{y:.1f}" r="2.5" fill="{col}"/>')
        ly = mt + 14 + 18 * i
        out.append(f'<line x1="{ml + pw + 12}" y1="{ly - 4}" x2="{ml + pw + 32}" y2="{ly - 4}" stroke="{col}" stroke-width="2"/>')
        out.append(f'<text class="legend" x="{ml + pw + 38}" y="{ly}">{escape(s.label)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


# -- acceptance checks -------------------------------------------------------


@dataclass(frozen=True)
class Check:
    name: str
    passed: bool | None  # None: not applicable to these inputs
    detail: str

    def line(self) -> str:
        status = "n/a " if self.passed is None else ("PASS" if self.passed else "FAIL")
        return f"[{status}] {self.name}: {self.detail}"


def _feasible(r: Row) -> bool:
    return r.infeasible_rate <= 0.01


def check_stabilisation(rows: list[Row], q0: float = 0.05, slack: float = 0.05) -> Check:
    sel = [r for r in rows if r.csi_mode == "perfect" and _feasible(r)]
    if not sel:
        return Check("perfect-CSI BER <= q0", None, "no feasible perfect-CSI rows")
    bad = [r for r in sel if r.mean_ber > q0 * (1 + slack)]
    worst = max(sel, key=lambda r: r.mean_ber)
    return Check(
        "perfect-CSI BER <= q0",
        not bad,
        f"{len(sel)} points, worst {worst.mean_ber:.4f} at {worst.snr_db:g} dB (bound {q0 * (1 + slack):.4f})",
    )


def check_stability(rows: list[Row]) -> Check:
    sel = [r for r in rows if r.csi_mode == "imperfect" and _feasible(r)]
    if not sel:
        return Check("Pr[q > q0] <= eps", None, "no feasible imperfect-CSI rows")
    bad = [r for r in sel if r.violation_rate > r.epsilon + 2 * math.sqrt(r.epsilon / r.frames)]
    worst = max(sel, key=lambda r: r.violation_rate - r.epsilon)
    return Check(
        "Pr[q > q0] <= eps",
        not bad,
        f"{len(bad)}/{len(sel)} points over bound; worst {worst.violation_rate:.4f} at eps={worst.epsilon:g}, {worst.snr_db:g} dB",
    )


def check_tight_epsilon(rows: list[Row], q0: float = 0.05, band=(5.0, 25.0)) -> Check:
    sel = [r for r in rows if r.csi_mode == "imperfect" and r.epsilon == 0.01 and _feasible(r) and band[0] <= r.snr_db <= band[1]]
    if not sel:
        return Check("eps=0.01 BER <= q0/3 mid-band", None, "no eps=0.01 mid-band rows")
    worst = max(sel, key=lambda r: r.mean_ber)
    return Check(
        "eps=0.01 BER <= q0/3 mid-band",
        worst.mean_ber <= q0 / 3,
        f"worst {worst.mean_ber:.4f} at {worst.snr_db:g} dB (bound {q0 / 3:.4f})",
    )


def check_se_order(rows: list[Row], gap: float = 0.5) -> Check:
    perfect = {r.snr_db: r for r in rows if r.csi_mode == "perfect"}
    imp: dict[float, dict[float, Row]] = {}
    for r in rows:
        if r.csi_mode == "imperfect":
            imp.setdefault(r.snr_db, {})[r.epsilon] = r
    snrs = sorted(set(perfect) & set(imp))
    if not snrs:
        return Check("SE ordering", None, "need perfect and imperfect rows")
    order_bad, gap_bad = [], []
    for s in snrs:
        seq = [imp[s][e].mean_se_bpcu for e in sorted(imp[s])] + [perfect[s].mean_se_bpcu]
        if any(b < a for a, b in zip(seq, seq[1:])):
            order_bad.append(s)
        r05 = imp[s].get(0.05)
        if r05 is not None and _feasible(r05) and perfect[s].mean_se_bpcu - r05.mean_se_bpcu > gap:
            gap_bad.append(s)
    return Check(
        "SE ordering",
        not order_bad and not gap_bad,
        f"order broken at {order_bad or 'none'}; eps=0.05 gap > {gap} at {gap_bad or 'none'}",
    )


def _steps(rows: list[Row]) -> list[float]:
    # PSNR change from each SNR point to the next higher one.
    r = sorted((x for x in rows if math.isfinite(x.snr_db)), key=lambda x: x.snr_db)
    return [b.mean_psnr_db - a.mean_psnr_db for a, b in zip(r, r[1:])]


def max_dip(rows: list[Row]) -> float:
    """Largest PSNR loss when SNR goes up one step (0 for a monotone curve)."""
    return max((-d for d in _steps(rows)), default=0.0)


def max_drop(rows: list[Row]) -> float:
    """Largest PSNR loss when SNR goes down one step (the cliff)."""
    return max(_steps(rows), default=0.0)


def check_graceful(rows: list[Row], tol: float = 0.1) -> list[Check]:
    by_codec: dict[str, list[Row]] = {}
    for r in rows:
        if r.csi_mode == "perfect":
            by_codec.setdefault(r.codec, []).append(r)
    ladder = [c for c in by_codec if "baseline" not in c]
    base = [c for c in by_codec if "baseline" in c]
    out = []
    for c in ladder:
        d = max_dip(by_codec[c])
        out.append(Check(f"PSNR monotone in SNR ({c})", d <= tol, f"largest dip {d:.3f} dB (tolerance {tol})"))
    if ladder and base:
        dl, db = max_drop(by_codec[ladder[0]]), max_drop(by_codec[base[0]])
        out.append(Check("baseline cliff >= ladder cliff", db >= dl, f"max step drop baseline {db:.3f} dB vs ladder {dl:.3f} dB"))
    if not out:
        out.append(Check("PSNR monotone in SNR", None, "no perfect-CSI rows"))
    return out


def run_checks(rows: list[Row]) -> list[Check]:
    return [
        check_stabilisation(rows),
        check_stability(rows),
        check_tight_epsilon(rows),
        check_se_order(rows),
        *check_graceful(rows),
    ]


def build_report(inputs: dict[str, list[Row]], out_dir, force: bool = False) -> tuple[list[Check], str]:
    """Write three SVGs and summary.txt into ``out_dir``."""
    check_hashes(inputs, force)
    series = [s for label, rows in inputs.items() for s in split_series(label, rows)]
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "ber.svg").write_text(svg_chart(series, "mean_ber", "Bit flip ratio", "mean BER", log_y=True))
    (out / "se.svg").write_text(svg_chart(series, "mean_se_bpcu", "Spectral efficiency", "bpcu"))
    (out / "psnr.svg").write_text(svg_chart(series, "mean_psnr_db", "Reconstruction quality", "PSNR (dB)"))
    checks = run_checks([r for rows in inputs.values() for r in rows])
    summary = "\n".join(c.line() for c in checks) + "\n"
    (out / "summary.txt").write_text(summary)
    return checks, summary
