"""Empirical BER map Q(snr, M) and its inverse.

Cells are measured flip ratios of uncoded QAM through unit-gain AWGN.  Each
order's curve is made non-increasing in SNR by isotonic regression, and the
orders are then forced non-decreasing in M at every SNR with a running max
(which keeps the per-order curves monotone).
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.optimize import isotonic_regression

from .channel import LinkBudget
from .modem import SUPPORTED_ORDERS, demodulate_labels, get_constellation

DEFAULT_GRID = tuple(np.round(np.arange(-10.0, 40.0 + 1e-9, 0.5), 3))
DEFAULT_BITS = 10**6


class ThresholdOutOfRange(ValueError):
    """Target BER cannot be reached within the calibrated SNR grid."""


@dataclass(frozen=True)
class BerMap:
    snr_db: np.ndarray
    ber: dict[int, np.ndarray]
    bits_per_point: int
    seed: int | None = None
    raw: dict[int, np.ndarray] = field(default=None, compare=False, repr=False)

    @property
    def orders(self) -> tuple[int, ...]:
        return tuple(sorted(self.ber))

    def _curve(self, order):
        try:
            return self.ber[order]
        except KeyError:
            raise ValueError(f"modulation order {order} not in BER map") from None

    def to_csv(self) -> str:
        out = io.StringIO()
        out.write(f"#seed={self.seed},#bits={self.bits_per_point}\n")
        out.write("M,snr_db,ber\n")
        for m in self.orders:
            for s, b in zip(self.snr_db, self.ber[m]):
                out.write(f"{m},{float(s)!r},{float(b)!r}\n")
        return out.getvalue()

    def save(self, path) -> None:
        Path(path).write_text(self.to_csv())

    @classmethod
    def from_csv(cls, text: str) -> "BerMap":
        lines = text.splitlines()
        meta = dict(item.lstrip("#").split("=", 1) for item in lines[0].split(","))
        if lines[1].strip() != "M,snr_db,ber":
            raise ValueError("not a BER map file (bad header)")
        rows: dict[int, list[tuple[float, float]]] = {}
        for line in lines[2:]:
            if line.strip():
                m, s, b = line.split(",")
                rows.setdefault(int(m), []).append((float(s), float(b)))
        grids = {m: np.array([r[0] for r in v]) for m, v in rows.items()}
        snr = next(iter(grids.values()))
        if any(not np.array_equal(g, snr) for g in grids.values()):
            raise ValueError("BER map orders use different SNR grids")
        seed = None if meta.get("seed") in (None, "None") else int(meta["seed"])
        return cls(
            snr_db=snr,
            ber={m: np.array([r[1] for r in v]) for m, v in rows.items()},
            bits_per_point=int(meta["bits"]),
            seed=seed,
        )

    @classmethod
    def load(cls, path) -> "BerMap":
        return cls.from_csv(Path(path).read_text())


def measure_ber(order: int, snr_db: float, n_bits: int, rng: np.random.Generator) -> float:
    """Flip ratio of order-M QAM over unit-gain AWGN at the given Es/N0."""
    const = get_constellation(order)
    k = const.bits_per_symbol
    n_sym = -(-n_bits // k)
    labels = rng.integers(0, order, n_sym)
    noise_var = 10.0 ** (-snr_db / 10.0)
    sd = np.sqrt(noise_var / 2.0)
    rx = const.points[labels] + sd * (rng.standard_normal(n_sym) + 1j * rng.standard_normal(n_sym))
    diff = labels ^ demodulate_labels(rx, order)
    errors = int(np.unpackbits(diff.astype(">u2").view(np.uint8)).sum())
    return errors / (n_sym * k)


def smooth(raw: dict[int, np.ndarray]) -> dict[int, np.ndarray]:
    out = {}
    running = None
    for m in sorted(raw):
        curve = isotonic_regression(np.clip(raw[m], 0.0, 0.5), increasing=False).x
        running = curve if running is None else np.maximum(curve, running)
        out[m] = np.clip(running, 0.0, 0.5)
    return out


def calibrate(
    orders=SUPPORTED_ORDERS,
    snr_grid=DEFAULT_GRID,
    bits_per_point: int = DEFAULT_BITS,
    seed: int = 0,
) -> BerMap:
    """Monte Carlo calibration with one derived random stream per cell."""
    snr = np.asarray(snr_grid, dtype=float)
    if np.any(np.diff(snr) <= 0):
        raise ValueError("snr grid must be strictly ascending")
    raw = {}
    for m in sorted(orders):
        raw[m] = np.array(
            [
                measure_ber(m, s, bits_per_point, np.random.default_rng([seed, m, i]))
                for i, s in enumerate(snr)
            ]
        )
    return BerMap(snr_db=snr, ber=smooth(raw), bits_per_point=bits_per_point, seed=seed, raw=raw)


def _interp(s0, s1, b0, b1, x):
    t = (x - s0) / (s1 - s0)
    if b0 > 0 and b1 > 0:
        return 10.0 ** (np.log10(b0) + t * (np.log10(b1) - np.log10(b0)))
    # A zero cell has no logarithm; fall back to linear interpolation.
    return b0 + t * (b1 - b0)


def ber_lookup(bermap: BerMap, snr_db: float, order: int) -> float:
    """Log-linear interpolation in (snr_db, log10 ber), clamped at the grid ends."""
    curve = bermap._curve(order)
    grid = bermap.snr_db
    if snr_db <= grid[0]:
        return float(curve[0])
    if snr_db >= grid[-1]:
        return float(curve[-1])
    i = int(np.searchsorted(grid, snr_db, side="right"))
    if grid[i - 1] == snr_db:
        return float(curve[i - 1])
    return float(_interp(grid[i - 1], grid[i], curve[i - 1], curve[i], snr_db))


def snr_threshold(bermap: BerMap, q0: float, order: int) -> float:
    """Smallest SNR (dB) at which the interpolated BER is at most ``q0``."""
    curve = bermap._curve(order)
    grid = bermap.snr_db
    below = np.nonzero(curve <= q0)[0]
    if below.size == 0:
        raise ThresholdOutOfRange(
            f"M={order}: target ber {q0} below calibrated minimum {curve.min():.3g}"
        )
    i = int(below[0])
    if i == 0:
        return float(grid[0])
    s0, s1, b0, b1 = grid[i - 1], grid[i], curve[i - 1], curve[i]
    if b1 > 0:
        t = (np.log10(q0) - np.log10(b0)) / (np.log10(b1) - np.log10(b0))
    else:
        t = (q0 - b0) / (b1 - b0)
    s = float(s0 + t * (s1 - s0))
    # Guard against the rounding of the inverse landing a hair above q0.
    while s < s1 and ber_lookup(bermap, s, order) > q0:
        s = float(np.nextafter(s, np.inf))
    return s


def gamma_threshold(snr_th_db: float, budget: LinkBudget) -> float:
    """Channel power gain needed to reach ``snr_th_db`` under ``budget``."""
    return budget.noise_psd * budget.channel_uses / budget.power_limit * 10.0 ** (snr_th_db / 10.0)


def gamma_thresholds(bermap: BerMap, q0: float, budget: LinkBudget) -> dict[int, float]:
    return {m: gamma_threshold(snr_threshold(bermap, q0, m), budget) for m in bermap.orders}
