"""Per-frame distortion and bit metrics, and link-level QoS aggregation."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

PSNR_CAP_DB = 99.0


def mse(s, s_hat) -> float:
    s, s_hat = np.asarray(s, dtype=float), np.asarray(s_hat, dtype=float)
    if s.shape != s_hat.shape:
        raise ValueError(f"length mismatch: {s.shape} vs {s_hat.shape}")
    return float(np.mean((s - s_hat) ** 2))


def psnr(mse_value: float) -> float:
    """PSNR in dB for signals with peak 1; a perfect match is capped at 99 dB."""
    if mse_value < 0:
        raise ValueError("mse must be non-negative")
    if mse_value == 0:
        return PSNR_CAP_DB
    return min(PSNR_CAP_DB, 10.0 * np.log10(1.0 / mse_value))


def flip_ratio(x, y) -> float:
    x, y = np.asarray(x), np.asarray(y)
    if x.shape != y.shape:
        raise ValueError("bit vectors differ in length")
    if x.size == 0:
        raise ValueError("flip ratio of empty vectors is undefined")
    return float(np.count_nonzero(x != y) / x.size)


@dataclass(frozen=True)
class QosReport:
    """Aggregated link statistics for one operating point.

    ``stability_violation_rate`` is the fraction of frames with flip ratio
    strictly above ``q0``.
    """

    frame_count: int
    mean_ber: float
    stability_violation_rate: float
    mean_spectral_efficiency: float
    mean_psnr_db: float
    mean_L: float
    max_L: int
    infeasible_rate: float
    qos_violation_rate: float
    q0: float
    epsilon: float
    l_max: int
    l_avg_cap: float | None = None

    @property
    def meets_average_cap(self) -> bool:
        return self.l_avg_cap is None or self.mean_L <= self.l_avg_cap

    @property
    def meets_stability(self) -> bool:
        return self.stability_violation_rate <= self.epsilon


def aggregate(traces, target) -> QosReport:
    """Reduce frame traces (anything with the FrameTrace scalar fields)."""
    traces = list(traces)
    if not traces:
        raise ValueError("cannot aggregate an empty trace list")
    n = len(traces)

    def mean(values):
        # fsum is correctly rounded, so the result ignores trace order.
        return math.fsum(values) / n

    return QosReport(
        frame_count=n,
        mean_ber=mean(t.measured_q for t in traces),
        stability_violation_rate=mean(float(t.measured_q > target.q0) for t in traces),
        mean_spectral_efficiency=mean(t.selected_m.bit_length() - 1 for t in traces),
        mean_psnr_db=mean(t.psnr_db for t in traces),
        mean_L=mean(t.punct_len for t in traces),
        max_L=int(max(t.punct_len for t in traces)),
        infeasible_rate=mean(float(not t.feasible) for t in traces),
        qos_violation_rate=mean(float(t.qos_violation) for t in traces),
        q0=target.q0,
        epsilon=target.epsilon,
        l_max=target.l_max,
        l_avg_cap=target.l_avg_cap,
    )


@dataclass(frozen=True)
class DistortionReport:
    """Mean distortion per puncturing length, plus the per-frame samples."""

    lengths: tuple[int, ...]
    mean_mse: tuple[float, ...]
    samples: np.ndarray  # (len(lengths), n_frames)

    @property
    def mean_psnr_db(self) -> tuple[float, ...]:
        return tuple(psnr(m) for m in self.mean_mse)

    def is_monotone(self) -> bool:
        """Distortion non-increasing as L decreases, with one strict step."""
        by_len = sorted(zip(self.lengths, self.mean_mse), reverse=True)
        vals = [m for _, m in by_len]
        steps = np.diff(vals)
        return bool(np.all(steps <= 0) and np.any(steps < 0))


def distortion_profile(model, sources, lengths=None, flip_prob: float = 0.0, seed: int = 0) -> DistortionReport:
    """Empirical d[L] of a codec over a dataset and a memoryless bit-flip pipe.

    ``lengths`` defaults to the puncturing lengths induced by the breakpoints.
    """
    from .codec import decode_prefix, encode

    prof = model.profile
    if lengths is None:
        lengths = tuple(sorted({prof.k_coded - c for c in prof.breakpoints} | {0}, reverse=True))
    sources = np.atleast_2d(np.asarray(sources, dtype=float))
    bits = encode(model, sources)
    rng = np.random.default_rng(seed)
    samples = np.empty((len(lengths), len(sources)))
    for i, L in enumerate(lengths):
        for n, (s, u) in enumerate(zip(sources, bits)):
            if flip_prob:
                u = u ^ (rng.random(u.size) < flip_prob).astype(np.uint8)
            samples[i, n] = mse(s, decode_prefix(model, u, L))
    return DistortionReport(tuple(lengths), tuple(float(v) for v in samples.mean(axis=1)), samples)
