"""Network side of the stabilised link: modulation choice, puncturing, null padding.

Per frame the scheduler sees only the gain estimate ``gamma_est``.  It picks
the largest order whose gain threshold the true gain undershoots with
probability at most epsilon under the conditional law of gamma given the
estimate, punctures the codeword tail down to what that order carries over
``channel_uses`` symbols, and the receiver pads the punctured tail with nulls.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import codec as codec_mod
from .bermap import BerMap, gamma_thresholds
from .channel import (
    ChannelDraw,
    CsiMode,
    LinkBudget,
    RicianModel,
    estimation_noise_variance,
    sample_channel,
    sample_gain_pairs,
    transmit,
)
from .metrics import flip_ratio, mse, psnr
from .modem import demodulate, modulate, spectral_efficiency

MIN_BIN_HITS = 1000
BIN_REL_WIDTH = 0.05
MAX_REL_WIDTH = 0.8
MAX_BIN_HITS = 2000


class QosViolation(Exception):
    """Puncturing beyond the agreed maximum; carries the frame anyway."""

    def __init__(self, sent, n_punctured, l_max):
        super().__init__(f"puncturing length {n_punctured} exceeds l_max = {l_max}")
        self.sent = sent
        self.n_punctured = n_punctured


@dataclass(frozen=True)
class StabilityTarget:
    q0: float = 0.05
    epsilon: float = 0.05
    l_max: int = 1152
    l_avg_cap: float | None = None

    def __post_init__(self):
        if not 0 < self.q0 < 0.5:
            raise ValueError("q0 must lie in (0, 0.5)")
        if not 0 <= self.epsilon <= 1:
            raise ValueError("epsilon must lie in [0, 1]")
        if self.l_max < 0:
            raise ValueError("l_max must be non-negative")


# -- conditional law of the gain ----------------------------------------------


@dataclass(frozen=True)
class StepCdf:
    """CDF of a known gain, F(x) = Pr[gamma < x]."""

    gamma: float
    fallback: bool = False

    def __call__(self, x: float) -> float:
        return 1.0 if self.gamma < x else 0.0

    def quantile(self, p: float) -> float:
        return self.gamma


@dataclass(frozen=True, eq=False)
class EmpiricalCdf:
    """F(x) = fraction of conditional gain samples strictly below x."""

    samples: np.ndarray
    fallback: bool = False

    def __call__(self, x: float) -> float:
        return float(np.count_nonzero(self.samples < x)) / self.samples.size

    def quantile(self, p: float) -> float:
        return float(np.quantile(self.samples, p))


class ConditionalGainPool:
    """Joint (gamma, gamma_est) draws, searchable by the estimate.

    ``cdf(g)`` keeps the draws whose estimate lies within 5 % of ``g``.  A
    bin with fewer than ``min_hits`` draws is doubled (up to 80 %); a bin
    with more than ``max_hits`` keeps only the ``max_hits`` nearest, so the
    law tightens towards a step as the estimation noise vanishes.  If even
    the widest bin is too sparse, the ``min_hits`` nearest estimates are
    used and the result is flagged as a fallback.
    """

    def __init__(self, model: RicianModel, est_noise_var: float, n_samples: int, rng):
        gamma, est = sample_gain_pairs(model, est_noise_var, n_samples, rng)
        order = np.argsort(est, kind="stable")
        self.gamma_est = est[order]
        self.gamma = gamma[order]
        self.est_noise_var = est_noise_var

    @classmethod
    def for_budget(cls, model: RicianModel, budget: LinkBudget, n_samples: int, rng):
        var = estimation_noise_variance(budget.snr(model.mean_gain), model.n_pilots)
        return cls(model, var, n_samples, rng)

    def _nearest(self, gamma_est: float, lo: int, hi: int, k: int) -> np.ndarray:
        # The k nearest estimates form a contiguous run of the sorted array.
        centre = int(np.searchsorted(self.gamma_est, gamma_est))
        a, b = max(lo, centre - k), min(hi, centre + k)
        d = np.abs(self.gamma_est[a:b] - gamma_est)
        keep = np.sort(np.argpartition(d, k - 1)[:k]) if b - a > k else np.arange(b - a)
        return self.gamma[a:b][keep]

    def cdf(
        self,
        gamma_est: float,
        rel_width: float = BIN_REL_WIDTH,
        min_hits: int = MIN_BIN_HITS,
        max_hits: int = MAX_BIN_HITS,
    ) -> EmpiricalCdf:
        est = self.gamma_est
        min_hits = min(min_hits, est.size)
        w = rel_width
        while w <= MAX_REL_WIDTH:
            lo = np.searchsorted(est, gamma_est * (1 - w), side="left")
            hi = np.searchsorted(est, gamma_est * (1 + w), side="right")
            if hi - lo >= min_hits:
                if hi - lo > max_hits:
                    return EmpiricalCdf(self._nearest(gamma_est, lo, hi, max_hits))
                return EmpiricalCdf(self.gamma[lo:hi])
            w *= 2
        return EmpiricalCdf(self._nearest(gamma_est, 0, est.size, min_hits), fallback=True)


def conditional_cdf(
    gamma_est: float,
    model: RicianModel,
    budget: LinkBudget,
    csi_mode,
    samples: int,
    rng,
):
    """CDF of the true gain given its estimate."""
    if gamma_est < 0:
        raise ValueError("gamma_est must be non-negative")
    if CsiMode(csi_mode) is CsiMode.PERFECT:
        return StepCdf(gamma_est)
    return ConditionalGainPool.for_budget(model, budget, samples, rng).cdf(gamma_est)


# -- scheduler ----------------------------------------------------------------


def select_modulation(cdf, thresholds: dict[int, float], epsilon: float) -> tuple[int, bool]:
    """Largest order with F(gamma_th) <= epsilon; else the smallest, infeasible."""
    if not thresholds:
        raise ValueError("empty threshold set")
    orders = sorted(thresholds)
    values = [thresholds[m] for m in orders]
    if any(b < a for a, b in zip(values, values[1:])):
        raise ValueError("gain thresholds must increase with the modulation order")
    for m in reversed(orders):
        if cdf(thresholds[m]) <= epsilon:
            return m, True
    return orders[0], False


def puncture(u, order: int, budget: LinkBudget, l_max: int | None = None):
    """Drop the codeword tail so the rest fits channel_uses symbols of order M."""
    u = np.asarray(u)
    n_punctured = u.size - budget.channel_uses * spectral_efficiency(order)
    if n_punctured < 0:
        raise ValueError(f"codeword of {u.size} bits is shorter than the order-{order} payload")
    sent = u[: u.size - n_punctured]
    if l_max is not None and n_punctured > l_max:
        raise QosViolation(sent, n_punctured, l_max)
    return sent, n_punctured


def pad_null(y, n_punctured: int, k_coded: int | None = None) -> np.ndarray:
    """Received bits followed by ``n_punctured`` nulls."""
    y = np.asarray(y)
    if k_coded is not None and y.size + n_punctured != k_coded:
        raise ValueError(f"{y.size} received + {n_punctured} punctured != {k_coded}")
    if n_punctured < 0:
        raise ValueError("negative puncturing length")
    out = np.full(y.size + n_punctured, codec_mod.NULL, dtype=np.int8)
    out[: y.size] = y
    return out


@dataclass(frozen=True, eq=False)
class Link:
    """Everything the network needs to run frames at one operating point."""

    channel: RicianModel
    budget: LinkBudget
    csi_mode: CsiMode
    target: StabilityTarget
    thresholds: dict[int, float]
    gain_pool: ConditionalGainPool | None = field(default=None, repr=False)

    @classmethod
    def build(
        cls,
        channel: RicianModel,
        budget: LinkBudget,
        csi_mode,
        target: StabilityTarget,
        bermap: BerMap,
        cdf_samples: int = 200_000,
        rng=None,
    ) -> "Link":
        csi_mode = CsiMode(csi_mode)
        pool = None
        if csi_mode is CsiMode.IMPERFECT:
            rng = np.random.default_rng() if rng is None else rng
            pool = ConditionalGainPool.for_budget(channel, budget, cdf_samples, rng)
        return cls(channel, budget, csi_mode, target, gamma_thresholds(bermap, target.q0, budget), pool)

    def cdf(self, gamma_est: float):
        if self.csi_mode is CsiMode.PERFECT:
            return StepCdf(gamma_est)
        return self.gain_pool.cdf(gamma_est)


@dataclass(frozen=True, eq=False)
class FrameTrace:
    source: np.ndarray | None
    coded: np.ndarray | None
    selected_m: int
    feasible: bool
    punct_len: int
    sent: np.ndarray | None
    received: np.ndarray | None
    decoder_input: np.ndarray | None
    reconstruction: np.ndarray | None
    measured_q: float
    psnr_db: float
    gamma: float
    gamma_est: float
    qos_violation: bool = False
    cdf_fallback: bool = False


def run_frame(
    source,
    model,
    link: Link,
    rng: np.random.Generator,
    draw: ChannelDraw | None = None,
    keep_vectors: bool = True,
    coded=None,
) -> FrameTrace:
    """Encode, schedule, transmit, demap, pad and decode one frame.

    ``coded`` may carry the precomputed codeword of ``source``.
    """
    budget = link.budget
    if model.profile.k_coded != budget.channel_uses * spectral_efficiency(max(link.thresholds)):
        raise ValueError("codec K does not match channel_uses * log2(M_c)")
    source = np.asarray(source, dtype=float)
    if coded is None:
        coded = codec_mod.encode(model, source)
    if draw is None:
        draw = sample_channel(link.channel, budget, link.csi_mode, rng)
    cdf = link.cdf(draw.gamma_est)
    order, feasible = select_modulation(cdf, link.thresholds, link.target.epsilon)

    violation = False
    try:
        sent, n_punct = puncture(coded, order, budget, link.target.l_max)
    except QosViolation as exc:
        sent, n_punct, violation = exc.sent, exc.n_punctured, True

    tx = budget.symbol_amplitude * modulate(sent, order)
    rx = transmit(tx, draw.gamma, budget, rng)
    gain_hat = draw.gamma_est if draw.gamma_est > 0 else 1.0
    received = demodulate(rx / (budget.symbol_amplitude * np.sqrt(gain_hat)), order)
    u_hat = pad_null(received, n_punct, model.profile.k_coded)
    recon = codec_mod.decode(model, u_hat, n_punct)

    keep = (lambda v: v) if keep_vectors else (lambda v: None)
    return FrameTrace(
        source=keep(source),
        coded=keep(coded),
        selected_m=order,
        feasible=feasible,
        punct_len=int(n_punct),
        sent=keep(sent),
        received=keep(received),
        decoder_input=keep(u_hat),
        reconstruction=keep(recon),
        measured_q=flip_ratio(sent, received),
        psnr_db=psnr(mse(source, recon)),
        gamma=draw.gamma,
        gamma_est=draw.gamma_est,
        qos_violation=violation,
        cdf_fallback=cdf.fallback,
    )
