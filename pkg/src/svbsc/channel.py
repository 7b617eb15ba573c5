"""Rician block-fading channel with optional imperfect channel estimates.

One frame occupies one coherence block.  The complex amplitude is

    h = sqrt(K/(K+1)) + sqrt(1/(2(K+1))) * (g1 + 1j*g2)

so ``gamma = |h|**2`` has unit mean.  Under imperfect CSI the estimate is
``|h + e|**2`` with ``e ~ CN(0, sigma_e)`` and
``sigma_e = 1 / (1 + n_pilots * snr)`` evaluated at the nominal SNR.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np


class CsiMode(str, Enum):
    PERFECT = "perfect"
    IMPERFECT = "imperfect"


@dataclass(frozen=True)
class RicianModel:
    k_factor_db: float = 20.0
    n_pilots: int = 10
    mean_gain: float = 1.0

    def __post_init__(self):
        if not np.isfinite(self.k_factor_db):
            raise ValueError("k_factor_db must be finite")
        if self.n_pilots < 1:
            raise ValueError("n_pilots must be >= 1")

    @property
    def k_linear(self) -> float:
        return 10.0 ** (self.k_factor_db / 10.0)

    def gain_variance(self) -> float:
        """Var(gamma) for unit mean gain: (2K + 1) / (K + 1)**2."""
        k = self.k_linear
        return (2 * k + 1) / (k + 1) ** 2


@dataclass(frozen=True)
class LinkBudget:
    """Per-frame power, channel uses and noise density.

    ``noise_psd`` may be zero to model a noiseless link.
    """

    power_limit: float = 128.0
    channel_uses: int = 128
    noise_psd: float = 1.0

    def __post_init__(self):
        if self.power_limit <= 0 or self.channel_uses <= 0:
            raise ValueError("power_limit and channel_uses must be positive")
        if self.noise_psd < 0:
            raise ValueError("noise_psd must be non-negative")

    def snr(self, gamma: float = 1.0) -> float:
        if self.noise_psd == 0:
            return np.inf if gamma > 0 else 0.0
        return self.power_limit * gamma / (self.noise_psd * self.channel_uses)

    @property
    def symbol_amplitude(self) -> float:
        """Scaling that turns unit-energy symbols into power_limit per frame."""
        return float(np.sqrt(self.power_limit / self.channel_uses))

    @classmethod
    def for_snr_db(cls, snr_db: float, power_limit: float = 128.0, channel_uses: int = 128):
        """Budget whose nominal SNR at unit gain equals ``snr_db``."""
        noise = power_limit / (channel_uses * 10.0 ** (snr_db / 10.0))
        return cls(power_limit=power_limit, channel_uses=channel_uses, noise_psd=noise)


@dataclass(frozen=True)
class ChannelDraw:
    gamma: float
    gamma_est: float
    est_noise_var: float


def estimation_noise_variance(snr: float, n_pilots: int) -> float:
    """Pilot-based estimation noise variance 1 / (1 + n_pilots * snr)."""
    if snr < 0 or np.isnan(snr):
        raise ValueError(f"snr must be non-negative, got {snr}")
    if n_pilots < 1:
        raise ValueError("n_pilots must be >= 1")
    if np.isinf(snr):
        return 0.0
    return 1.0 / (1.0 + n_pilots * snr)


def _complex_normal(rng: np.random.Generator, variance: float, size=None):
    sd = np.sqrt(variance / 2.0)
    return sd * (rng.standard_normal(size) + 1j * rng.standard_normal(size))


def sample_amplitudes(model: RicianModel, rng: np.random.Generator, size=None):
    """Complex fading amplitudes h with E|h|^2 = mean_gain."""
    k = model.k_linear
    if np.isinf(k):
        los, scatter = 1.0, 0.0
    else:
        los, scatter = np.sqrt(k / (k + 1)), 1.0 / (k + 1)
    h = los + _complex_normal(rng, scatter, size)
    return h * np.sqrt(model.mean_gain)


def sample_gain_pairs(
    model: RicianModel, est_noise_var: float, n: int, rng: np.random.Generator
) -> tuple[np.ndarray, np.ndarray]:
    """Joint draws of (gamma, gamma_est) for the given estimation noise."""
    h = sample_amplitudes(model, rng, n)
    h_est = h + _complex_normal(rng, est_noise_var, n)
    return np.abs(h) ** 2, np.abs(h_est) ** 2


def sample_channel(
    model: RicianModel,
    budget: LinkBudget,
    csi_mode: CsiMode | str,
    rng: np.random.Generator,
) -> ChannelDraw:
    csi_mode = CsiMode(csi_mode)
    h = complex(sample_amplitudes(model, rng))
    gamma = abs(h) ** 2
    if csi_mode is CsiMode.PERFECT:
        return ChannelDraw(gamma=gamma, gamma_est=gamma, est_noise_var=0.0)
    var = estimation_noise_variance(budget.snr(model.mean_gain), model.n_pilots)
    h_est = h + complex(_complex_normal(rng, var))
    return ChannelDraw(gamma=gamma, gamma_est=abs(h_est) ** 2, est_noise_var=var)


def transmit(symbols, gamma: float, budget: LinkBudget, rng: np.random.Generator) -> np.ndarray:
    """Scale by sqrt(gamma) and add complex AWGN of variance noise_psd."""
    symbols = np.asarray(symbols, dtype=complex)
    if symbols.shape != (budget.channel_uses,):
        raise ValueError(
            f"expected {budget.channel_uses} symbols, got shape {symbols.shape}"
        )
    noise = _complex_normal(rng, budget.noise_psd, symbols.shape)
    return np.sqrt(gamma) * symbols + noise
