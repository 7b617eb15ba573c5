from dataclasses import dataclass

import numpy as np
import pytest

from svbsc.link import StabilityTarget
from svbsc.metrics import DistortionReport, aggregate, flip_ratio, mse, psnr


@dataclass
class T:
    measured_q: float
    punct_len: int = 0
    selected_m: int = 1024
    psnr_db: float = 30.0
    feasible: bool = True
    qos_violation: bool = False


def test_mse_examples():
    assert mse([0.2, 0.3], [0.2, 0.3]) == 0
    assert mse(np.zeros(5), np.ones(5)) == 1
    assert mse([0, 0.5], [0.5, 0.5]) == 0.125
    with pytest.raises(ValueError):
        mse([0, 1], [0])


def test_psnr_examples():
    assert psnr(0.01) == pytest.approx(20.0)
    assert psnr(1.0) == 0.0
    assert psnr(0.0) == 99.0
    with pytest.raises(ValueError):
        psnr(-1e-3)


def test_flip_ratio_examples():
    x = np.zeros(128, dtype=np.uint8)
    y = x.copy()
    assert flip_ratio(x, y) == 0
    assert flip_ratio(x, 1 - x) == 1
    y[5] = 1
    assert flip_ratio(x, y) == 1 / 128
    with pytest.raises(ValueError):
        flip_ratio([], [])


def test_aggregate_examples():
    tgt = StabilityTarget()
    assert aggregate([T(0.0)] * 4, tgt).stability_violation_rate == 0
    r = aggregate([T(0.01), T(0.2), T(0.05), T(0.3)], tgt)
    assert r.stability_violation_rate == 0.5  # 0.05 itself is not a violation
    r = aggregate([T(0.0, 0, 1024), T(0.0, 1152, 2)], tgt)
    assert (r.mean_L, r.max_L, r.mean_spectral_efficiency) == (576, 1152, 5.5)
    with pytest.raises(ValueError):
        aggregate([], tgt)


def test_average_cap_flag():
    tr = [T(0.0, 0), T(0.0, 1000)]
    assert aggregate(tr, StabilityTarget(l_avg_cap=600)).meets_average_cap
    assert not aggregate(tr, StabilityTarget(l_avg_cap=400)).meets_average_cap


def test_distortion_report_monotone_check():
    rep = DistortionReport((8, 4, 0), (0.1, 0.05, 0.05), np.zeros((3, 1)))
    assert rep.is_monotone()
    assert not DistortionReport((8, 4, 0), (0.1, 0.1, 0.1), np.zeros((3, 1))).is_monotone()
    assert not DistortionReport((8, 4, 0), (0.1, 0.2, 0.05), np.zeros((3, 1))).is_monotone()
