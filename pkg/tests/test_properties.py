"""Property suites; the conftest profile runs 1000 examples per property."""

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from hypothesis import given
from hypothesis import strategies as st

from svbsc import codec as cd
from svbsc.bermap import smooth
from svbsc.dataset import geometric_profile, synth_gaussian
from svbsc.link import StabilityTarget
from svbsc.metrics import aggregate, psnr
from svbsc.modem import SUPPORTED_ORDERS, demodulate_labels, get_constellation

SQUARE = (4, 16, 64, 256, 1024)


@lru_cache(maxsize=None)
def models():
    data = synth_gaussian(1500, 32, geometric_profile(0.02, 0.75, 12), seed=8).vectors
    prof = cd.preset_profile("code3", n_source=32, channel_uses=3)
    return cd.train_ladder(data, prof), cd.train_baseline(data, prof)


unit_vectors = st.lists(st.floats(0.0, 1.0), min_size=32, max_size=32).map(np.array)


@given(s=unit_vectors, stage=st.integers(1, 10))
def test_prefix_consistency_and_ladder_law(s, stage):
    ladder, _ = models()
    small = ladder.truncated(stage)
    c = ladder.profile.breakpoints[stage - 1]
    full = cd.encode(ladder, s)
    np.testing.assert_array_equal(cd.encode(small, s), full[:c])
    a = cd.decode_prefix(ladder, full, ladder.profile.k_coded - c)
    np.testing.assert_array_equal(a, cd.decode_prefix(small, full[:c], 0))


nullable = st.tuples(st.lists(st.integers(0, 1), min_size=30, max_size=30), st.integers(0, 30))


def _nulled(bits, L):
    u = np.array(bits, dtype=np.int8)
    if L:
        u[-L:] = cd.NULL
    return u


@given(case=nullable)
def test_ladder_reconstruction_inside_known_interval(case):
    ladder, _ = models()
    u = _nulled(*case)
    frac, _ = cd.coefficient_fractions(ladder, u, case[1])
    for j in range(ladder.n_coefficients):
        pos = np.nonzero(ladder.alloc_order[:, 0] == j)[0]
        known = [int(u[p]) for p in pos if u[p] != cd.NULL]
        # Ladder order emits each coefficient MSB first, so known bits are a prefix.
        lo = sum(b * 0.5 ** (i + 1) for i, b in enumerate(known))
        assert lo <= frac[j] < lo + 0.5 ** len(known)


@given(case=nullable)
def test_baseline_reconstruction_is_mean_over_completions(case):
    _, base = models()
    u = _nulled(*case)
    frac, _ = cd.coefficient_fractions(base, u, case[1])
    for j in range(base.n_coefficients):
        pos = np.nonzero(base.alloc_order[:, 0] == j)[0]
        sig = base.alloc_order[pos, 1]
        depth = len(pos)
        cells = []
        for q in range(2**depth):
            digits = [(q >> (depth - 1 - b)) & 1 for b in sig]
            if all(u[p] == cd.NULL or u[p] == d for p, d in zip(pos, digits)):
                cells.append((q + 0.5) / 2**depth)
        assert np.isclose(frac[j], np.mean(cells), rtol=0, atol=1e-15)


@given(order=st.sampled_from(SQUARE), data=st.data())
def test_square_gray_neighbours(order, data):
    pairs = get_constellation(order).neighbour_pairs()
    a, b = data.draw(st.sampled_from(pairs))
    assert bin(a ^ b).count("1") == 1


@given(
    order=st.sampled_from(SUPPORTED_ORDERS),
    re=st.floats(-2.0, 2.0),
    im=st.floats(-2.0, 2.0),
)
def test_demapper_is_minimum_distance(order, re, im):
    c = get_constellation(order)
    r = complex(re, im)
    got = int(demodulate_labels([r], order)[0])
    d = np.abs(c.points - r)
    assert d[got] <= d.min() + 1e-12
    if np.count_nonzero(d == d.min()) > 1:
        assert got == int(np.argmin(d))


curves = st.lists(st.floats(0.0, 0.6), min_size=8, max_size=8)


@given(raw=st.lists(curves, min_size=1, max_size=5))
def test_smoothed_map_is_monotone(raw):
    orders = SUPPORTED_ORDERS[: len(raw)]
    out = smooth({m: np.array(c) for m, c in zip(orders, raw)})
    prev = None
    for m in orders:
        v = out[m]
        assert np.all(np.diff(v) <= 1e-15) and np.all((v >= 0) & (v <= 0.5))
        if prev is not None:
            assert np.all(v >= prev)
        prev = v


@dataclass
class Trace:
    measured_q: float
    punct_len: int
    selected_m: int
    psnr_db: float
    feasible: bool
    qos_violation: bool


traces = st.lists(
    st.builds(
        Trace,
        st.floats(0.0, 1.0),
        st.integers(0, 1152),
        st.sampled_from(SUPPORTED_ORDERS),
        st.floats(0.0, 99.0),
        st.booleans(),
        st.booleans(),
    ),
    min_size=1,
    max_size=40,
)


@given(tr=traces, data=st.data())
def test_aggregate_permutation_invariant(tr, data):
    perm = data.draw(st.permutations(tr))
    tgt = StabilityTarget()
    a, b = aggregate(tr, tgt), aggregate(perm, tgt)
    assert a == b
    assert 0 <= a.stability_violation_rate <= 1 and a.mean_L <= a.max_L


@given(a=st.floats(1e-12, 1.0), b=st.floats(1e-12, 1.0))
def test_psnr_decreasing_in_mse(a, b):
    if a < b:
        assert psnr(a) > psnr(b) or psnr(a) == 99.0
