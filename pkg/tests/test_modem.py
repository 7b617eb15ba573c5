import itertools

import numpy as np
import pytest

from svbsc.modem import (
    SUPPORTED_ORDERS,
    demodulate,
    demodulate_labels,
    get_constellation,
    modulate,
    spectral_efficiency,
)

SQUARE = (4, 16, 64, 256, 1024)
CROSS = (8, 32, 128, 512)


def hamming(a, b):
    return bin(a ^ b).count("1")


def test_bpsk_mapping():
    np.testing.assert_array_equal(modulate([0, 1], 2), [1.0, -1.0])


def test_bpsk_tie_goes_to_lower_label():
    assert demodulate([0j], 2).tolist() == [0]


@pytest.mark.parametrize("order,bps", [(2, 1), (32, 5), (1024, 10)])
def test_spectral_efficiency(order, bps):
    assert spectral_efficiency(order) == bps


def test_unsupported_order():
    with pytest.raises(ValueError):
        spectral_efficiency(3)
    with pytest.raises(ValueError):
        modulate([0, 1, 0], 3)


def test_bit_count_must_divide():
    with pytest.raises(ValueError):
        modulate([0, 1, 0], 4)


def test_sixteen_qam_point_set():
    pts = get_constellation(16).points
    expected = {complex(i, q) / np.sqrt(10) for i, q in itertools.product((-3, -1, 1, 3), repeat=2)}
    assert len(pts) == 16
    for p in pts:
        assert min(abs(p - e) for e in expected) < 1e-12


@pytest.mark.parametrize("order", SUPPORTED_ORDERS)
def test_unit_energy(order):
    assert np.mean(np.abs(get_constellation(order).points) ** 2) == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("order", SUPPORTED_ORDERS)
def test_noiseless_roundtrip(order):
    rng = np.random.default_rng(order)
    k = spectral_efficiency(order)
    bits = rng.integers(0, 2, (10_000 // k + 1) * k)
    np.testing.assert_array_equal(demodulate(modulate(bits, order), order), bits)


@pytest.mark.parametrize("order", SUPPORTED_ORDERS)
def test_exact_point_gives_its_label(order):
    c = get_constellation(order)
    np.testing.assert_array_equal(demodulate_labels(c.points, order), np.arange(order))


@pytest.mark.parametrize("order", SQUARE)
def test_square_gray_exact(order):
    pairs = get_constellation(order).neighbour_pairs()
    assert all(hamming(a, b) == 1 for a, b in pairs)


@pytest.mark.parametrize("order", CROSS)
def test_cross_quasi_gray(order):
    pairs = get_constellation(order).neighbour_pairs()
    assert np.mean([hamming(a, b) for a, b in pairs]) <= 1.15


@pytest.mark.parametrize("order", SUPPORTED_ORDERS)
def test_matches_brute_force_minimum_distance(order):
    c = get_constellation(order)
    rng = np.random.default_rng(1)
    r = 1.3 * (rng.standard_normal(4000) + 1j * rng.standard_normal(4000))
    brute = np.argmin(np.abs(r[:, None] - c.points[None, :]), axis=1)
    np.testing.assert_array_equal(demodulate_labels(r, order), brute)


@pytest.mark.parametrize("order", SUPPORTED_ORDERS)
def test_equalised_scale_invariance(order):
    rng = np.random.default_rng(2)
    k = spectral_efficiency(order)
    x = modulate(rng.integers(0, 2, 500 * k), order) + 0.1 * rng.standard_normal(500)
    a = 3.7
    np.testing.assert_array_equal(demodulate((a * x) / a, order), demodulate(x, order))
