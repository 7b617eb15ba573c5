import numpy as np
import pytest

from svbsc.dataset import CIFAR_RECORD, SampleSet, load_cifar10, load_pnm, synth_gaussian, write_pnm


def _cifar_bytes(n, seed=0):
    rng = np.random.default_rng(seed)
    rec = rng.integers(0, 256, (n, CIFAR_RECORD), dtype=np.uint8)
    rec[:, 1] = 255
    rec[:, 2] = 0
    return rec


def test_record_size_matches_published_layout():
    # 1 label byte + 32 x 32 pixels x 3 channels
    assert CIFAR_RECORD == 3073


def test_cifar_two_records(tmp_path):
    rec = _cifar_bytes(2)
    (tmp_path / "b.bin").write_bytes(rec.tobytes())
    data = load_cifar10(tmp_path / "b.bin")
    assert len(data) == 2 and data.n_source == 3072
    assert data.vectors[0, 0] == 1.0 and data.vectors[0, 1] == 0.0
    np.testing.assert_array_equal(data.vectors, rec[:, 1:] / 255.0)


def test_cifar_multiple_batches_and_determinism(tmp_path):
    for i in range(2):
        (tmp_path / f"b{i}.bin").write_bytes(_cifar_bytes(3, i).tobytes())
    paths = [tmp_path / "b0.bin", tmp_path / "b1.bin"]
    a, b = load_cifar10(paths), load_cifar10(paths)
    assert len(a) == 6
    np.testing.assert_array_equal(a.vectors, b.vectors)


def test_cifar_errors(tmp_path):
    (tmp_path / "empty.bin").write_bytes(b"")
    (tmp_path / "short.bin").write_bytes(b"\0" * 3000)
    with pytest.raises(ValueError, match="empty"):
        load_cifar10(tmp_path / "empty.bin")
    with pytest.raises(ValueError, match="multiple"):
        load_cifar10(tmp_path / "short.bin")


def test_pgm_single_pixel(tmp_path):
    (tmp_path / "a.pgm").write_bytes(b"P5\n1 1\n255\n" + bytes([128]))
    np.testing.assert_array_equal(load_pnm(tmp_path / "a.pgm"), [128 / 255])


def test_ppm_is_channel_major(tmp_path):
    (tmp_path / "a.ppm").write_bytes(b"P6\n# comment\n2 1\n255\n" + bytes([1, 2, 3, 4, 5, 6]))
    v = load_pnm(tmp_path / "a.ppm")
    np.testing.assert_array_equal(np.round(v * 255), [1, 4, 2, 5, 3, 6])


@pytest.mark.parametrize("channels", [1, 3])
def test_pnm_roundtrip(tmp_path, channels):
    rng = np.random.default_rng(channels)
    pix = rng.integers(0, 256, 5 * 4 * channels) / 255.0
    write_pnm(tmp_path / "x.pnm", pix, 5, 4, channels)
    np.testing.assert_array_equal(load_pnm(tmp_path / "x.pnm"), pix)


def test_pnm_errors(tmp_path):
    (tmp_path / "a").write_bytes(b"P2\n1 1\n255\n1")
    (tmp_path / "b").write_bytes(b"P5\n1 1\n65535\n\0\0")
    (tmp_path / "c").write_bytes(b"P5\n4 4\n255\n\0")
    for name, msg in (("a", "magic"), ("b", "maxval"), ("c", "truncated")):
        with pytest.raises(ValueError, match=msg):
            load_pnm(tmp_path / name)


def test_zero_profile_is_constant():
    data = synth_gaussian(10, 16, [0.0, 0.0, 0.0], seed=0)
    assert np.all(data.vectors == 0.5)


def test_rank_one_covariance():
    x = synth_gaussian(3000, 6, [0.01], seed=1).vectors
    ev = np.linalg.eigvalsh(np.cov(x.T))
    assert ev[-1] == pytest.approx(0.01, rel=0.1)
    assert ev[-2] < 1e-12


def test_synthetic_mean_and_errors():
    x = synth_gaussian(4000, 5, [0.01] * 5, seed=2).vectors
    assert np.all(np.abs(x.mean(axis=0) - 0.5) <= 3 * 0.1 / np.sqrt(4000))
    with pytest.raises(ValueError):
        synth_gaussian(5, 3, [-0.1])
    with pytest.raises(ValueError):
        synth_gaussian(5, 1, [0.1, 0.1])


def test_split_disjoint_and_covering():
    data = synth_gaussian(100, 4, [0.01], seed=3).with_split(0.6, 0.2, seed=1)
    parts = [set(data.split[k].tolist()) for k in ("train", "validation", "test")]
    assert [len(p) for p in parts] == [60, 20, 20]
    assert set().union(*parts) == set(range(100))
    with pytest.raises(ValueError):
        SampleSet(data.vectors, "x", {"a": np.array([1, 2]), "b": np.array([2])})
    with pytest.raises(ValueError):
        SampleSet(np.full((2, 2), 1.5), "x")
