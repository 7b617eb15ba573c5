"""Image sources as flat [0, 1] vectors: CIFAR-10 binary, PGM/PPM, synthetic."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

CIFAR_RECORD = 1 + 3 * 32 * 32
CIFAR_N = 3 * 32 * 32


@dataclass(frozen=True, eq=False)
class SampleSet:
    vectors: np.ndarray
    provenance: str
    split: dict[str, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        v = np.asarray(self.vectors, dtype=float)
        if v.ndim != 2:
            raise ValueError("vectors must be a 2-D array (count, N)")
        if v.size and (v.min() < 0 or v.max() > 1):
            raise ValueError("sample values must lie in [0, 1]")
        object.__setattr__(self, "vectors", v)
        seen = np.zeros(len(v), dtype=int)
        for idx in self.split.values():
            np.add.at(seen, idx, 1)
        if np.any(seen > 1):
            raise ValueError("splits overlap")

    @property
    def n_source(self) -> int:
        return self.vectors.shape[1]

    def __len__(self):
        return len(self.vectors)

    def subset(self, name: str) -> np.ndarray:
        return self.vectors[self.split[name]]

    def with_split(self, train: float, validation: float = 0.0, seed: int = 0) -> "SampleSet":
        """Random disjoint train/validation/test split; the test part takes the rest."""
        n = len(self.vectors)
        perm = np.random.default_rng(seed).permutation(n)
        n_tr, n_va = int(round(train * n)), int(round(validation * n))
        if n_tr + n_va > n:
            raise ValueError("split fractions exceed 1")
        split = {
            "train": np.sort(perm[:n_tr]),
            "validation": np.sort(perm[n_tr : n_tr + n_va]),
            "test": np.sort(perm[n_tr + n_va :]),
        }
        return SampleSet(self.vectors, self.provenance, split)


def load_cifar10(paths) -> SampleSet:
    """Read CIFAR-10 binary batches (label byte + 3072 channel-major pixels)."""
    if isinstance(paths, (str, Path)):
        paths = [paths]
    chunks = []
    for p in paths:
        raw = Path(p).read_bytes()
        if not raw:
            raise ValueError(f"{p}: empty file")
        if len(raw) % CIFAR_RECORD:
            raise ValueError(f"{p}: length {len(raw)} is not a multiple of {CIFAR_RECORD}")
        rec = np.frombuffer(raw, dtype=np.uint8).reshape(-1, CIFAR_RECORD)
        chunks.append(rec[:, 1:].astype(float) / 255.0)
    return SampleSet(np.concatenate(chunks), provenance="cifar10:" + ",".join(str(p) for p in paths))


def _pnm_tokens(data: bytes, count: int):
    # Header fields are whitespace-separated, with '#' comments to end of line.
    tokens, pos = [], 0
    while len(tokens) < count:
        while pos < len(data) and data[pos : pos + 1].isspace():
            pos += 1
        if data[pos : pos + 1] == b"#":
            while pos < len(data) and data[pos : pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos : pos + 1].isspace():
            pos += 1
        if start == pos:
            raise ValueError("truncated PNM header")
        tokens.append(data[start:pos])
    return tokens, pos + 1


def load_pnm(path) -> np.ndarray:
    """Binary PGM (P5) or PPM (P6) with maxval 255, scaled to [0, 1].

    PPM pixels are flattened channel-major (all R, then G, then B) to match
    the CIFAR layout.
    """
    data = Path(path).read_bytes()
    (magic, w, h, maxval), start = _pnm_tokens(data, 4)
    if magic not in (b"P5", b"P6"):
        raise ValueError(f"unsupported PNM magic {magic!r}")
    if int(maxval) != 255:
        raise ValueError(f"unsupported maxval {int(maxval)}")
    channels = 3 if magic == b"P6" else 1
    n = int(w) * int(h) * channels
    payload = data[start : start + n]
    if len(payload) < n:
        raise ValueError("truncated PNM payload")
    pix = np.frombuffer(payload, dtype=np.uint8).astype(float) / 255.0
    if channels == 3:
        pix = pix.reshape(-1, 3).T.ravel()
    return pix


def write_pnm(path, pixels, width: int, height: int, channels: int = 1) -> None:
    """Inverse of :func:`load_pnm` (values are rounded to 8 bits)."""
    v = np.asarray(pixels, dtype=float).ravel()
    if v.size != width * height * channels:
        raise ValueError("pixel count does not match the image size")
    b = np.clip(np.round(v * 255.0), 0, 255).astype(np.uint8)
    if channels == 3:
        b = b.reshape(3, -1).T.ravel()
        magic = b"P6"
    elif channels == 1:
        magic = b"P5"
    else:
        raise ValueError("channels must be 1 or 3")
    Path(path).write_bytes(magic + f"\n{width} {height}\n255\n".encode() + b.tobytes())


def synth_gaussian(count: int, n_source: int, variance_profile, seed: int = 0) -> SampleSet:
    """clip(0.5 + sum_j sqrt(lambda_j) z_j e_j) on the first len(profile) axes."""
    lam = np.asarray(variance_profile, dtype=float)
    if lam.size > n_source:
        raise ValueError("variance profile longer than n_source")
    if np.any(lam < 0):
        raise ValueError("variances must be non-negative")
    rng = np.random.default_rng(seed)
    x = np.full((count, n_source), 0.5)
    x[:, : lam.size] += rng.standard_normal((count, lam.size)) * np.sqrt(lam)
    return SampleSet(np.clip(x, 0.0, 1.0), provenance=f"synthetic:n={n_source},k={lam.size},seed={seed}")


def geometric_profile(first: float, ratio: float, length: int) -> np.ndarray:
    return first * ratio ** np.arange(length)
