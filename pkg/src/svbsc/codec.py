"""Rateless linear-transform codec with a prefix-decodable bit ladder.

The encoder projects a source vector onto principal directions, quantises
each coefficient with a natural-binary MSB-first quantiser and emits the bits
in a global importance order fixed at training time.  A stage-``i`` decoder
reads the first ``C_i`` bits; punctured (null) bits are treated as unknown,
i.e. each contributes the expectation 0.5 of its binary digit, which makes the
reconstruction the midpoint of whatever dyadic interval the known bits pin
down.
"""

from __future__ import annotations

import hashlib
import heapq
import struct
import zlib
from dataclasses import dataclass, replace
from enum import IntEnum
from pathlib import Path

import numpy as np

RANGE_SIGMAS = 2.0
MAX_DEPTH = 48


class NullableBit(IntEnum):
    ZERO = 0
    ONE = 1
    NULL = -1


NULL = int(NullableBit.NULL)


class ContractViolation(ValueError):
    """Decoder input breaks the null-tail contract."""


@dataclass(frozen=True)
class CodecProfile:
    n_source: int
    k_coded: int
    breakpoints: tuple[int, ...]

    def __post_init__(self):
        bp = tuple(int(c) for c in self.breakpoints)
        object.__setattr__(self, "breakpoints", bp)
        if not bp or any(b <= a for a, b in zip(bp, bp[1:])) or bp[0] <= 0:
            raise ValueError(f"breakpoints must be positive and strictly increasing: {bp}")
        if bp[-1] != self.k_coded:
            raise ValueError("last breakpoint must equal k_coded")

    @property
    def n_stages(self) -> int:
        return len(self.breakpoints)

    @property
    def l_max(self) -> int:
        return self.k_coded - self.breakpoints[0]

    @property
    def rate_range(self) -> tuple[float, float]:
        return (self.k_coded - self.l_max) / self.n_source, self.k_coded / self.n_source

    def truncated(self, stage: int) -> "CodecProfile":
        """Profile keeping only stages 1..stage."""
        return CodecProfile(self.n_source, self.breakpoints[stage - 1], self.breakpoints[:stage])

    def digest(self) -> int:
        key = f"{self.n_source}:{self.k_coded}:{','.join(map(str, self.breakpoints))}"
        return int.from_bytes(hashlib.sha256(key.encode()).digest()[:8], "little")


def preset_profile(name: str, n_source: int = 3072, channel_uses: int = 128, max_bits_per_symbol: int = 10):
    """Code 1 (single stage), Code 2 (two halves) or Code 3 (one stage per order)."""
    k = channel_uses * max_bits_per_symbol
    name = name.lower().replace("_", "").replace("-", "").replace(" ", "")
    if name == "code1":
        bp = (k,)
    elif name == "code2":
        bp = (k // 2, k)
    elif name == "code3":
        bp = tuple(channel_uses * i for i in range(1, max_bits_per_symbol + 1))
    else:
        raise ValueError(f"unknown codec preset {name!r}")
    return CodecProfile(n_source, k, bp)


@dataclass(frozen=True, eq=False)
class LadderCodecModel:
    profile: CodecProfile
    mean: np.ndarray
    basis: np.ndarray
    coeff_lo: np.ndarray
    coeff_hi: np.ndarray
    variances: np.ndarray
    alloc_order: np.ndarray  # (K, 2): coefficient index, significance (0 = MSB)

    def __post_init__(self):
        order = np.asarray(self.alloc_order, dtype=np.int64)
        object.__setattr__(self, "alloc_order", order)
        if order.shape != (self.profile.k_coded, 2):
            raise ValueError("alloc_order must have one row per coded bit")
        m = self.basis.shape[0]
        if self.basis.shape[1] != self.profile.n_source or self.mean.shape != (self.profile.n_source,):
            raise ValueError("basis/mean do not match n_source")
        if order[:, 0].min() < 0 or order[:, 0].max() >= m:
            raise ValueError("alloc_order references unknown coefficients")
        depth = np.bincount(order[:, 0], minlength=m)
        if depth.max() > MAX_DEPTH:
            raise ValueError("quantiser depth too large")
        object.__setattr__(self, "_depth", depth)

    @property
    def depth(self) -> np.ndarray:
        """Bits allocated to each coefficient."""
        return self._depth

    @property
    def n_coefficients(self) -> int:
        return self.basis.shape[0]

    def step_sizes(self) -> np.ndarray:
        return (self.coeff_hi - self.coeff_lo) / 2.0 ** self.depth

    def truncated(self, stage: int) -> "LadderCodecModel":
        """The codec as it would be built with stages 1..stage only."""
        prof = self.profile.truncated(stage)
        order = self.alloc_order[: prof.k_coded]
        m = int(order[:, 0].max()) + 1
        return replace(
            self,
            profile=prof,
            basis=self.basis[:m].copy(),
            coeff_lo=self.coeff_lo[:m].copy(),
            coeff_hi=self.coeff_hi[:m].copy(),
            variances=self.variances[:m].copy(),
            alloc_order=order.copy(),
        )

    def same_transform(self, other: "LadderCodecModel") -> bool:
        return (
            np.array_equal(self.mean, other.mean)
            and np.array_equal(self.basis, other.basis)
            and np.array_equal(self.coeff_lo, other.coeff_lo)
            and np.array_equal(self.coeff_hi, other.coeff_hi)
        )


def greedy_allocation(variances, n_bits: int) -> list[tuple[int, int]]:
    """Assign bits one at a time to the coefficient maximising lambda * 4**-b.

    Ties go to the lower coefficient index.  The returned list is the
    assignment order, i.e. (coefficient, significance) per emitted bit.
    """
    variances = np.asarray(variances, dtype=float)
    heap = [(-float(v), j) for j, v in enumerate(variances) if v > 0]
    if not heap:
        raise ValueError("no coefficient has positive variance")
    heapq.heapify(heap)
    bits = [0] * len(variances)
    order = []
    for _ in range(n_bits):
        neg, j = heapq.heappop(heap)
        order.append((j, bits[j]))
        bits[j] += 1
        heapq.heappush(heap, (neg / 4.0, j))
    return order


def _check_dataset(data, n_source):
    x = np.asarray(data, dtype=float)
    if x.ndim != 2 or x.shape[1] != n_source:
        raise ValueError(f"dataset must have shape (count, {n_source}), got {x.shape}")
    if x.min() < 0 or x.max() > 1:
        raise ValueError("dataset values must lie in [0, 1]")
    return x


def train_ladder(dataset, profile: CodecProfile) -> LadderCodecModel:
    """Fit the transform and the importance-ordered bit allocation."""
    x = _check_dataset(dataset, profile.n_source)
    mean = x.mean(axis=0)
    centred = x - mean
    cov = centred.T @ centred / max(len(x) - 1, 1)
    eigval, eigvec = np.linalg.eigh(cov)
    eigval, eigvec = eigval[::-1], eigvec[:, ::-1]
    if eigval[0] <= 0:
        raise ValueError("degenerate dataset: zero variance in every direction")
    eigval = np.where(eigval > eigval[0] * 1e-12, eigval, 0.0)

    order = np.array(greedy_allocation(eigval, profile.k_coded), dtype=np.int64)
    m = int(order[:, 0].max()) + 1
    if len(x) < 10 * m:
        raise ValueError(f"dataset too small: {len(x)} samples for {m} coefficients (need >= {10 * m})")

    basis = eigvec[:, :m].T.copy()
    # Fix each direction's sign so its largest component is positive.
    peak = basis[np.arange(m), np.argmax(np.abs(basis), axis=1)]
    basis *= np.where(peak < 0, -1.0, 1.0)[:, None]
    # Projections of centred data have zero mean, so ranges are symmetric.
    half = RANGE_SIGMAS * np.sqrt(eigval[:m])
    return LadderCodecModel(
        profile=profile,
        mean=mean,
        basis=basis,
        coeff_lo=-half,
        coeff_hi=half,
        variances=eigval[:m].copy(),
        alloc_order=order,
    )


def shuffled_order(order: np.ndarray, profile: CodecProfile) -> np.ndarray:
    perm = np.random.default_rng(profile.digest()).permutation(len(order))
    return order[perm]


def train_baseline(dataset, profile: CodecProfile) -> LadderCodecModel:
    """Same transform and allocation, emitted in a fixed pseudo-random order."""
    model = train_ladder(dataset, profile)
    return replace(model, alloc_order=shuffled_order(model.alloc_order, profile))


def quantise(model: LadderCodecModel, sources) -> np.ndarray:
    """Integer quantiser indices, shape (..., n_coefficients)."""
    s = np.asarray(sources, dtype=float)
    if s.shape[-1] != model.profile.n_source:
        raise ValueError(f"source length {s.shape[-1]} != {model.profile.n_source}")
    c = (s - model.mean) @ model.basis.T
    v = np.clip((c - model.coeff_lo) / (model.coeff_hi - model.coeff_lo), 0.0, 1.0)
    levels = 2 ** model.depth
    q = np.floor(v * levels).astype(np.int64)
    return np.minimum(q, levels - 1)


def encode(model: LadderCodecModel, sources) -> np.ndarray:
    """K bits per source vector (uint8), emitted in alloc_order."""
    q = quantise(model, sources)
    j, b = model.alloc_order[:, 0], model.alloc_order[:, 1]
    shift = model.depth[j] - 1 - b
    return ((q[..., j] >> shift) & 1).astype(np.uint8)


def select_decoder(breakpoints, k_coded: int, n_punctured: int, l_max: int | None = None) -> int:
    """1-based index of the smallest stage whose length covers K - L."""
    if n_punctured < 0 or n_punctured > k_coded:
        raise ValueError(f"puncturing length {n_punctured} outside [0, {k_coded}]")
    if l_max is not None and n_punctured > l_max:
        raise ValueError(f"puncturing length {n_punctured} exceeds l_max = {l_max}")
    kept = k_coded - n_punctured
    for i, c in enumerate(breakpoints, start=1):
        if c >= kept:
            return i
    raise ValueError("breakpoints do not reach k_coded")


def decoder_padding(breakpoints, k_coded: int, n_punctured: int) -> int:
    """Number of 0.5 pads the chosen stage needs on top of the received bits."""
    i = select_decoder(breakpoints, k_coded, n_punctured)
    return breakpoints[i - 1] - (k_coded - n_punctured)


def coefficient_fractions(model: LadderCodecModel, u_hat, n_punctured: int) -> tuple[np.ndarray, np.ndarray]:
    """Normalised coefficient estimates in [0, 1] and the active-coefficient mask.

    A coefficient is active when the chosen stage reads at least one of its bits.
    """
    k = model.profile.k_coded
    u = np.asarray(u_hat)
    if u.shape != (k,):
        raise ValueError(f"decoder input must have length {k}")
    stage = select_decoder(model.profile.breakpoints, k, n_punctured)
    kept = k - n_punctured
    head = u[:kept]
    if np.any(head == NULL):
        pos = int(np.nonzero(head == NULL)[0][0])
        raise ContractViolation(f"null at position {pos}, inside the received prefix of {kept} bits")
    if np.any((head != 0) & (head != 1)):
        raise ValueError("decoder input holds values other than 0, 1 and null")

    j, b = model.alloc_order[:, 0], model.alloc_order[:, 1]
    weight = 0.5 ** (b + 1)
    digit = np.full(k, 0.5)
    digit[:kept] = head
    m = model.n_coefficients
    # Every term is a dyadic rational, so these sums are exact.
    frac = np.bincount(j, weights=digit * weight, minlength=m) + 0.5 ** (model.depth + 1)
    active = np.zeros(m, dtype=bool)
    active[j[: model.profile.breakpoints[stage - 1]]] = True
    return frac, active


def decode(model: LadderCodecModel, u_hat, n_punctured: int) -> np.ndarray:
    """Reconstruct a source vector from K nullable bits whose last L are null."""
    frac, active = coefficient_fractions(model, u_hat, n_punctured)
    # Rows past the last active coefficient are dropped with a view, never a
    # copy; the sum then runs over exactly the rows a truncated model holds.
    top = int(np.nonzero(active)[0][-1]) + 1
    lo, hi = model.coeff_lo[:top], model.coeff_hi[:top]
    coeffs = np.where(active[:top], lo + frac[:top] * (hi - lo), 0.0)
    recon = model.mean + coeffs @ model.basis[:top]
    return np.clip(recon, 0.0, 1.0)


def decode_prefix(model: LadderCodecModel, bits, n_punctured: int) -> np.ndarray:
    """Decode hard bits after nulling their last ``n_punctured`` positions."""
    u = np.asarray(bits, dtype=np.int8).copy()
    if n_punctured:
        u[-n_punctured:] = NULL
    return decode(model, u, n_punctured)


# -- model file -------------------------------------------------------------

MAGIC = b"RLJC"
VERSION = 1


def model_to_bytes(model: LadderCodecModel) -> bytes:
    p = model.profile
    m = model.n_coefficients
    parts = [
        MAGIC,
        struct.pack("<HIIH", VERSION, p.n_source, p.k_coded, p.n_stages),
        struct.pack(f"<{p.n_stages}I", *p.breakpoints),
        struct.pack("<I", m),
        model.mean.astype("<f8").tobytes(),
        model.basis.astype("<f8").tobytes(),
        model.coeff_lo.astype("<f8").tobytes(),
        model.coeff_hi.astype("<f8").tobytes(),
        model.variances.astype("<f8").tobytes(),
    ]
    order = np.zeros(p.k_coded, dtype=[("coeff", "<u4"), ("sig", "<u2")])
    order["coeff"] = model.alloc_order[:, 0]
    order["sig"] = model.alloc_order[:, 1]
    parts.append(order.tobytes())
    payload = b"".join(parts)
    return payload + struct.pack("<I", zlib.crc32(payload))


def model_from_bytes(data: bytes) -> LadderCodecModel:
    if len(data) < 20 or data[:4] != MAGIC:
        raise ValueError("not a codec model file (bad magic)")
    payload, (crc,) = data[:-4], struct.unpack("<I", data[-4:])
    if zlib.crc32(payload) != crc:
        raise ValueError("codec model file is corrupt (CRC mismatch)")
    pos = 4
    version, n, k, f = struct.unpack_from("<HIIH", payload, pos)
    pos += struct.calcsize("<HIIH")
    if version != VERSION:
        raise ValueError(f"unsupported model file version {version}")
    bp = struct.unpack_from(f"<{f}I", payload, pos)
    pos += 4 * f
    (m,) = struct.unpack_from("<I", payload, pos)
    pos += 4

    def take(count):
        nonlocal pos
        arr = np.frombuffer(payload, dtype="<f8", count=count, offset=pos).astype(float)
        pos += 8 * count
        return arr

    mean = take(n)
    basis = take(m * n).reshape(m, n)
    lo, hi, var = take(m), take(m), take(m)
    order = np.frombuffer(payload, dtype=[("coeff", "<u4"), ("sig", "<u2")], count=k, offset=pos)
    pos += 6 * k
    if pos != len(payload):
        raise ValueError("codec model file has trailing bytes")
    alloc = np.stack([order["coeff"].astype(np.int64), order["sig"].astype(np.int64)], axis=1)
    return LadderCodecModel(CodecProfile(n, k, bp), mean, basis, lo, hi, var, alloc)


def save_model(model: LadderCodecModel, path) -> None:
    Path(path).write_bytes(model_to_bytes(model))


def load_model(path) -> LadderCodecModel:
    return model_from_bytes(Path(path).read_bytes())
