"""Calibration, training and SNR sweeps driven by an :class:`ExperimentConfig`.

Random streams are keyed by position, never by worker:

* frame ``f`` at SNR index ``i`` uses ``default_rng([seed, i, 0, f])``;
* the conditional-gain pool at SNR index ``i`` uses ``default_rng([seed, i, 1])``.

Every CSI mode, epsilon and codec sees the same fading draw for a given
frame, so their rows are directly comparable and the output does not depend
on how the points are spread over processes.
"""

from __future__ import annotations

import csv
import io
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import bermap as bm
from . import codec as cd
from .channel import CsiMode, LinkBudget, RicianModel
from .config import ExperimentConfig
from .dataset import SampleSet, geometric_profile, load_cifar10, synth_gaussian
from .link import ConditionalGainPool, Link, StabilityTarget, run_frame
from .metrics import aggregate

RESULT_COLUMNS = (
    "snr_db",
    "csi_mode",
    "epsilon",
    "codec",
    "frames",
    "mean_ber",
    "violation_rate",
    "mean_se_bpcu",
    "mean_psnr_db",
    "mean_L",
    "max_L",
    "infeasible_rate",
    "config_hash",
)


class MissingArtifact(FileNotFoundError):
    pass


def resolve(path, base: Path | None) -> Path:
    p = Path(path)
    return p if p.is_absolute() or base is None else base / p


# -- data -------------------------------------------------------------------


def load_dataset(cfg: ExperimentConfig, base: Path | None = None) -> SampleSet:
    d = cfg.dataset
    if d.path:
        data = load_cifar10([resolve(p, base) for p in d.path])
        if data.n_source != d.n_source:
            raise ValueError(f"dataset has N = {data.n_source}, config says {d.n_source}")
    else:
        profile = geometric_profile(d.synthetic_first, d.synthetic_ratio, d.synthetic_length)
        data = synth_gaussian(d.synthetic_count, d.n_source, profile, d.synthetic_seed)
    return data.with_split(d.train_fraction, 0.0, d.split_seed)


def test_vectors(cfg: ExperimentConfig, data: SampleSet) -> np.ndarray:
    v = data.subset("test")
    if cfg.dataset.test_limit is not None:
        v = v[: cfg.dataset.test_limit]
    if len(v) == 0:
        raise ValueError("empty test split")
    return v


def codec_profile(cfg: ExperimentConfig) -> cd.CodecProfile:
    c = cfg.codec
    max_bits = 10
    if c.breakpoints:
        k = cfg.budget.channel_uses * max_bits
        return cd.CodecProfile(cfg.dataset.n_source, k, c.breakpoints)
    return cd.preset_profile(c.preset, cfg.dataset.n_source, cfg.budget.channel_uses, max_bits)


# -- commands ---------------------------------------------------------------


def cmd_calibrate(cfg: ExperimentConfig, out) -> tuple[bm.BerMap, str]:
    """Calibrate, write the CSV, return the map and a threshold table."""
    bmap = bm.calibrate(snr_grid=cfg.bermap.snr_db, bits_per_point=cfg.bermap.bits_per_point, seed=cfg.seed)
    out = Path(out)
    out.parent.mkdir(parents=True, exist_ok=True)
    bmap.save(out)
    lines = [f"q0 = {cfg.target.q0}", "M      snr_th_db"]
    for m in bmap.orders:
        try:
            lines.append(f"{m:<6d} {bm.snr_threshold(bmap, cfg.target.q0, m):.3f}")
        except bm.ThresholdOutOfRange:
            lines.append(f"{m:<6d} out of range")
    return bmap, "\n".join(lines)


def train_model(cfg: ExperimentConfig, data: SampleSet) -> cd.LadderCodecModel:
    profile = codec_profile(cfg)
    train = data.subset("train")
    if cfg.codec.variant == "baseline":
        return cd.train_baseline(train, profile)
    return cd.train_ladder(train, profile)


def cmd_train(cfg: ExperimentConfig, out, base: Path | None = None) -> tuple[cd.LadderCodecModel, str]:
    model = train_model(cfg, load_dataset(cfg, base))
    out = Path(out)
    out.parent.mkdir(parents=True, exist_ok=True)
    cd.save_model(model, out)
    bp = model.profile.breakpoints
    lines = ["stage  C_i    new_bits  coefficients"]
    prev = 0
    for i, c in enumerate(bp, 1):
        n_coef = len(np.unique(model.alloc_order[:c, 0]))
        lines.append(f"{i:<6d} {c:<6d} {c - prev:<9d} {n_coef}")
        prev = c
    return model, "\n".join(lines)


# -- sweep ------------------------------------------------------------------


@dataclass(frozen=True)
class Group:
    csi_mode: CsiMode
    epsilon: float


def sweep_groups(cfg: ExperimentConfig) -> list[Group]:
    """Perfect CSI gets one group (epsilon is vacuous there); imperfect one per epsilon."""
    groups = []
    for mode in cfg.channel.csi_mode:
        if CsiMode(mode) is CsiMode.PERFECT:
            groups.append(Group(CsiMode.PERFECT, 0.0))
        else:
            groups.extend(Group(CsiMode.IMPERFECT, float(e)) for e in cfg.target.epsilon)
    return groups


@dataclass(frozen=True, eq=False)
class SweepContext:
    cfg: ExperimentConfig
    model: cd.LadderCodecModel
    bermap: bm.BerMap
    sources: np.ndarray
    coded: np.ndarray


@dataclass(frozen=True)
class PointResult:
    snr_index: int
    group: Group
    report: object
    # Frames whose true gain fell below the chosen order's gain threshold.
    below_threshold_rate: float


_CTX: SweepContext | None = None


def _init_worker(ctx: SweepContext) -> None:
    global _CTX
    _CTX = ctx


def run_snr_point(ctx: SweepContext, snr_index: int) -> list[PointResult]:
    cfg = ctx.cfg
    snr_db = cfg.sweep.snr_db[snr_index]
    channel = RicianModel(cfg.channel.k_factor_db, cfg.channel.n_pilots)
    budget = LinkBudget.for_snr_db(snr_db, cfg.budget.power_limit, cfg.budget.channel_uses)
    thresholds = bm.gamma_thresholds(ctx.bermap, cfg.target.q0, budget)
    pool = None
    results = []
    for g in sweep_groups(cfg):
        if g.csi_mode is CsiMode.IMPERFECT and pool is None:
            pool_rng = np.random.default_rng([cfg.seed, snr_index, 1])
            pool = ConditionalGainPool.for_budget(channel, budget, cfg.sweep.cdf_samples, pool_rng)
        target = StabilityTarget(cfg.target.q0, g.epsilon, cfg.target.l_max, cfg.target.l_avg_cap)
        link = Link(channel, budget, g.csi_mode, target, thresholds, pool if g.csi_mode is CsiMode.IMPERFECT else None)
        traces = []
        n_src = len(ctx.sources)
        for f in range(cfg.sweep.frames):
            rng = np.random.default_rng([cfg.seed, snr_index, 0, f])
            traces.append(
                run_frame(ctx.sources[f % n_src], ctx.model, link, rng, keep_vectors=False, coded=ctx.coded[f % n_src])
            )
        below = np.mean([t.gamma < thresholds[t.selected_m] for t in traces])
        results.append(PointResult(snr_index, g, aggregate(traces, target), float(below)))
    return results


def _worker(snr_index: int) -> list[PointResult]:
    return run_snr_point(_CTX, snr_index)


def resolve_threads(threads: int | None) -> int:
    if threads is None:
        env = os.environ.get("SVBSC_THREADS")
        threads = int(env) if env else 1
    if threads < 1:
        raise ValueError("thread count must be >= 1")
    return threads


def run_sweep(ctx: SweepContext, threads: int = 1) -> list[PointResult]:
    idx = range(len(ctx.cfg.sweep.snr_db))
    if threads == 1:
        per_point = [run_snr_point(ctx, i) for i in idx]
    else:
        with ProcessPoolExecutor(threads, initializer=_init_worker, initargs=(ctx,)) as ex:
            per_point = list(ex.map(_worker, idx))
    groups = sweep_groups(ctx.cfg)
    flat = [r for rs in per_point for r in rs]
    return sorted(flat, key=lambda r: (groups.index(r.group), r.snr_index))


def _fmt(x: float) -> str:
    return repr(float(x))


def results_csv(cfg: ExperimentConfig, results: list[PointResult]) -> str:
    out = io.StringIO()
    w = csv.writer(out, lineterminator="\n")
    w.writerow(RESULT_COLUMNS)
    h = cfg.hash()
    for r in results:
        q = r.report
        w.writerow(
            [
                _fmt(cfg.sweep.snr_db[r.snr_index]),
                r.group.csi_mode.value,
                _fmt(r.group.epsilon),
                cfg.codec.name,
                q.frame_count,
                _fmt(q.mean_ber),
                _fmt(q.stability_violation_rate),
                _fmt(q.mean_spectral_efficiency),
                _fmt(q.mean_psnr_db),
                _fmt(q.mean_L),
                q.max_L,
                _fmt(q.infeasible_rate),
                h,
            ]
        )
    return out.getvalue()


def load_artifacts(cfg: ExperimentConfig, base: Path | None = None):
    mpath = resolve(cfg.codec.model_path, base)
    bpath = resolve(cfg.bermap.path, base)
    for p, what in ((mpath, "codec model"), (bpath, "BER map")):
        if not p.is_file():
            raise MissingArtifact(f"{what} not found: {p}")
    return cd.load_model(mpath), bm.BerMap.load(bpath)


def build_context(cfg, model, bermap, data: SampleSet) -> SweepContext:
    if model.profile.n_source != data.n_source:
        raise ValueError(f"model expects N = {model.profile.n_source}, dataset has {data.n_source}")
    sources = test_vectors(cfg, data)
    return SweepContext(cfg, model, bermap, sources, cd.encode(model, sources))


def cmd_simulate(cfg: ExperimentConfig, out, threads: int = 1, base: Path | None = None) -> list[PointResult]:
    model, bermap = load_artifacts(cfg, base)
    ctx = build_context(cfg, model, bermap, load_dataset(cfg, base))
    results = run_sweep(ctx, threads)
    out = Path(out)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(results_csv(cfg, results))
    return results
