"""Wideband spectrum sensing for cognitive radio on multi-coset samples.

The band [0, f_max] is split into L = f_max/B channels; a multi-coset front
end at compression p/L feeds the blind-recovery chain (filter, correlate,
order-select, localize), and the complement of the occupied channel set is
reported as free for secondary use.  Monte-Carlo sweeps estimate detection
probability against SNR and compression ratio.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from . import blind
from .patterns import anchor_support, condition_number, draw_anchors, sfs_pattern_search
from .sampling import (
    SamplingPattern,
    SpectralIndexSet,
    build_measurement_matrix,
    coset_decompose,
    reduce_matrix,
)
from .signals import TimeSeries

__all__ = [
    "SensingConfig",
    "SensingPlan",
    "SensingReport",
    "PdPoint",
    "PdResult",
    "plan_sensing",
    "sense",
    "pd_sweep",
]

_ORDER_METHODS = ("aic", "mdl", "eft")
_LOCALIZE_METHODS = ("music", "nlls")


@dataclass(frozen=True)
class SensingConfig:
    """Sensing-run parameters.

    f_max/B must be an integer channel count.  omega is the worst-case
    occupancy used for planning.  p defaults to round(L*omega)+1 and may be
    pinned explicitly; pattern "auto" draws a pattern with the greedy search
    against randomly anchored candidate cells (seeded).  SNR is defined as
    in-band signal power over total noise power in [0, f_max].
    """

    f_max: float
    B: float
    omega: float
    order_method: str = "mdl"
    localize_method: str = "music"
    pattern: SamplingPattern | str = "auto"
    p: int | None = None
    seed: int = 0
    n_taps: int | None = None
    select: str = "threshold"  # music cell selection: "threshold" or "top"
    music_threshold_factor: float = 10.0
    nlls_epsilon_rel: float = 0.01

    def __post_init__(self):
        if self.f_max <= 0 or self.B <= 0:
            raise ValueError("f_max and B must be positive")
        ratio = self.f_max / self.B
        if abs(ratio - round(ratio)) > 1e-9 * ratio or round(ratio) < 1:
            raise ValueError(f"B={self.B} must divide f_max={self.f_max}")
        if not 0 < self.omega < 1:
            raise ValueError("omega must lie strictly between 0 and 1")
        if self.order_method not in _ORDER_METHODS:
            raise ValueError(f"order_method must be one of {_ORDER_METHODS}")
        if self.localize_method not in _LOCALIZE_METHODS:
            raise ValueError(f"localize_method must be one of {_LOCALIZE_METHODS}")
        if self.select not in ("threshold", "top"):
            raise ValueError("select must be 'threshold' or 'top'")

    @property
    def L(self) -> int:
        return int(round(self.f_max / self.B))


@dataclass(frozen=True)
class SensingPlan:
    L: int
    p: int
    q_hat_estimate: int
    pattern: SamplingPattern
    q_bounds: tuple[int, int]
    sample_rate: float
    compression: float


@dataclass(frozen=True)
class SensingReport:
    occupied: SpectralIndexSet
    free_channels: tuple[tuple[float, float], ...]
    q_hat: int
    diagnostics: dict


@dataclass(frozen=True)
class PdPoint:
    snr_db: float
    cr: float
    trials: int
    detections: int
    pd: float
    ci95: float


@dataclass(frozen=True)
class PdResult:
    rows: tuple[PdPoint, ...]


def _auto_pattern(L: int, p: int, f_max: float, seed: int) -> SamplingPattern:
    """Greedy pattern against p-1 randomly anchored single-cell candidates."""
    rng = np.random.default_rng([seed, L, p])
    n_anchor = max(p - 1, 1)
    anchors = draw_anchors(n_anchor, 0, L, rng)
    k_design = anchor_support(anchors, 0, L)
    res = sfs_pattern_search(L, p, k_design, T=1.0 / f_max)
    return res.pattern


def plan_sensing(cfg: SensingConfig) -> SensingPlan:
    """Resolve channel count, coset count, and the sampling pattern.

    The expected number of simultaneously active channels is L*omega, so one
    spare row (p = round(L*omega) + 1, capped at L) makes the reduced system
    solvable; an explicit cfg.p or a supplied pattern overrides it.  The
    worst case is twice the expectation, reported in q_bounds.
    """
    L = cfg.L
    if L * cfg.omega < 1.0:
        raise ValueError(
            f"resolution too coarse: L*omega = {L * cfg.omega:.3g} < 1 "
            "(no channel expected active)"
        )
    q_est = int(round(L * cfg.omega))
    if isinstance(cfg.pattern, SamplingPattern):
        pattern = cfg.pattern
        if pattern.L != L:
            raise ValueError("supplied pattern has mismatched L")
        p = pattern.p
    else:
        p = cfg.p if cfg.p is not None else min(q_est + 1, L)
        pattern = _auto_pattern(L, p, cfg.f_max, cfg.seed)
    q_lo = int(math.floor(L * cfg.omega))
    q_hi = min(int(math.ceil(2 * L * cfg.omega)), L)
    return SensingPlan(
        L=L,
        p=p,
        q_hat_estimate=q_est,
        pattern=pattern,
        q_bounds=(q_lo, q_hi),
        sample_rate=p / L * cfg.f_max,
        compression=p / L,
    )


def _detect(cfg: SensingConfig, pattern: SamplingPattern, x: TimeSeries) -> blind.BlindReport:
    streams = coset_decompose(x, pattern)
    return blind.estimate_support(
        streams,
        order_method=cfg.order_method,
        localize_method=cfg.localize_method,
        n_taps=cfg.n_taps,
        select=cfg.select,
        threshold_factor=cfg.music_threshold_factor,
        epsilon_rel=cfg.nlls_epsilon_rel,
    )


def sense(cfg: SensingConfig, x: TimeSeries) -> SensingReport:
    """Blind occupancy detection: occupied channels and the free complement.

    The input must be sampled at the base rate 1/f_max.  Free channels are
    reported as intervals [i*B, (i+1)*B) for every index i outside the
    occupied set.  Diagnostics carry the eigenvalues, the conditioning of the
    reduced system on the detected cells, and degradation flags.
    """
    if abs(x.T - 1.0 / cfg.f_max) > 1e-9 * x.T:
        raise ValueError(f"series period {x.T} is not 1/f_max = {1.0 / cfg.f_max}")
    plan = plan_sensing(cfg)
    report = _detect(cfg, plan.pattern, x)
    k_hat, q_hat = report.k_hat, report.q_hat
    A = build_measurement_matrix(plan.pattern)
    cond = condition_number(reduce_matrix(A, k_hat)) if k_hat.q else 1.0
    free_idx = k_hat.complement().k
    free = tuple((i * cfg.B, (i + 1) * cfg.B) for i in free_idx)
    diagnostics = {
        "cond": cond,
        "eigenvalues": report.eigs.values.tolist(),
        "pattern": plan.pattern.to_dict(),
        "snapshots": report.snapshots,
        "order_method": cfg.order_method,
        "localize_method": cfg.localize_method,
        "snr_definition": "in-band signal power over total noise power in [0, f_max]",
        "degraded_confidence": bool(not math.isfinite(cond) or cond > 1e6),
        "under_provisioned": bool(q_hat >= plan.p - 1),
    }
    return SensingReport(
        occupied=k_hat, free_channels=free, q_hat=q_hat, diagnostics=diagnostics
    )


def _pd_trial(
    cfg: SensingConfig,
    pattern: SamplingPattern,
    n_samples: int,
    snr_db: float,
    seed_key: list[int],
    metric: str,
) -> bool:
    rng = np.random.default_rng(seed_key)
    L = pattern.L
    m = int(rng.integers(L))
    amp = math.sqrt(10.0 ** (snr_db / 10.0))  # unit total noise power
    phase = rng.uniform(0.0, 2.0 * np.pi)
    n = np.arange(n_samples)
    tone = amp * np.exp(1j * (2.0 * np.pi * (m + 0.5) / L * n + phase))
    noise = (rng.standard_normal(n_samples) + 1j * rng.standard_normal(n_samples)) / math.sqrt(2.0)
    x = TimeSeries(tone + noise, pattern.T)
    report = _detect(cfg, pattern, x)
    if metric == "contains":
        return m in report.k_hat.k and report.k_hat.q <= max(report.q_hat, 1)
    return report.k_hat.k == (m,)


def pd_sweep(
    cfg_template: SensingConfig,
    snr_db_list,
    cr_list,
    trials: int,
    seed: int,
    n_blocks: int = 100,
    metric: str = "exact",
    select: str = "top",
) -> PdResult:
    """Detection probability of a single tone in a random channel.

    For every (SNR, compression ratio) pair, runs `trials` independent
    experiments with fresh noise, a fresh random channel, and a fresh phase;
    a detection requires the occupied set to equal the true channel exactly
    (metric="exact") or to contain it within the estimated order
    (metric="contains").  Each compression ratio must give an integer coset
    count p = cr*L >= 2.  Cell selection defaults to the top-q form, which
    remains meaningful at p = 2 where threshold selection cannot isolate a
    single wide peak.  Per-trial RNG streams derive from (seed, point,
    trial), so results do not depend on scheduling; SUBNYQ_THREADS>1 runs
    trials in a thread pool.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if metric not in ("exact", "contains"):
        raise ValueError("metric must be 'exact' or 'contains'")
    L = cfg_template.L
    patterns: list[tuple[float, SamplingPattern]] = []
    for cr in cr_list:
        p_exact = cr * L
        p = int(round(p_exact))
        if abs(p_exact - p) > 1e-9 or p < 2:
            raise ValueError(f"CR={cr} must give an integer p = CR*L >= 2 (got {p_exact})")
        pat = _auto_pattern(L, p, cfg_template.f_max, cfg_template.seed + p)
        patterns.append((float(cr), pat))
    n_samples = n_blocks * L
    cfg = replace(cfg_template, select=select)
    workers = max(int(os.environ.get("SUBNYQ_THREADS", "1")), 1)
    rows: list[PdPoint] = []
    for i_cr, (cr, pat) in enumerate(patterns):
        for i_snr, snr_db in enumerate(snr_db_list):
            keys = [[seed, i_cr, i_snr, t] for t in range(trials)]
            if workers > 1:
                with ThreadPoolExecutor(max_workers=workers) as pool:
                    hits = list(
                        pool.map(
                            lambda key: _pd_trial(cfg, pat, n_samples, snr_db, key, metric),
                            keys,
                        )
                    )
            else:
                hits = [
                    _pd_trial(cfg, pat, n_samples, snr_db, key, metric) for key in keys
                ]
            det = int(sum(hits))
            pd = det / trials
            ci95 = 1.96 * math.sqrt(max(pd * (1.0 - pd), 1e-12) / trials)
            rows.append(
                PdPoint(
                    snr_db=float(snr_db),
                    cr=float(cr),
                    trials=trials,
                    detections=det,
                    pd=pd,
                    ci95=ci95,
                )
            )
    return PdResult(tuple(rows))
