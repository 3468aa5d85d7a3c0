"""Seeded synthetic data: MEM process paths and tick-level price paths.

Every draw comes from a named counter-based generator (PCG64) through an
explicit sub-stream map, so output is bit-reproducible for a given
config and independent across instruments:

    substream(seed, 0, k)   MEM innovations for series k
    substream(seed, 1, k)   tick path for instrument k
    substream(seed, 2, i)   optimizer start perturbation i

MEM innovations for one series are drawn as three blocks in fixed
order: T uniforms for the zero indicator, T standard normals for the
log-normal component, T uniforms for the negative-return flags.
Tick draws per instrument: n normals for diffusion, n uniforms for jump
arrival, n normals for jump sizes, n uniforms for trade arrival, then
one log-normal size per traded second.
"""
from __future__ import annotations

import math
import os
from dataclasses import dataclass

import numpy as np
from scipy.signal import lfilter

from . import ingest
from .errors import DataError
from .mem import ParamSet
from .prep import SLOT_SECONDS, IntervalSeries, zone_of
from .rng import STREAM_MEM, STREAM_TICKS, substream
from .vmem import INTERACT_ZONES, VParamSet

SECONDS_PER_DAY = 86_400


@dataclass(frozen=True)
class SimConfig:
    """Simulation settings; the seed fully determines the output.

    ``T`` counts five-minute intervals for MEM simulation and seconds
    for tick simulation. ``jump_intensity`` is the expected number of
    jumps per day; ``arrival_prob`` is the chance any given second
    trades.
    """

    seed: int = 0
    T: int = 10_000
    params: object = None
    instrument: str = "SIM"
    start_time: int = 0
    annual_vol: float = 0.70
    jump_intensity: float = 0.0
    jump_size: float = 0.0
    arrival_prob: float = 1.0
    init_price: float = 30_000.0
    trade_size: float = 1.0
    vol_rho: float = 0.0
    vol_of_vol: float = 0.0

    def __post_init__(self):
        if self.T <= 0:
            raise DataError(f"T must be positive, got {self.T}")
        if self.jump_intensity < 0.0:
            raise DataError("jump_intensity must be non-negative")
        if not (0.0 < self.arrival_prob <= 1.0):
            raise DataError("arrival_prob must lie in (0, 1]")
        if self.annual_vol < 0.0:
            raise DataError("annual_vol must be non-negative")
        if self.init_price <= 0.0 or self.trade_size <= 0.0:
            raise DataError("init_price and trade_size must be positive")
        if not (0.0 <= self.vol_rho < 1.0) or self.vol_of_vol < 0.0:
            raise DataError("need 0 <= vol_rho < 1 and vol_of_vol >= 0")
        if self.start_time % SLOT_SECONDS:
            raise DataError(f"start_time must align to the {SLOT_SECONDS}s grid")


def _mem_draws(seed: int, k: int, T: int, p_plus: float, s: float):
    rng = substream(seed, STREAM_MEM, k)
    u_zero = rng.random(T)
    z = rng.standard_normal(T)
    u_neg = rng.random(T)
    zero = u_zero >= p_plus
    m = -0.5 * s * s - math.log(p_plus)
    eps = np.exp(m + s * z)
    neg = u_neg < 0.5
    return zero, eps, neg


def _simulate_uni(cfg: SimConfig, params: ParamSet) -> IntervalSeries:
    T = cfg.T
    p, q = len(params.alpha), len(params.beta)
    burn = max(p, q)
    zero, eps, neg = _mem_draws(cfg.seed, 0, T, params.p_plus, params.s)

    x = np.zeros(T)
    logx = np.zeros(T)
    logmu = np.zeros(T)
    alpha = params.alpha
    alpha0 = params.alpha0 if params.alpha0 else (0.0,) * p
    beta = params.beta
    for t in range(T):
        if t >= burn:
            lm = params.omega
            for j in range(1, p + 1):
                if x[t - j] > 0.0:
                    lm += alpha[j - 1] * logx[t - j]
                else:
                    lm += alpha0[j - 1]
            if neg[t - 1] and x[t - 1] > 0.0:
                lm += params.gamma * logx[t - 1]
            for j in range(1, q + 1):
                lm += beta[j - 1] * logmu[t - j]
            logmu[t] = lm
        if not zero[t]:
            x[t] = math.exp(logmu[t]) * eps[t]
            logx[t] = logmu[t] + math.log(eps[t])
    times = cfg.start_time + SLOT_SECONDS * np.arange(T, dtype=np.int64)
    return IntervalSeries(
        instrument=cfg.instrument,
        times=times,
        values=x,
        zeroed=zero.copy(),
        neg_return=neg.copy(),
    )


def _simulate_multi(cfg: SimConfig, params: VParamSet) -> list:
    T = cfg.T
    K = len(params.instruments)
    p = len(params.A_lags)
    A0 = params.A0_lags
    gam = np.diag(params.Gamma)
    bet = np.diag(params.B)
    w = params.w
    times = cfg.start_time + SLOT_SECONDS * np.arange(T, dtype=np.int64)
    zone_extra = None
    if params.zone_matrices is not None and any(
        np.any(params.zone_matrices[z]) for z in params.zone_matrices
    ):
        labels = zone_of(times)
        zone_extra = [
            params.zone_matrices.get(z, None) if z in INTERACT_ZONES else None
            for z in labels
        ]

    zero = np.zeros((T, K), dtype=bool)
    eps = np.zeros((T, K))
    neg = np.zeros((T, K), dtype=bool)
    for k in range(K):
        zero[:, k], eps[:, k], neg[:, k] = _mem_draws(
            cfg.seed, k, T, float(params.p_plus[k]), float(params.s[k])
        )

    x = np.zeros((T, K))
    logx = np.zeros((T, K))
    logmu = np.zeros((T, K))
    for t in range(T):
        if t >= p:
            lm = w.astype(np.float64).copy()
            for j in range(1, p + 1):
                pos = x[t - j] > 0.0
                lm += params.A_lags[j - 1] @ np.where(pos, logx[t - j], 0.0)
                lm += A0[j - 1] @ (~pos).astype(np.float64)
            if zone_extra is not None and zone_extra[t - 1] is not None:
                pos1 = x[t - 1] > 0.0
                lm += zone_extra[t - 1] @ np.where(pos1, logx[t - 1], 0.0)
            own_neg = neg[t - 1] & (x[t - 1] > 0.0)
            lm += gam * np.where(own_neg, logx[t - 1], 0.0)
            lm += bet * logmu[t - 1]
            logmu[t] = lm
        # the first p rows draw from the initial log mean of 0, matching
        # the univariate path, so zeroed stays the only source of zeros
        live = ~zero[t]
        x[t, live] = np.exp(logmu[t, live]) * eps[t, live]
        logx[t, live] = logmu[t, live] + np.log(eps[t, live])
    out = []
    for k, name in enumerate(params.instruments):
        out.append(
            IntervalSeries(
                instrument=name,
                times=times.copy(),
                values=x[:, k].copy(),
                zeroed=zero[:, k].copy(),
                neg_return=neg[:, k].copy(),
            )
        )
    return out


def simulate_logmem(cfg: SimConfig):
    """Run the conditional-mean recursion forward with zero-augmented
    log-normal innovations.

    Returns an interval series for univariate parameters, a list of K
    series (shared time grid) for system parameters. Negative-return
    flags are i.i.d. fair coins; the log mean starts at 0.
    """
    if isinstance(cfg.params, ParamSet):
        return _simulate_uni(cfg, cfg.params)
    if isinstance(cfg.params, VParamSet):
        return _simulate_multi(cfg, cfg.params)
    raise DataError("cfg.params must be a ParamSet or VParamSet")


def simulate_ticks(cfg: SimConfig, stream: int = 0) -> ingest.TickSeries:
    """Tick tape from a one-second geometric diffusion.

    Per-second log-return sd is annual_vol / sqrt(31,536,000); jumps are
    compound Poisson (per-second probability jump_intensity / 86,400,
    normal sizes); each second independently trades with probability
    arrival_prob, producing one tick at that second with a log-normal
    size. With vol_rho > 0 the sd is modulated per five-minute block by
    a log-AR(1) factor (those normals are drawn first). ``stream``
    separates instruments drawn from one seed.
    """
    n = cfg.T
    rng = substream(cfg.seed, STREAM_TICKS, stream)
    n_blocks = (n + SLOT_SECONDS - 1) // SLOT_SECONDS
    z_vol = rng.standard_normal(n_blocks) if cfg.vol_rho > 0.0 else None
    z = rng.standard_normal(n)
    u_jump = rng.random(n)
    z_jump = rng.standard_normal(n)
    u_trade = rng.random(n)

    sec_sd = cfg.annual_vol / math.sqrt(31_536_000.0)
    if z_vol is not None:
        logv = lfilter([1.0], [1.0, -cfg.vol_rho], cfg.vol_of_vol * z_vol)
        ret = sec_sd * np.exp(np.repeat(logv, SLOT_SECONDS)[:n]) * z
    else:
        ret = sec_sd * z
    p_jump = min(1.0, cfg.jump_intensity / SECONDS_PER_DAY)
    if p_jump > 0.0 and cfg.jump_size > 0.0:
        ret = ret + (u_jump < p_jump) * cfg.jump_size * z_jump
    logp = math.log(cfg.init_price) + np.cumsum(ret)

    traded = u_trade < cfg.arrival_prob
    idx = np.flatnonzero(traded)
    sizes = rng.lognormal(mean=math.log(cfg.trade_size), sigma=1.0, size=idx.size)
    ts_ns = (np.int64(cfg.start_time) + idx.astype(np.int64)) * ingest.NS_PER_S
    return ingest.TickSeries(
        instrument=cfg.instrument,
        ts_ns=ts_ns,
        price=np.exp(logp[idx]),
        size=sizes,
        rejected_rows=0,
        rejected_lines=(),
    )


def demo_dataset(out_dir, seed: int = 0, days: float = 3.0, instruments=("ALPHA", "BETA")) -> list:
    """Write a small multi-venue tick dataset for end-to-end runs.

    Each instrument gets its own tick CSV (independent sub-streams,
    different arrival intensities) under ``out_dir``; returns the paths.
    """
    n_seconds = int(days * SECONDS_PER_DAY)
    paths = []
    for k, name in enumerate(instruments):
        cfg = SimConfig(
            seed=seed,
            T=n_seconds,
            instrument=name,
            start_time=0,
            annual_vol=0.55 + 0.15 * k,
            jump_intensity=2.0,
            jump_size=0.001,
            arrival_prob=0.65 - 0.2 * k,
            init_price=30_000.0 / (1.0 + k),
            vol_rho=0.97,
            vol_of_vol=0.12,
        )
        ticks = simulate_ticks(cfg, stream=k)
        path = os.path.join(out_dir, f"{name.lower()}_ticks.csv")
        ingest.write_ticks_csv(path, ticks)
        paths.append(path)
    return paths
