"""Five-minute realised-volatility estimators.

All estimators turn a 300-second return window into an annualised
volatility. Pre-averaging is the default:

    rbar_t = sum_{j=1}^{k_n} g(j/k_n) r_{t+j},   g(x) = min(x, 1-x),
    k_n = ceil(theta * sqrt(n)),  t = 0 .. n-k_n

with realised variance the plain sum of squared pre-averaged returns.
Jump-robust alternatives:

    BPV   = (pi/2) * sum_{j=2}^{n} |r_{j-1}| |r_j|
    MedRV = pi/(6 - 4*sqrt(3) + pi) * sum_{j=2}^{n-1} med(|r_{j-1}|,|r_j|,|r_{j+1}|)^2

plus the plain squared-return estimator. Volatility is sqrt(variance)
scaled by the square root of the number of intervals per year, and an
activity threshold zeroes intervals with trades in less than 20% of their
seconds (strict less-than).
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import DataError
from .ingest import ReturnWindow

SECONDS_PER_YEAR = 31_536_000

#: Squared annualisation factor for 300-second intervals; exactly the
#: number of five-minute intervals per year (12 * 24 * 365).
ANNUALISATION_SQ = 105_120.0

#: MedRV scaling constant pi / (6 - 4*sqrt(3) + pi).
MEDRV_CONST = math.pi / (6.0 - 4.0 * math.sqrt(3.0) + math.pi)

ESTIMATORS = ("preavg", "bpv", "medrv", "squared")


@dataclass(frozen=True)
class RvConfig:
    """Estimator selection and tuning.

    ``annualisation_sq`` defaults to seconds-per-year / window_seconds,
    i.e. 105120 for five-minute windows; the volatility scale factor is
    its square root.
    """

    estimator: str = "preavg"
    theta: float = 0.4
    activity_threshold: float = 0.20
    window_seconds: int = 300
    annualisation_sq: float | None = None
    debias: bool = False

    def __post_init__(self):
        if self.estimator not in ESTIMATORS:
            raise DataError(f"unknown estimator {self.estimator!r}; choose from {ESTIMATORS}")
        if not (0.0 <= self.activity_threshold <= 1.0):
            raise DataError("activity_threshold must lie in [0, 1]")
        if not (0.3 <= self.theta <= 0.6):
            warnings.warn(
                f"theta={self.theta} lies outside the recommended band [0.3, 0.6]",
                stacklevel=2,
            )

    @property
    def factor_sq(self) -> float:
        if self.annualisation_sq is not None:
            return float(self.annualisation_sq)
        return SECONDS_PER_YEAR / self.window_seconds

    def bandwidth(self) -> int:
        """Pre-averaging window length k_n = ceil(theta * sqrt(n))."""
        return math.ceil(self.theta * math.sqrt(self.window_seconds))


@dataclass
class RvObservation:
    """One annualised volatility observation."""

    interval_start: int
    value: float
    is_zeroed: bool
    interval_return_negative: bool
    active_seconds: int
    estimator: str


def preavg_weights(k_n: int) -> np.ndarray:
    """Weights g(j/k_n) for j = 1..k_n with g(x) = min(x, 1-x)."""
    j = np.arange(1, k_n + 1) / k_n
    return np.minimum(j, 1.0 - j)


def _check(window: ReturnWindow, cfg: RvConfig):
    if not window.valid:
        return False
    if window.n != cfg.window_seconds:
        raise DataError(
            f"window has n={window.n} but config expects {cfg.window_seconds}; "
            "set window_seconds explicitly for non-default intervals"
        )
    return True


def apply_activity_threshold(window: ReturnWindow, cfg: RvConfig, raw: float) -> RvObservation:
    """Zero the estimate when the active fraction is strictly below the
    threshold; otherwise keep ``raw``."""
    neg = window.interval_return < 0.0
    if window.active_seconds / window.n < cfg.activity_threshold:
        return RvObservation(window.interval_start, 0.0, True, bool(neg),
                             window.active_seconds, cfg.estimator)
    return RvObservation(window.interval_start, float(raw), False, bool(neg),
                         window.active_seconds, cfg.estimator)


def preaveraged_rv(window: ReturnWindow, cfg: RvConfig | None = None) -> RvObservation | None:
    """Pre-averaged realised volatility (the default estimator).

    Uses the verbatim plain sum of squared pre-averaged returns. With
    ``cfg.debias`` the variance is rescaled by n / ((n-k_n+1) * sum g^2),
    which makes the estimator unbiased for the integrated variance of a
    pure diffusion sampled without noise.
    """
    cfg = cfg or RvConfig()
    if not _check(window, cfg):
        return None
    n = window.n
    k_n = cfg.bandwidth()
    w = preavg_weights(k_n)
    rbar = np.correlate(window.returns, w, mode="valid")  # n - k_n + 1 values
    var = float(np.dot(rbar, rbar))
    if cfg.debias:
        var *= n / ((n - k_n + 1) * float(np.dot(w, w)))
    vol = math.sqrt(var * cfg.factor_sq)
    return apply_activity_threshold(window, cfg, vol)


def bipower_variation(window: ReturnWindow, cfg: RvConfig | None = None) -> RvObservation | None:
    """Bipower variation: products of adjacent absolute returns, so an
    isolated jump is damped by its (small) neighbours."""
    cfg = cfg or RvConfig()
    if not _check(window, cfg):
        return None
    a = np.abs(window.returns)
    var = (math.pi / 2.0) * float(np.dot(a[:-1], a[1:]))
    vol = math.sqrt(var * cfg.factor_sq)
    return apply_activity_threshold(window, cfg, vol)


def med_rv(window: ReturnWindow, cfg: RvConfig | None = None) -> RvObservation | None:
    """Median realised volatility: an isolated large return never survives
    the three-term median, so its contribution drops to zero."""
    cfg = cfg or RvConfig()
    if not _check(window, cfg):
        return None
    a = np.abs(window.returns)
    med = np.median(np.stack([a[:-2], a[1:-1], a[2:]]), axis=0)
    var = MEDRV_CONST * float(np.dot(med, med))
    vol = math.sqrt(var * cfg.factor_sq)
    return apply_activity_threshold(window, cfg, vol)


def squared_rv(window: ReturnWindow, cfg: RvConfig | None = None) -> RvObservation | None:
    """Plain realised volatility from summed squared returns."""
    cfg = cfg or RvConfig()
    if not _check(window, cfg):
        return None
    r = window.returns
    var = float(np.dot(r, r))
    vol = math.sqrt(var * cfg.factor_sq)
    return apply_activity_threshold(window, cfg, vol)


_DISPATCH = {
    "preavg": preaveraged_rv,
    "bpv": bipower_variation,
    "medrv": med_rv,
    "squared": squared_rv,
}


def estimate(window: ReturnWindow, cfg: RvConfig) -> RvObservation | None:
    """Run the configured estimator on one window."""
    return _DISPATCH[cfg.estimator](window, cfg)
