"""Multivariate logarithmic MEM: cross-instrument transmission.

A K-dimensional system where each instrument's conditional mean loads on
its own lags and on the lagged log-values (and zero dummies) of the other
K - 1 instruments. B is diagonal and only lagged interdependence enters,
so the system splits into K univariate equations that are fit
independently by QML and reassembled into coefficient matrices. Matrix
convention: rows receive, columns send; A[i, k] is the response of
instrument i to instrument k's lagged value.

Trading-zone interactions multiply every lag-1 log-value with indicators
for Asian [00, 08) and US [16, 24) UTC hours, evaluated at the lagged
interval's start time; European hours are the reference, so A_EU is
identically zero and the effective lag-1 matrix in zone z is A + A_z.
"""
from __future__ import annotations

import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import mem
from .errors import DataError, SchemaError
from .prep import Panel, ZONES

INTERACT_ZONES = ("AS", "US")  # EU is the reference zone


def _n_workers(n_jobs) -> int:
    if n_jobs is None:
        try:
            n_jobs = int(os.environ.get("VOLMEM_THREADS", "1"))
        except ValueError:
            n_jobs = 1
    return max(1, int(n_jobs))


@dataclass
class VParamSet:
    """System coefficient matrices; rows receive, columns send."""

    instruments: tuple
    w: np.ndarray                # (K,)
    A_lags: tuple                # p matrices (K, K)
    A0_lags: tuple               # p matrices (K, K)
    Gamma: np.ndarray            # (K, K), diagonal
    B: np.ndarray                # (K, K), strictly diagonal
    s: np.ndarray                # (K,)
    p_plus: np.ndarray           # (K,)
    zone_matrices: dict | None = None   # {"AS": (K,K), "EU": zeros, "US": (K,K)}

    def __post_init__(self):
        K = len(self.instruments)
        off = ~np.eye(K, dtype=bool)
        if np.any(self.B[off] != 0.0):
            raise DataError("B must be strictly diagonal")
        if np.any(self.Gamma[off] != 0.0):
            raise DataError("Gamma off-diagonals must be zero")
        for mats in (self.A_lags, self.A0_lags):
            for a in mats:
                if a.shape != (K, K):
                    raise DataError("coefficient matrices must be K x K")


@dataclass
class VFitResult:
    """Equation-by-equation system fit."""

    instruments: tuple
    spec: mem.MemSpec
    params: VParamSet
    pv_A_lags: tuple             # p-value matrices matching A_lags
    se_A_lags: tuple
    pv_zone: dict | None
    se_zone: dict | None
    loglik: np.ndarray           # (K,)
    bic: np.ndarray
    half_life_minutes: np.ndarray
    converged: np.ndarray        # (K,) bool
    n_obs: np.ndarray
    equations: tuple             # per-equation dicts: name -> {estimate, se, pvalue}, plus meta
    significance_level: float = 0.01
    diagnostics: tuple = ()

    @property
    def K(self) -> int:
        return len(self.instruments)

    def significant(self, matrix: np.ndarray, pvalues: np.ndarray, level: float | None = None) -> np.ndarray:
        """Copy of ``matrix`` with entries whose p-value is not below the
        level replaced by zero (missing p-values count as insignificant)."""
        level = self.significance_level if level is None else level
        return np.where(pvalues < level, matrix, 0.0)

    def to_dict(self) -> dict:
        def stars(p):
            if not math.isfinite(p):
                return ""
            return "***" if p < 0.01 else "**" if p < 0.05 else "*" if p < 0.1 else ""

        spill = spillover_summary(self, level=self.significance_level)
        out = {
            "instruments": list(self.instruments),
            "model": {
                "p": self.spec.p,
                "q": self.spec.q,
                "asymmetry": self.spec.asymmetry,
                "zero_augmented": self.spec.zero_augmented,
                "zones": self.pv_zone is not None,
            },
            "w": self.params.w.tolist(),
            "A_lags": [a.tolist() for a in self.params.A_lags],
            "A0_lags": [a.tolist() for a in self.params.A0_lags],
            "Gamma": self.params.Gamma.tolist(),
            "B": self.params.B.tolist(),
            "s": self.params.s.tolist(),
            "p_plus": self.params.p_plus.tolist(),
            "se_A_lags": [a.tolist() for a in self.se_A_lags],
            "pvalues_A_lags": [a.tolist() for a in self.pv_A_lags],
            "stars_A1": [[stars(p) for p in row] for row in self.pv_A_lags[0]],
            "loglik": self.loglik.tolist(),
            "bic": self.bic.tolist(),
            "half_life_minutes": self.half_life_minutes.tolist(),
            "converged": [bool(c) for c in self.converged],
            "n_obs": self.n_obs.tolist(),
            "equations": list(self.equations),
            "significance_level": self.significance_level,
            "spillover": {
                "to_sums": spill.to_sums,
                "from_sums": spill.from_sums,
                "total_offdiag_abs": spill.total_offdiag_abs,
            },
            "diagnostics": list(self.diagnostics),
        }
        if self.params.zone_matrices is not None:
            out["zone_matrices"] = {z: a.tolist() for z, a in self.params.zone_matrices.items()}
            out["pvalues_zone"] = {z: a.tolist() for z, a in self.pv_zone.items()}
        return out

    def to_json(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh, sort_keys=True, indent=2, allow_nan=True)
            fh.write("\n")


def vfit_from_dict(d: dict) -> VFitResult:
    """Rebuild a system fit from its serialized form."""
    try:
        instruments = tuple(d["instruments"])
        model = d["model"]
        spec = mem.MemSpec(
            p=int(model["p"]),
            q=int(model["q"]),
            asymmetry=bool(model["asymmetry"]),
            zero_augmented=bool(model["zero_augmented"]),
        )
        zones = bool(model.get("zones", False))
        zoneM = None
        zonePV = None
        zoneSE = None
        if zones:
            zoneM = {z: np.asarray(a, dtype=np.float64) for z, a in d["zone_matrices"].items()}
            zonePV = {z: np.asarray(a, dtype=np.float64) for z, a in d["pvalues_zone"].items()}
            zoneSE = {z: np.full_like(zonePV[z], np.nan) for z in zonePV}
        params = VParamSet(
            instruments=instruments,
            w=np.asarray(d["w"], dtype=np.float64),
            A_lags=tuple(np.asarray(a, dtype=np.float64) for a in d["A_lags"]),
            A0_lags=tuple(np.asarray(a, dtype=np.float64) for a in d["A0_lags"]),
            Gamma=np.asarray(d["Gamma"], dtype=np.float64),
            B=np.asarray(d["B"], dtype=np.float64),
            s=np.asarray(d["s"], dtype=np.float64),
            p_plus=np.asarray(d["p_plus"], dtype=np.float64),
            zone_matrices=zoneM,
        )
        return VFitResult(
            instruments=instruments,
            spec=spec,
            params=params,
            pv_A_lags=tuple(np.asarray(a, dtype=np.float64) for a in d["pvalues_A_lags"]),
            se_A_lags=tuple(np.asarray(a, dtype=np.float64) for a in d["se_A_lags"]),
            pv_zone=zonePV,
            se_zone=zoneSE,
            loglik=np.asarray(d["loglik"], dtype=np.float64),
            bic=np.asarray(d["bic"], dtype=np.float64),
            half_life_minutes=np.asarray(d["half_life_minutes"], dtype=np.float64),
            converged=np.asarray(d["converged"], dtype=bool),
            n_obs=np.asarray(d["n_obs"], dtype=np.int64),
            equations=tuple(d.get("equations", ())),
            significance_level=float(d["significance_level"]),
            diagnostics=tuple(d.get("diagnostics", ())),
        )
    except (KeyError, TypeError, ValueError) as e:
        raise SchemaError(f"malformed system-fit document: {e!r}") from None


@dataclass(frozen=True)
class SpilloverSummary:
    """Row/column sums of the significant lag-1 transmission matrix.

    ``to_sums[i]`` sums row i (everything instrument i receives,
    own-persistence diagonal included); ``from_sums[k]`` sums column k
    (everything instrument k sends). Both sum the same significant-entry
    set, so their totals agree exactly.
    """

    to_sums: dict
    from_sums: dict
    total_offdiag_abs: float
    significance_level: float


def _zone_indicator_pairs(panel: Panel):
    labels = panel.zone_labels()
    return [(z, (labels == z).astype(np.float64)) for z in INTERACT_ZONES]


def _equation_problem(panel: Panel, i: int, spec: mem.MemSpec, cross: bool, zones: bool):
    x = panel.values[:, i]
    neg = panel.neg_mask[:, i]
    others = [k for k in range(panel.K) if k != i]
    if cross and panel.K > 1:
        exog = panel.values[:, others]
        reg_names = ("",) + tuple(panel.instruments[k] for k in others)
    else:
        exog = None
        reg_names = ("",)
    zone_pairs = _zone_indicator_pairs(panel) if zones else None
    return mem._build_problem(
        x, neg, spec, exog_values=exog, reg_names=reg_names, zones=zone_pairs
    )


def _collect(panel: Panel, i: int, spec: mem.MemSpec, problem, core) -> dict:
    """Map one equation's named coefficients back to matrix slots."""
    others = [k for k in range(panel.K) if k != i]
    col_of = {0: i}
    for e, k in enumerate(others, start=1):
        col_of[e] = k
    M = problem.F.shape[1]
    eq = {
        "instrument": panel.instruments[i],
        "estimates": {n: float(v) for n, v in zip(problem.names, core.theta)},
        "se": {n: float(v) for n, v in zip(problem.names, core.se)},
        "pvalues": {n: float(v) for n, v in zip(problem.names, core.pvalues)},
        "loglik": core.loglik,
        "bic": mem.bic(core.loglik, core.k_free, core.n_obs) if math.isfinite(core.loglik) else math.nan,
        "k_free": core.k_free,
        "n_obs": core.n_obs,
        "converged": bool(core.converged),
        "iterations": core.iterations,
        "n_evals": core.n_evals,
        "unidentified": core.unidentified,
        "messages": list(core.messages),
        "frozen": list(problem.frozen_names),
    }
    slots = {"col_of": col_of, "meta": problem.lin_meta, "M": M}
    return {"eq": eq, "slots": slots, "theta": core.theta, "se": core.se, "pv": core.pvalues}


def fit_vlogmem(
    panel: Panel,
    spec: mem.MemSpec = mem.MemSpec(),
    *,
    zones: bool = False,
    cross: bool = True,
    level: float = 0.01,
    n_starts: int = 3,
    seed: int = 0,
    compute_se: bool = True,
    n_jobs: int | None = None,
) -> VFitResult:
    """Fit the K-equation system.

    Each equation is a univariate LogMEM extended with the other
    instruments' lagged log-values and zero dummies; ``cross=False``
    drops those columns, reproducing K independent univariate fits.
    ``zones=True`` adds Asian/US lag-1 interactions on every regressor
    (European hours are the reference). Equations are independent and
    run on up to ``n_jobs`` threads (default: the VOLMEM_THREADS
    environment variable, else 1); results are deterministic either way.
    """
    if panel.K < 2:
        raise DataError(f"system fit needs at least 2 instruments, got {panel.K}")
    if panel.T < mem.MIN_FIT_LENGTH:
        raise DataError(f"need at least {mem.MIN_FIT_LENGTH} rows to fit, got {panel.T}")
    K = panel.K

    problems = [_equation_problem(panel, i, spec, cross, zones) for i in range(K)]

    def run(i):
        return mem._fit_problem(problems[i], n_starts=n_starts, seed=seed, compute_se=compute_se)

    workers = _n_workers(n_jobs)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            cores = list(pool.map(run, range(K)))
    else:
        cores = [run(i) for i in range(K)]

    collected = [_collect(panel, i, spec, problems[i], cores[i]) for i in range(K)]

    w = np.zeros(K)
    s = np.zeros(K)
    p_plus = np.zeros(K)
    A = [np.zeros((K, K)) for _ in range(spec.p)]
    A0 = [np.zeros((K, K)) for _ in range(spec.p)]
    Gamma = np.zeros((K, K))
    B = np.zeros((K, K))
    seA = [np.full((K, K), np.nan) for _ in range(spec.p)]
    pvA = [np.full((K, K), np.nan) for _ in range(spec.p)]
    zoneM = {z: np.zeros((K, K)) for z in ZONES} if zones else None
    zoneSE = {z: np.full((K, K), np.nan) for z in INTERACT_ZONES} if zones else None
    zonePV = {z: np.full((K, K), np.nan) for z in INTERACT_ZONES} if zones else None
    ll = np.zeros(K)
    bics = np.zeros(K)
    hl = np.zeros(K)
    conv = np.zeros(K, dtype=bool)
    nobs = np.zeros(K, dtype=int)
    diagnostics = []

    for i, got in enumerate(collected):
        theta, se, pv = got["theta"], got["se"], got["pv"]
        meta = got["slots"]["meta"]
        col_of = got["slots"]["col_of"]
        M = got["slots"]["M"]
        zone_index = {z: zi for zi, z in enumerate(INTERACT_ZONES)}
        for idx, mt in enumerate(meta):
            kind = mt[0]
            if kind == "omega":
                w[i] = theta[idx]
            elif kind == "alpha":
                j, r = mt[1], mt[2]
                A[j - 1][i, col_of[r]] = theta[idx]
                seA[j - 1][i, col_of[r]] = se[idx]
                pvA[j - 1][i, col_of[r]] = pv[idx]
            elif kind == "alpha0":
                j, r = mt[1], mt[2]
                A0[j - 1][i, col_of[r]] = theta[idx]
            elif kind == "gamma":
                Gamma[i, i] = theta[idx]
            elif kind == "zone":
                z, r = INTERACT_ZONES[mt[1]], mt[2]
                zoneM[z][i, col_of[r]] = theta[idx]
                zoneSE[z][i, col_of[r]] = se[idx]
                zonePV[z][i, col_of[r]] = pv[idx]
        B[i, i] = theta[M]  # lag-1 persistence
        for j in range(1, spec.q):
            diagnostics.append(
                f"{panel.instruments[i]}: beta{j + 1} = {theta[M + j]:.6f} reported per equation only"
            )
        s[i] = theta[-1]
        p_plus[i] = problems[i].p_plus
        ll[i] = cores[i].loglik
        bics[i] = got["eq"]["bic"]
        conv[i] = cores[i].converged
        nobs[i] = cores[i].n_obs
        own = sum(A[j][i, i] for j in range(spec.p)) + sum(
            theta[M + j] for j in range(spec.q)
        )
        if 0.0 < own < 1.0:
            hl[i] = mem.half_life(sum(A[j][i, i] for j in range(spec.p)), sum(theta[M + j] for j in range(spec.q)))
        else:
            hl[i] = math.inf if own >= 1.0 else math.nan
        if not conv[i]:
            diagnostics.append(f"{panel.instruments[i]}: equation did not converge")

    params = VParamSet(
        instruments=panel.instruments,
        w=w,
        A_lags=tuple(A),
        A0_lags=tuple(A0),
        Gamma=Gamma,
        B=B,
        s=s,
        p_plus=p_plus,
        zone_matrices=zoneM,
    )
    return VFitResult(
        instruments=panel.instruments,
        spec=spec,
        params=params,
        pv_A_lags=tuple(pvA),
        se_A_lags=tuple(seA),
        pv_zone=zonePV,
        se_zone=zoneSE,
        loglik=ll,
        bic=bics,
        half_life_minutes=hl,
        converged=conv,
        n_obs=nobs,
        equations=tuple(g["eq"] for g in collected),
        significance_level=level,
        diagnostics=tuple(diagnostics),
    )


def spillover_summary(fit: VFitResult, level: float = 0.01) -> SpilloverSummary:
    """To/From sums of the significant lag-1 matrix.

    Entries with p >= level (or without a p-value) are treated as zero;
    the diagonal is included in both sums.
    """
    A1 = fit.params.A_lags[0]
    sig = fit.significant(A1, fit.pv_A_lags[0], level)
    names = fit.instruments
    to_sums = {n: float(sig[i, :].sum()) for i, n in enumerate(names)}
    from_sums = {n: float(sig[:, k].sum()) for k, n in enumerate(names)}
    off = ~np.eye(fit.K, dtype=bool)
    return SpilloverSummary(
        to_sums=to_sums,
        from_sums=from_sums,
        total_offdiag_abs=float(np.abs(sig[off]).sum()),
        significance_level=level,
    )


def one_sd_multiplier(s: float) -> float:
    """Multiplicative size of a one-conditional-SD positive shock under
    log-normal innovations on strictly positive values:
    1 + sqrt(exp(s^2) - 1)."""
    if not (s > 0.0):
        raise DataError(f"s must be positive, got {s}")
    return 1.0 + math.sqrt(math.expm1(s * s))


def shock_response(
    fit: VFitResult,
    source: str,
    *,
    multiplier: float | None = None,
    sd: float | None = None,
) -> dict:
    """Next-interval relative increase per target from a shock at one venue.

    The shock either multiplies the source's value by an explicit
    ``multiplier``, or by the one-conditional-SD multiplier for ``sd``
    (defaulting to the source equation's fitted s when neither is given).
    Target j responds by multiplier**A1[j, source] - 1. Innovation
    correlation across venues is not modeled, so realized co-movement can
    exceed these figures.
    """
    if source not in fit.instruments:
        raise DataError(f"unknown instrument {source!r}")
    src = fit.instruments.index(source)
    if multiplier is not None and sd is not None:
        raise DataError("give either multiplier or sd, not both")
    if multiplier is None:
        s = float(fit.params.s[src]) if sd is None else float(sd)
        multiplier = one_sd_multiplier(s)
    if not (multiplier > 0.0):
        raise DataError(f"shock multiplier must be positive, got {multiplier}")
    A1 = fit.params.A_lags[0]
    return {
        name: float(multiplier ** A1[j, src] - 1.0)
        for j, name in enumerate(fit.instruments)
    }


def zone_totals(fit: VFitResult, zone: str, level: float | None = None) -> dict:
    """Aggregate transmission in one trading zone.

    The effective lag-1 matrix is A + A_zone, keeping each entry only
    where its own p-value clears the level. Returns the off-diagonal sum
    of absolute values and the signed diagonal sum.
    """
    if fit.params.zone_matrices is None:
        raise DataError("fit has no zone interactions")
    if zone not in fit.params.zone_matrices:
        raise DataError(f"unknown zone {zone!r}; expected one of {sorted(fit.params.zone_matrices)}")
    level = fit.significance_level if level is None else level
    base = fit.significant(fit.params.A_lags[0], fit.pv_A_lags[0], level)
    if zone in fit.pv_zone:
        extra = fit.significant(fit.params.zone_matrices[zone], fit.pv_zone[zone], level)
    else:
        extra = np.zeros_like(base)  # reference zone
    eff = base + extra
    off = ~np.eye(fit.K, dtype=bool)
    return {
        "total_offdiag_abs": float(np.abs(eff[off]).sum()),
        "total_diag": float(np.trace(eff)),
    }


def fit_bivariate_volume_volatility(
    volume_series,
    rv_series,
    spec: mem.MemSpec = mem.MemSpec(p=2, q=1),
    *,
    level: float = 0.01,
    n_starts: int = 3,
    seed: int = 0,
    compute_se: bool = True,
    n_jobs: int | None = None,
) -> VFitResult:
    """Joint volume/volatility system for one venue, order (volume, rv).

    Both equations use the price series' negative-return indicator for
    the asymmetry term. Perfectly collinear inputs (duplicated series)
    are flagged in the diagnostics; the fit still runs, though standard
    errors will then fail as singular.
    """
    times, iv, ir = np.intersect1d(
        volume_series.times, rv_series.times, assume_unique=True, return_indices=True
    )
    if times.size == 0:
        raise DataError("volume and volatility series share no timestamps")
    values = np.column_stack([volume_series.values[iv], rv_series.values[ir]])
    neg = rv_series.neg_return[ir]
    panel = Panel(
        instruments=("volume", "rv"),
        times=times,
        values=values,
        zero_mask=values == 0.0,
        neg_mask=np.column_stack([neg, neg]),
        dropped_rows=int(
            np.unique(np.concatenate([volume_series.times, rv_series.times])).size - times.size
        ),
    )
    fit = fit_vlogmem(
        panel, spec, zones=False, cross=True, level=level,
        n_starts=n_starts, seed=seed, compute_se=compute_se, n_jobs=n_jobs,
    )
    both_pos = (values > 0.0).all(axis=1)
    diagnostics = list(fit.diagnostics)
    if both_pos.sum() >= 3:
        lv = np.log(values[both_pos, 0])
        lr = np.log(values[both_pos, 1])
        if np.ptp(lv) == 0.0 or np.ptp(lr) == 0.0:
            corr = 1.0 if np.array_equal(lv, lr) else 0.0
        else:
            corr = float(np.corrcoef(lv, lr)[0, 1])
        if abs(corr) >= 1.0 - 1e-9:
            diagnostics.append(
                f"volume and rv are perfectly collinear on positive observations (corr = {corr:.12f})"
            )
    fit.diagnostics = tuple(diagnostics)
    return fit
