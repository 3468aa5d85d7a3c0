"""Univariate logarithmic multiplicative error models.

The observation model is x_t = mu_t * eps_t with eps_t i.i.d. from a
zero-augmented log-normal: a point mass 1 - p+ at zero and, with
probability p+, a log-normal scaled to unit mean (log eps ~ N(m, s^2),
m = -s^2/2 - log p+). The conditional mean follows a log-linear recursion

    log mu_t = omega
             + sum_j alpha_j  * log x_{t-j} * 1{x_{t-j} > 0}
             + sum_j alpha0_j * 1{x_{t-j} = 0}
             + gamma * log x-_{t-1}
             + sum_j beta_j * log mu_{t-j}

where log x- equals log x when the interval's own price return was
negative and x > 0, else 0. The recursion is initialized at log mu = 0
for the first max(p, q) observations, which are excluded from the
likelihood. Log parameterization keeps mu_t > 0 with no constraints.

Fitting is quasi-maximum likelihood: a deterministic multi-start local
maximizer (L-BFGS-B on the analytic gradient; the contract's relative
function tolerance 1e-10 maps to ftol, the parameter tolerance 1e-8 to
the projected-gradient tolerance, and evaluations are capped at 10,000).
Standard errors use the H^-1 S H^-1 sandwich with H the numerical Hessian
of the mean log-likelihood and S the outer product of per-observation
scores, both by central differences with step 1e-5 * (1 + |theta|).
"""
from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.optimize import minimize
from scipy.signal import lfilter
from scipy.stats import norm

from .errors import DataError, EstimationError, SingularHessianError
from .rng import STREAM_STARTS, substream

LOG_2PI = math.log(2.0 * math.pi)

OPT_FTOL = 1e-10
OPT_PTOL = 1e-8
OPT_MAXFUN = 10_000
FD_STEP = 1e-5
MIN_FIT_LENGTH = 500


@dataclass(frozen=True)
class MemSpec:
    """Model order and feature toggles.

    ``p_plus_policy`` is either the string "empirical" (p+ equals the
    fraction of strictly positive observations, never a free parameter)
    or a fixed probability in (0, 1].
    """

    p: int = 1
    q: int = 1
    asymmetry: bool = True
    zero_augmented: bool = True
    p_plus_policy: float | str = "empirical"

    def __post_init__(self):
        if self.p < 1 or self.q < 1:
            raise DataError(f"lag orders must satisfy p >= 1 and q >= 1, got p={self.p}, q={self.q}")
        if isinstance(self.p_plus_policy, str):
            if self.p_plus_policy != "empirical":
                raise DataError(f"p_plus_policy must be 'empirical' or a number, got {self.p_plus_policy!r}")
        elif not (0.0 < float(self.p_plus_policy) <= 1.0):
            raise DataError("fixed p_plus must lie in (0, 1]")

    @property
    def burn(self) -> int:
        return max(self.p, self.q)


@dataclass
class ParamSet:
    """LogMEM parameter values."""

    omega: float
    alpha: tuple
    alpha0: tuple
    gamma: float
    beta: tuple
    s: float
    p_plus: float = 1.0

    def __post_init__(self):
        self.alpha = tuple(float(a) for a in np.atleast_1d(self.alpha))
        self.alpha0 = tuple(float(a) for a in np.atleast_1d(self.alpha0))
        self.beta = tuple(float(b) for b in np.atleast_1d(self.beta))
        if self.alpha0 and len(self.alpha0) != len(self.alpha):
            raise DataError("alpha0 must be empty or match alpha in length")
        if not (self.s > 0.0):
            raise DataError(f"s must be positive, got {self.s}")
        if not (0.0 < self.p_plus <= 1.0):
            raise DataError(f"p_plus must lie in (0, 1], got {self.p_plus}")
        if self.persistence >= 1.0:
            warnings.warn(
                f"sum(alpha) + sum(beta) = {self.persistence:.4f} >= 1: non-stationary region",
                stacklevel=2,
            )

    @property
    def persistence(self) -> float:
        return float(sum(self.alpha) + sum(self.beta))


# ---------------------------------------------------------------------------
# equation problem: data plus precomputed linear features

@dataclass
class _Problem:
    x: np.ndarray
    logx: np.ndarray          # log x where x > 0, else 0
    zero: np.ndarray          # bool
    F: np.ndarray             # (T, M) linear features
    lin_meta: list            # per-column tuples, see _build_problem
    names: list               # full parameter names, length P = M + q + 1
    q: int
    burn: int
    p_plus: float
    free: np.ndarray          # (P,) bool
    start: np.ndarray         # (P,) native default start
    frozen_names: tuple = ()
    unidentified: bool = False

    @property
    def T(self) -> int:
        return int(self.x.size)

    @property
    def n_obs(self) -> int:
        return self.T - self.burn

    @property
    def P(self) -> int:
        return len(self.names)


def _lagged(col: np.ndarray, j: int) -> np.ndarray:
    out = np.zeros_like(col)
    out[j:] = col[:-j]
    return out


def _resolve_p_plus(spec: MemSpec, x: np.ndarray) -> float:
    if isinstance(spec.p_plus_policy, str):
        p_plus = float(np.mean(x > 0.0))
    else:
        p_plus = float(spec.p_plus_policy)
    if p_plus <= 0.0:
        raise DataError("series has no positive observations; p_plus would be 0")
    return p_plus


def _build_problem(
    x,
    neg,
    spec: MemSpec,
    *,
    exog_values: np.ndarray | None = None,
    reg_names: tuple = ("",),
    zones: list | None = None,
    fixed: dict | None = None,
) -> _Problem:
    """Assemble the design for one equation.

    Regressor 0 is the own series; ``exog_values`` adds (T, E) columns of
    other instruments entering through the same lag structure. ``zones``
    is a list of (label, indicator) pairs; each zone interaction
    multiplies the lag-1 log-value of every regressor with the indicator
    evaluated at the lagged interval. Identically-zero feature columns
    (no zeros observed, no negative returns, an absent zone) are frozen
    at coefficient 0 and excluded from the free parameters.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise DataError("observations must be one-dimensional")
    if not np.all(np.isfinite(x)):
        raise DataError("non-finite observation values")
    if np.any(x < 0.0):
        raise DataError("observations must be non-negative")
    T = x.size
    if T <= spec.burn:
        raise DataError(f"need more than max(p, q) = {spec.burn} observations, got {T}")

    if neg is None:
        neg = np.zeros(T, dtype=bool)
    neg = np.asarray(neg, dtype=bool)
    if neg.shape != x.shape:
        raise DataError("neg_return mask must match the observations in length")

    cols = [x] if exog_values is None else [x] + [np.asarray(c, dtype=np.float64) for c in np.atleast_2d(exog_values.T)]
    R = len(cols)
    if len(reg_names) != R:
        raise DataError("reg_names must name every regressor series")
    X = np.column_stack(cols)
    if np.any(X < 0.0) or not np.all(np.isfinite(X)):
        raise DataError("regressor series must be finite and non-negative")
    zero_all = X == 0.0
    logx_all = np.where(zero_all, 0.0, np.log(np.where(zero_all, 1.0, X)))

    p_plus = _resolve_p_plus(spec, x)
    zero_own = zero_all[:, 0]
    if p_plus >= 1.0 and zero_own[spec.burn :].any():
        t_bad = int(np.flatnonzero(zero_own[spec.burn :])[0] + spec.burn)
        raise EstimationError(
            f"observation {t_bad} is zero but p_plus = 1; the zero branch has no mass"
        )

    def tag(base: str, r: int) -> str:
        return base if reg_names[r] == "" else f"{base}:{reg_names[r]}"

    feats: list[np.ndarray] = [np.ones(T)]
    meta: list[tuple] = [("omega",)]
    names: list[str] = ["omega"]
    for j in range(1, spec.p + 1):
        for r in range(R):
            feats.append(_lagged(logx_all[:, r], j))
            meta.append(("alpha", j, r))
            names.append(tag(f"alpha{j}", r))
    if spec.zero_augmented:
        for j in range(1, spec.p + 1):
            for r in range(R):
                feats.append(_lagged(zero_all[:, r].astype(np.float64), j))
                meta.append(("alpha0", j, r))
                names.append(tag(f"alpha0_{j}", r))
    if spec.asymmetry:
        negterm = np.where(neg & ~zero_own, logx_all[:, 0], 0.0)
        feats.append(_lagged(negterm, 1))
        meta.append(("gamma",))
        names.append("gamma")
    if zones:
        for z, (zname, ind) in enumerate(zones):
            ind = np.asarray(ind, dtype=np.float64)
            if ind.shape != x.shape:
                raise DataError("zone indicators must match the observations in length")
            for r in range(R):
                feats.append(_lagged(ind * logx_all[:, r], 1))
                meta.append(("zone", z, r))
                names.append(tag(f"zone_{zname}", r))

    F = np.column_stack(feats)
    M = F.shape[1]
    for j in range(1, spec.q + 1):
        names.append(f"beta{j}")
    names.append("s")
    P = M + spec.q + 1

    pos_own = ~zero_own
    if pos_own.any():
        logs = logx_all[pos_own, 0]
        sd = float(np.std(logs))
    else:
        sd = 0.0
    unidentified = pos_own.any() and np.ptp(logx_all[pos_own, 0]) == 0.0

    start = np.zeros(P)
    free = np.ones(P, dtype=bool)
    for i, m in enumerate(meta):
        if m[0] == "alpha" and m[2] == 0:
            start[i] = 0.2 / spec.p
    start[M : M + spec.q] = 0.6 / spec.q
    start[P - 1] = max(sd, 1e-3)

    # freeze coefficients whose feature column is identically zero in the
    # likelihood range: they cannot move the objective
    frozen = []
    for i in range(M):
        if meta[i][0] == "omega":
            continue
        if not np.any(F[spec.burn :, i]):
            free[i] = False
            start[i] = 0.0
            frozen.append(names[i])

    if fixed:
        sets = dict(fixed)
        def freeze(idx: int, value: float):
            free[idx] = False
            start[idx] = float(value)
        for key, val in sets.items():
            if key == "omega":
                freeze(0, val)
            elif key == "gamma":
                if not spec.asymmetry:
                    raise DataError("cannot fix gamma: asymmetry disabled")
                freeze(names.index("gamma"), val)
            elif key == "s":
                if not (float(val) > 0):
                    raise DataError("fixed s must be positive")
                freeze(P - 1, val)
            elif key in ("alpha", "alpha0", "beta"):
                vals = np.atleast_1d(np.asarray(val, dtype=np.float64))
                lags = spec.p if key != "beta" else spec.q
                if vals.size == 1:
                    vals = np.repeat(vals, lags)
                if vals.size != lags:
                    raise DataError(f"fixed {key} needs 1 or {lags} values")
                if key == "beta":
                    for j in range(spec.q):
                        freeze(M + j, vals[j])
                else:
                    for i, m in enumerate(meta):
                        if m[0] == key and m[2] == 0:
                            freeze(i, vals[m[1] - 1])
            else:
                raise DataError(f"unknown fixed parameter {key!r}")
        frozen.extend(k for k in sets)

    return _Problem(
        x=x,
        logx=logx_all[:, 0],
        zero=zero_own,
        F=F,
        lin_meta=meta,
        names=names,
        q=spec.q,
        burn=spec.burn,
        p_plus=p_plus,
        free=free,
        start=start,
        frozen_names=tuple(frozen),
        unidentified=bool(unidentified),
    )


# ---------------------------------------------------------------------------
# likelihood and analytic gradient

def _split(problem: _Problem, theta: np.ndarray):
    M = problem.F.shape[1]
    return theta[:M], theta[M : M + problem.q], float(theta[-1])


def _logmu(problem: _Problem, th_lin: np.ndarray, beta: np.ndarray) -> np.ndarray:
    c = problem.F @ th_lin
    a = np.empty(problem.q + 1)
    a[0] = 1.0
    a[1:] = -beta
    logmu = np.zeros(problem.T)
    logmu[problem.burn :] = lfilter([1.0], a, c[problem.burn :])
    return logmu


def _perobs_ll(problem: _Problem, theta: np.ndarray) -> np.ndarray:
    """Per-observation log-likelihood contributions for t >= burn."""
    th_lin, beta, s = _split(problem, theta)
    if not (s > 0.0):
        raise DataError("s must be positive")
    logmu = _logmu(problem, th_lin, beta)
    b = problem.burn
    zero = problem.zero[b:]
    logx = problem.logx[b:]
    d = logx - logmu[b:] - (-0.5 * s * s - math.log(problem.p_plus))
    pos_ll = (
        math.log(problem.p_plus)
        - logx
        - math.log(s)
        - 0.5 * LOG_2PI
        - d * d / (2.0 * s * s)
    )
    if problem.p_plus < 1.0:
        zll = math.log1p(-problem.p_plus)
    else:
        zll = -math.inf  # guarded at build time; kept for direct calls
    return np.where(zero, zll, pos_ll)


def _loglik(problem: _Problem, theta: np.ndarray) -> float:
    return float(_perobs_ll(problem, theta).sum())


def _loglik_grad(problem: _Problem, theta: np.ndarray):
    """Log-likelihood and its analytic gradient over the full native vector
    (the s slot carries d ll / d s)."""
    th_lin, beta, s = _split(problem, theta)
    b = problem.burn
    c = problem.F @ th_lin
    a = np.empty(problem.q + 1)
    a[0] = 1.0
    a[1:] = -beta
    logmu = np.zeros(problem.T)
    logmu[b:] = lfilter([1.0], a, c[b:])

    m_s = -0.5 * s * s - math.log(problem.p_plus)
    zero = problem.zero[b:]
    logx = problem.logx[b:]
    d = logx - logmu[b:] - m_s
    pos = ~zero

    ll_pos = (
        math.log(problem.p_plus) - logx - math.log(s) - 0.5 * LOG_2PI - d * d / (2.0 * s * s)
    )
    zll = math.log1p(-problem.p_plus) if problem.p_plus < 1.0 else -math.inf
    ll = float(np.where(zero, zll, ll_pos).sum())

    w = np.where(pos, d / (s * s), 0.0)  # d ll_t / d logmu_t

    D = lfilter([1.0], a, problem.F[b:], axis=0)
    g = np.empty(problem.P)
    g[: problem.F.shape[1]] = D.T @ w
    for j in range(1, problem.q + 1):
        u = logmu[b - j : problem.T - j]
        Gj = lfilter([1.0], a, u)
        g[problem.F.shape[1] + j - 1] = float(np.dot(Gj, w))
    ds = np.where(pos, -1.0 / s - d / s + d * d / (s ** 3), 0.0)
    g[-1] = float(ds.sum())
    return ll, g


def _pack(problem: _Problem, theta: np.ndarray) -> np.ndarray:
    """Native full vector -> internal free vector (s in log space)."""
    z = theta[problem.free].copy()
    if problem.free[-1]:
        z[-1] = math.log(theta[-1])
    return z


def _unpack(problem: _Problem, z: np.ndarray) -> np.ndarray:
    theta = problem.start.copy()
    theta[problem.free] = z
    if problem.free[-1]:
        theta[-1] = math.exp(np.clip(z[-1], -30.0, 10.0))
    return theta


def _negll_and_grad(problem: _Problem):
    def fun(z):
        theta = _unpack(problem, z)
        # line searches may probe wild parameters; treat a non-finite
        # objective as a hard wall instead of warning
        with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
            ll, g = _loglik_grad(problem, theta)
        if problem.free[-1]:
            g = g.copy()
            g[-1] *= theta[-1]  # chain rule for log s
        g = g[problem.free]
        if not (math.isfinite(ll) and np.all(np.isfinite(g))):
            return 1e300, np.zeros_like(g)
        return -ll, -g

    return fun


# ---------------------------------------------------------------------------
# fitting

@dataclass
class _CoreFit:
    theta: np.ndarray
    loglik: float
    converged: bool
    iterations: int
    n_evals: int
    se: np.ndarray
    pvalues: np.ndarray
    k_free: int
    n_obs: int
    unidentified: bool
    messages: tuple


def _fit_problem(
    problem: _Problem,
    *,
    n_starts: int = 3,
    seed: int = 0,
    compute_se: bool = True,
) -> _CoreFit:
    nan = np.full(problem.P, np.nan)
    if problem.unidentified:
        return _CoreFit(
            theta=problem.start.copy(),
            loglik=math.nan,
            converged=False,
            iterations=0,
            n_evals=0,
            se=nan,
            pvalues=nan.copy(),
            k_free=int(problem.free.sum()),
            n_obs=problem.n_obs,
            unidentified=True,
            messages=("degenerate data: positive observations are constant",),
        )

    fun = _negll_and_grad(problem)
    z0 = _pack(problem, problem.start)
    starts = [z0]
    for i in range(1, max(1, n_starts)):
        rng = substream(seed, STREAM_STARTS, i)
        starts.append(z0 + 0.05 * rng.standard_normal(z0.size))

    best = None
    total_evals = 0
    messages = []
    for z_init in starts:
        res = minimize(
            fun,
            z_init,
            jac=True,
            method="L-BFGS-B",
            options={"maxfun": OPT_MAXFUN, "maxiter": OPT_MAXFUN, "ftol": OPT_FTOL, "gtol": OPT_PTOL},
        )
        total_evals += int(res.nfev)
        if best is None or res.fun < best.fun:
            best = res
    if not best.success:
        messages.append(f"optimizer: {best.message}")

    theta = _unpack(problem, best.x)
    k_free = int(problem.free.sum())

    se = nan.copy()
    pv = np.full(problem.P, np.nan)
    if compute_se:
        try:
            se_free = _sandwich(problem, theta)
            se[problem.free] = se_free
            t_stat = np.abs(theta[problem.free]) / se_free
            pv[problem.free] = 2.0 * norm.sf(t_stat)
        except SingularHessianError as e:
            messages.append(str(e))

    return _CoreFit(
        theta=theta,
        loglik=-float(best.fun),
        converged=bool(best.success),
        iterations=int(best.nit),
        n_evals=total_evals,
        se=se,
        pvalues=pv,
        k_free=k_free,
        n_obs=problem.n_obs,
        unidentified=False,
        messages=tuple(messages),
    )


def _sandwich(problem: _Problem, theta: np.ndarray) -> np.ndarray:
    """Robust H^-1 S H^-1 standard errors over the free parameters.

    All derivatives are numerical central differences in the native
    parameter space with step 1e-5 * (1 + |theta_i|).
    """
    free_idx = np.flatnonzero(problem.free)
    k = free_idx.size
    n = problem.n_obs
    h = FD_STEP * (1.0 + np.abs(theta[free_idx]))

    scores = np.empty((n, k))
    for a, i in enumerate(free_idx):
        tp = theta.copy(); tp[i] += h[a]
        tm = theta.copy(); tm[i] -= h[a]
        scores[:, a] = (_perobs_ll(problem, tp) - _perobs_ll(problem, tm)) / (2.0 * h[a])
    S = scores.T @ scores / n

    def f(t):
        return _loglik(problem, t) / n

    H = np.empty((k, k))
    f0 = f(theta)
    for a, i in enumerate(free_idx):
        tp = theta.copy(); tp[i] += h[a]
        tm = theta.copy(); tm[i] -= h[a]
        H[a, a] = (f(tp) - 2.0 * f0 + f(tm)) / (h[a] ** 2)
    for a in range(k):
        for bb in range(a + 1, k):
            i, j = free_idx[a], free_idx[bb]
            tpp = theta.copy(); tpp[i] += h[a]; tpp[j] += h[bb]
            tpm = theta.copy(); tpm[i] += h[a]; tpm[j] -= h[bb]
            tmp = theta.copy(); tmp[i] -= h[a]; tmp[j] += h[bb]
            tmm = theta.copy(); tmm[i] -= h[a]; tmm[j] -= h[bb]
            H[a, bb] = H[bb, a] = (f(tpp) - f(tpm) - f(tmp) + f(tmm)) / (4.0 * h[a] * h[bb])

    cond = float(np.linalg.cond(H))
    if not math.isfinite(cond) or cond > 1e12:
        raise SingularHessianError(cond)
    Hinv = np.linalg.inv(H)
    cov = Hinv @ S @ Hinv / n
    var = np.diag(cov).copy()
    var[var < 0.0] = np.nan
    return np.sqrt(var)


# ---------------------------------------------------------------------------
# public API

@dataclass
class FitResult:
    """Univariate fit output."""

    spec: MemSpec
    params: ParamSet
    loglik: float
    bic: float
    robust_se: dict
    pvalues: dict
    half_life_minutes: float
    converged: bool
    iterations: int
    n_evals: int
    n_obs: int
    k_free: int
    unidentified: bool = False
    frozen: tuple = ()
    messages: tuple = ()
    fixed: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "model": {
                "p": self.spec.p,
                "q": self.spec.q,
                "asymmetry": self.spec.asymmetry,
                "zero_augmented": self.spec.zero_augmented,
            },
            "params": {
                "omega": self.params.omega,
                "alpha": list(self.params.alpha),
                "alpha0": list(self.params.alpha0),
                "gamma": self.params.gamma,
                "beta": list(self.params.beta),
                "s": self.params.s,
                "p_plus": self.params.p_plus,
            },
            "robust_se": dict(self.robust_se),
            "pvalues": dict(self.pvalues),
            "loglik": self.loglik,
            "bic": self.bic,
            "half_life_minutes": self.half_life_minutes,
            "n_obs": self.n_obs,
            "k_free": self.k_free,
            "convergence": {
                "converged": self.converged,
                "iterations": self.iterations,
                "n_evals": self.n_evals,
                "unidentified": self.unidentified,
                "messages": list(self.messages),
            },
            "frozen": list(self.frozen),
        }

    def to_json(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh, sort_keys=True, indent=2, allow_nan=True)
            fh.write("\n")


def logmem_filter(params: ParamSet, x, neg_return=None, spec: MemSpec | None = None) -> np.ndarray:
    """Conditional means mu_t for given parameters.

    log mu is 0 for the first max(p, q) observations, then follows the
    recursion; the returned mu is strictly positive by construction.
    """
    if spec is None:
        spec = MemSpec(p=len(params.alpha), q=len(params.beta),
                       asymmetry=True, zero_augmented=True, p_plus_policy=params.p_plus)
    problem = _build_problem(x, neg_return, spec)
    theta = _theta_from_params(problem, spec, params)
    th_lin, beta, _ = _split(problem, theta)
    return np.exp(_logmu(problem, th_lin, beta))


def _theta_from_params(problem: _Problem, spec: MemSpec, params: ParamSet) -> np.ndarray:
    theta = np.zeros(problem.P)
    for i, m in enumerate(problem.lin_meta):
        if m[0] == "omega":
            theta[i] = params.omega
        elif m[0] == "alpha" and m[2] == 0:
            theta[i] = params.alpha[m[1] - 1]
        elif m[0] == "alpha0" and m[2] == 0:
            theta[i] = params.alpha0[m[1] - 1] if params.alpha0 else 0.0
        elif m[0] == "gamma":
            theta[i] = params.gamma
    M = problem.F.shape[1]
    theta[M : M + problem.q] = params.beta
    theta[-1] = params.s
    return theta


def zaln_loglik(x, mu, s: float, p_plus: float, burn: int = 0) -> float:
    """Zero-augmented log-normal log-likelihood.

    Zero observations contribute log(1 - p+); positive ones the log-normal
    density of x/mu scaled to unit mean. The first ``burn`` observations
    are excluded (model burn-in).
    """
    x = np.asarray(x, dtype=np.float64)
    mu = np.asarray(mu, dtype=np.float64)
    if mu.shape != x.shape:
        raise DataError("mu must match x in shape")
    if not (s > 0.0):
        raise DataError("s must be positive")
    if not (0.0 < p_plus <= 1.0):
        raise DataError("p_plus must lie in (0, 1]")
    if np.any(mu <= 0.0):
        raise DataError("conditional means must be positive")
    xb = x[burn:]
    mub = mu[burn:]
    zero = xb == 0.0
    if p_plus >= 1.0 and zero.any():
        t_bad = int(np.flatnonzero(zero)[0] + burn)
        raise EstimationError(f"observation {t_bad} is zero but p_plus = 1; the zero branch has no mass")
    m = -0.5 * s * s - math.log(p_plus)
    safe_x = np.where(zero, 1.0, xb)
    d = np.log(safe_x / mub) - m
    pos_ll = math.log(p_plus) - np.log(safe_x) - math.log(s) - 0.5 * LOG_2PI - d * d / (2.0 * s * s)
    zll = math.log1p(-p_plus) if p_plus < 1.0 else 0.0
    return float(np.where(zero, zll, pos_ll).sum())


def loglik(params: ParamSet, x, neg_return=None, spec: MemSpec | None = None) -> float:
    """Model log-likelihood at given parameters (burn-in excluded)."""
    if spec is None:
        spec = MemSpec(p=len(params.alpha), q=len(params.beta),
                       asymmetry=True, zero_augmented=True, p_plus_policy=params.p_plus)
    problem = _build_problem(x, neg_return, spec)
    theta = _theta_from_params(problem, spec, params)
    return _loglik(problem, theta)


def fit_logmem(
    x,
    neg_return=None,
    spec: MemSpec = MemSpec(),
    *,
    fixed: dict | None = None,
    n_starts: int = 3,
    seed: int = 0,
    compute_se: bool = True,
) -> FitResult:
    """Fit a univariate LogMEM by quasi-maximum likelihood.

    ``fixed`` pins named parameters ("omega", "alpha", "alpha0", "gamma",
    "beta", "s") at given values, excluding them from optimization. The
    default start is omega=0, alpha=0.2/p, alpha0=0, gamma=0, beta=0.6/q,
    s = the standard deviation of the logs of positive observations;
    further starts perturb it with seeded Gaussian noise and the best
    optimum wins. Deterministic for a given (data, seed).
    """
    x = np.asarray(x, dtype=np.float64)
    if x.size < MIN_FIT_LENGTH:
        raise DataError(f"need at least {MIN_FIT_LENGTH} observations to fit, got {x.size}")
    problem = _build_problem(x, neg_return, spec, fixed=fixed)
    core = _fit_problem(problem, n_starts=n_starts, seed=seed, compute_se=compute_se)
    return _to_fit_result(problem, spec, core, fixed or {})


def _to_fit_result(problem: _Problem, spec: MemSpec, core: _CoreFit, fixed: dict) -> FitResult:
    theta = core.theta
    alpha = [0.0] * spec.p
    alpha0 = [0.0] * spec.p
    gamma = 0.0
    omega = 0.0
    for i, m in enumerate(problem.lin_meta):
        if m[0] == "omega":
            omega = float(theta[i])
        elif m[0] == "alpha" and m[2] == 0:
            alpha[m[1] - 1] = float(theta[i])
        elif m[0] == "alpha0" and m[2] == 0:
            alpha0[m[1] - 1] = float(theta[i])
        elif m[0] == "gamma":
            gamma = float(theta[i])
    M = problem.F.shape[1]
    beta = [float(b) for b in theta[M : M + problem.q]]
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        params = ParamSet(
            omega=omega, alpha=tuple(alpha), alpha0=tuple(alpha0), gamma=gamma,
            beta=tuple(beta), s=float(theta[-1]), p_plus=problem.p_plus,
        )
    pers = params.persistence
    if 0.0 < pers < 1.0:
        hl = half_life(sum(params.alpha), sum(params.beta))
    else:
        hl = math.inf if pers >= 1.0 else math.nan
    ll = core.loglik
    return FitResult(
        spec=spec,
        params=params,
        loglik=ll,
        bic=bic(ll, core.k_free, core.n_obs) if math.isfinite(ll) else math.nan,
        robust_se={n: float(v) for n, v in zip(problem.names, core.se)},
        pvalues={n: float(v) for n, v in zip(problem.names, core.pvalues)},
        half_life_minutes=hl,
        converged=core.converged,
        iterations=core.iterations,
        n_evals=core.n_evals,
        n_obs=core.n_obs,
        k_free=core.k_free,
        unidentified=core.unidentified,
        frozen=problem.frozen_names,
        messages=core.messages,
        fixed=dict(fixed),
    )


def robust_se(fit: FitResult, x, neg_return=None) -> dict:
    """Recompute sandwich standard errors for a fit on its data."""
    if not fit.converged:
        raise EstimationError("robust_se requires a converged fit")
    problem = _build_problem(x, neg_return, fit.spec, fixed=fit.fixed or None)
    theta = _theta_from_params(problem, fit.spec, fit.params)
    se_free = _sandwich(problem, theta)
    out = {n: math.nan for n in problem.names}
    for n, v in zip(np.asarray(problem.names, dtype=object)[problem.free], se_free):
        out[str(n)] = float(v)
    return out


def half_life(alpha_sum: float, beta_sum: float, interval_minutes: float = 5.0) -> float:
    """Minutes for a deviation of the log mean to halve:
    interval_minutes * log(0.5) / log(alpha + beta)."""
    pers = float(alpha_sum) + float(beta_sum)
    if pers <= 0.0:
        raise DataError(f"alpha + beta must be positive, got {pers}")
    if pers >= 1.0:
        return math.inf
    return interval_minutes * math.log(0.5) / math.log(pers)


def bic(loglik: float, k: int, T: int) -> float:
    """Bayesian information criterion k * ln(T) - 2 * loglik."""
    if T <= 0:
        raise DataError("effective sample size must be positive")
    return k * math.log(T) - 2.0 * loglik
