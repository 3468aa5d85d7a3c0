"""Shared builders for the test suite."""
import csv

import numpy as np

from volmem import ingest, mem, vmem

# One line per acceptance criterion, echoed by the terminal-summary hook.
ACCEPTANCE_LINES = []


def criterion(name: str, ok: bool, detail: str):
    """Record a pass/fail line for one acceptance criterion."""
    line = f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return bool(ok), line


def write_tick_csv(path, rows, header=("ts_ns", "price", "size")):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow(row)
    return str(path)


def ticks_from_arrays(ts_s, prices, sizes=None, instrument="X"):
    """TickSeries from second-resolution timestamps."""
    ts = np.asarray(ts_s, dtype=np.int64) * ingest.NS_PER_S
    prices = np.asarray(prices, dtype=np.float64)
    sizes = np.ones_like(prices) if sizes is None else np.asarray(sizes, dtype=np.float64)
    return ingest.TickSeries(instrument, ts, prices, sizes)


def window_of(returns, active=None, start=0):
    """Wrap a raw return vector in a fully-valid ReturnWindow."""
    r = np.asarray(returns, dtype=np.float64)
    active = r.size if active is None else active
    return ingest.ReturnWindow(
        interval_start=start,
        returns=r,
        active_seconds=int(active),
        interval_return=float(r.sum()),
        valid=True,
        n=r.size,
    )


# ---------------------------------------------------------------------------
# constructed system fits (no estimation involved)

NODES6 = ("V0", "V1", "V2", "V3", "V4", "V5")

A6 = np.array([
    [0.2108, -0.0895, 0.0352, 0.2548, 0.0088, -0.0173],
    [-0.0164, 0.0742, 0.0626, 0.2439, 0.0105, 0.0223],
    [-0.0282, -0.0851, 0.2720, 0.2177, 0.0198, -0.0108],
    [-0.0307, -0.0995, 0.0247, 0.4702, 0.0149, 0.0132],
    [-0.0761, -0.1373, 0.0441, 0.3085, 0.1450, 0.1200],
    [-0.0594, -0.1039, 0.0110, 0.2606, 0.0134, 0.2742],
])

# off-diagonal entries deemed insignificant (13 of 30, leaving 17)
NS6 = {(0, 2), (0, 4), (0, 5),
       (1, 0), (1, 4), (1, 5),
       (2, 5),
       (3, 2), (3, 4), (3, 5),
       (4, 2),
       (5, 2), (5, 4)}


def pv_for(A, insignificant=(), sig=1e-4, ns=0.5):
    pv = np.full(np.asarray(A).shape, float(sig))
    for i, j in insignificant:
        pv[i, j] = float(ns)
    return pv


def make_vfit(names, A1, pv1, *, s=None, level=0.01, zone_matrices=None,
              pv_zone=None, b_diag=0.55):
    """Assemble a system-fit container from explicit matrices."""
    K = len(names)
    s = np.full(K, 0.30) if s is None else np.asarray(s, dtype=np.float64)
    params = vmem.VParamSet(
        instruments=tuple(names),
        w=np.zeros(K),
        A_lags=(np.asarray(A1, dtype=np.float64),),
        A0_lags=(np.zeros((K, K)),),
        Gamma=np.zeros((K, K)),
        B=np.eye(K) * b_diag,
        s=s,
        p_plus=np.ones(K),
        zone_matrices=zone_matrices,
    )
    se_zone = None
    if pv_zone is not None:
        se_zone = {z: np.full((K, K), 0.01) for z in pv_zone}
    return vmem.VFitResult(
        instruments=tuple(names),
        spec=mem.MemSpec(),
        params=params,
        pv_A_lags=(np.asarray(pv1, dtype=np.float64),),
        se_A_lags=(np.full((K, K), 0.01),),
        pv_zone=pv_zone,
        se_zone=se_zone,
        loglik=np.zeros(K),
        bic=np.zeros(K),
        half_life_minutes=np.full(K, 90.0),
        converged=np.ones(K, dtype=bool),
        n_obs=np.full(K, 25_920),
        equations=tuple({"instrument": n} for n in names),
        significance_level=level,
    )


def six_node_fit(level=0.01):
    """Six venues, mixed signs, 17 significant off-diagonals and a full
    significant diagonal."""
    return make_vfit(NODES6, A6, pv_for(A6, NS6), level=level)


def _sparse(K, entries):
    m = np.zeros((K, K))
    for (i, j), v in entries.items():
        m[i, j] = v
    return m


# a zoned fit holding only its significant entries; everything else zero
# with an insignificant p-value
_ZA = {
    (0, 0): 0.1906, (0, 2): 0.0715, (0, 5): 0.1082,
    (1, 1): 0.1226, (1, 2): 0.1119, (1, 5): 0.1046,
    (2, 0): -0.0505, (2, 2): 0.3514, (2, 5): 0.0781,
    (3, 0): -0.0456, (3, 2): 0.0646, (3, 3): 0.2669, (3, 5): 0.1095,
    (4, 0): -0.0934, (4, 3): 0.1671, (4, 4): 0.0435, (4, 5): 0.3117,
    (5, 0): -0.0779, (5, 3): 0.1277, (5, 5): 0.3431,
}
_ZAS = {
    (0, 3): 0.1546, (0, 4): 0.0826, (0, 5): -0.1902,
    (1, 3): 0.1172, (1, 4): 0.0577, (1, 5): -0.1087,
    (2, 3): 0.1325, (2, 4): 0.0658, (2, 5): -0.1343,
    (3, 4): 0.0720, (3, 5): -0.1420,
    (4, 4): 0.2177, (4, 5): -0.2702,
    (5, 4): 0.0729, (5, 5): -0.1108,
}
_ZUS = {
    (0, 3): 0.2221, (0, 4): 0.0781, (0, 5): -0.1656,
    (1, 2): -0.0848, (1, 3): 0.1654, (1, 4): 0.0610, (1, 5): -0.1073,
    (2, 1): -0.0935, (2, 3): 0.2020, (2, 4): 0.0572, (2, 5): -0.0956,
    (3, 3): 0.1902, (3, 4): 0.0611, (3, 5): -0.1148,
    (4, 1): -0.1215, (4, 3): 0.1903, (4, 4): 0.1978, (4, 5): -0.2793,
    (5, 3): 0.1257, (5, 4): 0.0627,
}


def zoned_fit(level=0.01):
    K = 6
    A = _sparse(K, _ZA)
    AS = _sparse(K, _ZAS)
    US = _sparse(K, _ZUS)

    def pv_of(entries):
        pv = np.full((K, K), 0.5)
        for ij in entries:
            pv[ij] = 1e-4
        return pv

    return make_vfit(
        NODES6, A, pv_of(_ZA), level=level,
        zone_matrices={"AS": AS, "EU": np.zeros((K, K)), "US": US},
        pv_zone={"AS": pv_of(_ZAS), "US": pv_of(_ZUS)},
    )
