"""Command-line pipeline: ticks -> volatility panel -> fits -> exports.

Composable subcommands share one JSON config; command-line flags
override config values. Every artifact is written to a temporary
``.partial`` file and moved into place on completion, so an interrupted
stage leaves its unfinished output clearly marked. Outputs are
byte-deterministic for a given config and seed; wall-clock timestamps
appear only in the run manifest.

Exit codes: 0 success, 1 estimation did not converge (results are still
written, flagged), 2 I/O or schema errors.
"""
from __future__ import annotations

import argparse
import datetime
import hashlib
import json
import os
import sys
from dataclasses import asdict, dataclass, replace

import numpy as np

from . import __version__, export, ingest, mem, prep, rvol, sim, vmem
from .errors import DataError, EstimationError, SchemaError, VolmemError

MANIFEST_SCHEMA_VERSION = 1


# ---------------------------------------------------------------------------
# config

@dataclass(frozen=True)
class RunConfig:
    """One pipeline run: instruments, estimator, model, outputs."""

    instruments: tuple = ()          # ({"name": ..., "ticks": ...}, ...)
    start: int | None = None         # epoch seconds, grid-aligned below
    end: int | None = None
    estimator: str = "preavg"
    theta: float = 0.4
    debias: bool = False
    activity_threshold: float = 0.20
    statistic: str = "mean"
    winsor_tail: float = 0.0005
    p: int = 1
    q: int = 1
    zones: bool = False
    level: float = 0.01
    seed: int = 0
    n_starts: int = 3
    out_dir: str = "out"
    hist_bins: int = 60
    hist_exclude_zeros: bool = True

    def __post_init__(self):
        names = [i["name"] for i in self.instruments]
        if len(set(names)) != len(names):
            raise SchemaError(f"instrument names must be unique, got {names}")
        if self.start is not None and self.end is not None and self.end <= self.start:
            raise SchemaError(f"empty date range: start {self.start} >= end {self.end}")

    def rv_config(self) -> rvol.RvConfig:
        return rvol.RvConfig(
            estimator=self.estimator,
            theta=self.theta,
            debias=self.debias,
            activity_threshold=self.activity_threshold,
        )

    def mem_spec(self) -> mem.MemSpec:
        return mem.MemSpec(p=self.p, q=self.q)


def _parse_when(v) -> int | None:
    if v is None:
        return None
    if isinstance(v, (int, float)):
        return int(v)
    s = str(v).strip()
    try:
        return int(s)
    except ValueError:
        pass
    try:
        dt = datetime.datetime.strptime(s, "%Y-%m-%d").replace(tzinfo=datetime.timezone.utc)
    except ValueError:
        raise SchemaError(f"cannot parse time {v!r}; use epoch seconds or YYYY-MM-DD") from None
    return int(dt.timestamp())


def config_from_dict(d: dict) -> RunConfig:
    known = set(RunConfig.__dataclass_fields__)
    unknown = sorted(set(d) - known)
    if unknown:
        raise SchemaError(f"unknown config keys: {', '.join(unknown)}")
    d = dict(d)
    for inst in d.get("instruments", ()):
        if not isinstance(inst, dict) or set(inst) != {"name", "ticks"}:
            raise SchemaError("each instrument needs exactly the keys 'name' and 'ticks'")
    d["instruments"] = tuple(dict(i) for i in d.get("instruments", ()))
    d["start"] = _parse_when(d.get("start"))
    d["end"] = _parse_when(d.get("end"))
    return RunConfig(**d)


def load_config(path) -> RunConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
    except json.JSONDecodeError as e:
        raise SchemaError(f"{path}: invalid JSON: {e}") from None
    if not isinstance(raw, dict):
        raise SchemaError(f"{path}: config must be a JSON object")
    return config_from_dict(raw)


def config_to_dict(cfg: RunConfig) -> dict:
    d = asdict(cfg)
    d["instruments"] = [dict(i) for i in cfg.instruments]
    return d


def config_hash(cfg: RunConfig) -> str:
    blob = json.dumps(config_to_dict(cfg), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()


def _override(cfg: RunConfig, args, fields: tuple) -> RunConfig:
    updates = {}
    for f in fields:
        v = getattr(args, f.replace("-", "_"), None)
        if v is not None:
            updates[f] = v
    return replace(cfg, **updates) if updates else cfg


# ---------------------------------------------------------------------------
# atomic artifact writing

def _finalize(tmp: str, final: str) -> None:
    os.replace(tmp, final)


def write_artifact(path: str, writer) -> str:
    """Run ``writer(tmp_path)`` against ``path + '.partial'`` and move the
    result into place; a failed write leaves only the .partial file."""
    tmp = str(path) + ".partial"
    writer(tmp)
    _finalize(tmp, str(path))
    return str(path)


def _write_json(path: str, payload: dict) -> str:
    def writer(tmp):
        with open(tmp, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, sort_keys=True, indent=2, allow_nan=True)
            fh.write("\n")

    return write_artifact(path, writer)


# ---------------------------------------------------------------------------
# stages

def _load_seconds(cfg: RunConfig) -> dict:
    if not cfg.instruments:
        raise SchemaError("config lists no instruments")
    ticks = {}
    for inst in cfg.instruments:
        ticks[inst["name"]] = ingest.parse_ticks(inst["ticks"], instrument=inst["name"])
    w = ingest.WINDOW_SECONDS
    first = min(int(t.ts_ns[0] // ingest.NS_PER_S) for t in ticks.values())
    last = max(int(t.ts_ns[-1] // ingest.NS_PER_S) for t in ticks.values())
    start = cfg.start if cfg.start is not None else (first // w) * w
    end = cfg.end if cfg.end is not None else ((last + w) // w) * w
    if end <= start:
        raise DataError(f"empty time range [{start}, {end})")
    return {name: ingest.align_to_grid(t, start, end) for name, t in ticks.items()}


def _raw_rv_panel(cfg: RunConfig, seconds: dict) -> prep.Panel:
    rv_cfg = cfg.rv_config()
    series = [prep.rv_series(sec, rv_cfg) for sec in seconds.values()]
    return prep.build_panel(series)


def _adjust_panel(cfg: RunConfig, raw: prep.Panel):
    adjusted = []
    reports = {}
    for name in raw.instruments:
        k = raw.column(name)
        s = prep.IntervalSeries(
            instrument=name,
            times=raw.times,
            values=raw.values[:, k],
            zeroed=raw.zero_mask[:, k],
            neg_return=raw.neg_mask[:, k],
        )
        profile = prep.diurnal_factors(s, statistic=cfg.statistic)
        adj = prep.diurnal_adjust(s, profile)
        adj = prep.winsorize_series(adj, tail=cfg.winsor_tail)
        adjusted.append(adj)
        reports[name] = {
            "statistic": profile.statistic,
            "factors": [float(f) for f in profile.factors],
            "floored_slots": list(profile.floored_slots),
        }
    return prep.build_panel(adjusted), reports


def _series_of(panel: prep.Panel, name: str) -> prep.IntervalSeries:
    k = panel.column(name)
    return prep.IntervalSeries(
        instrument=name,
        times=panel.times,
        values=panel.values[:, k],
        zeroed=panel.zero_mask[:, k],
        neg_return=panel.neg_mask[:, k],
    )


def run_pipeline(cfg: RunConfig) -> int:
    """Full run; returns the process exit code. Artifacts land in
    ``cfg.out_dir``; any stage failure names the stage on stderr."""
    os.makedirs(cfg.out_dir, exist_ok=True)
    outputs = []
    all_converged = True
    stage = "ingest"
    try:
        seconds = _load_seconds(cfg)

        stage = "rv"
        raw = _raw_rv_panel(cfg, seconds)
        outputs.append(write_artifact(os.path.join(cfg.out_dir, "rv_panel.csv"),
                                      lambda p: prep.write_panel_csv(p, raw)))
        outputs.append(write_artifact(os.path.join(cfg.out_dir, "rv_panel.json"),
                                      lambda p: prep.write_panel_json(p, raw)))

        stage = "adjust"
        panel, reports = _adjust_panel(cfg, raw)
        outputs.append(write_artifact(os.path.join(cfg.out_dir, "panel.csv"),
                                      lambda p: prep.write_panel_csv(p, panel)))
        outputs.append(write_artifact(os.path.join(cfg.out_dir, "panel.json"),
                                      lambda p: prep.write_panel_json(p, panel)))
        for name, rep in reports.items():
            outputs.append(_write_json(os.path.join(cfg.out_dir, f"diurnal_{name}.json"), rep))

        stage = "fit-uni"
        spec = cfg.mem_spec()
        for name in panel.instruments:
            s = _series_of(panel, name)
            fit = mem.fit_logmem(s.values, s.neg_return, spec,
                                 n_starts=cfg.n_starts, seed=cfg.seed)
            all_converged = all_converged and fit.converged
            path = os.path.join(cfg.out_dir, f"fit_{name}.json")
            outputs.append(write_artifact(path, fit.to_json))

        stage = "fit-multi"
        vfit = vmem.fit_vlogmem(panel, spec, zones=False, level=cfg.level,
                                n_starts=cfg.n_starts, seed=cfg.seed)
        all_converged = all_converged and bool(vfit.converged.all())
        outputs.append(write_artifact(os.path.join(cfg.out_dir, "vfit.json"), vfit.to_json))
        if cfg.zones:
            vfit_z = vmem.fit_vlogmem(panel, spec, zones=True, level=cfg.level,
                                      n_starts=cfg.n_starts, seed=cfg.seed)
            all_converged = all_converged and bool(vfit_z.converged.all())
            doc = vfit_z.to_dict()
            doc["zone_totals"] = {z: vmem.zone_totals(vfit_z, z) for z in prep.ZONES}
            outputs.append(_write_json(os.path.join(cfg.out_dir, "vfit_zones.json"), doc))

        stage = "spillover"
        spill = vmem.spillover_summary(vfit, level=cfg.level)
        outputs.append(_write_json(os.path.join(cfg.out_dir, "spillover.json"), {
            "to_sums": spill.to_sums,
            "from_sums": spill.from_sums,
            "total_offdiag_abs": spill.total_offdiag_abs,
            "significance_level": spill.significance_level,
        }))

        stage = "export"
        graph = export.export_flow_graph(vfit, level=cfg.level)
        outputs.append(write_artifact(os.path.join(cfg.out_dir, "flowgraph.json"), graph.to_json))
        for name in raw.instruments:
            prof = export.intraday_profile(_series_of(raw, name), statistic=cfg.statistic)
            outputs.append(write_artifact(
                os.path.join(cfg.out_dir, f"profile_{name}.csv"),
                lambda p, pr=prof: export.write_profile_csv(p, pr)))
            hist = export.export_histogram(
                _series_of(raw, name), _series_of(panel, name),
                bins=cfg.hist_bins, exclude_zeros=cfg.hist_exclude_zeros)
            outputs.append(write_artifact(
                os.path.join(cfg.out_dir, f"hist_{name}.csv"),
                lambda p, h=hist: export.write_histogram_csv(p, h)))

        stage = "manifest"
        manifest = {
            "schema_version": MANIFEST_SCHEMA_VERSION,
            "created_utc": datetime.datetime.now(datetime.timezone.utc).isoformat(),
            "package_version": __version__,
            "config": config_to_dict(cfg),
            "config_hash": config_hash(cfg),
            "outputs": sorted(os.path.basename(p) for p in outputs),
            "converged": all_converged,
        }
        _write_json(os.path.join(cfg.out_dir, "manifest.json"), manifest)
    except Exception as e:
        print(f"stage {stage} failed: {e}", file=sys.stderr)
        raise
    return 0 if all_converged else 1


# ---------------------------------------------------------------------------
# subcommands

def _config_from_args(args, need_instruments: bool = True) -> RunConfig:
    if getattr(args, "config", None):
        cfg = load_config(args.config)
    else:
        cfg = RunConfig()
    names = getattr(args, "name", None) or []
    paths = getattr(args, "ticks", None) or []
    if names or paths:
        if len(names) != len(paths):
            raise SchemaError("--ticks and --name must be given in pairs")
        cfg = replace(cfg, instruments=tuple({"name": n, "ticks": t} for n, t in zip(names, paths)))
    cfg = _override(cfg, args, (
        "estimator", "theta", "activity_threshold", "statistic", "winsor_tail",
        "p", "q", "level", "seed", "n_starts", "out_dir",
    ))
    start = _parse_when(getattr(args, "start", None))
    end = _parse_when(getattr(args, "end", None))
    if start is not None:
        cfg = replace(cfg, start=start)
    if end is not None:
        cfg = replace(cfg, end=end)
    if getattr(args, "debias", False):
        cfg = replace(cfg, debias=True)
    if getattr(args, "zones", False):
        cfg = replace(cfg, zones=True)
    if need_instruments and not cfg.instruments:
        raise SchemaError("no instruments given: use --config or --ticks/--name pairs")
    return cfg


def cmd_ingest(args) -> int:
    cfg = _config_from_args(args)
    os.makedirs(cfg.out_dir, exist_ok=True)
    summary = {}
    for inst in cfg.instruments:
        ticks = ingest.parse_ticks(inst["ticks"], instrument=inst["name"])
        out = os.path.join(cfg.out_dir, f"clean_{inst['name']}.csv")
        write_artifact(out, lambda p, t=ticks: ingest.write_ticks_csv(p, t))
        summary[inst["name"]] = {
            "rows": int(ticks.ts_ns.size),
            "rejected": int(ticks.rejected_rows),
            "first_s": int(ticks.ts_ns[0] // ingest.NS_PER_S),
            "last_s": int(ticks.ts_ns[-1] // ingest.NS_PER_S),
        }
    print(json.dumps(summary, sort_keys=True, indent=2))
    return 0


def cmd_rv(args) -> int:
    cfg = _config_from_args(args)
    os.makedirs(cfg.out_dir, exist_ok=True)
    seconds = _load_seconds(cfg)
    raw = _raw_rv_panel(cfg, seconds)
    write_artifact(os.path.join(cfg.out_dir, "rv_panel.csv"),
                   lambda p: prep.write_panel_csv(p, raw))
    write_artifact(os.path.join(cfg.out_dir, "rv_panel.json"),
                   lambda p: prep.write_panel_json(p, raw))
    print(f"wrote rv panel: {raw.T} rows x {raw.K} instruments ({cfg.estimator})")
    return 0


def _read_panel_arg(path) -> prep.Panel:
    if str(path).endswith(".json"):
        return prep.read_panel_json(path)
    return prep.read_panel_csv(path)


def cmd_adjust(args) -> int:
    cfg = _config_from_args(args, need_instruments=False)
    os.makedirs(cfg.out_dir, exist_ok=True)
    raw = _read_panel_arg(args.panel)
    panel, reports = _adjust_panel(cfg, raw)
    write_artifact(os.path.join(cfg.out_dir, "panel.csv"),
                   lambda p: prep.write_panel_csv(p, panel))
    write_artifact(os.path.join(cfg.out_dir, "panel.json"),
                   lambda p: prep.write_panel_json(p, panel))
    for name, rep in reports.items():
        _write_json(os.path.join(cfg.out_dir, f"diurnal_{name}.json"), rep)
    print(f"adjusted panel: {panel.T} rows x {panel.K} instruments")
    return 0


def cmd_fit_uni(args) -> int:
    cfg = _config_from_args(args, need_instruments=False)
    os.makedirs(cfg.out_dir, exist_ok=True)
    panel = _read_panel_arg(args.panel)
    spec = cfg.mem_spec()
    ok = True
    for name in panel.instruments:
        s = _series_of(panel, name)
        fit = mem.fit_logmem(s.values, s.neg_return, spec, n_starts=cfg.n_starts, seed=cfg.seed)
        ok = ok and fit.converged
        write_artifact(os.path.join(cfg.out_dir, f"fit_{name}.json"), fit.to_json)
        hl = fit.half_life_minutes
        print(f"{name}: loglik {fit.loglik:.2f} bic {fit.bic:.2f} "
              f"half-life {hl:.1f} min converged {fit.converged}")
    return 0 if ok else 1


def cmd_fit_multi(args) -> int:
    cfg = _config_from_args(args, need_instruments=False)
    os.makedirs(cfg.out_dir, exist_ok=True)
    panel = _read_panel_arg(args.panel)
    vfit = vmem.fit_vlogmem(panel, cfg.mem_spec(), zones=False, level=cfg.level,
                            n_starts=cfg.n_starts, seed=cfg.seed)
    write_artifact(os.path.join(cfg.out_dir, "vfit.json"), vfit.to_json)
    sig = vfit.significant(vfit.params.A_lags[0], vfit.pv_A_lags[0])
    print(f"lag-1 significant entries at {cfg.level:g}: {int(np.count_nonzero(sig))}")
    return 0 if vfit.converged.all() else 1


def cmd_fit_intraday(args) -> int:
    cfg = _config_from_args(args, need_instruments=False)
    os.makedirs(cfg.out_dir, exist_ok=True)
    panel = _read_panel_arg(args.panel)
    vfit = vmem.fit_vlogmem(panel, cfg.mem_spec(), zones=True, level=cfg.level,
                            n_starts=cfg.n_starts, seed=cfg.seed)
    doc = vfit.to_dict()
    doc["zone_totals"] = {z: vmem.zone_totals(vfit, z) for z in prep.ZONES}
    _write_json(os.path.join(cfg.out_dir, "vfit_zones.json"), doc)
    for z in prep.ZONES:
        t = doc["zone_totals"][z]
        print(f"{z}: off-diagonal {t['total_offdiag_abs']:.4f} diagonal {t['total_diag']:.4f}")
    return 0 if vfit.converged.all() else 1


def _load_vfit(path) -> vmem.VFitResult:
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as e:
        raise SchemaError(f"{path}: invalid JSON: {e}") from None
    return vmem.vfit_from_dict(doc)


def cmd_spillover(args) -> int:
    vfit = _load_vfit(args.fit)
    level = args.level if args.level is not None else vfit.significance_level
    spill = vmem.spillover_summary(vfit, level=level)
    payload = {
        "to_sums": spill.to_sums,
        "from_sums": spill.from_sums,
        "total_offdiag_abs": spill.total_offdiag_abs,
        "significance_level": spill.significance_level,
    }
    if args.out:
        _write_json(args.out, payload)
    print(json.dumps(payload, sort_keys=True, indent=2))
    return 0


def cmd_shock(args) -> int:
    vfit = _load_vfit(args.fit)
    kwargs = {}
    if args.multiplier is not None:
        kwargs["multiplier"] = args.multiplier
    elif args.sd is not None and args.sd != "fitted":
        kwargs["sd"] = float(args.sd)
    responses = vmem.shock_response(vfit, args.source, **kwargs)
    if args.out:
        _write_json(args.out, {"source": args.source, "responses": responses})
    for name in vfit.instruments:
        marker = " (source)" if name == args.source else ""
        print(f"{name}: {100.0 * responses[name]:+.2f}%{marker}")
    return 0


def cmd_simulate(args) -> int:
    os.makedirs(args.out_dir, exist_ok=True)
    if args.kind == "ticks":
        cfg = sim.SimConfig(
            seed=args.seed, T=args.seconds, instrument=args.name,
            annual_vol=args.annual_vol, jump_intensity=args.jump_intensity,
            jump_size=args.jump_size, arrival_prob=args.arrival,
        )
        ticks = sim.simulate_ticks(cfg)
        out = os.path.join(args.out_dir, f"{args.name.lower()}_ticks.csv")
        write_artifact(out, lambda p: ingest.write_ticks_csv(p, ticks))
        print(f"wrote {out}: {ticks.ts_ns.size} ticks over {args.seconds} seconds")
    else:
        params = mem.ParamSet(
            omega=args.omega, alpha=(args.alpha,), alpha0=(args.alpha0,),
            gamma=args.gamma, beta=(args.beta,), s=args.s, p_plus=args.p_plus,
        )
        cfg = sim.SimConfig(seed=args.seed, T=args.T, params=params, instrument=args.name)
        series = sim.simulate_logmem(cfg)
        panel = prep.build_panel([series])
        out = os.path.join(args.out_dir, f"{args.name.lower()}_mem.csv")
        write_artifact(out, lambda p: prep.write_panel_csv(p, panel))
        print(f"wrote {out}: {len(series)} intervals")
    return 0


def cmd_export(args) -> int:
    cfg = _config_from_args(args, need_instruments=False)
    os.makedirs(cfg.out_dir, exist_ok=True)
    vfit = _load_vfit(args.fit)
    graph = export.export_flow_graph(vfit, level=args.level)
    write_artifact(os.path.join(cfg.out_dir, "flowgraph.json"), graph.to_json)
    n_files = 1
    if args.panel_raw:
        raw = _read_panel_arg(args.panel_raw)
        for name in raw.instruments:
            prof = export.intraday_profile(_series_of(raw, name), statistic=cfg.statistic)
            write_artifact(os.path.join(cfg.out_dir, f"profile_{name}.csv"),
                           lambda p, pr=prof: export.write_profile_csv(p, pr))
            n_files += 1
        if args.panel_adjusted:
            panel = _read_panel_arg(args.panel_adjusted)
            for name in raw.instruments:
                hist = export.export_histogram(
                    _series_of(raw, name), _series_of(panel, name),
                    bins=cfg.hist_bins, exclude_zeros=cfg.hist_exclude_zeros)
                write_artifact(os.path.join(cfg.out_dir, f"hist_{name}.csv"),
                               lambda p, h=hist: export.write_histogram_csv(p, h))
                n_files += 1
    print(f"wrote {n_files} export file(s): {len(graph.edges)} edges, "
          f"{len(graph.self_loops)} self-loops")
    return 0


def cmd_run(args) -> int:
    cfg = _config_from_args(args)
    return run_pipeline(cfg)


def cmd_demo(args) -> int:
    os.makedirs(args.out_dir, exist_ok=True)
    data_dir = os.path.join(args.out_dir, "data")
    os.makedirs(data_dir, exist_ok=True)
    paths = sim.demo_dataset(data_dir, seed=args.seed, days=args.days)
    names = [os.path.basename(p).split("_")[0].upper() for p in paths]
    cfg = RunConfig(
        instruments=tuple({"name": n, "ticks": p} for n, p in zip(names, paths)),
        seed=args.seed,
        out_dir=os.path.join(args.out_dir, "artifacts"),
        n_starts=args.n_starts,
    )
    cfg_path = os.path.join(args.out_dir, "config.json")
    _write_json(cfg_path, config_to_dict(cfg))
    print(f"demo dataset: {', '.join(paths)}")
    print(f"config: {cfg_path}")
    if args.run:
        return run_pipeline(cfg)
    return 0


# ---------------------------------------------------------------------------
# parser

def _add_common(sp, *, config=True, out_dir=True, seed=True):
    if config:
        sp.add_argument("--config", help="JSON config file; flags override it")
    if out_dir:
        sp.add_argument("--out-dir", help="artifact directory")
    if seed:
        sp.add_argument("--seed", type=int, help="RNG seed")


def _add_instrument_args(sp):
    sp.add_argument("--ticks", action="append", help="tick CSV path (repeat with --name)")
    sp.add_argument("--name", action="append", help="instrument name for the matching --ticks")
    sp.add_argument("--start", help="range start, epoch seconds or YYYY-MM-DD")
    sp.add_argument("--end", help="range end, epoch seconds or YYYY-MM-DD")


def _add_estimator_args(sp):
    sp.add_argument("--estimator", choices=list(rvol.ESTIMATORS), help="realised-volatility estimator")
    sp.add_argument("--theta", type=float, help="pre-averaging bandwidth parameter")
    sp.add_argument("--debias", action="store_true", default=None, help="small-sample debias scaling")
    sp.add_argument("--activity-threshold", type=float, help="zeroing threshold on active-second fraction")


def _add_model_args(sp):
    sp.add_argument("-p", type=int, dest="p", help="short-memory lag order")
    sp.add_argument("-q", type=int, dest="q", help="long-memory lag order")
    sp.add_argument("--level", type=float, help="significance level")
    sp.add_argument("--n-starts", type=int, help="optimizer multi-starts")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="volmem",
        description="five-minute realised-volatility panels and cross-venue LogMEM fits",
    )
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("ingest", help="validate tick files and write cleaned copies")
    _add_common(sp)
    _add_instrument_args(sp)
    sp.set_defaults(func=cmd_ingest)

    sp = sub.add_parser("rv", help="build the raw realised-volatility panel")
    _add_common(sp)
    _add_instrument_args(sp)
    _add_estimator_args(sp)
    sp.set_defaults(func=cmd_rv)

    sp = sub.add_parser("adjust", help="diurnally adjust and winsorize a panel")
    _add_common(sp)
    sp.add_argument("--panel", required=True, help="raw panel CSV/JSON")
    sp.add_argument("--statistic", choices=("mean", "median"), help="per-slot statistic")
    sp.add_argument("--winsor-tail", type=float, help="upper tail fraction to clip")
    sp.set_defaults(func=cmd_adjust)

    sp = sub.add_parser("fit-uni", help="univariate fits, one JSON per instrument")
    _add_common(sp)
    sp.add_argument("--panel", required=True, help="adjusted panel CSV/JSON")
    _add_model_args(sp)
    sp.set_defaults(func=cmd_fit_uni)

    sp = sub.add_parser("fit-multi", help="cross-instrument system fit")
    _add_common(sp)
    sp.add_argument("--panel", required=True, help="adjusted panel CSV/JSON")
    _add_model_args(sp)
    sp.set_defaults(func=cmd_fit_multi)

    sp = sub.add_parser("fit-intraday", help="system fit with trading-zone interactions")
    _add_common(sp)
    sp.add_argument("--panel", required=True, help="adjusted panel CSV/JSON")
    _add_model_args(sp)
    sp.set_defaults(func=cmd_fit_intraday)

    sp = sub.add_parser("spillover", help="To/From sums from a system-fit JSON")
    sp.add_argument("--fit", required=True, help="system-fit JSON")
    sp.add_argument("--level", type=float, help="significance level")
    sp.add_argument("--out", help="write summary JSON here")
    sp.set_defaults(func=cmd_spillover)

    sp = sub.add_parser("shock", help="per-target response to a one-venue shock")
    sp.add_argument("--fit", required=True, help="system-fit JSON")
    sp.add_argument("--source", required=True, help="shocked instrument")
    sp.add_argument("--sd", nargs="?", const="fitted",
                    help="shock of one conditional SD (optionally an explicit s)")
    sp.add_argument("--multiplier", type=float, help="explicit shock multiplier")
    sp.add_argument("--out", help="write responses JSON here")
    sp.set_defaults(func=cmd_shock)

    sp = sub.add_parser("simulate", help="synthetic ticks or MEM series")
    sp.add_argument("--kind", choices=("ticks", "mem"), default="ticks")
    sp.add_argument("--out-dir", default="out")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--name", default="SIM")
    sp.add_argument("--seconds", type=int, default=86_400, help="ticks: path length")
    sp.add_argument("--annual-vol", type=float, default=0.70)
    sp.add_argument("--jump-intensity", type=float, default=0.0)
    sp.add_argument("--jump-size", type=float, default=0.0)
    sp.add_argument("--arrival", type=float, default=1.0)
    sp.add_argument("--T", type=int, default=10_000, help="mem: interval count")
    sp.add_argument("--omega", type=float, default=0.0)
    sp.add_argument("--alpha", type=float, default=0.35)
    sp.add_argument("--alpha0", type=float, default=0.0)
    sp.add_argument("--gamma", type=float, default=0.0)
    sp.add_argument("--beta", type=float, default=0.55)
    sp.add_argument("--s", type=float, default=0.30)
    sp.add_argument("--p-plus", type=float, default=1.0)
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("export", help="flow graph, profiles, histograms from results")
    _add_common(sp, seed=False)
    sp.add_argument("--fit", required=True, help="system-fit JSON")
    sp.add_argument("--panel-raw", help="raw panel for profiles/histograms")
    sp.add_argument("--panel-adjusted", help="adjusted panel for histograms")
    sp.add_argument("--level", type=float, help="significance level")
    sp.add_argument("--statistic", choices=("mean", "median"), help="profile statistic")
    sp.set_defaults(func=cmd_export)

    sp = sub.add_parser("run", help="full pipeline from one config")
    _add_common(sp)
    _add_instrument_args(sp)
    _add_estimator_args(sp)
    _add_model_args(sp)
    sp.add_argument("--statistic", choices=("mean", "median"), help="per-slot statistic")
    sp.add_argument("--zones", action="store_true", default=None, help="add trading-zone fit")
    sp.set_defaults(func=cmd_run)

    sp = sub.add_parser("demo", help="generate a bundled synthetic dataset")
    sp.add_argument("--out-dir", default="demo")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--days", type=float, default=3.0)
    sp.add_argument("--n-starts", type=int, default=1)
    sp.add_argument("--run", action="store_true", help="run the pipeline on it")
    sp.set_defaults(func=cmd_demo)

    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (SchemaError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except (DataError, EstimationError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except VolmemError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
