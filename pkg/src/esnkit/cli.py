"""Command-line entry point: generate | spectrum | memory | psd |
benchmark | adapt | verify.

Every command reads a JSON config (flags override fields), writes its
artifacts under an output directory, and records a manifest carrying the
config hash, toolkit version, and file checksums. Exit codes: 0 success,
2 config error, 3 data error, 4 numeric failure.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .adapt import (
    DEFAULT_DENSITY_GRID,
    build_response_table,
    match_signal,
    validate_and_combine,
)
from .benchmarks import benchmark, cycle_evaluator
from .errors import ConfigError, DataError, EsnKitError
from .metrics import bin_by_lambda, memory_capacity
from .reservoirs import Normalization, make_reservoir
from .signals import periodogram, reservoir_response
from .spectral import avg_modulus, spectrum_report
from .storage import (
    load_matrix,
    load_reservoir,
    memory_profile_to_dict,
    psd_to_csv,
    psd_to_dict,
    read_json,
    save_reservoir,
    spectrum_to_dict,
    write_json,
)
from .tasks import (
    gen_synthetic_classification,
    load_arabic_digits,
    load_laser,
    mackey_glass_bundle,
    sine_mixture_bundle,
)

CACHE_ENV = "ESNKIT_CACHE_DIR"


# ---------------------------------------------------------------------------
# config plumbing
# ---------------------------------------------------------------------------

def _canonical(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def config_hash(cfg: dict) -> str:
    return hashlib.sha256(_canonical(cfg).encode()).hexdigest()[:16]


def _load_config(args) -> dict:
    cfg = {}
    if args.config:
        path = Path(args.config)
        if not path.exists():
            raise ConfigError(f"config file not found: {path}")
        cfg = read_json(path)
    for item in args.set or []:
        if "=" not in item:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        key, _, raw = item.partition("=")
        try:
            value = json.loads(raw)
        except json.JSONDecodeError:
            value = raw
        node = cfg
        parts = key.split(".")
        for part in parts[:-1]:
            node = node.setdefault(part, {})
        node[parts[-1]] = value
    return cfg


def _file_sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _write_manifest(outdir: Path, command: str, cfg: dict,
                    started: float) -> None:
    outputs = {p.name: _file_sha256(p) for p in sorted(outdir.iterdir())
               if p.is_file() and p.name != "manifest.json"}
    write_json({
        "command": command,
        "config": cfg,
        "config_hash": config_hash(cfg),
        "version": __version__,
        "outputs": outputs,
        "wall_clock_s": round(time.time() - started, 3),
        "created_utc": datetime.now(timezone.utc).isoformat(),
    }, outdir / "manifest.json")


def _outdir(args) -> Path:
    out = Path(args.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _cache_dir(args) -> Path | None:
    raw = getattr(args, "cache_dir", None) or os.environ.get(CACHE_ENV)
    return Path(raw) if raw else None


# ---------------------------------------------------------------------------
# reservoir / task construction from config
# ---------------------------------------------------------------------------

def reservoir_from_config(cfg: dict, seed):
    """Build a reservoir from its JSON description."""
    cfg = dict(cfg)
    family = cfg.pop("family", "ER")
    norm = cfg.pop("normalization", None)
    if isinstance(norm, dict):
        cfg["normalization"] = Normalization(**norm)
    elif norm is not None:
        cfg["normalization"] = norm
    if "cycle_density" in cfg and isinstance(cfg["cycle_density"], dict):
        cfg["cycle_density"] = {int(k): float(v)
                                for k, v in cfg["cycle_density"].items()}
    if family.upper() != "DELAY_LINE":
        cfg["seed"] = seed
    return make_reservoir(family, **cfg)


def task_from_config(cfg: dict):
    cfg = dict(cfg)
    name = cfg.pop("name", None)
    if name == "mackey-glass":
        return mackey_glass_bundle(**cfg)
    if name == "laser":
        return load_laser(cfg["path"])
    if name == "sine-mixture":
        return sine_mixture_bundle(**cfg)
    if name == "synthetic-classification":
        return gen_synthetic_classification(**cfg)
    if name == "arabic-digits":
        return load_arabic_digits(cfg["train_path"], cfg["test_path"])
    raise ConfigError(f"unknown task {name!r}")


def _apply_sweep(res_cfg: dict, param: str, value):
    cfg = dict(res_cfg)
    if param == "alpha":
        cfg["normalization"] = {"mode": "spectral_radius", "value": value}
    elif param == "avg_modulus":
        cfg["normalization"] = {"mode": "avg_modulus", "value": value}
    elif param.startswith("cycle_density:"):
        length = param.split(":", 1)[1]
        densities = dict(cfg.get("cycle_density", {}))
        densities[length] = value
        cfg["cycle_density"] = densities
    else:
        cfg[param] = value
    return cfg


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_generate(args) -> int:
    started = time.time()
    cfg = _load_config(args)
    if "reservoir" not in cfg:
        raise ConfigError("config must contain a 'reservoir' section")
    outdir = _outdir(args)
    res_cfg = cfg["reservoir"]
    reservoir = reservoir_from_config(res_cfg, res_cfg.get("seed", 0))
    save_reservoir(reservoir, outdir / "reservoir")
    _write_manifest(outdir, "generate", cfg, started)
    print(f"wrote reservoir ({reservoir.meta.family}, n={reservoir.n}) "
          f"to {outdir}")
    return 0


def cmd_spectrum(args) -> int:
    started = time.time()
    outdir = _outdir(args)
    path = Path(args.matrix)
    if path.suffix == ".json":
        W = load_reservoir(path).W
    else:
        W = load_matrix(path)
    report = spectrum_report(W, n_bins=args.bins)
    doc = spectrum_to_dict(report)
    doc["source"] = path.name
    write_json(doc, outdir / "spectrum.json")
    _write_manifest(outdir, "spectrum", {"matrix": str(path),
                                         "bins": args.bins}, started)
    print(f"spectral_radius={report.spectral_radius:.6f} "
          f"avg_modulus={report.avg_modulus:.6f}")
    return 0


def cmd_memory(args) -> int:
    started = time.time()
    cfg = _load_config(args)
    if "reservoir" not in cfg:
        raise ConfigError("config must contain a 'reservoir' section")
    outdir = _outdir(args)
    ensemble = int(cfg.get("ensemble", 1))
    seed_base = int(cfg.get("seed_base", 0))
    rows = []
    for member in range(ensemble):
        reservoir = reservoir_from_config(cfg["reservoir"], [seed_base, member])
        profile = memory_capacity(
            reservoir,
            T=int(cfg.get("T", 4000)),
            tau_max=cfg.get("tau_max"),
            seed=[seed_base, member, 1],
            input_kind=cfg.get("input_kind", "uniform"),
        )
        doc = memory_profile_to_dict(profile)
        doc.update(member=member, avg_modulus=avg_modulus(reservoir.W),
                   config_hash=config_hash(cfg))
        rows.append(doc)
    write_json({"config_hash": config_hash(cfg), "members": rows},
               outdir / "memory.json")
    with open(outdir / "memory.csv", "w") as fh:
        fh.write(f"# config_hash={config_hash(cfg)}\n")
        fh.write("member,avg_modulus,total_memory\n")
        for doc in rows:
            fh.write(f"{doc['member']},{doc['avg_modulus']:.8f},"
                     f"{doc['total']:.8f}\n")
    _write_manifest(outdir, "memory", cfg, started)
    totals = [doc["total"] for doc in rows]
    print(f"memory capacity over {ensemble} members: "
          f"median={np.median(totals):.3f}")
    return 0


def cmd_psd(args) -> int:
    started = time.time()
    outdir = _outdir(args)
    if bool(args.input) == bool(args.reservoir):
        raise ConfigError("pass exactly one of --input or --reservoir")
    if args.input:
        series = np.loadtxt(args.input)
        if series.ndim != 1:
            raise DataError("input series must be one value per line")
        profile = periodogram(series)
        source = {"input": str(args.input)}
    else:
        reservoir = load_reservoir(args.reservoir)
        profile = reservoir_response(reservoir, n_trials=args.trials,
                                     T=args.samples, seed=args.seed)
        source = {"reservoir": str(args.reservoir), "trials": args.trials,
                  "samples": args.samples, "seed": args.seed}
    psd_to_csv(profile, outdir / "psd.csv")
    doc = psd_to_dict(profile)
    doc["source"] = source
    write_json(doc, outdir / "psd.json")
    _write_manifest(outdir, "psd", source, started)
    print(f"wrote {outdir / 'psd.csv'} ({len(profile.freqs)} bins)")
    return 0


def _benchmark_member(payload) -> tuple[int, int, float, float, float]:
    """Worker for one ensemble member; top-level for process pools."""
    bundle, res_cfg, sweep_idx, value, seed_parts, ridge = payload
    reservoir = reservoir_from_config(res_cfg, seed_parts)
    score = benchmark(bundle, reservoir, ridge=ridge)
    return (sweep_idx, seed_parts[-1], float(value if value is not None else 0),
            avg_modulus(reservoir.W), score)


def cmd_benchmark(args) -> int:
    started = time.time()
    cfg = _load_config(args)
    for key in ("task", "reservoir"):
        if key not in cfg:
            raise ConfigError(f"config must contain a {key!r} section")
    outdir = _outdir(args)
    bundle = task_from_config(cfg["task"])
    base_cfg = dict(cfg["reservoir"])
    defaults = bundle.esn_defaults
    base_cfg.setdefault("n", defaults.n)
    if base_cfg.get("family", "ER").upper() in ("ER", "SF", "PLW"):
        base_cfg.setdefault("avg_degree", defaults.avg_degree)
        base_cfg.setdefault("normalization",
                            {"mode": "spectral_radius", "value": defaults.alpha})
    base_cfg.setdefault("feedback", defaults.feedback)

    sweep = cfg.get("sweep")
    if sweep:
        points = [(i, sweep["param"], v)
                  for i, v in enumerate(sweep["values"])]
    else:
        points = [(0, None, None)]
    ensemble = int(cfg.get("ensemble", 1))
    seed_base = int(cfg.get("seed_base", 0))
    ridge = float(cfg.get("ridge", 1e-8))

    payloads = []
    for sweep_idx, param, value in points:
        res_cfg = (_apply_sweep(base_cfg, param, value)
                   if param is not None else base_cfg)
        for member in range(ensemble):
            payloads.append((bundle, res_cfg, sweep_idx, value,
                             [seed_base, sweep_idx, member], ridge))

    if args.workers > 1:
        with ProcessPoolExecutor(max_workers=args.workers) as pool:
            results = list(pool.map(_benchmark_member, payloads))
    else:
        results = [_benchmark_member(p) for p in payloads]
    results.sort(key=lambda r: (r[0], r[1]))

    chash = config_hash(cfg)
    with open(outdir / "results.csv", "w") as fh:
        fh.write(f"# config_hash={chash}\n")
        fh.write("sweep_index,member,sweep_value,avg_modulus,performance\n")
        for row in results:
            fh.write(f"{row[0]},{row[1]},{row[2]:.6f},{row[3]:.8f},{row[4]:.8f}\n")

    points_xy = [(r[3], r[4]) for r in results if np.isfinite(r[4])]
    report = {"config_hash": chash, "task": bundle.name,
              "n_runs": len(results)}
    n_bins = int(cfg.get("bins", 10))
    if len(points_xy) >= n_bins:
        report["bins"] = [asdict(b) for b in bin_by_lambda(points_xy, n_bins)]
    by_sweep: dict[float, list[float]] = {}
    for r in results:
        by_sweep.setdefault(r[2], []).append(r[4])
    report["per_sweep_median"] = {
        str(v): float(np.median(scores)) for v, scores in by_sweep.items()}
    write_json(report, outdir / "benchmark.json")
    _write_manifest(outdir, "benchmark", cfg, started)
    print(f"{bundle.name}: {len(results)} runs, "
          f"median performance {np.median([r[4] for r in results]):.4f}")
    return 0


def cmd_adapt(args) -> int:
    started = time.time()
    cfg = _load_config(args)
    if "task" not in cfg:
        raise ConfigError("config must contain a 'task' section")
    outdir = _outdir(args)
    bundle = task_from_config(cfg["task"])
    if isinstance(bundle.train, dict):
        raise ConfigError("adaptation expects a forecasting task")
    defaults = bundle.esn_defaults
    mean_modulus = float(cfg.get("mean_modulus", 0.6))
    gen_params = dict(cfg.get("gen_params", {}))
    gen_params.setdefault("n", defaults.n)
    gen_params.setdefault("connectivity", 2.0 * defaults.avg_degree / defaults.n)
    gen_params.setdefault("normalization",
                          {"mode": "avg_modulus", "value": mean_modulus})

    signal = (np.loadtxt(args.signal) if args.signal
              else np.asarray(bundle.train, dtype=float))
    table = build_response_table(
        gen_params,
        lengths=tuple(cfg.get("lengths", (1, 2, 3))),
        density_grid=tuple(cfg.get("density_grid", DEFAULT_DENSITY_GRID)),
        n_instances=int(cfg.get("n_instances", 10)),
        seed=int(cfg.get("table_seed", 0)),
        T=int(cfg.get("response_samples", 1024)),
        match=(float(np.mean(signal)), float(np.var(signal))),
        cache_dir=_cache_dir(args),
    )
    matched = match_signal(table, signal)

    ridge = float(cfg.get("ridge", 1e-8))
    n_seeds = int(cfg.get("n_seeds", 20))
    evaluate = cycle_evaluator(bundle, mean_modulus=mean_modulus, ridge=ridge)
    baseline = evaluate({}, [[int(cfg.get("seed_base", 0)), i]
                             for i in range(n_seeds)])
    result = validate_and_combine(matched, evaluate, baseline, n_seeds,
                                  seed_base=int(cfg.get("seed_base", 0)))

    report = {
        "config_hash": config_hash(cfg),
        "task": bundle.name,
        "selected": {str(k): v for k, v in result.selected.items()},
        "scores": {str(length): {f"{d:+.4f}": s for d, s in per.items()}
                   for length, per in result.scores.items()},
        "rejected": result.rejected,
        "single_length_medians": {str(k): v for k, v
                                  in result.single_length_medians.items()},
        "baseline_median": result.baseline_median,
        "combined": {str(k): v for k, v in result.combined.items()},
        "combined_score": result.combined_score,
        "combined_median": result.combined_median,
        "candidate_medians": result.candidate_medians,
        "fallback": result.fallback,
    }
    write_json(report, outdir / "adaptation.json")
    _write_manifest(outdir, "adapt", cfg, started)
    print(f"adaptation for {bundle.name}: combined={result.combined} "
          f"fallback={result.fallback}")
    return 0


def cmd_verify(args) -> int:
    outdir = Path(args.report_dir)
    manifest_path = outdir / "manifest.json"
    if not manifest_path.exists():
        raise DataError(f"no manifest in {outdir}")
    manifest = read_json(manifest_path)
    problems = []
    if config_hash(manifest["config"]) != manifest["config_hash"]:
        problems.append("config hash mismatch")
    for name, digest in manifest.get("outputs", {}).items():
        path = outdir / name
        if not path.exists():
            problems.append(f"missing output file {name}")
        elif _file_sha256(path) != digest:
            problems.append(f"checksum mismatch for {name}")
    if problems:
        raise ConfigError("; ".join(problems))
    print(f"{outdir}: manifest verified "
          f"({len(manifest.get('outputs', {}))} files)")
    return 0


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="esnkit",
        description="Build, analyze, and adapt echo state network reservoirs.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("-c", "--config", help="JSON config file")
        p.add_argument("-o", "--output-dir", default=".",
                       help="directory for artifacts (default: cwd)")
        p.add_argument("--set", action="append", metavar="KEY=VALUE",
                       help="override a (dotted) config field")

    p = sub.add_parser("generate", help="generate a reservoir")
    common(p)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("spectrum", help="spectral report for a matrix")
    p.add_argument("matrix", help=".mtx/.csv matrix or reservoir .json")
    p.add_argument("--bins", type=int, default=40)
    p.add_argument("-o", "--output-dir", default=".")
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("memory", help="memory capacity of an ensemble")
    common(p)
    p.set_defaults(func=cmd_memory)

    p = sub.add_parser("psd", help="periodogram of a series or a reservoir's "
                                   "noise response")
    p.add_argument("--input", help="one-value-per-line series file")
    p.add_argument("--reservoir", help="reservoir manifest (.json)")
    p.add_argument("--trials", type=int, default=10)
    p.add_argument("--samples", type=int, default=1024)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-o", "--output-dir", default=".")
    p.set_defaults(func=cmd_psd)

    p = sub.add_parser("benchmark", help="seeded ensemble benchmark sweep")
    common(p)
    p.add_argument("--workers", type=int, default=os.cpu_count() or 1)
    p.set_defaults(func=cmd_benchmark)

    p = sub.add_parser("adapt", help="tune cycle densities to a signal")
    common(p)
    p.add_argument("--signal", help="series file; defaults to the task's "
                                    "training series")
    p.add_argument("--cache-dir", help=f"response-table cache "
                                       f"(or ${CACHE_ENV})")
    p.set_defaults(func=cmd_adapt)

    p = sub.add_parser("verify", help="re-check a report directory against "
                                      "its manifest")
    p.add_argument("report_dir")
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except EsnKitError as exc:
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}),
              file=sys.stderr)
        return exc.exit_code
    except FileNotFoundError as exc:
        print(json.dumps({"error": "FileNotFoundError", "message": str(exc)}),
              file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
