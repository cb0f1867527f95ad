"""Frequency-matching heuristic for picking cycle densities.

Pipeline: measure the average white-noise frequency response of
cycle-enhanced reservoirs over a (length, density) grid; score each grid
point by the inner product of its amplitude response with the target
signal's amplitude spectrum; validate the per-length winners against the
zero-cycle baseline on the actual task; and finally search density
combinations (L1-budgeted to 1) that maximize the summed score.
"""

from __future__ import annotations

import hashlib
import itertools
import json
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Mapping, Sequence

import numpy as np

from .errors import EsnKitError, GenerationError, ParameterError
from .reservoirs import Normalization, gen_cycle_enhanced
from .signals import periodogram, reservoir_response

__all__ = [
    "ResponseTable",
    "AdaptationResult",
    "DEFAULT_DENSITY_GRID",
    "build_response_table",
    "match_signal",
    "validate_and_combine",
]

DEFAULT_DENSITY_GRID = (-0.8, -0.6, -0.4, -0.2, 0.0, 0.2, 0.4, 0.6, 0.8)


@dataclass
class ResponseTable:
    """Averaged reservoir frequency responses on a (length, density) grid.

    All profiles share one frequency grid; ``profiles`` maps
    ``(length, density)`` to an averaged power spectrum.
    """

    freqs: np.ndarray
    profiles: dict[tuple[int, float], np.ndarray]
    lengths: tuple[int, ...]
    density_grid: tuple[float, ...]
    gen_params: dict
    n_instances: int
    seed: int

    def save(self, directory) -> None:
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        index = {
            "lengths": list(self.lengths),
            "density_grid": list(self.density_grid),
            "gen_params": self.gen_params,
            "n_instances": self.n_instances,
            "seed": self.seed,
            "profiles": [],
        }
        np.savetxt(directory / "freqs.csv", self.freqs, header="freq",
                   comments="# ")
        for (length, density), power in sorted(self.profiles.items()):
            name = f"profile_L{length}_rho{density:+.4f}.csv"
            np.savetxt(directory / name,
                       np.column_stack([self.freqs, power]),
                       delimiter=",", header="freq,power", comments="# ")
            index["profiles"].append(
                {"length": length, "density": density, "file": name})
        with open(directory / "index.json", "w") as fh:
            json.dump(index, fh, indent=2, sort_keys=True)

    @classmethod
    def load(cls, directory) -> "ResponseTable":
        directory = Path(directory)
        with open(directory / "index.json") as fh:
            index = json.load(fh)
        freqs = np.loadtxt(directory / "freqs.csv")
        profiles = {}
        for entry in index["profiles"]:
            data = np.loadtxt(directory / entry["file"], delimiter=",")
            profiles[(int(entry["length"]), float(entry["density"]))] = data[:, 1]
        return cls(freqs=freqs, profiles=profiles,
                   lengths=tuple(index["lengths"]),
                   density_grid=tuple(index["density_grid"]),
                   gen_params=index["gen_params"],
                   n_instances=index["n_instances"], seed=index["seed"])


@dataclass
class AdaptationResult:
    """Outcome of the adaptation pipeline.

    ``selected`` holds the per-length argmax choices of the matching step;
    ``combined`` the final configuration, whose densities always satisfy
    ``sum(|rho|) <= 1``; ``rejected`` the lengths dropped by the baseline
    comparison; ``fallback`` is set when every length was dropped.
    ``candidate_medians`` records the benchmark median of every evaluated
    configuration, keyed by a canonical string.
    """

    selected: dict[int, float]
    scores: dict[int, dict[float, float]]
    rejected: list[int] = field(default_factory=list)
    single_length_medians: dict[int, float] = field(default_factory=dict)
    baseline_median: float | None = None
    combined: dict[int, float] = field(default_factory=dict)
    combined_score: float = 0.0
    combined_median: float | None = None
    candidate_medians: dict[str, float] = field(default_factory=dict)
    fallback: bool = False


def build_response_table(gen_params: Mapping, lengths: Sequence[int] = (1, 2, 3),
                         density_grid: Sequence[float] = DEFAULT_DENSITY_GRID,
                         n_instances: int = 10, seed: int = 0, *,
                         n_trials: int = 1, T: int = 1024,
                         match: tuple[float, float] = (0.0, 1.0),
                         washout: int = 100,
                         cache_dir=None) -> ResponseTable:
    """Average white-noise responses of freshly generated reservoirs over a
    (length, density) grid.

    ``gen_params`` must contain ``n`` and ``connectivity`` and may carry
    ``normalization`` (mode/value mapping), ``l1_mode``, and ``input_gain``.
    Tables are cached to ``cache_dir`` keyed by a hash of all parameters.
    """
    if n_instances < 1:
        raise ParameterError("n_instances must be >= 1")
    grid = tuple(float(r) for r in density_grid)
    if any(abs(r) > 1 for r in grid):
        raise ParameterError("density grid must lie within [-1, 1]")
    lengths = tuple(int(length) for length in lengths)
    params = dict(gen_params)
    norm = params.pop("normalization", None)
    normalization = Normalization(**norm) if isinstance(norm, Mapping) else norm

    cache_key = None
    if cache_dir is not None:
        payload = json.dumps(
            {"gen_params": {k: params[k] for k in sorted(params)},
             "normalization": None if normalization is None else
             [normalization.mode, normalization.value],
             "lengths": lengths, "grid": grid, "n_instances": n_instances,
             "seed": seed, "n_trials": n_trials, "T": T, "match": match,
             "washout": washout},
            sort_keys=True)
        cache_key = hashlib.sha256(payload.encode()).hexdigest()[:16]
        cached = Path(cache_dir) / f"response_table_{cache_key}"
        if (cached / "index.json").exists():
            return ResponseTable.load(cached)

    profiles: dict[tuple[int, float], np.ndarray] = {}
    freqs = None
    for length in lengths:
        for g_idx, density in enumerate(grid):
            total = None
            for inst in range(n_instances):
                try:
                    res = gen_cycle_enhanced(
                        n=params["n"], connectivity=params["connectivity"],
                        length=length, cycle_density=density,
                        seed=[seed, length, g_idx, inst],
                        normalization=normalization,
                        l1_mode=params.get("l1_mode", "weight_mix"),
                        input_gain=params.get("input_gain", 1.0))
                    profile = reservoir_response(res, n_trials=n_trials, T=T,
                                                 seed=[seed, length, g_idx, inst],
                                                 match=match, washout=washout)
                except EsnKitError as exc:
                    raise GenerationError(
                        f"grid point (length={length}, density={density}, "
                        f"instance={inst}): {exc}") from exc
                total = profile.power if total is None else total + profile.power
                freqs = profile.freqs
            profiles[(length, density)] = total / n_instances

    table = ResponseTable(freqs=freqs, profiles=profiles, lengths=lengths,
                          density_grid=grid, gen_params=dict(gen_params),
                          n_instances=n_instances, seed=seed)
    if cache_dir is not None:
        table.save(Path(cache_dir) / f"response_table_{cache_key}")
    return table


def _signal_amplitude_on(table: ResponseTable, signal: np.ndarray) -> np.ndarray:
    """Signal amplitude spectrum on the table's frequency grid.

    Power is averaged into the table's bins so that narrow spectral peaks
    survive the change of resolution; bins the signal cannot populate are
    filled by interpolation (with a warning).
    """
    spectrum = periodogram(signal)
    k = len(table.freqs)
    n_fft = 2 * (k - 1)
    idx = np.clip(np.round(spectrum.freqs * n_fft).astype(int), 0, k - 1)
    counts = np.bincount(idx, minlength=k)
    sums = np.bincount(idx, weights=spectrum.power, minlength=k)
    filled = counts > 0
    binned = np.zeros(k)
    binned[filled] = sums[filled] / counts[filled]
    if not filled.all():
        warnings.warn("signal is shorter than the response grid; "
                      "interpolating missing frequency bins", stacklevel=2)
        binned[~filled] = np.interp(table.freqs[~filled],
                                    table.freqs[filled], binned[filled])
    return np.sqrt(binned)


def match_signal(table: ResponseTable, signal) -> AdaptationResult:
    """Score every grid point against the signal's amplitude spectrum and
    pick the best density per cycle length.

    The score is the inner product of the signal's amplitude spectrum
    (resampled onto the table grid) with the square root of the averaged
    response power. Exact score ties resolve toward density 0, then toward
    the smaller magnitude. Pure functions of (table, signal); rescaling the
    signal cannot change any argmax.
    """
    if not table.profiles:
        raise ParameterError("response table is empty")
    amplitude = _signal_amplitude_on(table, np.asarray(signal, dtype=float))
    scores: dict[int, dict[float, float]] = {}
    selected: dict[int, float] = {}
    for length in table.lengths:
        per_rho = {
            density: float(amplitude @ np.sqrt(table.profiles[(length, density)]))
            for density in table.density_grid
        }
        scores[length] = per_rho
        best = max(per_rho.values())
        candidates = [d for d, s in per_rho.items() if s == best]
        selected[length] = min(candidates, key=lambda d: (abs(d), d))
    return AdaptationResult(selected=selected, scores=scores)


def config_key(config: Mapping[int, float]) -> str:
    """Canonical string key for a cycle-density configuration."""
    if not config:
        return "baseline"
    return ",".join(f"{length}:{config[length]:+.4f}"
                    for length in sorted(config))


def _summed_score(scores: Mapping[int, Mapping[float, float]],
                  config: Mapping[int, float]) -> float:
    return float(sum(per.get(config.get(length, 0.0), 0.0)
                     for length, per in scores.items()))


def _candidate_combinations(selected: Mapping[int, float],
                            survivors: Sequence[int]) -> list[dict[int, float]]:
    """Feasible combinations of the validated per-length choices.

    Each surviving length is either included at its matched density or left
    out; combinations whose densities exceed the L1 budget of 1 are dropped.
    """
    candidates = []
    for mask in itertools.product([False, True], repeat=len(survivors)):
        combo = {length: selected[length]
                 for length, keep in zip(survivors, mask) if keep}
        if len(combo) < 2:
            continue
        if sum(abs(r) for r in combo.values()) <= 1.0 + 1e-9:
            candidates.append(combo)
    return candidates


def validate_and_combine(result: AdaptationResult,
                         evaluate: Callable[[dict[int, float], Sequence[int]], Sequence[float]],
                         baseline_performance: Sequence[float] | float,
                         n_seeds: int = 20, *,
                         seed_base: int = 0) -> AdaptationResult:
    """Benchmark-validate the matched densities, then pick a combination.

    ``evaluate(config, seeds)`` must return per-seed performance scores
    (lower is better) for reservoirs built with the given cycle densities.

    Lengths whose matched density performs worse (median) than the
    zero-cycle baseline are dropped; if none survive, the baseline
    configuration is returned with ``fallback`` set. Multi-length
    combinations are assembled from the surviving validated choices under
    an L1 budget of 1 and tried in decreasing order of their summed
    spectral-match score; the first whose benchmark median is at least as
    good as the best single-length configuration wins. When no combination
    qualifies, the best single-length configuration is returned (it is the
    degenerate combination). Deterministic given (result, evaluate, seeds).
    """
    seeds = [[seed_base, i] for i in range(n_seeds)]
    if np.isscalar(baseline_performance):
        baseline_median = float(baseline_performance)
    else:
        baseline_median = float(np.median(baseline_performance))

    medians: dict[str, float] = {}

    def evaluated(config: dict[int, float]) -> float:
        key = config_key(config)
        if key not in medians:
            medians[key] = float(np.median(evaluate(config, seeds)))
        return medians[key]

    survivors = []
    single_medians: dict[int, float] = {}
    rejected: list[int] = []
    for length in sorted(result.selected):
        density = result.selected[length]
        if density == 0.0:
            rejected.append(length)
            continue
        med = evaluated({length: density})
        single_medians[length] = med
        if med > baseline_median:
            rejected.append(length)
        else:
            survivors.append(length)

    if not survivors:
        return AdaptationResult(
            selected=result.selected, scores=result.scores, rejected=rejected,
            single_length_medians=single_medians,
            baseline_median=baseline_median, combined={}, combined_score=0.0,
            combined_median=baseline_median, candidate_medians=medians,
            fallback=True)

    best_single = min(survivors, key=lambda length: single_medians[length])
    combined = {best_single: result.selected[best_single]}
    combined_median = single_medians[best_single]
    candidates = _candidate_combinations(result.selected, survivors)
    candidates.sort(key=lambda c: -_summed_score(result.scores, c))
    for combo in candidates:
        med = evaluated(combo)
        if med <= combined_median:
            combined = combo
            combined_median = med
            break

    return AdaptationResult(
        selected=result.selected, scores=result.scores, rejected=rejected,
        single_length_medians=single_medians, baseline_median=baseline_median,
        combined=combined, combined_score=_summed_score(result.scores, combined),
        combined_median=combined_median, candidate_medians=medians,
        fallback=False)
