"""File formats: Matrix Market / CSV matrices, JSON reports and manifests."""

from __future__ import annotations

import json
from dataclasses import asdict
from pathlib import Path

import numpy as np
import scipy.io
import scipy.sparse as sp

from .errors import DataError
from .esn import TrainedReadout
from .metrics import MemoryProfile
from .reservoirs import Normalization, Reservoir, ReservoirMeta
from .signals import PsdProfile
from .spectral import SpectrumReport

__all__ = [
    "save_matrix",
    "load_matrix",
    "save_reservoir",
    "load_reservoir",
    "spectrum_to_dict",
    "spectrum_from_dict",
    "readout_to_dict",
    "readout_from_dict",
    "memory_profile_to_dict",
    "psd_to_csv",
    "psd_from_csv",
    "psd_to_dict",
    "psd_from_dict",
    "save_run_states",
    "write_json",
    "read_json",
]


def write_json(obj, path) -> None:
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def read_json(path):
    with open(path) as fh:
        return json.load(fh)


def save_matrix(W, path) -> None:
    """Write a matrix as Matrix Market coordinate (.mtx) or dense CSV (.csv)."""
    path = Path(path)
    if path.suffix == ".mtx":
        scipy.io.mmwrite(str(path), sp.coo_matrix(W))
    elif path.suffix == ".csv":
        dense = W.toarray() if sp.issparse(W) else np.asarray(W)
        np.savetxt(path, dense, delimiter=",")
    else:
        raise DataError(f"unsupported matrix format {path.suffix!r}")


def load_matrix(path) -> sp.csr_array:
    path = Path(path)
    if not path.exists():
        raise DataError(f"matrix file not found: {path}")
    if path.suffix == ".mtx":
        return sp.csr_array(sp.coo_array(scipy.io.mmread(str(path))))
    if path.suffix == ".csv":
        return sp.csr_array(np.atleast_2d(np.loadtxt(path, delimiter=",")))
    raise DataError(f"unsupported matrix format {path.suffix!r}")


def _meta_to_dict(meta: ReservoirMeta) -> dict:
    d = asdict(meta)
    if meta.normalization is not None:
        d["normalization"] = {"mode": meta.normalization.mode,
                              "value": meta.normalization.value}
    d["target_cycle_density"] = {str(k): v
                                 for k, v in meta.target_cycle_density.items()}
    if not isinstance(d["seed"], (int, type(None))):
        d["seed"] = list(d["seed"])
    return d


def _meta_from_dict(d: dict) -> ReservoirMeta:
    norm = d.get("normalization")
    return ReservoirMeta(
        family=d["family"],
        n=d["n"],
        avg_degree=d["avg_degree"],
        seed=d.get("seed"),
        target_cycle_density={int(k): v
                              for k, v in d.get("target_cycle_density", {}).items()},
        normalization=None if norm is None else Normalization(**norm),
        params=d.get("params", {}),
        warnings=d.get("warnings", []),
    )


def save_reservoir(reservoir: Reservoir, basepath) -> tuple[Path, Path]:
    """Write ``<base>.mtx`` (weights) and ``<base>.json`` (manifest)."""
    base = Path(basepath)
    matrix_path = base.with_suffix(".mtx")
    manifest_path = base.with_suffix(".json")
    save_matrix(reservoir.W, matrix_path)
    write_json({
        "meta": _meta_to_dict(reservoir.meta),
        "w_in": reservoir.w_in.tolist(),
        "w_ofb": reservoir.w_ofb.tolist(),
        "matrix_file": matrix_path.name,
    }, manifest_path)
    return matrix_path, manifest_path


def load_reservoir(manifest_path) -> Reservoir:
    manifest_path = Path(manifest_path)
    if not manifest_path.exists():
        raise DataError(f"reservoir manifest not found: {manifest_path}")
    doc = read_json(manifest_path)
    W = load_matrix(manifest_path.parent / doc["matrix_file"])
    return Reservoir(W=W, w_in=np.asarray(doc["w_in"], dtype=float),
                     w_ofb=np.asarray(doc["w_ofb"], dtype=float),
                     meta=_meta_from_dict(doc["meta"]))


def spectrum_to_dict(report: SpectrumReport) -> dict:
    return {
        "eigenvalues": [[float(v.real), float(v.imag)]
                        for v in report.eigenvalues],
        "spectral_radius": report.spectral_radius,
        "avg_modulus": report.avg_modulus,
        "modulus_histogram": [[c, d] for c, d in report.modulus_histogram],
    }


def spectrum_from_dict(doc: dict) -> SpectrumReport:
    vals = np.array([complex(re, im) for re, im in doc["eigenvalues"]])
    return SpectrumReport(
        eigenvalues=vals,
        spectral_radius=doc["spectral_radius"],
        avg_modulus=doc["avg_modulus"],
        modulus_histogram=[(c, d) for c, d in doc["modulus_histogram"]],
    )


def readout_to_dict(readout: TrainedReadout) -> dict:
    return {"w_out": readout.w_out.tolist(), "ridge": readout.ridge,
            "train_nrmse": readout.train_nrmse}


def readout_from_dict(doc: dict) -> TrainedReadout:
    return TrainedReadout(w_out=np.asarray(doc["w_out"], dtype=float),
                          ridge=doc["ridge"], train_nrmse=doc["train_nrmse"])


def memory_profile_to_dict(profile: MemoryProfile) -> dict:
    return {"per_delay": profile.per_delay.tolist(), "total": profile.total,
            "tau_max_used": profile.tau_max_used,
            "input_kind": profile.input_kind}


def psd_to_csv(profile: PsdProfile, path) -> None:
    np.savetxt(path, np.column_stack([profile.freqs, profile.power]),
               delimiter=",", header=f"freq,power (n_averages={profile.n_averages})",
               comments="# ")


def psd_from_csv(path) -> PsdProfile:
    data = np.loadtxt(path, delimiter=",")
    return PsdProfile(freqs=data[:, 0], power=data[:, 1])


def psd_to_dict(profile: PsdProfile) -> dict:
    return {"freqs": profile.freqs.tolist(), "power": profile.power.tolist(),
            "n_averages": profile.n_averages}


def psd_from_dict(doc: dict) -> PsdProfile:
    return PsdProfile(freqs=np.asarray(doc["freqs"], dtype=float),
                      power=np.asarray(doc["power"], dtype=float),
                      n_averages=doc.get("n_averages", 1))


def save_run_states(run, path) -> None:
    """Dump a recorded trajectory as CSV (one row per step) for debugging."""
    np.savetxt(path, run.states, delimiter=",",
               header=f"states (T={run.states.shape[0]}, "
                      f"N={run.states.shape[1]}, washout={run.washout})",
               comments="# ")
