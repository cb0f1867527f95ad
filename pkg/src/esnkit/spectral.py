"""Dense spectral analysis of real nonsymmetric reservoir matrices.

All reservoirs used here are small enough (N <= ~2000) that full dense
eigendecomposition is the right tool; the heavy lifting is delegated to
LAPACK's Hessenberg-reduction + shifted-QR driver via ``numpy.linalg``.
Every operation is a pure function of its inputs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .errors import (
    ConvergenceError,
    DegenerateSpectrumError,
    DimensionError,
    DomainError,
    ParameterError,
)

__all__ = [
    "SpectrumReport",
    "eigenvalues",
    "spectral_radius",
    "avg_modulus",
    "normalize_spectral_radius",
    "normalize_avg_modulus",
    "modulus_density",
    "spectrum_report",
]


def _as_dense(W) -> np.ndarray:
    """Validate and densify a square real matrix."""
    if sp.issparse(W):
        W = W.toarray()
    A = np.asarray(W, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1] or A.shape[0] < 1:
        raise DimensionError(f"expected a square matrix, got shape {A.shape}")
    if not np.isfinite(A).all():
        raise DomainError("matrix contains non-finite entries")
    return A


def eigenvalues(W, tol: float | None = None) -> np.ndarray:
    """Full complex spectrum of a real square matrix, with multiplicity.

    Parameters
    ----------
    W : array_like or sparse matrix
        Real square matrix (densified internally).
    tol : float, optional
        Relative tolerance used to verify conjugate-pair symmetry of the
        returned spectrum. Defaults to ``1e-8`` (scaled by the spectral
        radius).

    Returns
    -------
    numpy.ndarray
        Complex eigenvalues, length N, in LAPACK order.

    Raises
    ------
    DimensionError, DomainError
        On non-square or non-finite input.
    ConvergenceError
        If the QR iteration fails to converge.
    """
    A = _as_dense(W)
    n = A.shape[0]
    try:
        vals = np.linalg.eigvals(A)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - LAPACK failure
        raise ConvergenceError(
            f"eigenvalue iteration did not converge: {exc}",
            iterations=100 * n,
        ) from exc
    _check_conjugate_pairs(vals, tol)
    return vals


def _check_conjugate_pairs(vals: np.ndarray, tol: float | None) -> None:
    """Spectra of real matrices must be closed under conjugation."""
    radius = float(np.max(np.abs(vals))) if len(vals) else 0.0
    if radius == 0.0:
        return
    scale = (1e-8 if tol is None else tol) * radius
    complex_vals = vals[np.abs(vals.imag) > scale]
    if len(complex_vals) == 0:
        return
    # Greedy pairing is enough here: sums of a conjugate-closed multiset of
    # imaginary parts vanish, and each value must have a partner nearby.
    if abs(complex_vals.imag.sum()) > scale * len(complex_vals):
        raise ConvergenceError("spectrum is not conjugate-symmetric")


def spectral_radius(W) -> float:
    """Largest eigenvalue modulus of ``W``."""
    return float(np.max(np.abs(eigenvalues(W))))


def avg_modulus(W) -> float:
    """Mean eigenvalue modulus, ``sum(|lambda_i|) / N``.

    Invariant under permutation similarity and equivariant under scaling:
    ``avg_modulus(c*W) == |c| * avg_modulus(W)``.
    """
    return float(np.mean(np.abs(eigenvalues(W))))


def _scaled(W, factor: float):
    """Scale a matrix preserving its sparse/dense storage."""
    if sp.issparse(W):
        out = (W * factor).tocsr()
        return out
    return np.asarray(W, dtype=float) * factor


def normalize_spectral_radius(W, alpha: float):
    """Rescale ``W`` so its spectral radius equals ``alpha``.

    Raises ``DegenerateSpectrumError`` for (numerically) nilpotent input.
    """
    if alpha <= 0:
        raise ParameterError("alpha must be positive")
    rho = spectral_radius(W)
    norm = np.linalg.norm(_as_dense(W))
    if rho <= 1e-12 * max(norm, 1.0):
        raise DegenerateSpectrumError("spectral radius is zero; cannot rescale")
    return _scaled(W, alpha / rho)


def normalize_avg_modulus(W, target: float):
    """Rescale ``W`` so its mean eigenvalue modulus equals ``target``.

    Uses the linearity ``|lambda(c W)| = c |lambda(W)|``, so a single
    spectrum computation suffices.
    """
    if target <= 0:
        raise ParameterError("target must be positive")
    mean_mod = avg_modulus(W)
    norm = np.linalg.norm(_as_dense(W))
    if mean_mod <= 1e-12 * max(norm, 1.0):
        raise DegenerateSpectrumError("spectrum is identically zero; cannot rescale")
    return _scaled(W, target / mean_mod)


def _modulus_histogram(moduli: np.ndarray, n_bins: int) -> list[tuple[float, float]]:
    if n_bins < 1:
        raise ParameterError("n_bins must be >= 1")
    hi = float(moduli.max())
    if hi == 0.0:
        hi = 1.0  # zero matrix: all mass collapses into the first bin
    counts, edges = np.histogram(moduli, bins=n_bins, range=(0.0, hi))
    widths = np.diff(edges)
    density = counts / (len(moduli) * widths)
    centers = 0.5 * (edges[:-1] + edges[1:])
    return [(float(c), float(d)) for c, d in zip(centers, density)]


def modulus_density(W, n_bins: int) -> list[tuple[float, float]]:
    """Histogram of eigenvalue moduli over ``[0, spectral_radius]``.

    Returns ``(bin_center, density)`` pairs whose bin-width-weighted sum
    is exactly 1 for nonempty spectra.
    """
    return _modulus_histogram(np.abs(eigenvalues(W)), n_bins)


@dataclass
class SpectrumReport:
    """Full spectrum of a reservoir matrix plus derived statistics.

    ``eigenvalues`` is the complex spectrum with multiplicity;
    ``modulus_histogram`` holds ``(bin_center, density)`` pairs normalized
    so that the bin-width-weighted densities sum to one.
    """

    eigenvalues: np.ndarray
    spectral_radius: float
    avg_modulus: float
    modulus_histogram: list[tuple[float, float]]


def spectrum_report(W, n_bins: int = 40, tol: float | None = None) -> SpectrumReport:
    """Compute the spectrum of ``W`` together with its summary statistics."""
    vals = eigenvalues(W, tol)
    moduli = np.abs(vals)
    return SpectrumReport(
        eigenvalues=vals,
        spectral_radius=float(moduli.max()),
        avg_modulus=float(moduli.mean()),
        modulus_histogram=_modulus_histogram(moduli, n_bins),
    )
