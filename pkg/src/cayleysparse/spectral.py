"""Dense symmetric eigendecomposition utilities.

Everything here works on dense ``numpy`` arrays with a full symmetric
eigendecomposition; matrices are at most a few thousand rows.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.sparse.linalg

from .config import Tolerances, get_tolerances


class NumericalToleranceError(RuntimeError):
    """A numerical check failed (zero threshold, symmetry, negativity)."""


class RangeContainmentError(ValueError):
    """``l_test`` has energy outside ``range(l_ref)``.

    ``witness`` is a unit vector in ``null(l_ref)`` with ``witness^T l_test
    witness == leak``.
    """

    def __init__(self, leak: float, witness: np.ndarray):
        super().__init__(f"test matrix leaks {leak:.3e} into the null space of the reference")
        self.leak = leak
        self.witness = witness


def _inf_norm(m: np.ndarray) -> float:
    return float(np.abs(m).sum(axis=1).max()) if m.size else 0.0


def check_symmetric(m: np.ndarray, tol: Tolerances | None = None) -> None:
    tol = tol or get_tolerances()
    m = np.asarray(m)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {m.shape}")
    scale = max(_inf_norm(m), 1.0)
    if _inf_norm(m - m.T) > tol.symmetry * scale:
        raise ValueError("matrix is not symmetric within tolerance")


@dataclass(frozen=True)
class SpectralDecomposition:
    """``M = Q diag(eigenvalues) Q^T`` with eigenvalues in nonincreasing order."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    zero_threshold: float

    @property
    def n(self) -> int:
        return len(self.eigenvalues)

    @property
    def rank(self) -> int:
        return int(np.count_nonzero(self.eigenvalues > self.zero_threshold))

    @property
    def null_dim(self) -> int:
        return self.n - self.rank

    @property
    def range_basis(self) -> np.ndarray:
        return self.eigenvectors[:, : self.rank]

    @property
    def null_basis(self) -> np.ndarray:
        return self.eigenvectors[:, self.rank :]

    def reconstruct(self) -> np.ndarray:
        q = self.eigenvectors
        return (q * self.eigenvalues) @ q.T

    def pinv_sqrt_factor(self) -> np.ndarray:
        """``B = diag(lambda^-1/2) Q_r^T`` (rank x n); ``B^T B`` is the pseudo-inverse."""
        r = self.rank
        return self.eigenvectors[:, :r].T / np.sqrt(self.eigenvalues[:r])[:, None]


def decompose(m: np.ndarray, tol: Tolerances | None = None) -> SpectralDecomposition:
    """Full symmetric eigendecomposition with the package's zero cutoff."""
    tol = tol or get_tolerances()
    m = np.asarray(m, dtype=float)
    check_symmetric(m, tol)
    n = m.shape[0]
    w, q = np.linalg.eigh(m)
    w, q = w[::-1].copy(), q[:, ::-1].copy()
    opnorm = float(np.max(np.abs(w))) if n else 0.0
    return SpectralDecomposition(w, q, n * opnorm * tol.zero_factor)


def psd_decompose(
    m: np.ndarray, component_count: int, tol: Tolerances | None = None
) -> SpectralDecomposition:
    """Decompose a PSD matrix whose null space dimension is known.

    Raises :class:`NumericalToleranceError` when an eigenvalue is below
    ``-zero_threshold`` or the numerical null space dimension disagrees with
    ``component_count``.
    """
    dec = decompose(m, tol)
    if dec.n and dec.eigenvalues[-1] < -dec.zero_threshold:
        raise NumericalToleranceError(
            f"negative eigenvalue {dec.eigenvalues[-1]:.3e} below -{dec.zero_threshold:.3e}"
        )
    if dec.null_dim != component_count:
        raise NumericalToleranceError(
            f"numerical null space has dimension {dec.null_dim}, expected {component_count}"
        )
    return dec


def pinv_sqrt(m: np.ndarray, component_count: int, tol: Tolerances | None = None) -> np.ndarray:
    """Symmetric square root of the Moore-Penrose pseudo-inverse of a PSD matrix."""
    dec = psd_decompose(m, component_count, tol)
    r = dec.rank
    q = dec.eigenvectors[:, :r]
    return (q / np.sqrt(dec.eigenvalues[:r])) @ q.T


LANCZOS_MIN_SIZE = 256


def top_eigenvalue(m: np.ndarray) -> float:
    """Largest eigenvalue of a symmetric matrix (0.0 for an empty one).

    Matrices of at least ``LANCZOS_MIN_SIZE`` rows go through ARPACK with a
    fixed start vector; smaller ones, and any ARPACK failure, use LAPACK.
    """
    n = m.shape[0]
    if n == 0:
        return 0.0
    if n >= LANCZOS_MIN_SIZE:
        v0 = np.random.default_rng(0).standard_normal(n)
        try:
            top = scipy.sparse.linalg.eigsh(m, k=1, which="LA", v0=v0, tol=1e-14, return_eigenvectors=False)
            return float(top[0])
        except scipy.sparse.linalg.ArpackError:
            pass
    try:
        top = scipy.linalg.eigh(m, eigvals_only=True, subset_by_index=[n - 1, n - 1], driver="evx")
        return float(top[0])
    except np.linalg.LinAlgError:
        # LAPACK subset drivers occasionally fail on heavily degenerate spectra
        return float(np.linalg.eigvalsh(m)[-1])


def opnorm_psd(m: np.ndarray, tol: Tolerances | None = None) -> float:
    """Largest eigenvalue of a symmetric PSD matrix (its operator norm)."""
    m = np.asarray(m, dtype=float)
    check_symmetric(m, tol)
    return max(top_eigenvalue(m), 0.0)


@dataclass(frozen=True)
class RelativeSpectrum:
    """Extreme eigenvalues of ``L_ref^{+/2} L_test L_ref^{+/2}`` on ``range(L_ref)``.

    ``vmin`` and ``vmax`` are vectors in the original coordinates attaining the
    ratios ``v^T L_test v / v^T L_ref v``.
    """

    lmin: float
    lmax: float
    vmin: np.ndarray
    vmax: np.ndarray


def relative_eigensystem(
    l_ref: np.ndarray | None,
    l_test: np.ndarray,
    component_count: int,
    *,
    ref: SpectralDecomposition | None = None,
    tol: Tolerances | None = None,
) -> RelativeSpectrum:
    tol = tol or get_tolerances()
    if ref is None:
        ref = psd_decompose(l_ref, component_count, tol)
    elif ref.null_dim != component_count:
        raise NumericalToleranceError(
            f"reference null space has dimension {ref.null_dim}, expected {component_count}"
        )
    l_test = np.asarray(l_test, dtype=float)
    check_symmetric(l_test, tol)
    null = ref.null_basis
    if null.shape[1]:
        leak_mat = null.T @ l_test @ null
        w, y = np.linalg.eigh((leak_mat + leak_mat.T) / 2)
        if w[-1] > tol.range_factor * max(_inf_norm(l_test), 1.0):
            raise RangeContainmentError(float(w[-1]), null @ y[:, -1])
    b = ref.pinv_sqrt_factor()
    rel = b @ l_test @ b.T
    rel = (rel + rel.T) / 2
    if rel.shape[0] == 0:
        empty = np.zeros(ref.n)
        return RelativeSpectrum(1.0, 1.0, empty, empty)
    w, y = np.linalg.eigh(rel)
    return RelativeSpectrum(float(w[0]), float(w[-1]), b.T @ y[:, 0], b.T @ y[:, -1])


def relative_spectrum(
    l_ref: np.ndarray | None,
    l_test: np.ndarray,
    component_count: int,
    *,
    ref: SpectralDecomposition | None = None,
    tol: Tolerances | None = None,
) -> tuple[float, float]:
    """Return ``(lambda_min, lambda_max)`` of ``l_test`` relative to ``l_ref``.

    ``l_test`` must live on ``range(l_ref)``; otherwise
    :class:`RangeContainmentError` is raised.  Pass a precomputed ``ref``
    decomposition to reuse it across many test matrices.
    """
    rs = relative_eigensystem(l_ref, l_test, component_count, ref=ref, tol=tol)
    return rs.lmin, rs.lmax


def is_psd_between(
    l_ref: np.ndarray, l_test: np.ndarray, low: float, high: float, component_count: int
) -> bool:
    """``low * l_ref <= l_test <= high * l_ref`` in the Loewner order."""
    try:
        lmin, lmax = relative_spectrum(l_ref, l_test, component_count)
    except RangeContainmentError:
        return False
    slack = get_tolerances().verify_slack
    return lmin >= low - slack and lmax <= high + slack
