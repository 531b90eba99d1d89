"""Dense non-Hermitian eigendecomposition with residual checks.

The heavy lifting is LAPACK (``zgeev`` through :func:`scipy.linalg.eig`,
or the symmetric driver via :func:`scipy.linalg.eigh` for exactly Hermitian input);
this module adds the contract around it: unit-norm right vectors with a
fixed phase, a deterministic ordering and verified residuals.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .errors import ConvergenceError, ShapeError

__all__ = ["EigenSolution", "eigendecompose", "sort_spectrum", "canonical_order"]

DEFAULT_TOL = 1e-10


@dataclass(frozen=True)
class EigenSolution:
    """Eigenpairs of a dense matrix.

    Attributes
    ----------
    values : (n,) complex np.ndarray
    right_vectors : (n, n) complex np.ndarray
        Column ``i`` belongs to ``values[i]`` and has unit 2-norm.
    residuals : (n,) float np.ndarray
        ``||H v_i - lambda_i v_i||_2``.
    """

    values: np.ndarray
    right_vectors: np.ndarray
    residuals: np.ndarray

    def __len__(self):
        return len(self.values)

    def take(self, order):
        order = np.asarray(order, dtype=int)
        return EigenSolution(self.values[order], self.right_vectors[:, order], self.residuals[order])

    def vector(self, i):
        return self.right_vectors[:, i]


def canonical_order(values):
    """Indices sorting by descending real part, ties by descending imaginary part."""
    values = np.asarray(values)
    return np.lexsort((-values.imag, -values.real))


def _fix_phase(vectors):
    idx = np.argmax(np.abs(vectors), axis=0)
    pivots = vectors[idx, np.arange(vectors.shape[1])]
    phases = pivots / np.abs(pivots)
    return vectors / phases[np.newaxis, :]


def eigendecompose(h, tol=DEFAULT_TOL):
    """Eigenvalues and right eigenvectors of a general complex matrix.

    Parameters
    ----------
    h : (n, n) array_like
        Finite entries.
    tol : float
        Residual bound relative to the Frobenius norm: every pair must satisfy
        ``||h v - lambda v|| <= tol * ||h||_F``.

    Returns
    -------
    EigenSolution
        In canonical order (see :func:`canonical_order`).  Each vector is
        scaled so its largest-modulus component is real and positive.

    Raises
    ------
    ConvergenceError
        If LAPACK fails or a residual exceeds the bound.  Defective matrices
        end up here and the caller decides what to do.
    """
    h = np.asarray(h, dtype=complex)
    if h.ndim != 2 or h.shape[0] != h.shape[1] or h.shape[0] < 1:
        raise ShapeError(f"expected a non-empty square matrix, got shape {h.shape}")
    if not np.all(np.isfinite(h)):
        raise ShapeError("matrix has non-finite entries")
    if not tol > 0:
        raise ValueError("tol must be positive")
    try:
        if np.array_equal(h, h.conj().T):
            # exact Hermitian input: the symmetric solver is several times faster
            sym = h.real if not h.imag.any() else h
            values, vectors = sla.eigh(sym, check_finite=False)
            values = values.astype(complex)
            vectors = vectors.astype(complex)
        else:
            values, vectors = sla.eig(h, check_finite=False)
    except (np.linalg.LinAlgError, sla.LinAlgError) as exc:
        raise ConvergenceError(f"QR iteration failed: {exc}") from exc
    vectors = vectors / np.linalg.norm(vectors, axis=0)[np.newaxis, :]
    vectors = _fix_phase(vectors)
    residuals = np.linalg.norm(h @ vectors - vectors * values[np.newaxis, :], axis=0)
    bound = tol * max(np.linalg.norm(h), np.finfo(float).tiny)
    worst = float(residuals.max())
    if worst > bound:
        raise ConvergenceError(
            f"worst residual {worst:.3e} exceeds {bound:.3e}", worst_residual=worst
        )
    order = canonical_order(values)
    return EigenSolution(values[order], vectors[:, order], residuals[order])


def sort_spectrum(sol, by="real", target=None):
    """Stable re-ordering of an :class:`EigenSolution`.

    ``by`` is one of

    * ``"real"``: descending real part,
    * ``"modulus"``: descending ``|E|``,
    * ``"distance"``: ascending ``|E - target|``,
    * ``"modulus_distance"``: ascending ``||E| - target|``.
    """
    values = sol.values
    if by == "real":
        key = -values.real
    elif by == "modulus":
        key = -np.abs(values)
    elif by == "distance":
        key = np.abs(values - complex(target))
    elif by == "modulus_distance":
        key = np.abs(np.abs(values) - float(np.real(target)))
    else:
        raise ValueError(f"unknown sort key {by!r}")
    return sol.take(np.argsort(key, kind="stable"))
