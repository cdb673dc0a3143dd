"""Dense symmetric eigendecomposition and rank-aware pseudo-inversion.

The action-distribution second-moment matrices used by both learners are
symmetric, positive semi-definite, and singular: centered actions sum to
zero, so the all-ones vector is always in the kernel.  Inversion therefore
happens on the range only, with eigenvalues at or below a relative cutoff
treated as exact zeros.
"""

from __future__ import annotations

import numpy as np

__all__ = ["min_eig_on_range", "pseudo_inverse", "sym_eig"]

DEFAULT_REL_TOL = 1e-9


def _check_symmetric(a) -> np.ndarray:
    a = np.asarray(a, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError("expected a square matrix")
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix entries must be finite")
    scale = max(1.0, float(np.abs(a).max()))
    if float(np.abs(a - a.T).max()) > 1e-12 * scale:
        raise ValueError("matrix is not symmetric")
    return 0.5 * (a + a.T)


def sym_eig(a):
    """Eigenvalues (ascending) and orthonormal eigenvectors of symmetric ``a``."""
    return np.linalg.eigh(_check_symmetric(a))


def pseudo_inverse(a, rel_tol: float = DEFAULT_REL_TOL) -> np.ndarray:
    """Invert ``a`` on its range; eigenvalues <= rel_tol * lambda_max become 0.

    The all-zero matrix maps to the all-zero matrix.
    """
    vals, vecs = sym_eig(a)
    lam_max = float(vals[-1])
    if lam_max <= 0.0:
        return np.zeros_like(np.asarray(a, dtype=np.float64))
    cutoff = rel_tol * lam_max
    inv_vals = np.where(vals > cutoff, 1.0 / np.where(vals > cutoff, vals, 1.0), 0.0)
    out = (vecs * inv_vals) @ vecs.T
    return 0.5 * (out + out.T)


def min_eig_on_range(a, rel_tol: float = DEFAULT_REL_TOL) -> float:
    """Smallest eigenvalue above the rank cutoff (controls the inverse norm)."""
    vals, _ = sym_eig(a)
    lam_max = float(vals[-1])
    if lam_max <= 0.0:
        raise ValueError("matrix has no positive spectrum")
    above = vals[vals > rel_tol * lam_max]
    return float(above.min())
