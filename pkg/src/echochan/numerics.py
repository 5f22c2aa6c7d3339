"""Dense float64 matrix kernel: products, SPD solves, spectral radius.

Matrices are plain 2-D ``numpy`` arrays (row-major, float64); vectors are
1-D arrays. The helpers here validate the contracts the rest of the
package relies on: finite entries, compatible shapes, and symmetric
positive definiteness where a Cholesky solve is requested.
"""

from __future__ import annotations

import numpy as np
import scipy.linalg

from .errors import ConvergenceError, DefinitenessError, NonFiniteError, ShapeError

DEFAULT_TOL = 1e-6
DEFAULT_MAX_ITERATIONS = 10_000

# Relative asymmetry above which solve_spd rejects its input instead of
# silently symmetrizing (a symmetrized solve would hide accumulator bugs).
SYMMETRY_RTOL = 1e-9


def as_matrix(a, name: str = "matrix") -> np.ndarray:
    """Validate and return ``a`` as a finite 2-D float64 array."""
    arr = np.asarray(a, dtype=np.float64)
    if arr.ndim != 2:
        raise ShapeError(f"{name} must be 2-D, got shape {arr.shape}")
    if not np.isfinite(arr).all():
        raise NonFiniteError(f"{name} contains non-finite entries")
    return arr


def as_vector(a, name: str = "vector") -> np.ndarray:
    """Validate and return ``a`` as a finite 1-D float64 array."""
    arr = np.asarray(a, dtype=np.float64)
    if arr.ndim != 1:
        raise ShapeError(f"{name} must be 1-D, got shape {arr.shape}")
    if not np.isfinite(arr).all():
        raise NonFiniteError(f"{name} contains non-finite entries")
    return arr


def matmul(a, b) -> np.ndarray:
    """Matrix product ``a @ b`` with shape and finiteness checks."""
    a = as_matrix(a, "left operand")
    b = as_matrix(b, "right operand")
    if a.shape[1] != b.shape[0]:
        raise ShapeError(f"cannot multiply shapes {a.shape} and {b.shape}")
    out = a @ b
    if not np.isfinite(out).all():
        raise NonFiniteError(
            f"product of shapes {a.shape} and {b.shape} overflowed to non-finite values"
        )
    return out


def solve_spd(m, rhs) -> np.ndarray:
    """Solve ``m @ s == rhs`` for symmetric positive definite ``m``.

    ``m`` must be symmetric to within ``SYMMETRY_RTOL`` (relative to its
    largest entry); asymmetric inputs are rejected rather than symmetrized.
    Raises ``DefinitenessError`` when the Cholesky factorization fails.
    """
    m = as_matrix(m, "matrix")
    rhs_arr = np.asarray(rhs, dtype=np.float64)
    rhs_was_vector = rhs_arr.ndim == 1
    if rhs_was_vector:
        rhs_arr = rhs_arr[:, None]
    rhs_arr = as_matrix(rhs_arr, "right-hand side")

    n = m.shape[0]
    if m.shape[0] != m.shape[1]:
        raise ShapeError(f"matrix must be square, got shape {m.shape}")
    if rhs_arr.shape[0] != n:
        raise ShapeError(
            f"right-hand side rows {rhs_arr.shape} do not match matrix shape {m.shape}"
        )

    scale = np.abs(m).max()
    if scale > 0.0:
        asym = np.abs(m - m.T).max()
        if asym > SYMMETRY_RTOL * scale:
            raise DefinitenessError(
                f"matrix is asymmetric beyond tolerance (relative asymmetry {asym / scale:.3e})"
            )

    try:
        chol = scipy.linalg.cho_factor(m, lower=True, check_finite=False)
    except scipy.linalg.LinAlgError as exc:
        raise DefinitenessError(f"matrix is not positive definite: {exc}") from exc
    sol = scipy.linalg.cho_solve(chol, rhs_arr, check_finite=False)
    if not np.isfinite(sol).all():
        raise NonFiniteError("solve produced non-finite values")
    return sol[:, 0] if rhs_was_vector else sol


def spectral_radius(
    m, tol: float = DEFAULT_TOL, max_iterations: int = DEFAULT_MAX_ITERATIONS
) -> float:
    """Largest eigenvalue magnitude of a square real matrix.

    Uses QR iteration on the Hessenberg form (LAPACK), which handles
    complex conjugate dominant pairs and converges to machine precision,
    well inside any ``tol`` this package uses. A LAPACK convergence
    failure is surfaced as ``ConvergenceError``.
    """
    m = as_matrix(m, "matrix")
    if m.shape[0] != m.shape[1]:
        raise ShapeError(f"matrix must be square, got shape {m.shape}")
    if not tol > 0.0:
        raise ValueError(f"tol must be positive, got {tol}")
    if max_iterations < 1:
        raise ValueError(f"max_iterations must be >= 1, got {max_iterations}")
    if m.size == 0:
        raise ShapeError("matrix must be non-empty")
    try:
        eigenvalues = np.linalg.eigvals(m)
    except np.linalg.LinAlgError as exc:
        raise ConvergenceError(
            f"eigenvalue iteration did not converge within {max_iterations} iterations: {exc}",
            iterations=max_iterations,
        ) from exc
    return float(np.abs(eigenvalues).max())
