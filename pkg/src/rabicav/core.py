"""Minimal dense complex-matrix kernel for small cavity-QED states.

Everything here operates on plain ``numpy`` arrays of dimension 2, 3, 4 or 9.
Density matrices carry a basis tag so that downstream code cannot silently mix
the bare product basis with the dressed one.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

# Tolerance constants, centralized.  Validation checks on operation inputs use
# VALIDATION_TOL; freshly constructed analytic states are held to the strict
# budgets; states coming out of step-by-step numerics are allowed to drift up
# to TRAJECTORY_TOL.
VALIDATION_TOL = 1e-10
STRICT_TRACE_TOL = 1e-12
STRICT_HERM_TOL = 1e-12
STRICT_EIG_TOL = 1e-10
TRAJECTORY_TOL = 1e-9

ALLOWED_DIMS = (2, 3, 4, 9)

ComplexMatrix = np.ndarray


class ValidationError(ValueError):
    """A matrix or parameter failed a structural precondition."""


class Basis(Enum):
    """Basis tag for 3- and 4-dimensional density matrices.

    BARE    -- |e,0>, |g,1>, |g,0>
    DRESSED -- |O+>, |O->, |O0> (single-excitation dressed pair + joint ground)
    BARE4   -- |e,1>, |e,0>, |g,1>, |g,0>
    """

    BARE = "bare"
    DRESSED = "dressed"
    BARE4 = "bare4"

    @property
    def dim(self) -> int:
        return 4 if self is Basis.BARE4 else 3


def as_square_matrix(matrix: np.ndarray, dims: tuple[int, ...] = ALLOWED_DIMS) -> np.ndarray:
    """Coerce to a complex square array of an allowed dimension."""
    m = np.asarray(matrix, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValidationError(f"expected a square matrix, got shape {m.shape}")
    if m.shape[0] not in dims:
        raise ValidationError(f"dimension {m.shape[0]} not in allowed set {dims}")
    if not np.all(np.isfinite(m)):
        raise ValidationError("matrix entries must be finite")
    return m


def hermiticity_defect(matrix: np.ndarray) -> float:
    return float(np.max(np.abs(matrix - matrix.conj().T)))


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """Small Hermitian, trace-one, positive matrix tagged with its basis.

    ``note`` is a diagnostic tag set by producers (e.g. ``"hyperbolic"`` for
    the overdamped analytic continuation, ``"fallback"`` for numeric
    eigen-propagation in place of a degenerate closed form).

    Construction always enforces the loose trajectory budget (drift <= 1e-9,
    min eigenvalue >= -1e-9); analytic producers call :meth:`validate` with
    the strict budget on top of that.
    """

    matrix: np.ndarray
    basis: Basis
    note: str | None = None
    _min_eig: float = field(init=False, repr=False, default=0.0)

    def __post_init__(self):
        m = as_square_matrix(self.matrix, dims=(3, 4))
        if m.shape[0] != self.basis.dim:
            raise ValidationError(
                f"dimension {m.shape[0]} inconsistent with basis {self.basis}")
        object.__setattr__(self, "matrix", m)
        self.validate(trace_tol=TRAJECTORY_TOL, herm_tol=TRAJECTORY_TOL,
                      eig_tol=TRAJECTORY_TOL)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def trace_defect(self) -> float:
        return abs(complex(np.trace(self.matrix)) - 1.0)

    @property
    def hermiticity_defect(self) -> float:
        return hermiticity_defect(self.matrix)

    @property
    def min_eigenvalue(self) -> float:
        return self._min_eig

    def validate(self, trace_tol: float = STRICT_TRACE_TOL,
                 herm_tol: float = STRICT_HERM_TOL,
                 eig_tol: float = STRICT_EIG_TOL) -> "DensityMatrix":
        if self.trace_defect > trace_tol:
            raise ValidationError(f"trace defect {self.trace_defect:.3e} > {trace_tol:.0e}")
        if self.hermiticity_defect > herm_tol:
            raise ValidationError(
                f"hermiticity defect {self.hermiticity_defect:.3e} > {herm_tol:.0e}")
        w = np.linalg.eigvalsh(0.5 * (self.matrix + self.matrix.conj().T))
        object.__setattr__(self, "_min_eig", float(w[0]))
        if w[0] < -eig_tol:
            raise ValidationError(f"minimum eigenvalue {w[0]:.3e} < -{eig_tol:.0e}")
        return self

    def with_note(self, note: str | None) -> "DensityMatrix":
        return DensityMatrix(self.matrix, self.basis, note)


def hermitian_eigen(matrix: np.ndarray, tol: float = VALIDATION_TOL):
    """Eigendecomposition of a Hermitian matrix, eigenvalues sorted descending.

    Returns ``(eigenvalues, eigenvectors)`` with orthonormal eigenvector
    columns such that ``matrix @ v[:, i] == w[i] * v[:, i]``.
    """
    m = as_square_matrix(matrix)
    scale = max(1.0, float(np.max(np.abs(m))))
    if hermiticity_defect(m) > tol * scale:
        raise ValidationError(
            f"matrix is not Hermitian (defect {hermiticity_defect(m):.3e})")
    w, v = np.linalg.eigh(m)
    return w[::-1].copy(), v[:, ::-1].copy()


def partial_transpose(rho4: DensityMatrix | np.ndarray) -> np.ndarray:
    """Transpose the atomic index of a 4x4 matrix in the BARE4 ordering.

    The result has the populations on the diagonal and the |e,0><g,1|
    coherences moved to the anti-diagonal corners; it is Hermitian whenever
    the input is, and applying the operation twice returns the input exactly
    (the map is a pure permutation of entries).  A raw 4x4 array is accepted
    so the output, which is generally not positive, can be transposed back.
    """
    if isinstance(rho4, DensityMatrix):
        if rho4.basis is not Basis.BARE4:
            raise ValidationError("partial_transpose expects the BARE4 ordering")
        m = rho4.matrix
    else:
        m = as_square_matrix(rho4, dims=(4,))
    blocks = m.reshape(2, 2, 2, 2)
    return np.ascontiguousarray(blocks.transpose(2, 1, 0, 3).reshape(4, 4))
