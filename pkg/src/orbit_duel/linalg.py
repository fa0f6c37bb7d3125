"""Hermitian matrix kernels used by the game solver.

All functions are pure. Inputs are symmetrized, ``(M + M^H) / 2``, before
any eigendecomposition, and eigenvalues are always reported in descending
order.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, ShapeError, SingularityError, SymmetryError

SYMMETRY_RTOL = 1e-10
PSD_RTOL = 1e-10
LOGM_FLOOR = 1e-12


@dataclass(frozen=True)
class EigenDecomposition:
    """Eigenpairs of a Hermitian matrix.

    ``values`` are real and sorted descending; column ``i`` of ``vectors``
    belongs to ``values[i]``.
    """

    values: np.ndarray
    vectors: np.ndarray

    def reconstruct(self) -> np.ndarray:
        return (self.vectors * self.values) @ self.vectors.conj().T


def as_matrix(m, name: str = "matrix") -> np.ndarray:
    """Coerce to a finite 2-D complex array."""
    a = np.asarray(m, dtype=complex)
    if a.ndim != 2:
        raise ShapeError(f"{name} must be 2-D, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise DomainError(f"{name} has non-finite entries")
    return a


def hermitize(m) -> np.ndarray:
    """Return the Hermitian part ``(M + M^H) / 2`` after validation.

    Raises SymmetryError when the anti-Hermitian part exceeds
    ``1e-10 * max(1, ||M||_F)``.
    """
    a = as_matrix(m)
    if a.shape[0] != a.shape[1]:
        raise ShapeError(f"expected a square matrix, got {a.shape}")
    skew = np.linalg.norm(a - a.conj().T)
    scale = max(1.0, float(np.linalg.norm(a)))
    if skew > SYMMETRY_RTOL * scale:
        raise SymmetryError(f"matrix is not Hermitian: ||M - M^H||_F = {skew:.3e}")
    return 0.5 * (a + a.conj().T)


def eig_hermitian(m) -> EigenDecomposition:
    a = hermitize(m)
    w, v = np.linalg.eigh(a)
    return EigenDecomposition(values=w[::-1].copy(), vectors=v[:, ::-1].copy())


def _from_eig(values: np.ndarray, vectors: np.ndarray) -> np.ndarray:
    out = (vectors * values) @ vectors.conj().T
    return 0.5 * (out + out.conj().T)


def logdet(m) -> float:
    """Natural-log determinant of a positive definite Hermitian matrix.

    Divide by ``ln 2`` for bits.
    """
    w = np.linalg.eigvalsh(hermitize(m))
    if w.size == 0:
        return 0.0
    if w[0] <= 0.0:
        raise SingularityError(f"matrix is not positive definite (min eigenvalue {w[0]:.3e})")
    return float(np.sum(np.log(w)))


def expm_hermitian(m) -> np.ndarray:
    e = eig_hermitian(m)
    return _from_eig(np.exp(e.values), e.vectors)


def logm_hermitian(m, floor: bool = True) -> np.ndarray:
    """Matrix logarithm of a positive definite Hermitian matrix.

    With ``floor`` set, eigenvalues are clamped from below at
    ``1e-12 * lambda_max`` so round-off negatives on a PD iterate stay
    defined. Without it, any eigenvalue below that level raises.
    """
    e = eig_hermitian(m)
    lam = e.values
    if lam.size == 0:
        return np.zeros((0, 0), dtype=complex)
    top = lam[0]
    if top <= 0.0:
        raise SingularityError("matrix has no positive eigenvalue")
    cut = LOGM_FLOOR * top
    if floor:
        lam = np.maximum(lam, cut)
    elif lam[-1] < cut:
        raise SingularityError(f"eigenvalue {lam[-1]:.3e} below floor {cut:.3e}")
    return _from_eig(np.log(lam), e.vectors)


def effective_rank(m, rel_threshold: float = 0.01) -> int:
    """Number of eigenvalues at or above ``rel_threshold * lambda_max``."""
    if not 0.0 < rel_threshold < 1.0:
        raise DomainError("rel_threshold must lie in (0, 1)")
    lam = eig_hermitian(m).values
    if lam.size == 0 or lam[0] <= 0.0:
        if lam.size and lam[-1] < -PSD_RTOL * max(abs(lam[0]), abs(lam[-1])):
            raise DomainError("matrix is not positive semidefinite")
        return 0
    if lam[-1] < -PSD_RTOL * lam[0]:
        raise DomainError(f"matrix is not positive semidefinite (eigenvalue {lam[-1]:.3e})")
    return int(np.count_nonzero(lam >= rel_threshold * lam[0]))


def is_psd(m, rtol: float = PSD_RTOL) -> bool:
    lam = eig_hermitian(m).values
    if lam.size == 0:
        return True
    return bool(lam[-1] >= -rtol * max(lam[0], 0.0))
