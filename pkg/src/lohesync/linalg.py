"""Dense complex matrix helpers used by every model in the package.

Matrices are plain ``numpy`` arrays of dtype ``complex128``.  Functions that
act on a single matrix also accept a stack of shape ``(..., d, d)`` where it
makes sense (exponential, projection, unitarity defect), because the unitary
schemes advance all agents at once.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

EPS_STRUCTURE = 1e-10
EPS_EIGEN = 1e-12


class StructureError(ValueError):
    """Input violates a structural precondition (skew-Hermitian, square, ...)."""

    def __init__(self, message: str, defect: float = float("nan")):
        super().__init__(message)
        self.defect = defect


class EigensolverError(ArithmeticError):
    """The Hermitian eigensolver failed to converge."""


class SingularMatrixError(ValueError):
    """Matrix too close to singular for a polar projection."""

    def __init__(self, message: str, smallest_singular_value: float):
        super().__init__(message)
        self.smallest_singular_value = smallest_singular_value


@dataclass(frozen=True)
class StructureTolerance:
    eps_structure: float = EPS_STRUCTURE
    eps_eigen: float = EPS_EIGEN

    def __post_init__(self):
        for name in ("eps_structure", "eps_eigen"):
            value = getattr(self, name)
            if not (0.0 <= value < 1e-3):
                raise ValueError(f"{name} must lie in [0, 1e-3), got {value}")


def as_matrix(a) -> np.ndarray:
    """Coerce to a complex128 array of at least two dimensions."""
    arr = np.asarray(a, dtype=np.complex128)
    if arr.ndim < 2:
        raise StructureError(f"expected a matrix, got shape {arr.shape}")
    return arr


def _require_square(a: np.ndarray) -> None:
    if a.shape[-1] != a.shape[-2]:
        raise StructureError(f"matrix must be square, got shape {a.shape[-2:]}")


def dagger(a: np.ndarray) -> np.ndarray:
    return np.conj(np.swapaxes(a, -1, -2))


def frobenius_norm(a) -> float:
    a = as_matrix(a)
    return float(np.sqrt(np.sum(np.abs(a) ** 2)))


def operator_norm(a) -> float:
    """Largest singular value, via the top eigenvalue of A^dagger A."""
    a = as_matrix(a)
    if a.ndim != 2:
        raise StructureError("operator_norm expects a single matrix")
    _require_square(a)
    gram = dagger(a) @ a
    gram = 0.5 * (gram + dagger(gram))
    top = np.linalg.eigvalsh(gram)[-1]
    return float(np.sqrt(max(top, 0.0)))


def skew_hermitian_defect(s: np.ndarray) -> np.ndarray:
    """Frobenius norm of S + S^dagger, per matrix in the stack."""
    return np.sqrt(np.sum(np.abs(s + dagger(s)) ** 2, axis=(-2, -1)))


def hermitian_defect(h: np.ndarray) -> np.ndarray:
    return np.sqrt(np.sum(np.abs(h - dagger(h)) ** 2, axis=(-2, -1)))


def expm_skew_hermitian(s, tol: StructureTolerance | None = None) -> np.ndarray:
    """Matrix exponential of a skew-Hermitian matrix (or stack of them).

    Writes ``iS = V diag(lam) V^dagger`` with ``eigh`` so that
    ``exp(S) = V diag(exp(-i lam)) V^dagger``; the result is unitary up to the
    eigensolver's orthogonality error.
    """
    tol = tol or StructureTolerance()
    s = as_matrix(s)
    _require_square(s)
    if not np.all(np.isfinite(s)):
        raise StructureError("non-finite entries in exponent")
    scale = np.maximum(1.0, np.sqrt(np.sum(np.abs(s) ** 2, axis=(-2, -1))))
    defect = skew_hermitian_defect(s)
    if np.any(defect > tol.eps_structure * scale):
        worst = float(np.max(defect / scale))
        raise StructureError(
            f"exponent is not skew-Hermitian (relative defect {worst:.3e})", worst
        )
    herm = 1j * s
    herm = 0.5 * (herm + dagger(herm))
    try:
        lam, vecs = np.linalg.eigh(herm)
    except np.linalg.LinAlgError as exc:
        raise EigensolverError(f"Hermitian eigensolver did not converge: {exc}") from exc
    phases = np.exp(-1j * lam)
    return (vecs * phases[..., None, :]) @ dagger(vecs)


def expm_taylor_oracle(s, terms: int = 30, squarings: int = 8) -> np.ndarray:
    """Truncated Taylor series with scaling and squaring.

    Independent check for :func:`expm_skew_hermitian`; works for any square
    matrix but is only accurate when ``||S|| / 2**squarings`` is small.
    """
    s = as_matrix(s)
    _require_square(s)
    if terms < 1 or squarings < 0:
        raise ValueError("terms must be >= 1 and squarings >= 0")
    d = s.shape[-1]
    x = s / (2.0**squarings)
    eye = np.broadcast_to(np.eye(d, dtype=np.complex128), s.shape)
    result = eye.copy()
    term = eye.copy()
    for k in range(1, terms + 1):
        term = term @ x / k
        result = result + term
    for _ in range(squarings):
        result = result @ result
    return result


def unitarity_defect(u) -> np.ndarray | float:
    """``||U^dagger U - I||_F`` for a matrix or each matrix of a stack."""
    u = as_matrix(u)
    _require_square(u)
    d = u.shape[-1]
    gram = dagger(u) @ u - np.eye(d)
    out = np.sqrt(np.sum(np.abs(gram) ** 2, axis=(-2, -1)))
    return float(out) if u.ndim == 2 else out


def is_unitary(u, tol: float = 1e-12) -> tuple[bool, float]:
    defect = unitarity_defect(u)
    worst = float(np.max(defect))
    return worst <= tol, worst


def project_unitary(a, min_singular: float = 1e-12) -> np.ndarray:
    """Unitary polar factor Q of A = Q P (nearest unitary in Frobenius norm)."""
    a = as_matrix(a)
    _require_square(a)
    w, sv, vh = np.linalg.svd(a)
    smallest = float(np.min(sv))
    if smallest <= min_singular:
        raise SingularMatrixError(
            f"matrix is numerically singular (smallest singular value {smallest:.3e})",
            smallest,
        )
    return w @ vh


def _rng(seed) -> np.random.Generator:
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


def random_unitary(d: int, seed) -> np.ndarray:
    """Haar-distributed unitary: QR of a complex Ginibre matrix, R's diagonal phase-fixed."""
    if d < 1:
        raise ValueError("d must be >= 1")
    rng = _rng(seed)
    z = (rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))) / np.sqrt(2.0)
    q, r = np.linalg.qr(z)
    diag = np.diagonal(r)
    phases = diag / np.abs(diag)
    return q * phases[None, :]


def random_hermitian(d: int, seed) -> np.ndarray:
    rng = _rng(seed)
    z = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    return 0.5 * (z + dagger(z))


def random_hermitian_zero_trace_sum(d: int, n: int, seed) -> np.ndarray:
    """``n`` Hermitian d x d matrices whose sum is the zero matrix.

    Despite the historical name the constraint is on the ensemble sum, not on
    individual traces: the ensemble mean is subtracted from every member.
    Returns an array of shape ``(n, d, d)``.
    """
    if d < 1 or n < 1:
        raise ValueError("d and n must be >= 1")
    rng = _rng(seed)
    z = rng.standard_normal((n, d, d)) + 1j * rng.standard_normal((n, d, d))
    h = 0.5 * (z + dagger(z))
    return h - h.mean(axis=0, keepdims=True)


def random_unit_vector(d: int, seed) -> np.ndarray:
    if d < 1:
        raise ValueError("d must be >= 1")
    rng = _rng(seed)
    v = rng.standard_normal(d)
    return v / np.linalg.norm(v)


def random_skew_hermitian(d: int, seed) -> np.ndarray:
    return -1j * random_hermitian(d, seed)
