"""Dense operator helpers: commutators, exponentials and truncation-aware norms."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import DimensionError, NumericalError

HERMITIAN_TOL = 1e-12


@dataclass(frozen=True)
class LowBlockComparison:
    """Norm of a matrix difference restricted to its leading ``block`` x ``block`` corner.

    ``block == dim`` marks a full-matrix comparison.
    """

    label: str
    block: int
    dim: int
    value: float
    norm: str = "max-entry"

    @property
    def full(self) -> bool:
        return self.block == self.dim

    def as_dict(self) -> dict:
        return {"label": self.label, "block": self.block, "dim": self.dim,
                "norm": self.norm, "value": self.value}


def _square(A) -> np.ndarray:
    A = np.asarray(A)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {A.shape}")
    return A


def dagger(A: np.ndarray) -> np.ndarray:
    return np.conj(A).T


def commutator(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """AB - BA."""
    A, B = _square(A), _square(B)
    if A.shape != B.shape:
        raise DimensionError(f"dimension mismatch: {A.shape} vs {B.shape}")
    return A @ B - B @ A


def max_entry(A: np.ndarray) -> float:
    return float(np.max(np.abs(A))) if np.size(A) else 0.0


def block(A: np.ndarray, m: int) -> np.ndarray:
    return np.asarray(A)[:m, :m]


def compare_block(label: str, diff: np.ndarray, m: int | None = None,
                  norm: str = "max-entry") -> LowBlockComparison:
    """Measure ``diff`` on its leading m-block (whole matrix when ``m`` is None)."""
    diff = _square(diff)
    n = diff.shape[0]
    m = n if m is None else m
    if not 1 <= m <= n:
        raise DimensionError(f"block size {m} outside 1..{n}")
    sub = diff[:m, :m]
    if norm == "max-entry":
        value = max_entry(sub)
    elif norm == "spectral":
        value = float(np.linalg.norm(sub, 2))
    else:
        raise ValueError(f"unknown norm {norm!r}")
    return LowBlockComparison(label, m, n, value, norm)


def hermiticity_defect(A: np.ndarray) -> float:
    A = _square(A)
    return max_entry(A - dagger(A))


def is_hermitian(A: np.ndarray, tol: float = HERMITIAN_TOL) -> bool:
    return hermiticity_defect(A) <= tol


def unitarity_defect(U: np.ndarray, m: int | None = None) -> float:
    """Max-entry norm of U^dagger U - 1 on the leading m-block."""
    U = _square(U)
    n = U.shape[0]
    return compare_block("unitarity", dagger(U) @ U - np.eye(n), m).value


def matrix_exponential(A: np.ndarray, tol: float = HERMITIAN_TOL) -> np.ndarray:
    """e^A for a dense square matrix.

    Hermitian and anti-Hermitian arguments go through an eigendecomposition
    of the associated Hermitian matrix, which keeps exponentials of
    anti-Hermitian generators unitary to round-off. Anything else uses
    scaling and squaring with Pade approximants.
    """
    A = _square(A)
    if not np.all(np.isfinite(A)):
        raise NumericalError("matrix has non-finite entries", {"shape": A.shape})
    scale = max(1.0, max_entry(A))
    if hermiticity_defect(A) <= tol * scale:
        H = 0.5 * (A + dagger(A))
        w, V = np.linalg.eigh(H)
        out = (V * np.exp(w)) @ dagger(V)
    elif max_entry(A + dagger(A)) <= tol * scale:
        H = -0.5j * (A - dagger(A))  # A = iH
        w, V = np.linalg.eigh(H)
        out = (V * np.exp(1j * w)) @ dagger(V)
    else:
        with np.errstate(over="ignore", invalid="ignore"):
            out = scipy.linalg.expm(A)
    if not np.all(np.isfinite(out)):
        raise NumericalError(
            "matrix exponential overflowed",
            {"max_entry": max_entry(A), "cond": float(np.linalg.cond(A))},
        )
    return out


def hermitian_function(A: np.ndarray, f) -> np.ndarray:
    """f(A) for Hermitian A via its spectral decomposition."""
    A = _square(A)
    w, V = np.linalg.eigh(0.5 * (A + dagger(A)))
    return (V * f(w)) @ dagger(V)
