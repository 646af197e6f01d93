"""Dense complex linear algebra on 2-D ``complex128`` arrays.

Matrices are plain numpy arrays. Vectors are kept two-dimensional
(``M x 1`` columns, ``1 x M`` rows) so that the algebra reads like the
channel model.
"""

import numpy as np

PIVOT_TOL = 1e-12


class SingularMatrixError(np.linalg.LinAlgError):
    """Raised when elimination meets a pivot below ``PIVOT_TOL``."""


def as_cmat(a) -> np.ndarray:
    a = np.asarray(a, dtype=np.complex128)
    if a.ndim == 0:
        a = a.reshape(1, 1)
    elif a.ndim == 1:
        a = a.reshape(1, -1)
    elif a.ndim != 2:
        raise ValueError(f"expected a matrix, got {a.ndim}-d array")
    return a


def matmul(a, b) -> np.ndarray:
    a, b = as_cmat(a), as_cmat(b)
    if a.shape[1] != b.shape[0]:
        raise ValueError(f"dimension mismatch: {a.shape} x {b.shape}")
    return a @ b


def hermitian(a) -> np.ndarray:
    return as_cmat(a).conj().T.copy()


def inverse(a) -> np.ndarray:
    """Invert a square matrix by Gauss-Jordan elimination with partial pivoting.

    Raises
    ------
    SingularMatrixError
        If any pivot magnitude falls below ``PIVOT_TOL``.
    """
    a = as_cmat(a)
    n, m = a.shape
    if n != m:
        raise ValueError(f"inverse needs a square matrix, got {a.shape}")
    aug = np.concatenate([a, np.eye(n, dtype=np.complex128)], axis=1)
    for k in range(n):
        p = k + int(np.argmax(np.abs(aug[k:, k])))
        if abs(aug[p, k]) < PIVOT_TOL:
            raise SingularMatrixError(f"pivot {abs(aug[p, k]):.3e} at column {k}")
        if p != k:
            aug[[k, p]] = aug[[p, k]]
        aug[k] /= aug[k, k]
        col = aug[:, k].copy()
        col[k] = 0.0
        aug -= np.outer(col, aug[k])
    return aug[:, n:].copy()


def pinv(a) -> np.ndarray:
    """Moore-Penrose pseudoinverse of a full-rank matrix.

    Wide and square inputs use the right inverse ``A^H (A A^H)^-1``; tall
    inputs the left inverse ``(A^H A)^-1 A^H``. Rank deficiency surfaces as
    :class:`SingularMatrixError` from the inner inverse.
    """
    a = as_cmat(a)
    ah = hermitian(a)
    if a.shape[0] <= a.shape[1]:
        return ah @ inverse(a @ ah)
    return inverse(ah @ a) @ ah


def dft_matrix(n_rows: int, n_cols: int, scale: float = 1.0) -> np.ndarray:
    """``scale * exp(j 2 pi q w / n_cols)`` for ``q < n_rows``, ``w < n_cols``."""
    if n_rows < 1 or n_cols < 1:
        raise ValueError("DFT dimensions must be positive")
    q = np.arange(n_rows).reshape(-1, 1)
    w = np.arange(n_cols).reshape(1, -1)
    # reduce q*w modulo n_cols first so large indices keep full phase accuracy
    return scale * np.exp(2j * np.pi * ((q * w) % n_cols) / n_cols)


def frobenius(a) -> float:
    a = as_cmat(a)
    return float(np.sqrt(np.sum(a.real ** 2 + a.imag ** 2)))
