"""Dense complex matrix kernel.

Matrices are plain ``numpy`` arrays of dtype ``complex128``; a tensor
factorization of a square matrix is a tuple of local dimensions
(``dims``), with factor 0 the most significant index in the row-major
ordering used by :func:`numpy.kron`.
"""
from __future__ import annotations

from typing import Iterable, Sequence

import numpy as np

from .errors import ValidationError

#: Default relative tolerance (relative to the operator norm).
DEFAULT_TOL = 1e-10


def as_matrix(m) -> np.ndarray:
    """Return ``m`` as a 2-D complex array (no copy if already one)."""
    a = np.asarray(m, dtype=complex)
    if a.ndim == 1:
        a = a.reshape(1, -1)
    if a.ndim != 2:
        raise ValidationError(f"expected a matrix, got array of shape {a.shape}")
    return a


def _require_square(m: np.ndarray, what: str = "matrix") -> None:
    if m.shape[0] != m.shape[1]:
        raise ValidationError(f"{what} must be square, got shape {m.shape}")


def dagger(m: np.ndarray) -> np.ndarray:
    return np.conj(np.swapaxes(m, -1, -2))


def hermitian_part(m: np.ndarray) -> np.ndarray:
    return 0.5 * (m + dagger(m))


def hermiticity_defect(m: np.ndarray) -> float:
    """Largest entrywise deviation ``|m_ij - conj(m_ji)|``."""
    return float(np.max(np.abs(m - dagger(m)))) if m.size else 0.0


def check_hermitian(m, tol: float = DEFAULT_TOL) -> np.ndarray:
    """Validate that ``m`` is square and Hermitian within ``tol * operator_norm``."""
    m = as_matrix(m)
    _require_square(m)
    defect = hermiticity_defect(m)
    scale = max(operator_norm(m), 1.0)
    if defect > tol * scale:
        raise ValidationError(
            f"matrix is not Hermitian: max |M_ij - conj(M_ji)| = {defect:.3e} "
            f"exceeds {tol:.1e} * max(operator_norm, 1) = {tol * scale:.3e}"
        )
    return m


def eig_hermitian(h, tol: float = DEFAULT_TOL) -> tuple[np.ndarray, np.ndarray]:
    """Eigendecomposition of a Hermitian matrix.

    Returns ascending real eigenvalues ``w`` and a unitary ``v`` with
    ``h = v @ diag(w) @ v^dagger``. The input is symmetrized after the
    Hermiticity check so that round-off asymmetry does not leak into the
    spectrum.
    """
    h = check_hermitian(h, tol)
    w, v = np.linalg.eigh(hermitian_part(h))
    return w, v


def eigvalsh(h) -> np.ndarray:
    """Eigenvalues of the Hermitian part, ascending; no validation."""
    return np.linalg.eigvalsh(hermitian_part(np.asarray(h, dtype=complex)))


def singular_values(m) -> np.ndarray:
    return np.linalg.svd(as_matrix(m), compute_uv=False)


def trace_norm(m) -> float:
    """Schatten-1 norm, ``tr sqrt(M^dagger M)``."""
    m = as_matrix(m)
    _require_square(m)
    if hermiticity_defect(m) <= 1e-14 * max(1.0, float(np.max(np.abs(m), initial=0.0))):
        return float(np.sum(np.abs(np.linalg.eigvalsh(hermitian_part(m)))))
    return float(np.sum(singular_values(m)))


def operator_norm(m) -> float:
    """Largest singular value."""
    m = as_matrix(m)
    if m.size == 0:
        return 0.0
    return float(np.linalg.norm(m, 2))


def kron(*mats) -> np.ndarray:
    """Kronecker product of any number of matrices (left factor most significant)."""
    out = np.ones((1, 1), dtype=complex)
    for m in mats:
        out = np.kron(out, as_matrix(m))
    return out


def sqrtm_psd(m) -> np.ndarray:
    """Square root of a positive semidefinite matrix (negative round-off clipped)."""
    w, v = np.linalg.eigh(hermitian_part(as_matrix(m)))
    return (v * np.sqrt(np.clip(w, 0.0, None))) @ dagger(v)


def inv_sqrtm_psd(m, floor: float = 0.0) -> np.ndarray:
    w, v = np.linalg.eigh(hermitian_part(as_matrix(m)))
    if np.min(w) <= floor:
        raise ValidationError(f"matrix is not positive definite (min eigenvalue {np.min(w):.3e})")
    return (v / np.sqrt(w)) @ dagger(v)


def check_dims(dims: Sequence[int], size: int) -> tuple[int, ...]:
    dims = tuple(int(d) for d in dims)
    if not dims or any(d < 1 for d in dims):
        raise ValidationError(f"factor dimensions must be positive integers, got {dims}")
    if int(np.prod(dims)) != size:
        raise ValidationError(f"factor dimensions {dims} multiply to {int(np.prod(dims))}, matrix has dimension {size}")
    return dims


def _normalize_indices(idx: Iterable[int] | int, n: int) -> list[int]:
    if isinstance(idx, (int, np.integer)):
        idx = [int(idx)]
    out = sorted(set(int(i) for i in idx))
    for i in out:
        if not 0 <= i < n:
            raise ValidationError(f"factor index {i} out of range for {n} factors")
    return out


def partial_trace(m, dims: Sequence[int], keep: Iterable[int] | int) -> np.ndarray:
    """Trace out every factor not listed in ``keep``.

    The kept factors appear in ascending index order in the result.
    """
    m = as_matrix(m)
    _require_square(m)
    dims = check_dims(dims, m.shape[0])
    keep = _normalize_indices(keep, len(dims))
    if not keep:
        raise ValidationError("keep must name at least one factor")
    n = len(dims)
    drop = [i for i in range(n) if i not in keep]
    dk = int(np.prod([dims[i] for i in keep]))
    dd = int(np.prod([dims[i] for i in drop])) if drop else 1
    t = m.reshape(dims + dims)
    perm = keep + drop + [n + i for i in keep] + [n + i for i in drop]
    t = np.transpose(t, perm).reshape(dk, dd, dk, dd)
    return np.einsum("ijkj->ik", t)


def partial_transpose(m, dims: Sequence[int], factors: Iterable[int] | int) -> np.ndarray:
    m = as_matrix(m)
    dims = check_dims(dims, m.shape[0])
    factors = _normalize_indices(factors, len(dims))
    n = len(dims)
    t = m.reshape(dims + dims)
    perm = list(range(2 * n))
    for f in factors:
        perm[f], perm[n + f] = perm[n + f], perm[f]
    return np.transpose(t, perm).reshape(m.shape)


def permute_factors(m, dims: Sequence[int], order: Sequence[int]) -> np.ndarray:
    """Reorder tensor factors: new factor ``i`` is old factor ``order[i]``."""
    m = as_matrix(m)
    dims = check_dims(dims, m.shape[0])
    n = len(dims)
    order = [int(o) for o in order]
    if sorted(order) != list(range(n)):
        raise ValidationError(f"{order} is not a permutation of {n} factors")
    t = m.reshape(dims + dims)
    return np.transpose(t, order + [n + o for o in order]).reshape(m.shape)


def apply_on_factors(op, m, dims: Sequence[int], factors: Sequence[int], side: str = "both") -> np.ndarray:
    """Compute ``(op ⊗ I) m (op ⊗ I)^dagger`` with ``op`` acting on ``factors``.

    ``op`` must be square on the product of the selected factors (taken in
    ascending order). ``side='left'`` returns ``(op ⊗ I) m`` only.
    """
    m = as_matrix(m)
    op = as_matrix(op)
    dims = check_dims(dims, m.shape[0])
    factors = _normalize_indices(factors, len(dims))
    n = len(dims)
    rest = [i for i in range(n) if i not in factors]
    order = factors + rest
    df = int(np.prod([dims[i] for i in factors]))
    if op.shape != (df, df):
        raise ValidationError(f"operator of shape {op.shape} does not act on factors {factors} of dims {dims}")
    dr = m.shape[0] // df
    pdims = [dims[i] for i in order]
    t = permute_factors(m, dims, order).reshape(df, dr, df, dr)
    t = np.einsum("ab,bjkl->ajkl", op, t)
    if side == "both":
        t = np.einsum("ijkl,ck->ijcl", t, op.conj())
    t = t.reshape(m.shape)
    inverse = [order.index(i) for i in range(n)]
    return permute_factors(t, pdims, inverse)


def hermitian_basis(n: int) -> np.ndarray:
    """Orthonormal basis of ``n x n`` Hermitian matrices under ``<A, B> = tr(A B)``.

    Returns an array of shape ``(n*n, n, n)``.
    """
    basis = np.zeros((n * n, n, n), dtype=complex)
    k = 0
    r = 1.0 / np.sqrt(2.0)
    for a in range(n):
        basis[k, a, a] = 1.0
        k += 1
    for a in range(n):
        for b in range(a + 1, n):
            basis[k, a, b] = r
            basis[k, b, a] = r
            k += 1
            basis[k, a, b] = -1j * r
            basis[k, b, a] = 1j * r
            k += 1
    return basis
