"""Dense complex matrix kernel.

Every operator in the package (Hamiltonians, projectors, metrics, evolution
operators, superoperators) is a plain two-dimensional ``numpy`` array of
``complex128``.  The functions here are pure and never mutate their inputs.
"""
from typing import Sequence

import numpy as np

from .errors import DimensionMismatch, NotHermitian, NotSquare

HERMITICITY_TOL = 1e-10

FORWARD = "forward"
REVERSE = "reverse"


def as_matrix(m) -> np.ndarray:
    a = np.array(m, dtype=np.complex128)
    if a.ndim != 2 or a.shape[0] < 1 or a.shape[1] < 1:
        raise DimensionMismatch(f"expected a non-empty 2-d array, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix has non-finite entries")
    return a


def dagger(m: np.ndarray) -> np.ndarray:
    return np.conj(np.swapaxes(m, -1, -2))


def hermitian_asymmetry(m: np.ndarray) -> float:
    return float(np.max(np.abs(m - dagger(m)))) if m.size else 0.0


def check_hermitian(m, tol: float = HERMITICITY_TOL) -> np.ndarray:
    """Validate ``m`` and return its symmetrized copy ``(m + m^dagger)/2``.

    The tolerance is relative to the largest entry of ``m``.
    """
    a = as_matrix(m)
    if a.shape[0] != a.shape[1]:
        raise NotSquare(f"matrix of shape {a.shape} is not square")
    asym = hermitian_asymmetry(a)
    scale = float(np.max(np.abs(a)))
    if asym > tol * scale:
        raise NotHermitian(asym)
    return 0.5 * (a + dagger(a))


def _fix_column_phases(v: np.ndarray) -> np.ndarray:
    v = v.copy()
    for j in range(v.shape[1]):
        mags = np.abs(v[:, j])
        # first entry that is (numerically) of maximal magnitude
        i = int(np.flatnonzero(mags >= mags.max() * (1 - 1e-9))[0])
        v[:, j] *= np.conj(v[i, j]) / abs(v[i, j])
    return v


def degenerate_clusters(values: np.ndarray, rtol: float) -> list:
    """Group sorted ``values`` into runs whose neighbours differ by at most
    ``rtol * (1 + spread)``."""
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        return []
    gap = rtol * (1.0 + float(values[-1] - values[0]))
    clusters, start = [], 0
    for i in range(1, values.size):
        if values[i] - values[i - 1] > gap:
            clusters.append(list(range(start, i)))
            start = i
    clusters.append(list(range(start, values.size)))
    return clusters


def eig_hermitian(m, tol: float = HERMITICITY_TOL):
    """Eigendecomposition of a Hermitian matrix.

    Returns ``(eigenvalues, eigenvectors)`` with eigenvalues ascending and
    eigenvectors as orthonormal columns, each column rescaled so that its
    largest-magnitude entry is real and positive.
    """
    h = check_hermitian(m, tol)
    vals, vecs = np.linalg.eigh(h)
    for cluster in degenerate_clusters(vals, 1e-10):
        if len(cluster) > 1:
            q, _ = np.linalg.qr(vecs[:, cluster])
            vecs[:, cluster] = q
    return vals, _fix_column_phases(vecs)


def expm_hermitian_phase(h, s: float, tol: float = HERMITICITY_TOL) -> np.ndarray:
    """Return ``exp(-i s h)`` for Hermitian ``h``."""
    vals, vecs = eig_hermitian(h, tol)
    return (vecs * np.exp(-1j * s * vals)) @ dagger(vecs)


def kron(a, b) -> np.ndarray:
    return np.kron(as_matrix(a), as_matrix(b))


def partial_trace_b(m, dim_a: int, dim_b: int) -> np.ndarray:
    """Trace out the second tensor factor of an operator on A (x) B."""
    a = as_matrix(m)
    n = dim_a * dim_b
    if a.shape != (n, n):
        raise DimensionMismatch(f"expected a {n}x{n} matrix for dims ({dim_a}, {dim_b}), got {a.shape}")
    return np.einsum("ijkj->ik", a.reshape(dim_a, dim_b, dim_a, dim_b))


def partial_trace_a(m, dim_a: int, dim_b: int) -> np.ndarray:
    a = as_matrix(m)
    n = dim_a * dim_b
    if a.shape != (n, n):
        raise DimensionMismatch(f"expected a {n}x{n} matrix for dims ({dim_a}, {dim_b}), got {a.shape}")
    return np.einsum("ijil->jl", a.reshape(dim_a, dim_b, dim_a, dim_b))


def ordered_product(factors: Sequence, order: str = FORWARD, dim: int = None) -> np.ndarray:
    """Ordered product of square matrices.

    ``forward`` gives ``A_1 A_2 ... A_n`` and ``reverse`` gives
    ``A_n ... A_2 A_1``.  An empty product is the identity of size ``dim``.
    """
    if order not in (FORWARD, REVERSE):
        raise ValueError(f"order must be {FORWARD!r} or {REVERSE!r}")
    mats = [as_matrix(f) for f in factors]
    if not mats:
        if dim is None:
            raise DimensionMismatch("dimension required for an empty product")
        return np.eye(dim, dtype=np.complex128)
    d = mats[0].shape[0]
    if dim is not None and dim != d:
        raise DimensionMismatch(f"factors have dimension {d}, expected {dim}")
    for a in mats:
        if a.shape != (d, d):
            raise DimensionMismatch(f"factor of shape {a.shape} in a product of {d}x{d} matrices")
    if order == REVERSE:
        mats = mats[::-1]
    out = mats[0]
    for a in mats[1:]:
        out = out @ a
    return out


def is_psd(m, tol: float = 1e-10) -> bool:
    return float(np.linalg.eigvalsh(check_hermitian(m))[0]) >= -tol
