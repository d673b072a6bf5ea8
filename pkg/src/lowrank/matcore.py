"""Dense matrix kernels shared by every model.

Matrices are plain ``numpy.ndarray`` objects of dtype float64.  The
``as_matrix``/``as_mask`` helpers are the construction-time gate: once an
array has passed through them it is 2-D, finite, and (for masks) binary, so
the kernels below never re-check.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, ValidationError


def as_matrix(a, name="matrix"):
    """Return ``a`` as a finite 2-D float64 array.

    1-D input is not promoted; callers holding vectors reshape explicitly.
    """
    arr = np.asarray(a, dtype=np.float64)
    if arr.ndim != 2:
        raise DimensionError(f"{name} must be 2-D, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValidationError(f"{name} contains non-finite entries")
    return arr


def as_mask(o, shape=None, name="mask"):
    """Return a binary observation mask as float64 (entries exactly 0.0 or 1.0)."""
    arr = np.asarray(o, dtype=np.float64)
    if shape is not None and arr.shape != tuple(shape):
        raise DimensionError(f"{name} has shape {arr.shape}, expected {tuple(shape)}")
    if not np.all((arr == 0.0) | (arr == 1.0)):
        raise ValidationError(f"{name} entries must be 0 or 1")
    return arr


def require_nonneg(a, name="matrix"):
    if np.any(a < 0):
        raise ValidationError(f"{name} has negative entries")


def check_same_shape(a, b, what="operands"):
    if a.shape != b.shape:
        raise DimensionError(f"{what} differ in shape: {a.shape} vs {b.shape}")


def hadamard(a, b):
    """Entrywise product ``a ∘ b``."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    check_same_shape(a, b)
    return a * b


def frob_sq(a):
    """Squared Frobenius norm, i.e. the sum of squared entries."""
    a = np.asarray(a, dtype=np.float64)
    return float(np.sum(a * a))


def trace_frob_sq(a):
    """``Tr(aᵀa)`` computed through the matrix product (reference path)."""
    a = np.asarray(a, dtype=np.float64)
    return float(np.trace(a.T @ a))


def pos_neg_split(g):
    """Split ``g`` into non-negative parts with ``g = pos - neg``.

    ``pos = (|g| + g) / 2`` and ``neg = (|g| - g) / 2``; the two have
    disjoint support.
    """
    g = np.asarray(g, dtype=np.float64)
    a = np.abs(g)
    return (a + g) / 2.0, (a - g) / 2.0


def safe_ratio_sqrt(num, den, eps_floor):
    """``sqrt(num / max(den, eps_floor))`` with negative rounding noise in ``num`` clipped."""
    return np.sqrt(np.maximum(num, 0.0) / np.maximum(den, eps_floor))


@dataclass(frozen=True)
class GraphData:
    """Link graph with its degree and Laplacian matrices."""

    adjacency: np.ndarray
    degree: np.ndarray
    laplacian: np.ndarray

    @property
    def n_nodes(self):
        return self.adjacency.shape[0]


def laplacian_from_adjacency(z, tol=1e-12):
    """Build ``GraphData`` from a symmetric, non-negative, zero-diagonal adjacency.

    The degree is the column sum ``D(i,i) = sum_j Z(j,i)`` and ``L = D - Z``.
    """
    z = as_matrix(z, "adjacency")
    if z.shape[0] != z.shape[1]:
        raise DimensionError(f"adjacency must be square, got {z.shape}")
    scale = max(1.0, float(np.max(np.abs(z)))) if z.size else 1.0
    if np.any(z < 0):
        raise ValidationError("adjacency has negative entries")
    if np.max(np.abs(z - z.T), initial=0.0) > tol * scale:
        raise ValidationError("adjacency is not symmetric")
    if np.max(np.abs(np.diag(z)), initial=0.0) > 0:
        raise ValidationError("adjacency must have a zero diagonal")
    z = (z + z.T) / 2.0
    degree = np.diag(z.sum(axis=0))
    return GraphData(adjacency=z, degree=degree, laplacian=degree - z)


def laplacian_pairwise_sum(u, z):
    """``1/2 sum_ij z(i,j) ||u(i,:) - u(j,:)||²`` by explicit double loop.

    Slow reference used to cross-check the trace form.
    """
    u = np.asarray(u, dtype=np.float64)
    total = 0.0
    m = u.shape[0]
    for i in range(m):
        for j in range(m):
            if z[i, j] != 0.0:
                d = u[i] - u[j]
                total += z[i, j] * float(d @ d)
    return 0.5 * total


def estimate_memory_mb(rows, cols, bytes_per_entry=4):
    """Memory of a dense ``rows x cols`` matrix in megabytes (1 MB = 10**6 bytes)."""
    for value, label in ((rows, "rows"), (cols, "cols"), (bytes_per_entry, "bytes_per_entry")):
        if value < 0:
            raise ValidationError(f"{label} must be non-negative")
    return rows * cols * bytes_per_entry / 10**6
