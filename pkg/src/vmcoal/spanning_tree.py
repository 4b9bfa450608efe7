"""Weighted spanning-tree enumerator and the cluster tree-weight factor.

The enumerator of a weighted complete graph is the determinant of its
reduced Laplacian (matrix-tree theorem).  The tree-weight factor of a
cluster ``x`` is the total weight of spanning trees of the complete graph
with ``x_i`` vertices of type ``i`` and edge weight ``v_ij`` between types
``i`` and ``j``; it reduces to a k-vertex enumerator::

    T_x = tau(K_S, x_i x_j v_ij) / prod_i x_i * prod_i (Vx)_i ** (x_i - 1)

where every product and the graph ``K_S`` run over the support
``S = {i : x_i > 0}`` only.  Restricting to the support avoids the 0/0 that
the full k-vertex form produces for clusters with a missing type.
"""

from __future__ import annotations

import numpy as np

from .model import ModelParams, support_connected

__all__ = [
    "lu_logdet",
    "tree_enumerator",
    "log_tree_enumerator",
    "log_tree_factor",
    "log_tree_factor_batch",
]


def lu_logdet(A: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Sign and log|det| of a stack of square matrices, shape (..., m, m).

    Gaussian elimination with partial pivoting, vectorised over the stack.
    Singular matrices give sign 0 and logdet -inf.
    """
    A = np.array(A, dtype=float)
    batch_shape = A.shape[:-2]
    m = A.shape[-1]
    A = A.reshape(-1, m, m)
    B = A.shape[0]
    sign = np.ones(B)
    logdet = np.zeros(B)
    rows = np.arange(B)
    for c in range(m):
        piv = c + np.argmax(np.abs(A[:, c:, c]), axis=1)
        swap = piv != c
        if swap.any():
            idx = rows[swap]
            top = A[idx, c, :].copy()
            A[idx, c, :] = A[idx, piv[swap], :]
            A[idx, piv[swap], :] = top
            sign[swap] = -sign[swap]
        d = A[:, c, c]
        zero = d == 0.0
        sign[zero] = 0.0
        safe = np.where(zero, 1.0, d)
        sign *= np.sign(safe)
        logdet += np.log(np.abs(safe))
        if c + 1 < m:
            f = A[:, c + 1 :, c] / safe[:, None]
            A[:, c + 1 :, c:] -= f[:, :, None] * A[:, c, None, c:]
    logdet[sign == 0] = -np.inf
    return sign.reshape(batch_shape), logdet.reshape(batch_shape)


def _reduced_laplacian(w: np.ndarray) -> np.ndarray:
    # w has shape (..., m, m) with zero diagonal; drop the first row/column.
    L = -w
    deg = w.sum(axis=-1)
    idx = np.arange(w.shape[-1])
    L[..., idx, idx] = deg
    return L[..., 1:, 1:]


def _check_graph(w):
    w = np.asarray(w, dtype=float)
    if w.ndim != 2 or w.shape[0] != w.shape[1]:
        raise ValueError(f"expected a square weight matrix, got shape {w.shape}")
    if np.any(np.diag(w) != 0):
        raise ValueError("weight matrix must have a zero diagonal")
    if np.any(w != w.T):
        raise ValueError("weight matrix must be symmetric")
    if np.any(w < 0):
        raise ValueError("weights must be nonnegative")
    return w


def log_tree_enumerator(w) -> float:
    """log of the weighted spanning-tree enumerator; -inf if the weighted
    support graph is disconnected."""
    w = _check_graph(w)
    m = w.shape[0]
    if m == 1:
        return 0.0
    if not support_connected(w):
        return -np.inf
    _, logdet = lu_logdet(_reduced_laplacian(w))
    return float(logdet)


def tree_enumerator(w) -> float:
    """Sum over spanning trees of the product of edge weights.

    >>> tree_enumerator([[0, 1, 2], [1, 0, 3], [2, 3, 0]])
    11.0
    """
    return float(np.exp(log_tree_enumerator(w)))


def log_tree_factor_batch(V: np.ndarray, X: np.ndarray) -> np.ndarray:
    """Vectorised ``log T_x`` for every row of the integer array ``X`` (N, k).

    Rows are grouped by support pattern; within a group the reduced
    Laplacians are stacked and factorised together.
    """
    V = np.asarray(V, dtype=float)
    X = np.asarray(X)
    N, k = X.shape
    out = np.empty(N)
    Xf = X.astype(float)
    VX = Xf @ V  # (Vx)_i, V symmetric
    masks = (X > 0) @ (1 << np.arange(k))
    for mask in np.unique(masks):
        rows = np.flatnonzero(masks == mask)
        S = np.flatnonzero((int(mask) >> np.arange(k)) & 1)
        xs = Xf[np.ix_(rows, S)]
        vxs = VX[np.ix_(rows, S)]
        VS = V[np.ix_(S, S)].copy()
        np.fill_diagonal(VS, 0.0)
        # (Vx)_i ** (x_i - 1) with 0 ** 0 = 1
        expo = xs - 1.0
        with np.errstate(divide="ignore", invalid="ignore"):
            pw = np.where(expo > 0, expo * np.log(vxs), 0.0)
        val = pw.sum(axis=1) - np.log(xs).sum(axis=1)
        if S.size > 1:
            if not support_connected(VS):
                val[:] = -np.inf
            else:
                w = xs[:, :, None] * xs[:, None, :] * VS
                _, ld = lu_logdet(_reduced_laplacian(w))
                val += ld
        out[rows] = val
    return out


def log_tree_factor(params: ModelParams, x) -> float:
    """log of the tree-weight factor ``T_x``; -inf when no spanning tree of
    the cluster's type pattern has positive weight."""
    X = np.asarray(x, dtype=np.int64).reshape(1, -1)
    if X.shape[1] != params.k:
        raise ValueError(f"cluster size has {X.shape[1]} entries, model has k={params.k}")
    if np.any(X < 0) or X.sum() < 1:
        raise ValueError(f"invalid cluster size {tuple(x)}")
    return float(log_tree_factor_batch(params.V, X)[0])
