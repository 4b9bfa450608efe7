"""Model parameters, validation, spectral radius and phase classification.

A model is a symmetric, nonnegative, irreducible interaction matrix ``V``
together with a vector ``alpha`` of initial particle densities per type.
The product ``V @ diag(alpha)`` (scaled by time) drives everything else:
its spectral radius fixes the gelation time and the phase of the system.
"""

from __future__ import annotations

import enum
import math
from collections import deque
from dataclasses import dataclass
from typing import Any, Mapping, Sequence

import numpy as np

from .errors import (
    AsymmetricMatrix,
    ModelError,
    NegativeEntry,
    NoConvergence,
    NonpositiveAlpha,
    ReducibleMatrix,
)

TOL_RHO = 1e-12
TOL_PHASE = 1e-9
MAX_POWER_ITER = 100_000


@dataclass(frozen=True, eq=False)
class ModelParams:
    """Interaction matrix ``V`` (k x k) and initial densities ``alpha`` (k,).

    Arrays are copied to float64 and made read-only on construction.  Only
    shapes are checked here; call :func:`validate` for the model hypotheses.
    """

    V: np.ndarray
    alpha: np.ndarray

    def __post_init__(self):
        V = np.array(self.V, dtype=float)
        alpha = np.array(self.alpha, dtype=float)
        if alpha.ndim != 1 or alpha.size == 0:
            raise ModelError("alpha must be a non-empty vector", "alpha")
        if V.shape != (alpha.size, alpha.size):
            raise ModelError(
                f"V must be {alpha.size}x{alpha.size}, got shape {V.shape}", "V"
            )
        V.setflags(write=False)
        alpha.setflags(write=False)
        object.__setattr__(self, "V", V)
        object.__setattr__(self, "alpha", alpha)

    @property
    def k(self) -> int:
        return self.alpha.size

    def base_matrix(self) -> np.ndarray:
        """``V @ diag(alpha)``; entry (i, j) is ``v_ij * alpha_j``."""
        return self.V * self.alpha[None, :]

    def permuted(self, perm: Sequence[int]) -> "ModelParams":
        perm = np.asarray(perm)
        return ModelParams(self.V[np.ix_(perm, perm)], self.alpha[perm])

    def to_config(self) -> dict:
        return {"k": self.k, "V": self.V.tolist(), "alpha": self.alpha.tolist()}

    @classmethod
    def from_config(cls, cfg: Mapping[str, Any], root: str = "$") -> "ModelParams":
        """Build and validate a model from ``{"k": int, "V": [[..]], "alpha": [..]}``.

        Every error message carries the JSON path of the offending field.
        """
        for key in ("V", "alpha"):
            if key not in cfg:
                raise ModelError("missing required field", f"{root}.{key}")
        alpha_raw = cfg["alpha"]
        V_raw = cfg["V"]
        if not isinstance(alpha_raw, list) or not alpha_raw:
            raise ModelError("expected a non-empty list of numbers", f"{root}.alpha")
        k = len(alpha_raw)
        if "k" in cfg:
            kk = cfg["k"]
            if not isinstance(kk, int) or isinstance(kk, bool) or kk < 1:
                raise ModelError("expected a positive integer", f"{root}.k")
            if kk != k:
                raise ModelError(f"k={kk} but alpha has {k} entries", f"{root}.k")
        alpha = []
        for i, a in enumerate(alpha_raw):
            alpha.append(_number(a, f"{root}.alpha[{i}]"))
        if not isinstance(V_raw, list) or len(V_raw) != k:
            raise ModelError(f"expected a list of {k} rows", f"{root}.V")
        V = []
        for i, row in enumerate(V_raw):
            if not isinstance(row, list) or len(row) != k:
                raise ModelError(f"expected a list of {k} numbers", f"{root}.V[{i}]")
            V.append([_number(v, f"{root}.V[{i}][{j}]") for j, v in enumerate(row)])
        return validate(cls(V, alpha), root=root)


def _number(value, path):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ModelError(f"expected a number, got {value!r}", path)
    if not np.isfinite(value):
        raise ModelError("expected a finite number", path)
    return float(value)


def support_connected(adj: np.ndarray) -> bool:
    """True if the undirected graph with edges where ``adj[i, j] > 0`` is connected."""
    m = adj.shape[0]
    if m <= 1:
        return True
    seen = np.zeros(m, dtype=bool)
    seen[0] = True
    queue = deque([0])
    while queue:
        i = queue.popleft()
        for j in np.flatnonzero(adj[i] > 0):
            if not seen[j]:
                seen[j] = True
                queue.append(j)
    return bool(seen.all())


def validate(params: ModelParams, root: str | None = None) -> ModelParams:
    """Return ``params`` unchanged if V is symmetric, nonnegative and
    irreducible and every alpha is strictly positive; raise otherwise."""

    def where(field):
        return f"{root}.{field}" if root else field

    V, alpha = params.V, params.alpha
    if not np.all(np.isfinite(V)):
        raise ModelError("V has non-finite entries", where("V"))
    if not np.all(np.isfinite(alpha)):
        raise ModelError("alpha has non-finite entries", where("alpha"))
    neg = np.argwhere(V < 0)
    if neg.size:
        i, j = neg[0]
        raise NegativeEntry(f"V entries must be >= 0, got {V[i, j]}", where(f"V[{i}][{j}]"))
    asym = np.argwhere(V != V.T)
    if asym.size:
        i, j = asym[0]
        raise AsymmetricMatrix(
            f"V must be symmetric: V[{i}][{j}]={V[i, j]} != V[{j}][{i}]={V[j, i]}",
            where(f"V[{i}][{j}]"),
        )
    bad = np.flatnonzero(alpha <= 0)
    if bad.size:
        i = bad[0]
        raise NonpositiveAlpha(f"alpha entries must be > 0, got {alpha[i]}", where(f"alpha[{i}]"))
    if not support_connected(V):
        raise ReducibleMatrix("V is reducible: its support graph is disconnected", where("V"))
    return params


def spectral_radius(A, tol: float = TOL_RHO, max_iter: int = MAX_POWER_ITER) -> float:
    """Perron root of a nonnegative square matrix by power iteration.

    The iteration runs on ``A + s*I`` for some ``s > 0``, which is primitive
    whenever ``A`` is irreducible; this matters for bipartite kernels, where
    plain power iteration oscillates between ``+rho`` and ``-rho``.  Since
    ``rho`` lies between the smallest and largest row sums, their midpoint is
    used for ``s``: it keeps ``|s - rho| / (s + rho)`` small.  Convergence is declared from the Collatz-Wielandt bracket
    ``min (Bx)_i/x_i <= rho(B) <= max (Bx)_i/x_i``.
    """
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {A.shape}")
    if np.any(A < 0):
        raise ValueError("spectral_radius expects a nonnegative matrix")
    m = A.shape[0]
    if m == 1:
        return float(A[0, 0])
    rows = A.sum(axis=1)
    if rows.max() == 0.0:
        return 0.0
    shift = 0.5 * float(rows.min() + rows.max())
    B = A + shift * np.eye(m)
    x = np.ones(m)
    for _ in range(max_iter):
        Bx = B @ x
        ratios = Bx / x
        lo, hi = ratios.min(), ratios.max()
        if hi - lo <= tol * hi:
            return float(0.5 * (lo + hi) - shift)
        x = Bx / Bx.max()
        if np.any(x <= 0):
            break
    raise NoConvergence(
        "power iteration did not converge; is the matrix reducible or degenerate?"
    )


def gelation_time(params: ModelParams) -> float:
    """``1 / rho(V diag(alpha))``; infinite when the kernel vanishes."""
    rho = spectral_radius(params.base_matrix())
    return math.inf if rho == 0.0 else 1.0 / rho


class Phase(enum.Enum):
    SUBCRITICAL = "subcritical"
    CRITICAL = "critical"
    SUPERCRITICAL = "supercritical"


@dataclass(frozen=True)
class PhaseRegion:
    region: Phase
    rho: float

    @property
    def in_closure(self) -> bool:
        """True when ``alpha*t`` lies in the closed subcritical region."""
        return self.region is not Phase.SUPERCRITICAL


def classify_rho(rho: float, tol: float = TOL_PHASE) -> PhaseRegion:
    if abs(rho - 1.0) <= tol:
        return PhaseRegion(Phase.CRITICAL, rho)
    return PhaseRegion(Phase.SUBCRITICAL if rho < 1.0 else Phase.SUPERCRITICAL, rho)


def classify(params: ModelParams, t: float) -> PhaseRegion:
    if t < 0:
        raise ValueError(f"t must be >= 0, got {t}")
    return classify_rho(spectral_radius(params.base_matrix() * t))
