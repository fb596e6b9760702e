"""Dense real linear algebra primitives.

Eigenvalues, singular values and matrix exponentials are delegated to
LAPACK through numpy/scipy; this module adds input validation, the
tolerance conventions used by the stability code, and explicit failure
modes.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .errors import EigenSolverError, ExpmOverflowError

# |Re lambda| <= SNAP_RTOL * max(1, ||A||) counts as a zero real part.
SNAP_RTOL = 1e-9
# eigenvalues closer than CLUSTER_RTOL * max(1, ||A||) form one cluster.
CLUSTER_RTOL = 1e-7


def as_matrix(A) -> np.ndarray:
    """Validate and return ``A`` as a finite square float64 array."""
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1] or A.shape[0] == 0:
        raise ValueError(f"expected a non-empty square matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise ValueError("matrix entries must be finite")
    return A


def matrix_scale(A: np.ndarray) -> float:
    """``max(1, ||A||_2)``, the reference scale for relative tolerances."""
    return max(1.0, float(np.linalg.norm(A, 2)))


@dataclass(frozen=True)
class Spectrum:
    """Eigenvalues of a real matrix, counted with multiplicity.

    ``eigenvalues`` is sorted by decreasing real part, then by decreasing
    imaginary part, so conjugate pairs sit next to each other.
    ``clusters`` groups indices of numerically coincident eigenvalues.
    """

    eigenvalues: np.ndarray
    scale: float
    clusters: tuple[tuple[int, ...], ...] = field(default=())

    @property
    def n(self) -> int:
        return len(self.eigenvalues)

    @property
    def conjugate_paired(self) -> bool:
        vals = self.eigenvalues
        conj = np.sort_complex(np.conj(vals))
        return bool(np.allclose(np.sort_complex(vals), conj, rtol=0.0,
                                atol=CLUSTER_RTOL * self.scale))

    @property
    def snap_tolerance(self) -> float:
        return SNAP_RTOL * self.scale

    def max_real(self, snap: bool = True) -> float:
        """Largest real part; values within the snap tolerance become 0."""
        m = float(np.max(self.eigenvalues.real))
        if snap and abs(m) <= self.snap_tolerance:
            return 0.0
        return m

    def cluster_centers(self) -> list[complex]:
        return [complex(np.mean(self.eigenvalues[list(c)])) for c in self.clusters]


def _cluster(vals: np.ndarray, tol: float) -> tuple[tuple[int, ...], ...]:
    # single-linkage grouping; n is small so the quadratic scan is fine
    n = len(vals)
    parent = list(range(n))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(n):
        for j in range(i + 1, n):
            if abs(vals[i] - vals[j]) <= tol:
                parent[find(i)] = find(j)
    groups: dict[int, list[int]] = {}
    for i in range(n):
        groups.setdefault(find(i), []).append(i)
    return tuple(tuple(g) for g in sorted(groups.values()))


def eigenvalues(A) -> Spectrum:
    """All eigenvalues of ``A`` via the LAPACK Hessenberg-QR solver."""
    A = as_matrix(A)
    try:
        vals = np.linalg.eigvals(A)
    except np.linalg.LinAlgError as exc:
        raise EigenSolverError(
            f"eigenvalue iteration did not converge for {A.shape[0]}x{A.shape[0]} "
            f"matrix (||A||_F={np.linalg.norm(A):.3e}): {exc}"
        ) from exc
    vals = np.asarray(vals, dtype=complex)
    order = np.lexsort((-vals.imag, -vals.real))
    vals = vals[order]
    scale = matrix_scale(A)
    return Spectrum(vals, scale, _cluster(vals, CLUSTER_RTOL * scale))


@dataclass(frozen=True)
class SvdResult:
    singular_values: np.ndarray
    rank: int

    @property
    def largest(self) -> float:
        return float(self.singular_values[0])

    @property
    def smallest(self) -> float:
        return float(self.singular_values[-1])


def singular_values(P) -> SvdResult:
    """Singular values in non-increasing order; values below rank tolerance are zeroed."""
    P = np.asarray(P, dtype=float)
    if P.ndim != 2 or not np.all(np.isfinite(P)):
        raise ValueError("expected a finite 2-d array")
    s = np.linalg.svd(P, compute_uv=False)
    if s.size == 0:
        return SvdResult(s, 0)
    tol = max(P.shape) * np.finfo(float).eps * s[0]
    s = np.where(s > tol, s, 0.0)
    return SvdResult(s, int(np.count_nonzero(s)))


def expm(A, t: float = 1.0) -> np.ndarray:
    """``exp(t A)`` by scaling and squaring with a Pade core.

    Raises ExpmOverflowError when the result is not representable; long
    horizons should go through the renormalized propagation in
    :mod:`curvestab.curvature` instead.
    """
    A = as_matrix(A)
    if not np.isfinite(t):
        raise ValueError("t must be finite")
    with np.errstate(over="ignore", invalid="ignore"):
        E = scipy.linalg.expm(t * A)
    if not np.all(np.isfinite(E)):
        raise ExpmOverflowError(
            f"exp(tA) overflows for t={t}, ||A||_2={np.linalg.norm(A, 2):.3e}"
        )
    return E


def apply_power(A, k: int, v) -> np.ndarray:
    """``A^k v`` by ``k`` successive matrix-vector products."""
    A = np.asarray(A, dtype=float)
    v = np.asarray(v, dtype=float)
    if v.ndim != 1 or A.shape != (v.size, v.size):
        raise ValueError(f"dimension mismatch: A {A.shape}, v {v.shape}")
    if k < 0:
        raise ValueError("k must be non-negative")
    out = v.copy()
    for _ in range(k):
        out = A @ out
    return out


def determinant(A) -> float:
    A = as_matrix(A)
    return float(np.linalg.det(A))


def is_invertible(A, rtol: float = 1e-9) -> bool:
    """``|det A| > rtol * ||A||^n`` using the LU-based determinant."""
    A = as_matrix(A)
    n = A.shape[0]
    return abs(determinant(A)) > rtol * matrix_scale(A) ** n


def random_orthogonal(n: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed orthogonal matrix."""
    q, r = np.linalg.qr(rng.standard_normal((n, n)))
    return q * np.sign(np.diag(r))
