"""Higher curvatures of LTI trajectories.

For ``r(t) = exp(tA) r0`` the derivatives are ``r^(k)(t) = A^k r(t)``. The
``k``-volume ``V_k(t)`` of the parallelotope spanned by the first ``k``
derivatives is the product of the Gram-Schmidt norms ``||E_1|| ... ||E_k||``
and the ``i``-th curvature is

    kappa_i = V_{i+1} V_{i-1} / (V_1 V_i^2).

Everything is carried in log form so that traces stay finite when the
trajectory grows or decays like ``e^{300}``.

Two propagation schemes are offered by :func:`sample_trace`:

``"frame"`` (default)
    Restricts the dynamics to the Krylov subspace generated by ``A r0`` and
    advances an orthonormal Gram-Schmidt frame of the derivative vectors,
    accumulating ``log ||E_p||`` step by step. Relative accuracy of each
    volume is preserved even when the derivative vectors become parallel
    to working precision.

``"direct"``
    Advances the (renormalized) state and rebuilds the derivative stack at
    every grid point. Simple, but the orthogonal parts of the stack are lost
    to cancellation once they fall below ~1e-16 of the leading direction.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import UndefinedCurvatureError
from .linalg import apply_power, as_matrix, expm

log = logging.getLogger(__name__)

# |E_k| <= DEGENERACY_RTOL * |r^(k)| means r^(k) lies in the span of the earlier ones
DEGENERACY_RTOL = 1e-12
# Arnoldi breakdown threshold, relative to ||A||_2
KRYLOV_RTOL = 1e-12
# cap on ||A|| * dt for one propagation step
MAX_STEP_NORM = 4.0

DEFAULT_STEP = 0.05
DEFAULT_T_MAX = 50.0


@dataclass(frozen=True)
class DerivativeStack:
    """Derivatives ``r'(t), ..., r^(m)(t)`` stored as rows of ``vectors``.

    Row ``k-1`` equals ``r^(k)(t) / exp(log_scale)``.
    """

    t: float
    vectors: np.ndarray
    log_scale: float = 0.0
    degenerate: bool = False

    @property
    def m(self) -> int:
        return self.vectors.shape[0]

    @property
    def n(self) -> int:
        return self.vectors.shape[1]


@dataclass(frozen=True)
class VolumeVector:
    """``log_V[k] = ln V_k`` for ``k = 0..m`` (``log_V[0] = 0``).

    Volumes are unscaled, i.e. the stack's ``log_scale`` is already folded
    in. ``degenerate_from`` is the first ``k`` with ``V_k = 0``; those
    entries hold ``-inf``.
    """

    log_V: np.ndarray
    degenerate_from: int | None = None

    @property
    def m(self) -> int:
        return len(self.log_V) - 1


@dataclass
class CurvatureTrace:
    """Sampled ``ln kappa_i(t)``.

    ``log_kappa[j, i-1]`` is ``ln kappa_i(times[j])``; ``-inf`` marks an
    exactly vanishing curvature and ``nan`` an undefined one (zero
    velocity). ``flags[j]`` summarises the row as ``ok``, ``zero`` or
    ``degenerate``.
    """

    times: np.ndarray
    log_kappa: np.ndarray
    order: int
    flags: np.ndarray
    method: str = "frame"
    diagnostic: str | None = None
    krylov_dim: int | None = field(default=None)

    def __len__(self) -> int:
        return len(self.times)

    def kappa(self, i: int = 1) -> np.ndarray:
        """Raw ``kappa_i`` (zero markers become 0, undefined stays nan)."""
        with np.errstate(over="ignore"):
            return np.exp(self.log_kappa[:, i - 1])

    @property
    def truncated(self) -> bool:
        return self.diagnostic is not None


def derivative_stack(A, state, t: float = 0.0, m: int = 1) -> DerivativeStack:
    """Stack ``A state, A^2 state, ..., A^m state`` rescaled to max-norm 1."""
    A = as_matrix(A)
    state = np.asarray(state, dtype=float)
    n = A.shape[0]
    if state.shape != (n,):
        raise ValueError(f"state has shape {state.shape}, expected ({n},)")
    if not 1 <= m <= n:
        raise ValueError(f"need 1 <= m <= n, got m={m}, n={n}")
    s0 = float(np.max(np.abs(state)))
    if s0 == 0.0:
        return DerivativeStack(t, np.zeros((m, n)), 0.0, degenerate=True)
    u = state / s0
    rows = [apply_power(A, 1, u)]
    for _ in range(1, m):
        rows.append(A @ rows[-1])
    raw = np.array(rows)
    s1 = float(np.max(np.abs(raw)))
    if s1 == 0.0 or not np.any(rows[0]):
        return DerivativeStack(t, np.zeros((m, n)), math.log(s0), degenerate=True)
    return DerivativeStack(t, raw / s1, math.log(s0) + math.log(s1))


def gram_volumes(stack: DerivativeStack, rtol: float = DEGENERACY_RTOL) -> VolumeVector:
    """Volumes ``V_k`` of the leading ``k`` stack vectors.

    ``V_k^2`` is the determinant of the leading ``k x k`` Gram block, which
    equals the Cauchy-Binet sum of squared ``k x k`` minors. It is taken
    from the triangular factor of a Householder QR of the stack, so the Gram
    matrix is never formed and no precision is lost to squaring.
    """
    m = stack.m
    log_V = np.full(m + 1, -math.inf)
    log_V[0] = 0.0
    if stack.degenerate:
        return VolumeVector(log_V, 1)
    D = stack.vectors.T
    n = D.shape[0]
    R = np.linalg.qr(D, mode="r")
    col_norms = np.linalg.norm(D, axis=0)
    acc = 0.0
    for k in range(1, m + 1):
        if k > n:
            return VolumeVector(log_V, k)
        pivot = abs(R[k - 1, k - 1])
        if col_norms[k - 1] == 0.0 or pivot <= rtol * col_norms[k - 1]:
            return VolumeVector(log_V, k)
        acc += math.log(pivot) + stack.log_scale
        log_V[k] = acc
    return VolumeVector(log_V, None)


def curvatures_from_volumes(vol: VolumeVector) -> np.ndarray:
    """``ln kappa_i`` for ``i = 1..m-1``; ``-inf`` where ``kappa_i = 0``."""
    lv = vol.log_V
    if len(lv) < 2 or not math.isfinite(lv[1]):
        raise UndefinedCurvatureError("velocity vanishes: curvature undefined")
    m = vol.m
    out = np.full(max(m - 1, 0), -math.inf)
    for i in range(1, m):
        if math.isfinite(lv[i + 1]):
            out[i - 1] = lv[i + 1] + lv[i - 1] - lv[1] - 2.0 * lv[i]
    return out


def curvatures(stack: DerivativeStack, rtol: float = DEGENERACY_RTOL) -> np.ndarray:
    """``ln kappa_1 .. ln kappa_{m-1}`` at the stack's time point."""
    return curvatures_from_volumes(gram_volumes(stack, rtol))


def _gram_schmidt(Y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    # classical Gram-Schmidt with one reorthogonalisation pass
    m = Y.shape[1]
    Q = Y.copy()
    logd = np.empty(m)
    for j in range(m):
        w = Q[:, j]
        if j:
            Qj = Q[:, :j]
            w -= Qj @ (w @ Qj)
            w -= Qj @ (w @ Qj)
        nrm = math.sqrt(w @ w)
        if nrm == 0.0 or not math.isfinite(nrm):
            raise FloatingPointError("frame collapsed during propagation")
        logd[j] = math.log(nrm)
        w /= nrm
    return Q, logd


def krylov_basis(A: np.ndarray, v: np.ndarray, rtol: float = KRYLOV_RTOL):
    """Orthonormal basis of span{v, Av, A^2 v, ...} by Arnoldi.

    Returns ``(Q, H)`` with ``H = Q^T A Q``; ``Q`` has zero columns when
    ``v = 0``. Directions whose Arnoldi residual falls below
    ``rtol * ||A||_2`` are rounding noise and are dropped.
    """
    n = A.shape[0]
    beta = float(np.linalg.norm(v))
    if beta == 0.0:
        return np.zeros((n, 0)), np.zeros((0, 0))
    thresh = rtol * float(np.linalg.norm(A, 2))
    Q = np.zeros((n, n))
    Q[:, 0] = v / beta
    k = 1
    while k < n:
        w = A @ Q[:, k - 1]
        Qk = Q[:, :k]
        w -= Qk @ (Qk.T @ w)
        w -= Qk @ (Qk.T @ w)
        h = float(np.linalg.norm(w))
        if h <= thresh:
            break
        Q[:, k] = w / h
        k += 1
    Q = Q[:, :k]
    return Q, Q.T @ (A @ Q)


class _StepCache:
    def __init__(self, H: np.ndarray, max_step_norm: float):
        self.H = H
        norm = float(np.linalg.norm(H, 2)) if H.size else 0.0
        self.max_dt = max_step_norm / norm if norm > 0 else math.inf
        self._cache: dict[float, np.ndarray] = {}

    def propagators(self, dt: float) -> list[np.ndarray]:
        if dt <= 0:
            return []
        nsub = max(1, math.ceil(dt / self.max_dt - 1e-12))
        sub = dt / nsub
        E = self._cache.get(sub)
        if E is None:
            # grids built by arange/linspace jitter in the last bits
            key = round(sub, 13)
            E = self._cache.get(key)
            if E is None:
                E = expm(self.H, sub)
                self._cache[key] = E
            self._cache[sub] = E
        return [E] * nsub


def _check_grid(grid) -> np.ndarray:
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size == 0:
        raise ValueError("grid must be a non-empty 1-d array")
    if grid[0] < 0 or np.any(np.diff(grid) <= 0) or not np.all(np.isfinite(grid)):
        raise ValueError("grid must be finite, start at t >= 0 and increase strictly")
    return grid


def uniform_grid(t_max: float = DEFAULT_T_MAX, step: float = DEFAULT_STEP) -> np.ndarray:
    """``0, step, 2 step, ..., t_max`` (``t_max`` included when it is a multiple)."""
    if t_max <= 0 or step <= 0:
        raise ValueError("t_max and step must be positive")
    count = int(math.floor(t_max / step + 1e-9))
    return step * np.arange(count + 1)


def _flags(lk: np.ndarray) -> np.ndarray:
    flags = np.full(lk.shape[0], "ok", dtype=object)
    flags[np.any(np.isneginf(lk), axis=1)] = "zero"
    flags[np.any(np.isnan(lk), axis=1)] = "degenerate"
    return flags


def _finish(times, log_kappa, order, method, diagnostic=None, kdim=None) -> CurvatureTrace:
    lk = np.asarray(log_kappa, dtype=float).reshape(len(times), order)
    return CurvatureTrace(np.asarray(times, dtype=float), lk, order, _flags(lk),
                          method, diagnostic, kdim)


def _log_kappa_rows(log_V: np.ndarray) -> np.ndarray:
    # log_V: (N, order + 2) with column k holding ln V_k
    order = log_V.shape[1] - 2
    out = np.full((log_V.shape[0], order), -math.inf)
    for i in range(1, order + 1):
        nxt = log_V[:, i + 1]
        ok = np.isfinite(nxt)
        out[ok, i - 1] = nxt[ok] + log_V[ok, i - 1] - log_V[ok, 1] - 2.0 * log_V[ok, i]
    return out


def _sample_frame(A, r0, grid, order, degeneracy_rtol, krylov_rtol, max_step_norm):
    v = A @ r0
    Q, H = krylov_basis(A, v, krylov_rtol)
    r = Q.shape[1]
    undefined = np.full(order, np.nan)
    if r == 0:
        return _finish(grid, [undefined] * len(grid), order, "frame", None, 0)

    m_eff = min(order + 1, r)
    cols = [Q.T @ v]
    for _ in range(1, m_eff):
        cols.append(H @ cols[-1])
    D0 = np.column_stack(cols)
    # later derivatives that leave the span numerically are treated as dependent
    norms = np.linalg.norm(D0, axis=0)
    frame, logd = _gram_schmidt(D0)
    for j in range(1, m_eff):
        if logd[j] <= math.log(degeneracy_rtol * norms[j]):
            m_eff = j
            frame, logd = frame[:, :j], logd[:j]
            break

    steps = _StepCache(H, max_step_norm)
    logs = np.empty((len(grid), m_eff))
    diagnostic = None
    count = 0
    t_prev = 0.0
    for t in grid:
        try:
            for E in steps.propagators(t - t_prev):
                frame, inc = _gram_schmidt(E @ frame)
                logd = logd + inc
        except (FloatingPointError, OverflowError) as exc:
            diagnostic = f"propagation failed at t={t:g}: {exc}"
            log.warning(diagnostic)
            break
        t_prev = t
        logs[count] = logd
        count += 1
    log_V = np.full((count, order + 2), -math.inf)
    log_V[:, 0] = 0.0
    log_V[:, 1:m_eff + 1] = np.cumsum(logs[:count], axis=1)
    return _finish(grid[:count], _log_kappa_rows(log_V), order, "frame", diagnostic, r)


def _sample_direct(A, r0, grid, order, degeneracy_rtol, max_step_norm):
    steps = _StepCache(A, max_step_norm)
    nrm = float(np.linalg.norm(r0))
    state = r0 / nrm
    log_norm = math.log(nrm)
    m = order + 1
    rows, times = [], []
    t_prev = 0.0
    for t in grid:
        for E in steps.propagators(t - t_prev):
            state = E @ state
            s = float(np.linalg.norm(state))
            if s == 0.0 or not math.isfinite(s):
                msg = f"state lost during propagation at t={t:g}"
                log.warning(msg)
                return _finish(times, rows, order, "direct", msg)
            state /= s
            log_norm += math.log(s)
        t_prev = t
        stack = derivative_stack(A, state, t, min(m, A.shape[0]))
        stack = replace(stack, log_scale=stack.log_scale + log_norm)
        vol = gram_volumes(stack, degeneracy_rtol)
        if vol.m < m:
            # m > n: the (n+1)-th derivative is always dependent
            lv = np.concatenate([vol.log_V, np.full(m - vol.m, -math.inf)])
            vol = VolumeVector(lv, vol.degenerate_from or vol.m + 1)
        try:
            rows.append(curvatures_from_volumes(vol))
        except UndefinedCurvatureError:
            rows.append(np.full(order, np.nan))
        times.append(t)
    return _finish(times, rows, order, "direct")


def sample_trace(A, r0, grid=None, order: int = 1, *, method: str = "frame",
                 degeneracy_rtol: float = DEGENERACY_RTOL,
                 krylov_rtol: float = KRYLOV_RTOL,
                 max_step_norm: float = MAX_STEP_NORM) -> CurvatureTrace:
    """Curvatures ``kappa_1 .. kappa_order`` of ``exp(tA) r0`` on ``grid``.

    ``grid`` defaults to ``uniform_grid()``. Rows where the velocity is zero
    carry ``nan``; if propagation breaks down the trace is cut short and
    ``diagnostic`` explains why.
    """
    A = as_matrix(A)
    r0 = np.asarray(r0, dtype=float)
    n = A.shape[0]
    if r0.shape != (n,):
        raise ValueError(f"r0 has shape {r0.shape}, expected ({n},)")
    if not np.all(np.isfinite(r0)):
        raise ValueError("r0 must be finite")
    if order < 1 or order > max(n - 1, 1):
        raise ValueError(f"order must lie in [1, {max(n - 1, 1)}]")
    grid = uniform_grid() if grid is None else _check_grid(grid)
    if not np.any(r0):
        return _finish(grid, [np.full(order, np.nan)] * len(grid), order, method)
    if method == "frame":
        return _sample_frame(A, r0, grid, order, degeneracy_rtol, krylov_rtol, max_step_norm)
    if method == "direct":
        return _sample_direct(A, r0, grid, order, degeneracy_rtol, max_step_norm)
    raise ValueError(f"unknown method {method!r}")
