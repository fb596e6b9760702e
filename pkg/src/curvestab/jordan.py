"""Real Jordan canonical forms built from block specifications.

Four block families are supported::

    R1  (lambda)               1x1
    RH  (lambda, p), p >= 2    p x p, ones on the superdiagonal
    C2  (a, b),      b > 0     [[a, b], [-b, a]]
    CH  (a, b, m),   m >= 2    2m x 2m, Lambda blocks with I2 above the diagonal

Matrices are only ever assembled from a spec. Recovering a Jordan form
from an arbitrary matrix is ill-posed and deliberately not offered.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ExpmOverflowError, InputFormatError

KINDS = ("R1", "RH", "C2", "CH")
# block parameters closer than this to zero are treated as exactly zero
ZERO_TOL = 1e-12


def _is_zero(x: float) -> bool:
    return abs(x) <= ZERO_TOL


@dataclass(frozen=True)
class JordanBlock:
    kind: str
    lam: float = 0.0
    a: float = 0.0
    b: float = 0.0
    size_param: int = 1

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown block kind {self.kind!r}")
        if self.kind == "RH" and self.size_param < 2:
            raise ValueError("RH block needs p >= 2")
        if self.kind == "CH" and self.size_param < 2:
            raise ValueError("CH block needs m >= 2")
        if self.kind in ("C2", "CH") and not self.b > 0:
            raise ValueError("complex blocks need b > 0")
        for x in (self.lam, self.a, self.b):
            if not math.isfinite(x):
                raise ValueError("block parameters must be finite")

    @classmethod
    def r1(cls, lam: float) -> "JordanBlock":
        return cls("R1", lam=float(lam))

    @classmethod
    def rh(cls, lam: float, p: int) -> "JordanBlock":
        return cls("RH", lam=float(lam), size_param=int(p))

    @classmethod
    def c2(cls, a: float, b: float) -> "JordanBlock":
        return cls("C2", a=float(a), b=float(b))

    @classmethod
    def ch(cls, a: float, b: float, m: int) -> "JordanBlock":
        return cls("CH", a=float(a), b=float(b), size_param=int(m))

    @property
    def dim(self) -> int:
        if self.kind == "R1":
            return 1
        if self.kind == "RH":
            return self.size_param
        if self.kind == "C2":
            return 2
        return 2 * self.size_param

    @property
    def real_part(self) -> float:
        return self.lam if self.kind in ("R1", "RH") else self.a

    @property
    def is_real(self) -> bool:
        return self.kind in ("R1", "RH")

    def eigenvalues(self) -> list[complex]:
        if self.is_real:
            return [complex(self.lam)] * self.dim
        half = self.dim // 2
        return [complex(self.a, self.b)] * half + [complex(self.a, -self.b)] * half

    def to_dict(self) -> dict:
        if self.kind == "R1":
            return {"kind": "R1", "lambda": self.lam}
        if self.kind == "RH":
            return {"kind": "RH", "lambda": self.lam, "p": self.size_param}
        if self.kind == "C2":
            return {"kind": "C2", "a": self.a, "b": self.b}
        return {"kind": "CH", "a": self.a, "b": self.b, "m": self.size_param}

    @classmethod
    def from_dict(cls, d: dict) -> "JordanBlock":
        try:
            kind = d["kind"]
            if kind == "R1":
                return cls.r1(d["lambda"])
            if kind == "RH":
                return cls.rh(d["lambda"], d["p"])
            if kind == "C2":
                return cls.c2(d["a"], d["b"])
            if kind == "CH":
                return cls.ch(d["a"], d["b"], d["m"])
        except (KeyError, TypeError, ValueError) as exc:
            raise InputFormatError(f"bad block {d!r}: {exc}") from exc
        raise InputFormatError(f"unknown block kind in {d!r}")


@dataclass(frozen=True)
class JordanSpec:
    blocks: tuple[JordanBlock, ...]

    def __post_init__(self):
        object.__setattr__(self, "blocks", tuple(self.blocks))
        if not self.blocks:
            raise ValueError("a JordanSpec needs at least one block")

    @property
    def n(self) -> int:
        return sum(b.dim for b in self.blocks)

    def offsets(self) -> list[int]:
        out, k = [], 0
        for b in self.blocks:
            out.append(k)
            k += b.dim
        return out

    def eigenvalues(self) -> list[complex]:
        return [lam for b in self.blocks for lam in b.eigenvalues()]

    @property
    def all_r1(self) -> bool:
        return all(b.kind == "R1" for b in self.blocks)

    def to_dict(self) -> dict:
        return {"blocks": [b.to_dict() for b in self.blocks]}

    @classmethod
    def from_dict(cls, d: dict) -> "JordanSpec":
        if not isinstance(d, dict) or not isinstance(d.get("blocks"), list):
            raise InputFormatError('JordanSpec JSON needs a "blocks" list')
        try:
            return cls(tuple(JordanBlock.from_dict(b) for b in d["blocks"]))
        except ValueError as exc:
            raise InputFormatError(str(exc)) from exc


def _rotation(theta: float) -> np.ndarray:
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, s], [-s, c]])


def block_matrix(block: JordanBlock) -> np.ndarray:
    d = block.dim
    M = np.zeros((d, d))
    if block.is_real:
        M[np.arange(d), np.arange(d)] = block.lam
        M[np.arange(d - 1), np.arange(1, d)] = 1.0
        return M
    lam_block = np.array([[block.a, block.b], [-block.b, block.a]])
    for i in range(d // 2):
        M[2 * i:2 * i + 2, 2 * i:2 * i + 2] = lam_block
        if i + 1 < d // 2:
            M[2 * i:2 * i + 2, 2 * i + 2:2 * i + 4] = np.eye(2)
    return M


def materialize(spec: JordanSpec) -> np.ndarray:
    """Block-diagonal matrix with the blocks laid out in order."""
    A = np.zeros((spec.n, spec.n))
    for off, blk in zip(spec.offsets(), spec.blocks):
        A[off:off + blk.dim, off:off + blk.dim] = block_matrix(blk)
    return A


def _growth(rate: float, t: float) -> float:
    with np.errstate(over="ignore"):
        g = math.exp(rate * t) if rate * t < 709.0 else math.inf
    if not math.isfinite(g):
        raise ExpmOverflowError(f"e^({rate}*{t}) overflows")
    return g


def block_exponential(block: JordanBlock, t: float) -> np.ndarray:
    """Closed-form ``exp(t B)`` for a single real Jordan block."""
    if block.is_real:
        d = block.dim
        E = np.zeros((d, d))
        for k in range(d):
            coeff = t ** k / math.factorial(k)
            E[np.arange(d - k), np.arange(k, d)] = coeff
        return _growth(block.lam, t) * E
    R = _rotation(block.b * t)
    m = block.dim // 2
    E = np.zeros((2 * m, 2 * m))
    for i in range(m):
        for j in range(i, m):
            k = j - i
            E[2 * i:2 * i + 2, 2 * j:2 * j + 2] = t ** k / math.factorial(k) * R
    return _growth(block.a, t) * E


def spec_exponential(spec: JordanSpec, t: float) -> np.ndarray:
    E = np.zeros((spec.n, spec.n))
    for off, blk in zip(spec.offsets(), spec.blocks):
        E[off:off + blk.dim, off:off + blk.dim] = block_exponential(blk, t)
    return E


def _real_block_trajectory(block: JordanBlock, r0: np.ndarray, t: float) -> np.ndarray:
    # r_k(t) = e^{lam t} P_k(t),  P_k(t) = sum_l r_{k+l,0} t^l / l!
    p = block.dim
    P = np.array([
        sum(r0[k + l] * t ** l / math.factorial(l) for l in range(p - k))
        for k in range(p)
    ])
    return _growth(block.lam, t) * P


def _complex_block_trajectory(block: JordanBlock, r0: np.ndarray, t: float) -> np.ndarray:
    # r_{ij}(t) = e^{at} T_{ij}(t); pairs (2i, 2i+1) in 0-based indexing
    m = block.dim // 2
    c, s = math.cos(block.b * t), math.sin(block.b * t)
    T = np.zeros(2 * m)
    for i in range(m):
        for k in range(m - i):
            w = t ** k / math.factorial(k)
            x, y = r0[2 * (i + k)], r0[2 * (i + k) + 1]
            T[2 * i] += w * (x * c + y * s)
            T[2 * i + 1] += w * (-x * s + y * c)
    return _growth(block.a, t) * T


def closed_form_trajectory(spec: JordanSpec, r0, t: float) -> np.ndarray:
    """``r(t) = exp(tA) r0`` evaluated block by block from the polynomial and
    trigonometric closed forms."""
    r0 = np.asarray(r0, dtype=float)
    if r0.shape != (spec.n,):
        raise ValueError(f"r0 has shape {r0.shape}, spec needs ({spec.n},)")
    parts = []
    for off, blk in zip(spec.offsets(), spec.blocks):
        seg = r0[off:off + blk.dim]
        if blk.is_real:
            parts.append(_real_block_trajectory(blk, seg, t))
        else:
            parts.append(_complex_block_trajectory(blk, seg, t))
    return np.concatenate(parts)


@dataclass(frozen=True)
class SpectrumSummary:
    """Spectral quantities governing the long-time curvature.

    ``M`` is the largest real part over all eigenvalues; ``M_tilde`` is the
    same maximum after dropping zero eigenvalues that sit in R1 blocks
    (``-inf`` when nothing is left, i.e. A = 0). ``lambda_I`` and
    ``lambda_II`` are only filled for purely diagonal specs. ``xi`` is the
    leading polynomial degree of ``V_1(t)^6`` at rate ``6 M_tilde``.
    """

    M: float
    M_tilde: float
    lambda_I: float | None
    lambda_II: float | None
    xi: int
    has_imaginary_axis_RH_or_CH: bool
    invertible: bool


def _xi(spec: JordanSpec, m_tilde: float) -> int:
    # absent block types contribute -inf to the max
    cands = []
    at_level = [b for b in spec.blocks
                if abs(b.real_part - m_tilde) <= ZERO_TOL
                and not (b.kind == "R1" and _is_zero(b.lam))]
    complex_orders = [b.dim // 2 for b in at_level if not b.is_real]
    if complex_orders:
        cands.append(6 * (max(complex_orders) - 1))
    if _is_zero(m_tilde):
        rh_orders = [b.dim for b in at_level if b.kind == "RH"]
        if rh_orders:
            cands.append(6 * (max(rh_orders) - 2))
    else:
        real_orders = [b.dim for b in at_level if b.is_real]
        if real_orders:
            cands.append(6 * (max(real_orders) - 1))
    return max(cands) if cands else 0


def spectrum_summary(spec: JordanSpec) -> SpectrumSummary:
    reals = [b.real_part for b in spec.blocks]
    M = max(reals)
    kept = [b.real_part for b in spec.blocks
            if not (b.kind == "R1" and _is_zero(b.lam))]
    M_tilde = max(kept) if kept else -math.inf

    lam_I = lam_II = None
    if spec.all_r1:
        nonzero = sorted({b.lam for b in spec.blocks if not _is_zero(b.lam)}, reverse=True)
        if nonzero:
            lam_I = nonzero[0]
        if len(nonzero) > 1:
            lam_II = nonzero[1]

    axis_rh_ch = any(
        (b.kind == "RH" and _is_zero(b.lam)) or (b.kind == "CH" and _is_zero(b.a))
        for b in spec.blocks
    )
    invertible = not any(b.is_real and _is_zero(b.lam) for b in spec.blocks)
    xi = _xi(spec, M_tilde) if kept else 0
    return SpectrumSummary(M, M_tilde, lam_I, lam_II, xi, axis_rh_ch, invertible)
