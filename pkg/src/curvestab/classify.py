"""Limit classification of curvature traces and stability verdicts."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar

from .curvature import CurvatureTrace
from .errors import SingularTransformError
from .jordan import ZERO_TOL, JordanSpec, spectrum_summary
from .linalg import (as_matrix, determinant, eigenvalues, is_invertible,
                     singular_values)

ALPHA_MIN = 1e-3
OSC_TOL = 0.05
KAPPA_MIN = 1e-8
MIN_TAIL_SAMPLES = 100
# sinusoids removed from the tail before reading off the slope
MAX_TONES = 4
TONE_SHARE = 0.2
HARMONICS = 3
# rank tolerance for (A - lambda I) at imaginary-axis eigenvalues, relative to max(1, ||A||)
RANK_RTOL = 1e-7
SINGULAR_P_RTOL = 1e-12
COORD_FLOOR = 1e-6


class LimitTag(str, enum.Enum):
    TO_ZERO = "TO_ZERO"
    TO_POSITIVE_CONSTANT = "TO_POSITIVE_CONSTANT"
    TO_INFINITY = "TO_INFINITY"
    BOUNDED_NONVANISHING = "BOUNDED_NONVANISHING"
    UNDETERMINED = "UNDETERMINED"


class VerdictTag(str, enum.Enum):
    UNSTABLE = "UNSTABLE"
    STABLE = "STABLE"
    STABLE_NOT_ASYMPTOTIC = "STABLE_NOT_ASYMPTOTIC"
    ASYMPTOTICALLY_STABLE = "ASYMPTOTICALLY_STABLE"
    INCONCLUSIVE = "INCONCLUSIVE"


class Basis(str, enum.Enum):
    SPECTRAL_ORACLE = "SPECTRAL_ORACLE"
    CURVATURE_THEOREM = "CURVATURE_THEOREM"


# limit tags that keep the curvature away from zero
NONVANISHING = frozenset({LimitTag.TO_POSITIVE_CONSTANT, LimitTag.TO_INFINITY,
                          LimitTag.BOUNDED_NONVANISHING})


@dataclass(frozen=True)
class LimitClass:
    """Long-time behaviour of a curvature.

    ``value`` is only ever set for TO_POSITIVE_CONSTANT. Symbolic
    predictions made without an initial value leave it as ``None``.
    ``exact`` marks closed-form results such as ``kappa = 0`` identically.
    """

    tag: LimitTag
    value: float | None = None
    confidence: float = 1.0
    exact: bool = False
    note: str = ""

    def __post_init__(self):
        if self.value is not None:
            if self.tag is not LimitTag.TO_POSITIVE_CONSTANT:
                raise ValueError("only TO_POSITIVE_CONSTANT carries a value")
            if not self.value > 0:
                raise ValueError("limit constant must be positive")
        if not 0.0 <= self.confidence <= 1.0:
            raise ValueError("confidence must lie in [0, 1]")

    @property
    def decisive(self) -> bool:
        return self.tag is not LimitTag.UNDETERMINED

    def to_dict(self) -> dict:
        d = {"limit": self.tag.value, "confidence": self.confidence}
        if self.value is not None:
            d["value"] = self.value
        if self.exact:
            d["exact"] = True
        if self.note:
            d["note"] = self.note
        return d


@dataclass(frozen=True)
class StabilityVerdict:
    tag: VerdictTag
    basis: Basis
    evidence: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.basis is Basis.CURVATURE_THEOREM and self.tag is VerdictTag.UNSTABLE:
            raise ValueError("the curvature criterion cannot establish instability")

    @property
    def is_stable(self) -> bool:
        return self.tag in (VerdictTag.STABLE, VerdictTag.STABLE_NOT_ASYMPTOTIC,
                            VerdictTag.ASYMPTOTICALLY_STABLE)


@dataclass(frozen=True)
class ExponentAnalysis:
    """Leading rates and degrees of the numerator and denominator of kappa^2."""

    eta_bound: float
    theta: float
    chi_bound: int | None
    xi: int

    def to_dict(self) -> dict:
        return {"eta_bound": self.eta_bound, "theta": self.theta,
                "chi_bound": self.chi_bound, "xi": self.xi}


def _undetermined(note: str = "", confidence: float = 0.0) -> LimitClass:
    return LimitClass(LimitTag.UNDETERMINED, None, confidence, note=note)


def _clip01(x: float) -> float:
    return float(min(1.0, max(0.0, x)))


def _tone_columns(t: np.ndarray, w: float, n_harm: int) -> list:
    cols = []
    for h in range(1, n_harm + 1):
        cols += [np.cos(h * w * t), np.sin(h * w * t)]
    return cols


def _lstsq(cols: list, y: np.ndarray):
    X = np.column_stack(cols)
    coef, *_ = np.linalg.lstsq(X, y, rcond=None)
    return coef, y - X @ coef


def _trend_fit(t: np.ndarray, y: np.ndarray, max_tones: int = MAX_TONES):
    """Least squares ``y ~ alpha t + beta ln t + gamma`` plus up to
    ``max_tones`` periodic components picked from the residual spectrum.

    Without them a ripple of amplitude A and angular frequency w biases the
    fitted slope by up to ~12 A / (w L^2) on a window of length L, which is
    larger than the deadband for ordinary ripples. Each component is a
    fundamental with its overtones; the fundamental is refined off the FFT
    grid by minimising the residual.
    """
    cols = [t, np.log(t), np.ones_like(t)]
    coef, resid = _lstsq(cols, y)
    dt = np.diff(t)
    n = len(t)
    if n < 16 or not np.allclose(dt, dt[0], rtol=1e-6):
        return coef, resid
    base = 2 * math.pi / (n * dt[0])
    for _ in range(max_tones):
        power = np.abs(np.fft.rfft(resid)) ** 2
        total = power[1:].sum()
        if total <= 1e-24 * n:
            break
        # fewer than three cycles in the window cannot be told from a trend
        k = 3 + int(np.argmax(power[3:]))
        if power[k] < TONE_SHARE * total:
            break
        n_harm = max(1, min(HARMONICS, int((n / 2 - 1) // (k + 1))))

        def rss(kk, n_harm=n_harm):
            r = _lstsq(cols + _tone_columns(t, kk * base, n_harm), y)[1]
            return float(r @ r)

        kk = minimize_scalar(rss, bounds=(k - 1, k + 1), method="bounded",
                             options={"xatol": 1e-3}).x
        cols = cols + _tone_columns(t, kk * base, n_harm)
        coef, resid = _lstsq(cols, y)
    return coef[:3], resid


def classify_limit(trace: CurvatureTrace, i: int = 1, *, alpha_min: float = ALPHA_MIN,
                   osc_tol: float = OSC_TOL, kappa_min: float = KAPPA_MIN,
                   min_samples: int = MIN_TAIL_SAMPLES) -> LimitClass:
    """Classify ``lim kappa_i(t)`` from the tail ``[T/2, T]`` of a trace.

    ``ln kappa`` is fitted by ``alpha t + beta ln t + gamma`` and the decision
    uses the fitted slope at the middle of the window, which stays well
    conditioned even though ``t`` and ``ln t`` are nearly collinear there.
    """
    if not 1 <= i <= trace.order:
        raise ValueError(f"trace has curvatures 1..{trace.order}, asked for {i}")
    times = np.asarray(trace.times, dtype=float)
    if times.size == 0:
        return _undetermined("empty trace")
    T = times[-1]
    mask = times >= T / 2
    if T <= 0 or np.count_nonzero(mask) < min_samples:
        return _undetermined(f"tail window has fewer than {min_samples} samples")
    t = times[mask]
    y = trace.log_kappa[mask, i - 1]

    if np.all(np.isnan(y)):
        return _undetermined("curvature undefined on the whole tail")
    if np.any(np.isnan(y)):
        return _undetermined("curvature undefined on part of the tail")
    zero = np.isneginf(y)
    if np.all(zero):
        return LimitClass(LimitTag.TO_ZERO, None, 1.0, note="curvature vanishes identically")
    if np.any(zero):
        return _undetermined("curvature vanishes on part of the tail")

    coef, resid = _trend_fit(t, y)
    rms = float(np.sqrt(np.mean(resid ** 2)))
    t_mid = 0.5 * (t[0] + t[-1])
    slope = float(coef[0] + coef[1] / t_mid)
    width = float(t[-1] - t[0])

    if abs(slope) > alpha_min:
        # drift beyond the deadband, measured against the residual spread;
        # long transients leave large but harmless residuals, so saturate
        excess = abs(slope) - alpha_min
        margin = min(1.0, excess / alpha_min)
        snr = excess * width / (2.0 * rms + 1e-300)
        conf = margin * -math.expm1(-snr)
        tag = LimitTag.TO_INFINITY if slope > 0 else LimitTag.TO_ZERO
        return LimitClass(tag, None, _clip01(conf), note=f"tail log-slope {slope:.4g}")

    flat_conf = 1.0 - 0.5 * abs(slope) / alpha_min
    centre = float(np.mean(y))
    k = np.exp(y - centre)
    rel_osc = float((k.max() - k.min()) / k.mean())
    if rel_osc < osc_tol:
        value = math.exp(centre)
        if value > 0:
            conf = min(flat_conf, 1.0 - 0.5 * rel_osc / osc_tol)
            return LimitClass(LimitTag.TO_POSITIVE_CONSTANT, value, _clip01(conf),
                              note=f"tail relative oscillation {rel_osc:.3g}")
    log_floor = math.log(kappa_min)
    if float(np.min(y)) > log_floor:
        return LimitClass(LimitTag.BOUNDED_NONVANISHING, None, _clip01(flat_conf),
                          note=f"tail relative oscillation {rel_osc:.3g}")
    if float(np.max(y)) < log_floor:
        return LimitClass(LimitTag.TO_ZERO, None, _clip01(flat_conf),
                          note="tail below curvature floor")
    return _undetermined("flat tail crossing the curvature floor")


def _blocks_at_axis(spec: JordanSpec, kinds: tuple[str, ...]):
    return [b for b in spec.blocks if b.kind in kinds and abs(b.real_part) <= ZERO_TOL]


def _diagonal_prediction(spec: JordanSpec, r0) -> LimitClass:
    lams = np.array([b.lam for b in spec.blocks])
    nonzero = sorted({float(x) for x in lams if abs(x) > ZERO_TOL}, reverse=True)
    if not nonzero:
        return LimitClass(LimitTag.TO_ZERO, None, 1.0, exact=True,
                          note="A = 0: every trajectory is a constant point")
    if len(nonzero) == 1:
        return LimitClass(LimitTag.TO_ZERO, None, 1.0, exact=True,
                          note="trajectory is a straight line, kappa = 0")
    lam1, lam2 = nonzero[0], nonzero[1]
    gap = 2 * lam1 - lam2
    if gap > ZERO_TOL:
        return LimitClass(LimitTag.TO_ZERO, note="2 lambda_I > lambda_II")
    if gap < -ZERO_TOL:
        return LimitClass(LimitTag.TO_INFINITY, note="2 lambda_I < lambda_II")
    value = None
    if r0 is not None:
        r0 = np.asarray(r0, dtype=float)
        s1 = float(np.sum(r0[np.abs(lams - lam1) <= ZERO_TOL] ** 2))
        s2 = float(np.sum(r0[np.abs(lams - lam2) <= ZERO_TOL] ** 2))
        if s1 > 0 and s2 > 0:
            value = abs(lam2 * (lam2 - lam1)) * math.sqrt(s2) / (lam1 ** 2 * s1)
    return LimitClass(LimitTag.TO_POSITIVE_CONSTANT, value, note="2 lambda_I = lambda_II")


def _single_block_prediction(spec: JordanSpec, r0) -> LimitClass:
    blk = spec.blocks[0]
    if blk.kind == "RH":
        if blk.lam < -ZERO_TOL:
            return LimitClass(LimitTag.TO_INFINITY)
        if abs(blk.lam) <= ZERO_TOL and blk.size_param == 2:
            return LimitClass(LimitTag.TO_ZERO, None, 1.0, exact=True,
                              note="trajectory is a straight line, kappa = 0")
        return LimitClass(LimitTag.TO_ZERO)
    if blk.kind == "C2":
        if blk.a < -ZERO_TOL:
            return LimitClass(LimitTag.TO_INFINITY)
        if blk.a > ZERO_TOL:
            return LimitClass(LimitTag.TO_ZERO)
        value = None
        if r0 is not None:
            rho = float(np.linalg.norm(r0))
            value = 1.0 / rho if rho > 0 else None
        return LimitClass(LimitTag.TO_POSITIVE_CONSTANT, value, exact=value is not None,
                          note="circle of radius |r0|")
    # CH
    if blk.a < -ZERO_TOL:
        return LimitClass(LimitTag.TO_INFINITY)
    return LimitClass(LimitTag.TO_ZERO)


def predict_limit_symbolic(spec: JordanSpec, r0=None) -> LimitClass:
    """Limit of the first curvature read off the block structure.

    ``r0`` is only used to evaluate the limiting constant; the tag assumes a
    generic initial value (every coordinate nonzero).
    """
    if r0 is not None and np.asarray(r0).shape != (spec.n,):
        raise ValueError(f"r0 must have length {spec.n}")
    if spec.all_r1:
        return _diagonal_prediction(spec, r0)
    if len(spec.blocks) == 1:
        return _single_block_prediction(spec, r0)

    summary = spectrum_summary(spec)
    if summary.M > ZERO_TOL:
        return LimitClass(LimitTag.TO_ZERO, note="M > 0")
    if abs(summary.M) <= ZERO_TOL:
        if summary.has_imaginary_axis_RH_or_CH:
            axis_c2 = _blocks_at_axis(spec, ("C2",))
            if summary.xi == 0 and axis_c2:
                # RH(0, 2) with C2(0, b): the straight-line drift and the circle
                # combine into a helix-like curve of constant curvature
                return _undetermined("RH(0,2) with C2 on the imaginary axis: "
                                     "numerator and denominator degrees tie")
            return LimitClass(LimitTag.TO_ZERO, note="M = 0 with RH/CH on the imaginary axis")
        if summary.invertible:
            return _undetermined("M = 0, det A != 0: TO_ZERO or bounded")
    return _undetermined("mixed spectrum not covered by the block tables")


def exponent_analysis(spec: JordanSpec) -> ExponentAnalysis:
    summary = spectrum_summary(spec)
    theta = 6.0 * summary.M_tilde
    eta = 4.0 * summary.M
    chi = None
    if abs(summary.M) <= ZERO_TOL:
        rh = [b.size_param for b in _blocks_at_axis(spec, ("RH",))]
        cx = [b.dim // 2 for b in _blocks_at_axis(spec, ("C2", "CH"))]
        if len(spec.blocks) == 1 and rh:
            chi = 4 * (rh[0] - 3) if rh[0] > 2 else None
        elif rh or cx:
            cands = [4 * (p - 2) for p in rh] + [4 * (m - 1) for m in cx]
            chi = max(cands)
    return ExponentAnalysis(eta, theta, chi, summary.xi)


def _spec_stability(spec: JordanSpec) -> StabilityVerdict:
    M = max(b.real_part for b in spec.blocks)
    axis = [b for b in spec.blocks if abs(b.real_part) <= ZERO_TOL]
    evidence = {
        "method": "block structure",
        "eigenvalues": [[z.real, z.imag] for z in spec.eigenvalues()],
        "max_real_part": M,
        "axis_blocks": [b.kind for b in axis],
    }
    if M < -ZERO_TOL:
        tag = VerdictTag.ASYMPTOTICALLY_STABLE
    elif M > ZERO_TOL:
        tag = VerdictTag.UNSTABLE
    elif all(b.kind in ("R1", "C2") for b in axis):
        tag = VerdictTag.STABLE_NOT_ASYMPTOTIC
    else:
        tag = VerdictTag.UNSTABLE
    return StabilityVerdict(tag, Basis.SPECTRAL_ORACLE, evidence)


def _matrix_stability(A: np.ndarray) -> StabilityVerdict:
    spec = eigenvalues(A)
    tol = spec.snap_tolerance
    centres = spec.cluster_centers()
    reals = [c.real for c in centres]
    M = max(reals)
    evidence = {
        "method": "eigenvalues + rank test",
        "eigenvalues": [[z.real, z.imag] for z in spec.eigenvalues],
        "max_real_part": M,
        "snap_tolerance": tol,
    }
    snapped = [[z.real, z.imag] for z in spec.eigenvalues if 0 < abs(z.real) <= tol]
    if snapped:
        evidence["snapped_to_axis"] = snapped
    if M < -tol:
        return StabilityVerdict(VerdictTag.ASYMPTOTICALLY_STABLE, Basis.SPECTRAL_ORACLE, evidence)
    if M > tol:
        return StabilityVerdict(VerdictTag.UNSTABLE, Basis.SPECTRAL_ORACLE, evidence)

    n = A.shape[0]
    checks = []
    semisimple = True
    for centre, members in zip(centres, spec.clusters):
        if abs(centre.real) > tol:
            continue
        lam = complex(0.0, centre.imag)
        s = np.linalg.svd(A - lam * np.eye(n), compute_uv=False)
        geometric = int(np.count_nonzero(s <= RANK_RTOL * spec.scale))
        algebraic = len(members)
        checks.append({"eigenvalue": [0.0, centre.imag], "algebraic": algebraic,
                       "geometric": geometric})
        if geometric != algebraic:
            semisimple = False
    evidence["axis_multiplicities"] = checks
    tag = VerdictTag.STABLE_NOT_ASYMPTOTIC if semisimple else VerdictTag.UNSTABLE
    return StabilityVerdict(tag, Basis.SPECTRAL_ORACLE, evidence)


def spectral_stability(system) -> StabilityVerdict:
    """Classical eigenvalue criterion.

    Stable iff every eigenvalue has non-positive real part and those on the
    imaginary axis are semisimple; asymptotically stable iff all real parts
    are negative.
    """
    if isinstance(system, JordanSpec):
        return _spec_stability(system)
    return _matrix_stability(as_matrix(system))


def theorem_verdict(system, initial_values, limits, policy: str = "all") -> StabilityVerdict:
    """Stability verdict from sampled curvature limits.

    A non-vanishing limit on the sampled initial values gives STABLE; when
    ``A`` is also invertible and every limit is infinite the verdict is
    ASYMPTOTICALLY_STABLE. Anything else is INCONCLUSIVE; vanishing
    curvature says nothing about instability.
    """
    limits = list(limits)
    initial_values = [np.asarray(v, dtype=float).tolist() for v in initial_values]
    if not limits:
        raise ValueError("theorem_verdict needs at least one sampled initial value")
    if len(limits) != len(initial_values):
        raise ValueError("one limit class per initial value is required")
    if policy not in ("all", "majority"):
        raise ValueError("policy must be 'all' or 'majority'")

    if isinstance(system, JordanSpec):
        invertible = spectrum_summary(system).invertible
    else:
        invertible = is_invertible(system)

    count = len(limits)
    n_nonvanishing = sum(lc.tag in NONVANISHING for lc in limits)
    n_infinite = sum(lc.tag is LimitTag.TO_INFINITY for lc in limits)
    n_undetermined = sum(lc.tag is LimitTag.UNDETERMINED for lc in limits)

    def enough(k: int) -> bool:
        return k == count if policy == "all" else 2 * k > count

    evidence = {
        "per_initial_value": [dict(r0=r0, **lc.to_dict()) for r0, lc in zip(initial_values, limits)],
        "sample_count": count,
        "agreement_rate": n_nonvanishing / count,
        "undetermined": n_undetermined,
        "policy": policy,
        "invertible": invertible,
    }
    if enough(n_nonvanishing):
        if invertible and enough(n_infinite):
            tag = VerdictTag.ASYMPTOTICALLY_STABLE
        else:
            tag = VerdictTag.STABLE
    else:
        tag = VerdictTag.INCONCLUSIVE
    return StabilityVerdict(tag, Basis.CURVATURE_THEOREM, evidence)


def equivalence_factors(P, i: int = 1) -> tuple[float, float]:
    """Multipliers ``(d_n^{2i} / d_1^{2i+1}, d_1^{2i} / d_n^{2i+1})`` from the
    extreme singular values of ``P``."""
    P = as_matrix(P)
    if i < 1:
        raise ValueError("curvature order must be >= 1")
    sv = singular_values(P)
    d1, dn = sv.largest, sv.smallest
    if sv.rank < P.shape[0] or dn <= SINGULAR_P_RTOL * d1:
        raise SingularTransformError(
            f"transform is singular (singular values {d1:.3e} .. {dn:.3e})")
    lo = math.exp(2 * i * math.log(dn) - (2 * i + 1) * math.log(d1))
    hi = math.exp(2 * i * math.log(d1) - (2 * i + 1) * math.log(dn))
    return lo, hi


def equivalence_bounds(P, kappa_r: float, i: int = 1) -> tuple[float, float]:
    """Interval containing ``kappa_i`` of ``P r(t)`` given ``kappa_i`` of ``r(t)``."""
    if kappa_r < 0:
        raise ValueError("curvature must be non-negative")
    lo, hi = equivalence_factors(P, i)
    return lo * kappa_r, hi * kappa_r


def sample_initial_values(n: int, count: int, seed=None,
                          floor: float = COORD_FLOOR) -> np.ndarray:
    """``count`` points uniform on the unit sphere in R^n with every
    coordinate at least ``floor`` in magnitude."""
    if n < 1 or count < 1:
        raise ValueError("need n >= 1 and count >= 1")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    out = np.empty((count, n))
    k = 0
    while k < count:
        v = rng.standard_normal(n)
        nrm = np.linalg.norm(v)
        if nrm == 0:
            continue
        v /= nrm
        if np.min(np.abs(v)) >= floor:
            out[k] = v
            k += 1
    return out


def system_determinant(system) -> float:
    """``det A``; exact block product for a JordanSpec."""
    if isinstance(system, JordanSpec):
        det = 1.0
        for blk in system.blocks:
            if blk.is_real:
                det *= blk.lam ** blk.dim
            else:
                det *= (blk.a ** 2 + blk.b ** 2) ** (blk.dim // 2)
        return det
    return determinant(system)
