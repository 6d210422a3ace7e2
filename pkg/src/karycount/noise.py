"""Noise samplers and privacy calibration.

Two sampling contracts live here:

* `sample_laplace` / `sample_gaussian` draw from a caller-owned seeded
  generator (single-owner, sequential);
* `vertex_uniform` / `vertex_laplace` are counter-based: the value is a pure
  function of (seed, index), so tree mechanisms can materialize the noise
  for a vertex lazily and in any order while remaining reproducible.

Calibration covers three regimes: pure DP with Laplace noise scaled to the
l1-sensitivity, approximate DP with Gaussian noise scaled to the
l2-sensitivity, and approximate DP with Laplace noise scaled to the
l2-sensitivity.

The samplers add plain floating-point noise; no snapping or discretization
is applied, so outputs are unsafe against floating-point side-channel
attacks in adversarial deployments.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

_U64 = np.uint64
_C1 = _U64(0x9E3779B97F4A7C15)
_C2 = _U64(0xBF58476D1CE4E5B9)
_C3 = _U64(0x94D049BB133111EB)


def _mix64(z):
    """splitmix64 finalizer on uint64 scalars or arrays (wraps mod 2^64)."""
    z = (z + _C1) & _U64(0xFFFFFFFFFFFFFFFF)
    z ^= z >> _U64(30)
    z *= _C2
    z ^= z >> _U64(27)
    z *= _C3
    return z ^ (z >> _U64(31))


def vertex_uniform(seed, index):
    """Uniform in (0, 1), a pure function of (seed, index).

    Accepts scalars or numpy integer arrays (broadcasting applies).
    """
    with np.errstate(over="ignore"):
        s = _mix64(np.asarray(seed, dtype=np.uint64))
        h = _mix64(s ^ (np.asarray(index, dtype=np.uint64) * _C1))
    u = ((h >> _U64(11)).astype(np.float64) + 0.5) * 2.0**-53
    if np.isscalar(seed) and np.isscalar(index):
        return float(u)
    return u


def vertex_laplace(scale, seed, index):
    """Laplace(0, scale) draw keyed by (seed, index); 0.0 when scale is 0.

    Inverse-CDF transform of `vertex_uniform`, so the value never depends
    on how many other vertices have been materialized.
    """
    if scale < 0:
        raise ValueError(f"scale must be >= 0, got {scale}")
    u = vertex_uniform(seed, index)
    if np.isscalar(u):
        if scale == 0.0:
            return 0.0
        v = u - 0.5
        return -scale * math.copysign(1.0, v) * math.log1p(-2.0 * abs(v))
    if scale == 0.0:
        return np.zeros_like(u)
    v = u - 0.5
    return -scale * np.sign(v) * np.log1p(-2.0 * np.abs(v))


def derive_seed(*parts: int) -> int:
    """Fold integer parts into one 64-bit seed (pure, order-sensitive)."""
    with np.errstate(over="ignore"):
        acc = _U64(0)
        for p in parts:
            acc = _mix64(acc ^ (np.uint64(int(p) & 0xFFFFFFFFFFFFFFFF) * _C1))
    return int(acc)


def sample_laplace(scale: float, rng: np.random.Generator) -> float:
    """One Laplace(0, scale) draw from a seeded generator (inverse CDF)."""
    if scale <= 0:
        raise ValueError(f"scale must be > 0, got {scale}")
    u = rng.random() - 0.5
    return -scale * math.copysign(1.0, u) * math.log1p(-2.0 * abs(u))


def sample_gaussian(sigma: float, rng: np.random.Generator) -> float:
    """One N(0, sigma^2) draw from a seeded generator."""
    if sigma <= 0:
        raise ValueError(f"sigma must be > 0, got {sigma}")
    return float(rng.normal(0.0, sigma))


class NoiseRegime(Enum):
    PURE_LAPLACE = "pure-laplace"
    L2_LAPLACE = "l2-laplace"
    GAUSSIAN = "gaussian"


@dataclass(frozen=True)
class SensitivityPair:
    """l1- and l2-sensitivity of the released vector."""

    delta1: float
    delta2: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.delta1) and math.isfinite(self.delta2)):
            raise ValueError("sensitivities must be finite")
        if self.delta1 < 0 or self.delta2 < 0:
            raise ValueError("sensitivities must be >= 0")
        if self.delta2 > self.delta1:
            raise ValueError(
                f"l2-sensitivity {self.delta2} exceeds l1-sensitivity {self.delta1}"
            )


@dataclass(frozen=True)
class CalibrationResult:
    """Noise scale and the privacy parameters it achieves."""

    scale_or_sigma: float
    epsilon: float
    delta: float
    regime: NoiseRegime
    a_param: float | None = None

    @property
    def variance(self) -> float:
        if self.regime is NoiseRegime.GAUSSIAN:
            return self.scale_or_sigma**2
        return 2.0 * self.scale_or_sigma**2


def calibrate_pure_laplace(delta1: float, epsilon: float) -> CalibrationResult:
    """Laplace scale delta1/epsilon for pure epsilon-DP."""
    if delta1 <= 0:
        raise ValueError(f"delta1 must be > 0, got {delta1}")
    if epsilon <= 0:
        raise ValueError(f"epsilon must be > 0, got {epsilon}")
    return CalibrationResult(delta1 / epsilon, epsilon, 0.0, NoiseRegime.PURE_LAPLACE)


def calibrate_gaussian(delta2: float, epsilon: float, delta: float) -> CalibrationResult:
    """Gaussian sigma = delta2 * sqrt(2 ln(1.25/delta)) / epsilon."""
    if delta2 <= 0:
        raise ValueError(f"delta2 must be > 0, got {delta2}")
    if not 0 < epsilon <= 1:
        raise ValueError(f"epsilon must be in (0, 1], got {epsilon}")
    if not 0 < delta < 1:
        raise ValueError(f"delta must be in (0, 1), got {delta}")
    sigma = delta2 * math.sqrt(2.0 * math.log(1.25 / delta)) / epsilon
    return CalibrationResult(sigma, epsilon, delta, NoiseRegime.GAUSSIAN)


def l2_laplace_a(epsilon: float, delta: float) -> float:
    """a = sqrt(2 ln(1/delta)) * (sqrt(1 + epsilon/ln(1/delta)) - 1).

    Evaluated as sqrt(2/ln(1/delta)) * epsilon / (sqrt(1 + eps/ln(1/delta)) + 1)
    to avoid the cancellation in sqrt(1+x) - 1 for small epsilon.
    """
    if not 0 < epsilon <= 1:
        raise ValueError(f"epsilon must be in (0, 1], got {epsilon}")
    if not 0 < delta < 1:
        raise ValueError(f"delta must be in (0, 1), got {delta}")
    ln1d = math.log(1.0 / delta)
    x = epsilon / ln1d
    return math.sqrt(2.0 * ln1d) * x / (math.sqrt(1.0 + x) + 1.0)


def calibrate_l2_laplace(delta2: float, epsilon: float, delta: float) -> CalibrationResult:
    """Laplace scale delta2/a for (epsilon, delta)-DP via l2-sensitivity."""
    if delta2 <= 0:
        raise ValueError(f"delta2 must be > 0, got {delta2}")
    a = l2_laplace_a(epsilon, delta)
    return CalibrationResult(delta2 / a, epsilon, delta, NoiseRegime.L2_LAPLACE, a_param=a)


@dataclass(frozen=True)
class LaplaceEpsilonResult:
    """Achieved epsilon of Lap(lambda) noise for given sensitivities."""

    epsilon: float
    branch: str  # "pure" or "l2"
    pure_branch: float
    l2_branch: float
    out_of_regime: bool  # epsilon >= 1: outside the derivation's comfort zone
    scale_below_delta1: bool  # lambda <= delta1: stated precondition violated


def epsilon_of_laplace(
    delta1: float,
    delta2: float,
    lam: float,
    delta: float,
    strict: bool = False,
) -> LaplaceEpsilonResult:
    """epsilon = min{ d1/lam, (d2/lam)(d2/(2 lam) + sqrt(2 ln(1/delta))) }.

    The guarantee is derived for lam > delta1; with `strict` a violation
    raises, otherwise the result only carries a flag so parameter sweeps can
    still see the raw number.
    """
    if delta1 <= 0 or delta2 < 0:
        raise ValueError("sensitivities must be positive (delta2 may be 0)")
    if delta2 > delta1:
        raise ValueError(f"delta2={delta2} exceeds delta1={delta1}")
    if lam <= 0:
        raise ValueError(f"lambda must be > 0, got {lam}")
    if not 0 < delta < 1:
        raise ValueError(f"delta must be in (0, 1), got {delta}")
    below = lam <= delta1
    if below and strict:
        raise ValueError(f"lambda={lam} must exceed delta1={delta1}")
    pure = delta1 / lam
    l2 = (delta2 / lam) * (delta2 / (2.0 * lam) + math.sqrt(2.0 * math.log(1.0 / delta)))
    eps = min(pure, l2)
    return LaplaceEpsilonResult(
        epsilon=eps,
        branch="pure" if pure <= l2 else "l2",
        pure_branch=pure,
        l2_branch=l2,
        out_of_regime=eps >= 1.0,
        scale_below_delta1=below,
    )


def variance_ratio_bound(epsilon: float, delta: float) -> float:
    """Upper bound on Var[l2-Laplace] / Var[Gaussian] at equal (eps, delta).

    Equals w^2 / (2 (sqrt(1+w) - 1)^2) with w = epsilon/ln(1/delta); valid
    for epsilon <= ln(1/delta) and always >= 2, approaching 2 as epsilon
    goes to 0.
    """
    if not 0 < delta < 1:
        raise ValueError(f"delta must be in (0, 1), got {delta}")
    ln1d = math.log(1.0 / delta)
    if not 0 < epsilon <= ln1d:
        raise ValueError(f"epsilon must be in (0, ln(1/delta)={ln1d:.6g}], got {epsilon}")
    w = epsilon / ln1d
    return w**2 / (2.0 * (math.sqrt(1.0 + w) - 1.0) ** 2)
