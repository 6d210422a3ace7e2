"""Empirical packing-argument simulator for random-input continual counting.

The construction: draw a base string whose every length-B block holds
between B/4 and 3B/4 ones, then derive per-block variants by flipping k
zeros to ones inside one block.  A mechanism that is accurate on all these
near-uniform strings can tell them apart through the first block end where
the difference of two runs exceeds k/2 -- but differential privacy caps how
often that can happen, which is what the experiment measures.

Total variation distances over full strings are infeasible to enumerate;
the block-count reduction (conditioned binomial vs its k-shift) is computed
exactly, and the base-string distance is evaluated via its closed-form
bound.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaln, logsumexp

from .digits import DigitSystem
from .mechanisms import BatchRunner, MechanismConfig

#: 6 * sqrt(2) / sqrt(pi): constant of the block-count TV upper bound k/sqrt(B).
TV_BOUND_CONST = 6.0 * math.sqrt(2.0) / math.sqrt(math.pi)

_REJECTION_CAP = 10_000


@dataclass(frozen=True)
class LowerBoundConfig:
    T: int
    k: int
    epsilon: float
    trials: int = 1000
    seed: int = 0
    zero_noise: bool = False

    def __post_init__(self) -> None:
        B = math.isqrt(self.T)
        if B * B != self.T:
            raise ValueError(f"T={self.T} must be a perfect square")
        if B % 4 != 0:
            raise ValueError(f"block size B={B} must be divisible by 4")
        if self.k % 2 != 0 or self.k <= 0:
            raise ValueError(f"flip count k={self.k} must be a positive even integer")
        if self.k > B // 4:
            raise ValueError(f"need k <= B/4 = {B // 4}, got k={self.k}")
        if self.epsilon <= 0:
            raise ValueError(f"epsilon must be > 0, got {self.epsilon}")
        if self.trials < 1:
            raise ValueError(f"trials must be >= 1, got {self.trials}")

    @property
    def B(self) -> int:
        return math.isqrt(self.T)

    @property
    def m(self) -> int:
        return self.T // self.B

    @property
    def alpha(self) -> float:
        return self.k / 4.0


@dataclass(frozen=True)
class BlockCountDistribution:
    """Exact pmf over [0, B] of the conditioned block sum, optionally shifted.

    The base law is Bin(B, 1/2) conditioned on [B/4, 3B/4]; a shift of k
    models a block with k extra forced ones.
    """

    B: int
    shift: int = 0
    pmf: np.ndarray = field(init=False, repr=False)

    def __post_init__(self) -> None:
        B, shift = self.B, self.shift
        if B % 4 != 0:
            raise ValueError(f"B={B} must be divisible by 4")
        if shift < 0 or shift > B // 4:
            raise ValueError(f"shift must be in [0, B/4], got {shift}")
        ell = np.arange(B // 4, 3 * B // 4 + 1)
        # binomial log-pmf via log-gamma; safe for large B
        logp = gammaln(B + 1) - gammaln(ell + 1) - gammaln(B - ell + 1) - B * math.log(2.0)
        logp -= logsumexp(logp)
        pmf = np.zeros(B + 1)
        pmf[ell + shift] = np.exp(logp)
        object.__setattr__(self, "pmf", pmf)


def exact_block_tv(B: int, k: int) -> float:
    """Exact TV distance between the conditioned block count and its k-shift."""
    if k % 2 != 0 or k < 0:
        raise ValueError(f"k must be a non-negative even integer, got {k}")
    base = BlockCountDistribution(B).pmf
    shifted = BlockCountDistribution(B, shift=k).pmf
    return 0.5 * float(np.abs(base - shifted).sum())


def block_tv_upper_bound(B: int, k: int) -> float:
    """(6 sqrt(2)/sqrt(pi)) * k / sqrt(B); valid for large B."""
    return TV_BOUND_CONST * k / math.sqrt(B)


def base_string_tv_bound(T: int) -> float:
    """2 sqrt(T) exp(-sqrt(T)/8): TV of the conditioned base string to uniform."""
    return 2.0 * math.sqrt(T) * math.exp(-math.sqrt(T) / 8.0)


def combined_tv_bound(T: int) -> float:
    """10 * T^(-1/20): TV of a flipped string to uniform, valid for T >= 400."""
    return 10.0 * T ** (-1.0 / 20.0)


def sample_x0(config: LowerBoundConfig, rng: np.random.Generator) -> np.ndarray:
    """Uniform string with every block count in [B/4, 3B/4], by per-block rejection."""
    B, m = config.B, config.m
    blocks = rng.integers(0, 2, size=(m, B), dtype=np.int8)
    lo, hi = B // 4, 3 * B // 4
    for _ in range(_REJECTION_CAP):
        sums = blocks.sum(axis=1)
        bad = (sums < lo) | (sums > hi)
        if not bad.any():
            return blocks.reshape(-1)
        blocks[bad] = rng.integers(0, 2, size=(int(bad.sum()), B), dtype=np.int8)
    raise RuntimeError(f"block rejection cap {_REJECTION_CAP} exceeded (B={B})")


def derive_xi(
    x0: np.ndarray, i: int, k: int, rng: np.random.Generator, B: int | None = None
) -> np.ndarray:
    """Flip k zeros to ones inside block i (1-based); Hamming distance exactly k."""
    if B is None:
        B = math.isqrt(len(x0))
    start = (i - 1) * B
    block = x0[start : start + B]
    zeros = np.flatnonzero(block == 0)
    if len(zeros) < k:
        raise RuntimeError(
            f"block {i} has only {len(zeros)} zeros, cannot flip {k}; "
            "base string violates its conditioning"
        )
    picks = rng.choice(zeros, size=k, replace=False)
    out = x0.copy()
    out[start + picks] = 1
    return out


def run_distinguisher(mechanism, y, y_prime, config: LowerBoundConfig, seeds) -> int | None:
    """First block end where two seeded runs differ by more than k/2.

    `mechanism(bits, seed)` returns the T estimates; the difference is
    inspected at t = B, 2B, ..., mB and the 1-based index of the first
    excess is returned, or None.
    """
    if len(y) != config.T or len(y_prime) != config.T:
        raise ValueError("inputs must have length T")
    a = np.asarray(mechanism(y, seeds[0]), dtype=float)
    b = np.asarray(mechanism(y_prime, seeds[1]), dtype=float)
    if len(a) == config.m:  # mechanism already evaluated at block ends only
        diff = a - b
    else:
        ends = np.arange(config.B, config.T + 1, config.B) - 1
        diff = a[ends] - b[ends]
    over = np.flatnonzero(diff > config.k / 2.0)
    return int(over[0]) + 1 if len(over) else None


def tree_mechanism_factory(
    config: LowerBoundConfig,
    variant: DigitSystem = DigitSystem.OFFSET_ODD,
    k: int = 3,
):
    """Default mechanism under test: a k-ary subtraction tree at config.epsilon."""
    mech_cfg = MechanismConfig(
        variant=variant,
        k=k,
        T=config.T,
        epsilon=config.epsilon,
        zero_noise=config.zero_noise,
    )
    # the distinguisher only looks at block ends, so only those rows are built
    ends = range(config.B, config.T + 1, config.B)
    runner = BatchRunner(mech_cfg, times=ends)

    def run(bits, seed: int) -> np.ndarray:
        return runner.run(bits, seed)

    return run


@dataclass
class PackingReport:
    config: LowerBoundConfig
    pr_event: np.ndarray  # Pr[E_i] for Alg(x^(i), x^(0)), per target block i
    pr_event_se: np.ndarray
    trials_per_block: np.ndarray
    sum_null: float  # sum_j Pr[E_j] for Alg(x^(0), x^(0))
    sum_null_se: float
    tv_exact: float
    tv_bound: float
    base_tv_bound: float
    combined_tv_bound: float
    packing_value: float  # m * exp(-k * epsilon) / 2, must be <= 1
    k_threshold: float  # epsilon^-1 * ln(m/2): flip counts below this are infeasible


def packing_experiment(config: LowerBoundConfig, mechanism=None) -> PackingReport:
    """Monte-Carlo estimates of the distinguishing events and the packing sum.

    Each trial draws a fresh base string, targets one block i (cycling), and
    runs the distinguisher on (x^(i), x^(0)) and on the null pair
    (x^(0), x^(0)) with independent derived seeds.
    """
    if mechanism is None:
        mechanism = tree_mechanism_factory(config)
    m = config.m
    hits = np.zeros(m)
    totals = np.zeros(m)
    null_fired = 0
    for trial in range(config.trials):
        rng = np.random.default_rng((config.seed, trial))
        x0 = sample_x0(config, rng)
        i = trial % m + 1
        xi = derive_xi(x0, i, config.k, rng, B=config.B)
        base = config.seed + 4 * trial
        j = run_distinguisher(mechanism, xi, x0, config, (base, base + 1))
        totals[i - 1] += 1
        if j == i:
            hits[i - 1] += 1
        jn = run_distinguisher(mechanism, x0, x0, config, (base + 2, base + 3))
        if jn is not None:
            null_fired += 1

    with np.errstate(invalid="ignore", divide="ignore"):
        pr = np.where(totals > 0, hits / np.maximum(totals, 1), np.nan)
        se = np.sqrt(pr * (1.0 - pr) / np.maximum(totals, 1))
    p_null = null_fired / config.trials
    se_null = math.sqrt(p_null * (1.0 - p_null) / config.trials)
    return PackingReport(
        config=config,
        pr_event=pr,
        pr_event_se=se,
        trials_per_block=totals,
        sum_null=p_null,
        sum_null_se=se_null,
        tv_exact=exact_block_tv(config.B, config.k),
        tv_bound=block_tv_upper_bound(config.B, config.k),
        base_tv_bound=base_string_tv_bound(config.T),
        combined_tv_bound=combined_tv_bound(config.T),
        packing_value=config.m * math.exp(-config.k * config.epsilon) / 2.0,
        k_threshold=math.log(config.m / 2.0) / config.epsilon,
    )
