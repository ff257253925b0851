"""Kernel-rank distributions of random GF(2) matrices and their Markov chains.

For a uniform alternating or general n x n matrix over GF(2), the kernel
rank j occurs with probability alt(j|n) resp. mat(j|n).  These kernels
drive a Markov chain on nonnegative states; the chain's step operator and
its mass outside the absorbing pair {0, 1} are what surveys compare
against.  Exact distributions come from full enumeration (rationals),
larger n from Monte Carlo with fixed-partition seeding.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Literal

import numpy as np
from scipy.stats import beta as _beta_dist

from . import f2linalg
from .errors import CapacityError
from .seeding import MC_CHUNK, as_seed, chunk_sizes, derive_rng

Kind = f2linalg.Kind
Mode = Literal["exact", "mc"]


@dataclass(frozen=True)
class RankDistribution:
    """Distribution of kernel ranks for one matrix class.

    ``probs`` maps kernel rank j to its probability: exact Fractions when
    enumerated, floats (with ``samples`` recorded) when sampled.
    """

    n: int
    kind: Kind
    mode: Mode
    probs: dict
    samples: int | None = None

    def prob(self, j: int):
        return self.probs.get(j, Fraction(0) if self.mode == "exact" else 0.0)


@dataclass(frozen=True)
class StateDistribution:
    """Finite-support distribution over nonnegative kernel-rank states."""

    probs: dict

    def mass(self) -> float:
        return float(sum(self.probs.values()))


@dataclass(frozen=True)
class BinomialEstimate:
    """MC point estimate with a central confidence interval."""

    p_hat: float
    ci_low: float
    ci_high: float
    successes: int
    samples: int


def _exact_counts(n: int, kind: Kind) -> dict[int, int]:
    counts: dict[int, int] = {}
    if n == 0:
        return {0: 1}
    for words in f2linalg.enumerate_words(n, kind):
        ranks = f2linalg.kernel_ranks_words(words, n)
        vals, cnts = np.unique(ranks, return_counts=True)
        for v, c in zip(vals.tolist(), cnts.tolist()):
            counts[v] = counts.get(v, 0) + c
    return counts


def _mc_counts(n: int, kind: Kind, samples: int, seed: int) -> dict[int, int]:
    counts: dict[int, int] = {}
    for i, size in enumerate(chunk_sizes(samples, MC_CHUNK)):
        rng = derive_rng(seed, i)
        words = f2linalg.sample_words(n, kind, size, rng)
        ranks = f2linalg.kernel_ranks_words(words, n)
        vals, cnts = np.unique(ranks, return_counts=True)
        for v, c in zip(vals.tolist(), cnts.tolist()):
            counts[v] = counts.get(v, 0) + c
    return counts


def kernel_rank_dist(
    n: int,
    kind: Kind,
    mode: Mode = "exact",
    samples: int = 100_000,
    rng=None,
) -> RankDistribution:
    """Kernel-rank distribution of uniform n x n matrices of the given class.

    Exact mode enumerates the whole class (guarded by the free-bit limit)
    and returns rationals; mc mode returns empirical frequencies from
    ``samples`` draws.
    """
    if mode == "exact":
        counts = _exact_counts(n, kind)
        total = sum(counts.values())
        probs = {j: Fraction(c, total) for j, c in sorted(counts.items())}
        return RankDistribution(n, kind, "exact", probs)
    if mode != "mc":
        raise ValueError(f"unknown mode {mode!r}")
    if samples < 1:
        raise ValueError("mc mode needs samples >= 1")
    if n == 0:
        return RankDistribution(0, kind, "mc", {0: 1.0}, samples)
    counts = _mc_counts(n, kind, samples, as_seed(rng))
    probs = {j: c / samples for j, c in sorted(counts.items())}
    return RankDistribution(n, kind, "mc", probs, samples)


@dataclass(frozen=True)
class StateModePolicy:
    """Per-state kernel policy: exact enumeration up to ``exact_max``,
    Monte Carlo with ``mc_samples`` above it (unless disallowed)."""

    exact_max: int = 5
    mc_samples: int = 100_000
    seed: int = 0
    allow_mc: bool = True


class _KernelCache:
    def __init__(self, policy: StateModePolicy):
        self.policy = policy
        self._cache: dict[tuple[int, str], dict] = {}

    def row(self, n: int, kind: Kind) -> dict:
        key = (n, kind)
        if key not in self._cache:
            if n <= self.policy.exact_max:
                dist = kernel_rank_dist(n, kind, "exact")
            elif self.policy.allow_mc:
                dist = kernel_rank_dist(
                    n, kind, "mc", self.policy.mc_samples, self.policy.seed + n
                )
            else:
                raise CapacityError(
                    f"state {n} exceeds exact capability {self.policy.exact_max} "
                    "and MC is disallowed"
                )
            self._cache[key] = dist.probs
        return self._cache[key]


def markov_evolve(
    start: StateDistribution,
    kind: Kind,
    steps: int,
    policy: StateModePolicy | None = None,
) -> StateDistribution:
    """Apply the kernel-rank transition kernel ``steps`` times.

    States never increase (the next state is a kernel rank of an n x n
    matrix for current state n), so the support stays bounded by the
    initial support.
    """
    policy = policy or StateModePolicy()
    cache = _KernelCache(policy)
    probs = dict(start.probs)
    for _ in range(steps):
        nxt: dict = {}
        for state, mass in probs.items():
            if mass == 0:
                continue
            for j, p in cache.row(state, kind).items():
                nxt[j] = nxt.get(j, 0) + mass * p
        probs = nxt
    return StateDistribution(probs)


def markov_outside_tail(
    start_state: int,
    kind: Kind,
    steps: int,
    policy: StateModePolicy | None = None,
):
    """Probability mass outside {0, 1} after ``steps`` transitions from a
    point mass at ``start_state``."""
    dist = markov_evolve(StateDistribution({start_state: Fraction(1)}), kind, steps, policy)
    return sum(p for j, p in dist.probs.items() if j not in (0, 1))


def limit_alt_even(
    j: int,
    n_large: int,
    samples: int = 1_000_000,
    rng=None,
    ci_sigmas: float = 3.0,
) -> BinomialEstimate:
    """MC estimate of alt(j | n_large) with a Clopper-Pearson interval,
    approximating the large-n limit for even kernel ranks.

    For j with the wrong parity the estimate is exactly 0 (alternating
    kernels have rank congruent to n mod 2).
    """
    seed = as_seed(rng)
    successes = 0
    for i, size in enumerate(chunk_sizes(samples, MC_CHUNK)):
        gen = derive_rng(seed, i)
        words = f2linalg.sample_words(n_large, "alternating", size, gen)
        ranks = f2linalg.kernel_ranks_words(words, n_large)
        successes += int(np.count_nonzero(ranks == j))
    p_hat = successes / samples
    alpha = 2.0 * (1.0 - _norm_cdf(ci_sigmas))
    lo = 0.0 if successes == 0 else float(
        _beta_dist.ppf(alpha / 2, successes, samples - successes + 1)
    )
    hi = 1.0 if successes == samples else float(
        _beta_dist.ppf(1 - alpha / 2, successes + 1, samples - successes)
    )
    return BinomialEstimate(p_hat, lo, hi, successes, samples)


def _norm_cdf(x: float) -> float:
    return 0.5 * (1.0 + math.erf(x / math.sqrt(2.0)))
