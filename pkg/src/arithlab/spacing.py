"""Spacing statistics for prime-factor profiles and Poisson samples.

Covers the gap predicates (comfortable / regular / extravagant spacing) on
both the integer side (ordered prime divisors on the log-log scale) and the
Poisson model side (order statistics of uniforms), the Ramanujan-style
iterated integral I_k(u) with its asymptotic, exact enumeration of the
counting sums over r-tuples of primes, and the narrow prime-interval boxes
that bridge integers to product spaces.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad

from .arithmetic import MERTENS_B1, PrimeTable, factorize, mertens_sum, primes_up_to
from .errors import CapacityError
from .seeding import MC_CHUNK, as_seed, chunk_sizes, derive_rng

EULER_GAMMA = float(np.euler_gamma)

SRND_N_MAX = 10**7


class SpacingParameterWarning(UserWarning):
    """r is outside the window tied to (N, D); results are still computed."""


@dataclass(frozen=True)
class FactorProfile:
    """Squarefree integer with its ordered primes and log-log coordinates."""

    n: int
    primes: tuple[int, ...]
    loglogs: tuple[float, ...]

    @classmethod
    def from_integer(cls, n: int, table: PrimeTable | None = None) -> "FactorProfile":
        if n < 2:
            raise ValueError("need n >= 2")
        fac = factorize(n, table)
        if any(e > 1 for _, e in fac):
            raise ValueError(f"{n} is not squarefree")
        ps = tuple(p for p, _ in fac)
        return cls(n, ps, tuple(math.log(math.log(p)) for p in ps))

    @classmethod
    def from_primes(cls, primes) -> "FactorProfile":
        ps = tuple(sorted(primes))
        if len(set(ps)) != len(ps):
            raise ValueError("primes must be distinct")
        n = 1
        for p in ps:
            n *= p
        return cls(n, ps, tuple(math.log(math.log(p)) for p in ps))

    @property
    def r(self) -> int:
        return len(self.primes)


@dataclass(frozen=True)
class SpacingFlags:
    comfortable: bool
    regular: bool
    extravagant: bool
    witness_m: int | None
    r_in_window: bool


def r_window_ok(N: float, D: float, r: int) -> bool:
    """Whether r is within the (log log N / log D) window used by the surveys."""
    mu = math.log(math.log(N) / math.log(D))
    return abs(r - mu) <= mu ** (2.0 / 3.0)


def spacing_flags(
    profile: FactorProfile, N: float, D: float, D1: float, C0: float
) -> SpacingFlags:
    """Evaluate the three spacing predicates for one factor profile.

    An out-of-window r triggers a warning, not an error; surveys need to
    see off-window profiles too.
    """
    ok = r_window_ok(N, D, profile.r)
    if not ok:
        warnings.warn(
            f"r={profile.r} outside the window for N={N}, D={D}",
            SpacingParameterWarning,
            stacklevel=2,
        )
    ps = profile.primes
    r = profile.r

    comfortable = all(
        not (ps[i] > D1) or (4 * D1 < 2 * ps[i] < ps[i + 1]) for i in range(r - 1)
    )

    lld = math.log(math.log(D))
    regular = True
    for i in range(1, r // 3 + 1):
        bound = C0 ** 0.2 * max(i, C0) ** 0.8
        if abs(profile.loglogs[i - 1] - lld - i) >= bound:
            regular = False
            break

    extravagant = False
    witness = None
    lllN = math.log(math.log(math.log(N)))
    logs = [math.log(p) for p in ps]
    prefix = 0.0
    for m in range(1, r):
        prefix += logs[m - 1]
        if not (0.5 * math.sqrt(r) < m + 1 < 0.5 * r):
            continue
        lm = logs[m]
        if lm >= math.log(lm / math.log(D)) * math.sqrt(lllN) * prefix:
            extravagant = True
            witness = m + 1
            break
    return SpacingFlags(comfortable, regular, extravagant, witness, ok)


# ---------------------------------------------------------------------------
# Poisson model side

@dataclass(frozen=True)
class PoissonSample:
    """Order statistics of n uniforms on [0, L]."""

    L: float
    order_stats: np.ndarray


def sample_poisson(n: int, L: float, rng) -> PoissonSample:
    gen = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
    u = np.sort(gen.uniform(0.0, L, size=n))
    return PoissonSample(L, u)


def _comfort_fail(u: np.ndarray, L0: float, delta: float) -> np.ndarray:
    gaps = np.diff(u, axis=-1)
    left = u[..., :-1]
    bad = (left >= L0) & (gaps < delta * np.exp(-left))
    return bad.any(axis=-1)


def _regular_fail(u: np.ndarray, C0: float) -> np.ndarray:
    n = u.shape[-1]
    i = np.arange(1, n + 1, dtype=np.float64)
    bound = C0 ** 0.2 * np.maximum(i, C0) ** 0.8
    return (np.abs(u - i) >= bound).any(axis=-1)


def _extravagant_fail(u: np.ndarray, L: float) -> np.ndarray:
    n = u.shape[-1]
    ex = np.exp(u)
    prefix = np.cumsum(ex, axis=-1) - ex
    m0 = math.ceil(math.sqrt(n))
    cond = ex >= u * math.sqrt(math.log(L)) * prefix
    return ~cond[..., m0 - 1 :].any(axis=-1)


@dataclass(frozen=True)
class PoissonReport:
    trials: int
    comfortable_fail_rate: float
    regular_fail_rate: float
    extravagant_fail_rate: float
    comfortable_fail_count: int
    regular_fail_count: int
    extravagant_fail_count: int


def poisson_experiment(
    n: int, L: float, L0: float, delta: float, C0: float, trials: int, rng=None
) -> PoissonReport:
    """Monte-Carlo failure rates of the three sample-side spacing predicates."""
    if not abs(L - n) < L ** 0.75:
        raise ValueError(f"need |L - n| < L^(3/4); got L={L}, n={n}")
    seed = as_seed(rng)
    cf = rf = ef = 0
    for i, size in enumerate(chunk_sizes(trials, max(1, MC_CHUNK // max(n, 1)))):
        gen = derive_rng(seed, i)
        u = np.sort(gen.uniform(0.0, L, size=(size, n)), axis=-1)
        cf += int(np.count_nonzero(_comfort_fail(u, L0, delta)))
        rf += int(np.count_nonzero(_regular_fail(u, C0)))
        ef += int(np.count_nonzero(_extravagant_fail(u, L)))
    return PoissonReport(trials, cf / trials, rf / trials, ef / trials, cf, rf, ef)


# ---------------------------------------------------------------------------
# the iterated Ramanujan integral

@dataclass(frozen=True)
class RamanujanIntegral:
    k: int
    u: float
    value: float
    asymptotic: float
    bound_rhs: float


class QuadratureError(RuntimeError):
    pass


def _i_value(k: int, u: float, tol: float) -> float:
    """I_k(u) over the region t_1..t_k >= 1, sum <= u, weight 1/(t_1...t_k)."""
    if k == 0:
        return 1.0 if u >= 0 else 0.0
    if u < k:
        return 0.0
    if k == 1:
        val, err = quad(lambda t: 1.0 / t, 1.0, u, epsabs=tol, epsrel=tol, limit=300)
        return val
    top = math.log(u - k + 1)

    if k == 2:
        integrand = lambda s: math.log(u - math.exp(s))  # I1 closed form
    else:
        inner_tol = tol / 10.0

        def integrand(s: float) -> float:
            return _i_value(k - 1, u - math.exp(s), inner_tol)

    val, err = quad(integrand, 0.0, top, epsabs=tol, epsrel=tol, limit=300)
    if err > tol * max(1.0, abs(val)) * 10.0:
        raise QuadratureError(f"I_{k}({u}): estimated error {err} above tolerance {tol}")
    return val


def ramanujan_I(k: int, u: float, quadrature_tol: float = 1e-8) -> RamanujanIntegral:
    """I_k(u) by recursive quadrature, with the smooth-main-term asymptotic
    and its constant-free error envelope."""
    if k < 0 or u <= 0:
        raise ValueError("need k >= 0 and u > 0")
    value = _i_value(k, u, quadrature_tol)
    if u > 1:
        logu = math.log(u)
        alpha = k / logu
        asym = math.exp(-EULER_GAMMA * alpha) / math.gamma(1 + alpha) * logu ** k
        loglogu = math.log(max(logu, 1.0 + 1e-12))
        envelope = (alpha + 1.0) * logu ** k * loglogu ** 3 / logu
    else:
        asym = 0.0 if k else 1.0
        envelope = float("inf")
    return RamanujanIntegral(k, u, value, asym, envelope)


# ---------------------------------------------------------------------------
# exact sums over r-tuples of primes

@dataclass(frozen=True)
class SrndRecord:
    """Exact counts/sums over prime r-tuples above D with product below N.

    ``members`` counts the squarefree integers themselves (distinct primes,
    unordered); ``h_r`` / ``f_r`` / ``g_r`` run over ordered tuples with
    repetition, matching the analytic estimates ``g_estimate`` and
    ``h_estimate`` built from I_{r-1}.
    """

    N: float
    D: float
    r: int
    members: int
    f_r: float
    g_r: float
    h_r: int
    u: float
    g_estimate: float
    h_estimate: float


def _tuple_sums(primes: np.ndarray, k: int, bound: float) -> tuple[int, float, float]:
    """(count, sum 1/prod, sum log prod) over ordered k-tuples with repetition,
    entries from ``primes``, product strictly below ``bound``."""
    logs = np.log(primes.astype(np.float64))
    inv = 1.0 / primes.astype(np.float64)
    cnt_pre = np.arange(1, len(primes) + 1, dtype=np.int64)
    inv_pre = np.concatenate([[0.0], np.cumsum(inv)])
    log_pre = np.concatenate([[0.0], np.cumsum(logs)])

    def level1(bounds: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        idx = np.searchsorted(primes, bounds, side="left")
        return idx.astype(np.int64), inv_pre[idx], log_pre[idx]

    def rec(k: int, bound: float) -> tuple[int, float, float]:
        if k == 0:
            return (1, 1.0, 0.0) if bound > 1 else (0, 0.0, 0.0)
        if k == 1:
            idx = int(np.searchsorted(primes, bound, side="left"))
            return idx, float(inv_pre[idx]), float(log_pre[idx])
        if k == 2:
            ps = primes[primes < bound / float(primes[0])] if len(primes) else primes
            if len(ps) == 0:
                return 0, 0.0, 0.0
            h1, f1, g1 = level1(bound / ps)
            H = int(h1.sum())
            F = float((f1 / ps).sum())
            G = float((g1 + h1 * np.log(ps)).sum())
            return H, F, G
        H, F, G = 0, 0.0, 0.0
        for p in primes:
            p = int(p)
            if p * float(primes[0]) ** (k - 1) >= bound:
                break
            h, f, g = rec(k - 1, bound / p)
            if h == 0:
                continue
            H += h
            F += f / p
            G += g + h * math.log(p)
        return H, F, G

    return rec(k, bound)


def _member_count(primes: np.ndarray, r: int, bound: float) -> int:
    """Count strictly-increasing r-tuples (squarefree integers) with product
    strictly below ``bound``."""
    plist = primes.tolist()
    np_arr = primes

    def rec(k: int, bound: float, i0: int) -> int:
        if k == 1:
            idx = int(np.searchsorted(np_arr, bound, side="left"))
            return max(0, idx - i0)
        total = 0
        for i in range(i0, len(plist)):
            p = plist[i]
            # at least k-1 larger primes must fit under bound/p
            if p ** k >= bound:
                break
            total += rec(k - 1, bound / p, i + 1)
        return total

    return rec(r, bound, 0)


def srnd_enumerate(N: float, D: float, r: int) -> SrndRecord:
    """Exact enumeration of the r-tuple sums and the squarefree member count."""
    if N > SRND_N_MAX:
        raise CapacityError(f"N={N} exceeds exact-enumeration guard {SRND_N_MAX}")
    if r < 1:
        raise ValueError("need r >= 1")
    ps = primes_up_to(int(N))
    ps = ps[ps > D]
    members = _member_count(ps, r, N) if len(ps) else 0
    h_r, f_r, g_r = _tuple_sums(ps, r, N) if len(ps) else (0, 0.0, 0.0)
    u = math.log(N) / math.exp(mertens_sum(D) - MERTENS_B1)
    i_prev = ramanujan_I(r - 1, u).value if u > 0 else 0.0
    g_est = r * N * i_prev
    h_est = r * N / math.log(N) * i_prev
    return SrndRecord(N, D, r, members, f_r, g_r, h_r, u, g_est, h_est)


# ---------------------------------------------------------------------------
# boxes

@dataclass(frozen=True)
class Box:
    """Product of a fixed small-prime prefix with narrow prime intervals.

    Interval i (1-based index k+1 .. r) is [t_i, t_i'] with
    t_i' = (1 + 1/(e^(i-k) log D1)) t_i; intervals are treated as closed so
    the anchoring integer's primes lie inside by construction.
    """

    N: float
    D: float
    D1: float
    r: int
    fixed_primes: tuple[int, ...]
    t: tuple[float, ...]

    def __post_init__(self):
        if len(self.fixed_primes) + len(self.t) != self.r:
            raise ValueError("prefix length plus interval count must equal r")
        tp = self.t_prime
        for a, b in zip(tp[:-1], self.t[1:]):
            if not a < b:
                raise ValueError("intervals overlap: need t'_i < t_{i+1}")
        if any(not (self.D < p < self.D1) for p in self.fixed_primes):
            raise ValueError("fixed primes must lie in (D, D1)")
        if self.t and self.t[0] <= self.D1:
            raise ValueError("interval endpoints must exceed D1")

    @property
    def k(self) -> int:
        return len(self.fixed_primes)

    @property
    def t_prime(self) -> tuple[float, ...]:
        k = self.k
        return tuple(
            (1.0 + 1.0 / (math.e ** (i + 1) * math.log(self.D1))) * t
            for i, t in enumerate(self.t)
        )


def box_measure(k: int, r: int, D1: float) -> float:
    """Product over the interval coordinates of log(1 + 1/(e^(i-k) log D1))."""
    out = 1.0
    for i in range(k + 1, r + 1):
        out *= math.log(1.0 + 1.0 / (math.e ** (i - k) * math.log(D1)))
    return out


def make_boxes(N: float, D: float, D1: float, r: int, anchor: FactorProfile) -> Box:
    """The box whose intervals have the anchor's large primes as left endpoints."""
    if anchor.r != r:
        raise ValueError("anchor must have exactly r prime factors")
    ps = anchor.primes
    comfortable = all(
        not (ps[i] > D1) or (4 * D1 < 2 * ps[i] < ps[i + 1]) for i in range(r - 1)
    )
    if not comfortable:
        raise ValueError("anchor is not comfortably spaced above D1")
    fixed = tuple(p for p in anchor.primes if p < D1)
    large = tuple(float(p) for p in anchor.primes if p >= D1)
    if any(p <= D1 for p in large):
        # a prime exactly at D1 cannot be an interval endpoint
        raise ValueError("anchor has a prime at D1")
    return Box(N, D, D1, r, fixed, large)
