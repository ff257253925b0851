"""Shared number-theoretic primitives.

Least-prime-factor sieves and factorization, Kronecker/Legendre symbols,
Hilbert symbols at all places, modular square roots, squarefree sieves,
and the prime harmonic sum F(x) = sum_{p <= x} 1/p with its Mertens-style
constant estimate.
"""

from __future__ import annotations

import math
from fractions import Fraction

import numpy as np

from .errors import CapacityError

SPF_LIMIT_MAX = 2**31


class PrimeTable:
    """Least-prime-factor table for all integers up to ``limit``.

    ``smallest_factor[n]`` is the least prime factor of n for n >= 2,
    so ``smallest_factor[p] == p`` exactly when p is prime.
    """

    def __init__(self, limit: int, smallest_factor: np.ndarray):
        self.limit = limit
        self.smallest_factor = smallest_factor
        self._primes: np.ndarray | None = None

    def primes(self) -> np.ndarray:
        """All primes up to the table limit, ascending."""
        if self._primes is None:
            idx = np.arange(self.limit + 1, dtype=self.smallest_factor.dtype)
            mask = self.smallest_factor == idx
            mask[:2] = False
            self._primes = np.flatnonzero(mask).astype(np.int64)
        return self._primes

    def is_prime(self, n: int) -> bool:
        if n < 2 or n > self.limit:
            raise ValueError(f"{n} outside table range [2, {self.limit}]")
        return int(self.smallest_factor[n]) == n


def sieve_primes(limit: int) -> PrimeTable:
    """Build a least-prime-factor table up to ``limit``."""
    if limit < 2:
        raise ValueError("limit must be >= 2")
    if limit > SPF_LIMIT_MAX:
        raise CapacityError(f"sieve limit {limit} exceeds {SPF_LIMIT_MAX}")
    spf = np.zeros(limit + 1, dtype=np.uint32)
    for i in range(2, math.isqrt(limit) + 1):
        if spf[i] == 0:
            block = spf[i * i :: i]
            block[block == 0] = i
    unmarked = np.flatnonzero(spf == 0)
    spf[unmarked] = unmarked
    spf[0] = 0
    if limit >= 1:
        spf[1] = 1
    return PrimeTable(limit, spf)


def primes_up_to(limit: int) -> np.ndarray:
    """Primes up to ``limit`` via a plain boolean sieve (no factor table)."""
    if limit < 2:
        return np.empty(0, dtype=np.int64)
    if limit > SPF_LIMIT_MAX:
        raise CapacityError(f"sieve limit {limit} exceeds {SPF_LIMIT_MAX}")
    mask = np.ones(limit + 1, dtype=bool)
    mask[:2] = False
    for p in range(2, math.isqrt(limit) + 1):
        if mask[p]:
            mask[p * p :: p] = False
    return np.flatnonzero(mask).astype(np.int64)


def squarefree_mask(limit: int) -> np.ndarray:
    """Boolean array s with s[n] true iff n is squarefree (s[0] is false)."""
    if limit > SPF_LIMIT_MAX:
        raise CapacityError(f"sieve limit {limit} exceeds {SPF_LIMIT_MAX}")
    mask = np.ones(limit + 1, dtype=bool)
    mask[0] = False
    for p in range(2, math.isqrt(limit) + 1):
        mask[p * p :: p * p] = False
    return mask


def factorize(n: int, table: PrimeTable | None = None) -> list[tuple[int, int]]:
    """Sorted prime factorization [(p, e), ...] of a positive integer.

    Uses the least-factor table when the value fits, trial division
    otherwise (fine for 64-bit inputs).
    """
    if n < 1:
        raise ValueError("factorize requires n >= 1")
    out: list[tuple[int, int]] = []
    if table is not None and n <= table.limit:
        spf = table.smallest_factor
        while n > 1:
            p = int(spf[n])
            e = 0
            while n % p == 0:
                n //= p
                e += 1
            out.append((p, e))
        return out
    for p in (2, 3):
        if n % p == 0:
            e = 0
            while n % p == 0:
                n //= p
                e += 1
            out.append((p, e))
    d = 5
    while d * d <= n:
        for q in (d, d + 2):
            if n % q == 0:
                e = 0
                while n % q == 0:
                    n //= q
                    e += 1
                out.append((q, e))
        d += 6
    if n > 1:
        out.append((n, 1))
    out.sort()
    return out


def is_squarefree(n: int, table: PrimeTable | None = None) -> bool:
    if n == 0:
        return False
    return all(e == 1 for _, e in factorize(abs(n), table))


def _jacobi(a: int, n: int) -> int:
    """Jacobi symbol (a/n) for odd n > 0."""
    a %= n
    result = 1
    while a:
        while a % 2 == 0:
            a //= 2
            if n % 8 in (3, 5):
                result = -result
        a, n = n, a
        if a % 4 == 3 and n % 4 == 3:
            result = -result
        a %= n
    return result if n == 1 else 0


def kronecker_symbol(a: int, n: int) -> int:
    """Kronecker symbol (a/n); agrees with the Legendre symbol for odd prime n."""
    if n == 0:
        raise ValueError("kronecker_symbol undefined for n = 0")
    result = 1
    if n < 0:
        n = -n
        if a < 0:
            result = -result
    # factor out 2s of n: (a/2) = 0 for even a, else (-1)^((a^2-1)/8)
    while n % 2 == 0:
        n //= 2
        if a % 2 == 0:
            return 0
        if a % 8 in (3, 5):
            result = -result
    return result * _jacobi(a, n)


def sqrt_mod(a: int, p: int) -> int | None:
    """A square root of a modulo an odd prime p, or None if a is a non-residue."""
    a %= p
    if a == 0:
        return 0
    if _jacobi(a, p) != 1:
        return None
    if p % 4 == 3:
        return pow(a, (p + 1) // 4, p)
    # Tonelli-Shanks
    s, e = p - 1, 0
    while s % 2 == 0:
        s //= 2
        e += 1
    n = 2
    while _jacobi(n, p) != -1:
        n += 1
    x = pow(a, (s + 1) // 2, p)
    b = pow(a, s, p)
    g = pow(n, s, p)
    r = e
    while True:
        t, m = b, 0
        while t != 1:
            t = t * t % p
            m += 1
        if m == 0:
            return x
        gs = pow(g, 1 << (r - m - 1), p)
        g = gs * gs % p
        x = x * gs % p
        b = b * g % p
        r = m


def _to_integer_pair(a) -> int:
    """Represent a nonzero rational by an integer in the same square class."""
    if isinstance(a, Fraction):
        return a.numerator * a.denominator
    if isinstance(a, int):
        return a
    raise TypeError("hilbert_symbol arguments must be int or Fraction")


def _split_val(a: int, p: int) -> tuple[int, int]:
    v = 0
    while a % p == 0:
        a //= p
        v += 1
    return v, a


def hilbert_symbol(a, b, place) -> int:
    """Hilbert symbol (a, b)_v: +1 iff z^2 = a x^2 + b y^2 has a nontrivial
    solution over the completion at ``place`` ('real', 2, or an odd prime)."""
    a = _to_integer_pair(a)
    b = _to_integer_pair(b)
    if a == 0 or b == 0:
        raise ValueError("hilbert_symbol requires nonzero arguments")
    if place == "real":
        return -1 if (a < 0 and b < 0) else 1
    p = int(place)
    if p == 2:
        alpha, u = _split_val(a, 2)
        beta, v = _split_val(b, 2)
        eps_u = ((u - 1) // 2) & 1
        eps_v = ((v - 1) // 2) & 1
        om_u = ((u * u - 1) // 8) & 1
        om_v = ((v * v - 1) // 8) & 1
        exp = eps_u * eps_v + alpha * om_v + beta * om_u
        return -1 if exp & 1 else 1
    if p < 3 or p % 2 == 0:
        raise ValueError(f"invalid place {place!r}")
    alpha, u = _split_val(a, p)
    beta, v = _split_val(b, p)
    eps_p = ((p - 1) // 2) & 1
    result = 1
    if (alpha * beta * eps_p) & 1:
        result = -result
    if beta & 1:
        result *= _jacobi(u, p)
    if alpha & 1:
        result *= _jacobi(v, p)
    return result


def hilbert_places(a, b) -> list:
    """Places where (a, b)_v can be nontrivial: 'real', 2, odd primes of ab."""
    a = _to_integer_pair(a)
    b = _to_integer_pair(b)
    ps = {p for p, _ in factorize(abs(a))} | {p for p, _ in factorize(abs(b))}
    ps.add(2)
    places: list = ["real"]
    places.extend(sorted(ps))
    return places


MERTENS_B1 = 0.2614972128476428


def mertens_sum(x: float, primes: np.ndarray | None = None) -> float:
    """F(x) = sum over primes p <= x of 1/p."""
    if x < 2:
        return 0.0
    if primes is None:
        primes = primes_up_to(int(x))
    ps = primes[primes <= x]
    return float(np.sum(1.0 / ps.astype(np.float64)))


def mertens_b1_estimate(x: float, primes: np.ndarray | None = None) -> float:
    """F(x) - log log x, an estimate of the constant term of F."""
    if x <= math.e:
        raise ValueError("need x > e for log log x")
    return mertens_sum(x, primes) - math.log(math.log(x))
