"""Class groups of imaginary quadratic fields via binary quadratic forms.

Reduced-form enumeration, Gauss composition, class numbers by divisor
counting, 2-Sylow exponent extraction, the Legendre-symbol (Redei) matrix
for the 4-rank, and the squarefree-d survey with conditional rank tables.

The 2-Sylow type {a_1 >= a_2 >= ...} describes Cl(Disc) x 2-part as a sum
of Z/2^(a_i); the derived ranks r_k = #{i : a_i >= k} equal
dim 2^(k-1) Cl[2^k].
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass

from . import f2linalg
from .arithmetic import PrimeTable, factorize, is_squarefree, kronecker_symbol, sqrt_mod, squarefree_mask
from .errors import CapacityError

CLASS_NUMBER_GUARD = 10**6


def discriminant(d: int) -> int:
    """Field discriminant of Q(sqrt(-d)) for squarefree d >= 1."""
    if d < 1:
        raise ValueError("need d >= 1")
    if not is_squarefree(d):
        raise ValueError(f"d={d} is not squarefree")
    return -d if d % 4 == 3 else -4 * d


def _check_disc(disc: int) -> None:
    if disc >= 0 or disc % 4 not in (0, 1):
        raise ValueError(f"{disc} is not an imaginary quadratic discriminant")


@dataclass(frozen=True)
class QuadForm:
    """Positive-definite integral binary quadratic form A x^2 + B xy + C y^2."""

    a: int
    b: int
    c: int

    @property
    def disc(self) -> int:
        return self.b * self.b - 4 * self.a * self.c

    def is_reduced(self) -> bool:
        a, b, c = self.a, self.b, self.c
        return abs(b) <= a <= c and (b >= 0 if (abs(b) == a or a == c) else True)


def _xgcd(a: int, b: int) -> tuple[int, int, int]:
    x0, x1, y0, y1 = 1, 0, 0, 1
    while b:
        q, a, b = a // b, b, a % b
        x0, x1 = x1, x0 - q * x1
        y0, y1 = y1, y0 - q * y1
    return a, x0, y0


def _solve_linmod(a: int, b: int, m: int) -> tuple[int, int]:
    """Solutions of a x = b (mod m) as x = u (mod v)."""
    g, inv, _ = _xgcd(a, m)
    if b % g:
        raise ValueError("no solution")
    v = m // g
    u = (b // g) * inv % m
    return u % v, v


def _reduce_t(a: int, b: int, c: int) -> tuple[int, int, int]:
    while True:
        if not (-a < b <= a):
            r = (a - b) // (2 * a)
            b, c = b + 2 * r * a, a * r * r + b * r + c
        if a > c:
            a, b, c = c, -b, a
            continue
        break
    if a == c and b < 0:
        b = -b
    return a, b, c


def _compose_t(f: tuple[int, int, int], g: tuple[int, int, int]) -> tuple[int, int, int]:
    """Gauss composition of two primitive forms of the same discriminant."""
    a, b, c = f
    al, be, _ga = g
    s = (b + be) // 2
    h = -(b - be) // 2
    w = math.gcd(math.gcd(a, al), s)
    j = w
    sa = a // w
    t = al // w
    u = s // w
    mu, nu = _solve_linmod(t * u, h * u + sa * c, sa * t)
    lam = _solve_linmod(t * nu, h - t * mu, sa)[0]
    k = mu + nu * lam
    ell = (k * t - h) // sa
    m = (t * u * k - h * u - c * sa) // (sa * t)
    A = sa * t
    B = j * u - (k * t + ell * sa)
    C = k * ell - j * m
    return _reduce_t(A, B, C)


def principal_form(disc: int) -> QuadForm:
    _check_disc(disc)
    k = disc & 1
    return QuadForm(1, k, (k * k - disc) // 4)


def compose(f: QuadForm, g: QuadForm) -> QuadForm:
    """Reduced representative of the composed class."""
    if f.disc != g.disc:
        raise ValueError(f"discriminant mismatch: {f.disc} vs {g.disc}")
    return QuadForm(*_compose_t((f.a, f.b, f.c), (g.a, g.b, g.c)))


def inverse(f: QuadForm) -> QuadForm:
    return QuadForm(*_reduce_t(f.a, -f.b, f.c))


def form_pow(f: QuadForm, e: int) -> QuadForm:
    result = principal_form(f.disc)
    base = QuadForm(*_reduce_t(f.a, f.b, f.c))
    rt, bt = (result.a, result.b, result.c), (base.a, base.b, base.c)
    while e > 0:
        if e & 1:
            rt = _compose_t(rt, bt)
        bt = _compose_t(bt, bt)
        e >>= 1
    return QuadForm(*rt)


def reduced_forms(disc: int) -> list[QuadForm]:
    """One reduced primitive form per class; the count is h(disc)."""
    _check_disc(disc)
    out = []
    amax = math.isqrt(-disc // 3)
    for a in range(1, amax + 1):
        for b in range(-a + 1, a + 1):
            num = b * b - disc
            if num % (4 * a):
                continue
            c = num // (4 * a)
            if c < a:
                continue
            if a == c and b < 0:
                continue
            if math.gcd(math.gcd(a, b), c) != 1:
                continue
            out.append(QuadForm(a, b, c))
    return out


def class_number(disc: int, table: PrimeTable | None = None) -> int:
    """h(disc) by counting reduced primitive forms grouped by middle
    coefficient; per B the products AC are enumerated through divisors."""
    _check_disc(disc)
    absd = -disc
    h = 0
    bmax = math.isqrt(absd // 3)
    for b in range(absd & 1, bmax + 1, 2):
        m = (b * b + absd) // 4
        r = math.isqrt(m)
        for a in _divisors_up_to(m, r, table):
            if a < max(b, 1):
                continue
            c = m // a
            if math.gcd(math.gcd(a, b), c) != 1:
                continue
            h += 1 if (b == 0 or a == b or a == c) else 2
    if h > CLASS_NUMBER_GUARD:
        raise CapacityError(f"h({disc}) = {h} exceeds guard")
    return h


def _divisors_up_to(m: int, bound: int, table: PrimeTable | None) -> list[int]:
    divs = [1]
    for p, e in factorize(m, table):
        pk = 1
        powers = []
        for _ in range(e):
            pk *= p
            powers.append(pk)
        divs = [d * q for d in divs for q in [1] + powers if d * q <= bound]
    return divs


@dataclass(frozen=True)
class TwoSylowType:
    """Multiset of 2-power exponents of the class group's 2-Sylow subgroup."""

    disc: int
    exponents: tuple[int, ...]  # descending

    def rank(self, k: int) -> int:
        """r_k = #{i : a_i >= k} = dim 2^(k-1) Cl[2^k]."""
        return sum(1 for a in self.exponents if a >= k)

    def ranks(self, k_max: int) -> tuple[int, ...]:
        return tuple(self.rank(k) for k in range(1, k_max + 1))


def prime_form(disc: int, q: int) -> QuadForm | None:
    """A reduced form of class containing an ideal of norm q (odd prime q),
    or None when q is inert."""
    chi = kronecker_symbol(disc, q)
    if chi == -1:
        return None
    b = sqrt_mod(disc % q, q)
    if b is None:
        return None
    if (b - disc) % 2:
        b = q - b
    c = (b * b - disc) // (4 * q)
    if (b * b - disc) % (4 * q):
        return None
    return QuadForm(*_reduce_t(q, b, c))


def _close_subgroup(elements: set, new: tuple[int, int, int]) -> set:
    """Subgroup generated by ``elements`` (already a subgroup) and ``new``."""
    if new in elements:
        return elements
    powers = []
    cur = new
    while cur not in elements:
        powers.append(cur)
        cur = _compose_t(cur, new)
    out = set(elements)
    for p in powers:
        out.update(_compose_t(p, e) for e in elements)
    return out


def two_sylow_subgroup(disc: int, h: int, table: PrimeTable | None = None) -> set:
    """The full 2-Sylow subgroup of the class group, as reduced form tuples.

    Classes of small split prime forms are raised to the odd part of h and
    closed into a subgroup until the known order 2^v2(h) is reached; a full
    form enumeration is the guaranteed fallback.
    """
    v2 = 0
    m = h
    while m % 2 == 0:
        m //= 2
        v2 += 1
    ident = principal_form(disc)
    group: set = {(ident.a, ident.b, ident.c)}
    target = 1 << v2
    if target == 1:
        return group
    q = 2
    tried = 0
    while len(group) < target and tried < 400:
        q = _next_prime(q)
        tried += 1
        if disc % q == 0:
            continue
        f = prime_form(disc, q)
        if f is None:
            continue
        t = form_pow(f, m)
        group = _close_subgroup(group, (t.a, t.b, t.c))
    if len(group) < target:
        for f in reduced_forms(disc):
            t = form_pow(f, m)
            group = _close_subgroup(group, (t.a, t.b, t.c))
            if len(group) == target:
                break
    if len(group) != target:
        raise RuntimeError(f"2-Sylow generation failed for disc {disc}")
    return group


def _next_prime(q: int) -> int:
    q += 1 if q == 2 else 2
    while True:
        if all(q % p for p in range(3, math.isqrt(q) + 1, 2)) and q % 2:
            return q
        q += 2


def _exponents_from_group(disc: int, group: set) -> tuple[int, ...]:
    ident = (1, disc & 1, ((disc & 1) - disc) // 4)
    orders = Counter()
    for g in group:
        k = 0
        cur = g
        while cur != ident:
            cur = _compose_t(cur, cur)
            k += 1
        orders[k] += 1
    # N_k = #{x : x^(2^k) = 1} = prod 2^min(k, a_i); r_k = log2(N_k/N_{k-1})
    kmax = max(orders) if orders else 0
    exps = []
    prev = 1
    for k in range(1, kmax + 1):
        nk = sum(c for j, c in orders.items() if j <= k)
        rk = (nk // prev).bit_length() - 1
        exps.append(rk)
        prev = nk
    out = []
    for k, rk in enumerate(exps, start=1):
        nxt = exps[k] if k < len(exps) else 0
        out.extend([k] * (rk - nxt))
    return tuple(sorted(out, reverse=True))


def two_sylow_ranks(disc: int, k_max: int = 3, table: PrimeTable | None = None) -> TwoSylowType:
    """2-Sylow exponent multiset via the actual group of forms.

    Strips the odd part of h by the map g -> g^odd(h), then solves the
    exponent multiset from the counts of elements of order dividing 2^k.
    """
    h = class_number(disc, table)
    group = two_sylow_subgroup(disc, h, table)
    return TwoSylowType(disc, _exponents_from_group(disc, group))


# ---------------------------------------------------------------------------
# Redei matrix and genus theory

def prime_discriminant_factors(disc: int) -> list[int]:
    """Unique factorization of a fundamental discriminant into prime
    discriminants (p* = (-1)^((p-1)/2) p, and -4 / 8 / -8 at 2)."""
    _check_disc(disc)
    stars = []
    rest = disc
    for p, e in factorize(-disc if disc % 2 else (-disc) // 4):
        if p == 2:
            continue
        if e > 1:
            raise ValueError(f"{disc} is not fundamental")
        star = p if p % 4 == 1 else -p
        stars.append(star)
        rest //= star
    if rest != 1:
        if rest not in (-4, 8, -8):
            raise ValueError(f"{disc} is not fundamental")
        stars.append(rest)
    prod = 1
    for s in stars:
        prod *= s
    assert prod == disc
    return stars


def two_rank(disc: int) -> int:
    """Genus theory: r_2 = t - 1 with t prime discriminant factors."""
    return len(prime_discriminant_factors(disc)) - 1


def redei_matrix(disc: int) -> f2linalg.BitMatrix:
    """The t x t matrix of symbols among prime discriminant factors.

    Off-diagonal entry (i, j) is additive kronecker(d_i, p_j); diagonals
    make every column sum vanish, so each diagonal carries the symbol of
    the complementary factor.
    """
    stars = prime_discriminant_factors(disc)
    t = len(stars)
    underlying = [2 if s % 2 == 0 else abs(s) for s in stars]
    rows = [[0] * t for _ in range(t)]
    for j in range(t):
        colsum = 0
        for i in range(t):
            if i == j:
                continue
            bit = 0 if kronecker_symbol(stars[i], underlying[j]) == 1 else 1
            rows[i][j] = bit
            colsum ^= bit
        rows[j][j] = colsum
    return f2linalg.BitMatrix.from_lists(rows)


def redei_4rank(disc: int) -> int:
    """4-rank of the class group from the corank of the symbol matrix."""
    stars = prime_discriminant_factors(disc)
    t = len(stars)
    if t == 1:
        return 0
    return t - 1 - f2linalg.rank(redei_matrix(disc))


# ---------------------------------------------------------------------------
# survey

@dataclass(frozen=True)
class ClassSurvey:
    d_max: int
    k_max: int
    fields: int
    joint: dict  # (r_2, r_4, ..., r_{2^k_max}) -> count

    def conditional(self, k: int) -> dict:
        """P-hat(r_{2^(k+1)} = y | r_{2^k} = x) as {(x, y): fraction}."""
        if k >= self.k_max:
            raise ValueError("k+1 exceeds surveyed depth")
        pair = Counter()
        base = Counter()
        for ranks, c in self.joint.items():
            pair[(ranks[k - 1], ranks[k])] += c
            base[ranks[k - 1]] += c
        return {xy: cnt / base[xy[0]] for xy, cnt in sorted(pair.items())}


def _ranks_for_d(d: int, k_max: int, table: PrimeTable | None) -> tuple[int, ...]:
    disc = -d if d % 4 == 3 else -4 * d
    r2 = two_rank(disc)
    if k_max == 1:
        return (r2,)
    r4 = redei_4rank(disc)
    if k_max == 2:
        return (r2, r4)
    if r4 == 0:
        return (r2, r4) + (0,) * (k_max - 2)
    h = class_number(disc, table)
    v2 = (h & -h).bit_length() - 1
    extra = v2 - r2 - r4
    if extra == 0:
        # exponent multiset forced: r4 slots of exactly 2, the rest 1
        return (r2, r4) + (0,) * (k_max - 2)
    if r4 == 1:
        # one chain of length 2 + extra, the rest exactly 1
        a1 = 2 + extra
        return (r2, r4) + tuple(1 if a1 >= k else 0 for k in range(3, k_max + 1))
    group = two_sylow_subgroup(disc, h, table)
    ty = TwoSylowType(disc, _exponents_from_group(disc, group))
    return ty.ranks(k_max)


def class_survey(
    d_max: int, k_max: int = 3, table: PrimeTable | None = None
) -> ClassSurvey:
    """Joint histogram of (r_2, r_4, ..., r_{2^k_max}) over squarefree d <= d_max.

    d = 1 (the field Q(i), discriminant -4) is included.  Convergence of
    the conditional tables toward the uniform-matrix kernel distribution
    is log-log slow; tolerances on them are empirical findings.
    """
    sf = squarefree_mask(d_max)
    joint: Counter = Counter()
    fields = 0
    for d in range(1, d_max + 1):
        if not sf[d]:
            continue
        joint[_ranks_for_d(d, k_max, table)] += 1
        fields += 1
    return ClassSurvey(d_max, k_max, fields, dict(joint))
