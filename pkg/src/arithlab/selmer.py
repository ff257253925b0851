"""2-Selmer ranks of quadratic twists d y^2 = x (x+a) (x+b) by complete 2-descent.

The twisted curve is y^2 = x (x + ad) (x + bd) with roots (0, -ad, -bd).
A candidate Selmer element is a pair (b1, b2) of squarefree integers
supported on S = {real, 2} U {p | abd(a-b)}; it is accepted when the pair
of torsor quadrics

    b1 z1^2 - b2 z2^2 = e2 - e1,    b1 z1^2 - b1 b2 z3^2 = e3 - e1

is solvable at every place of S, equivalently when its localization lies
in the image of the local descent map at every place.  Those local images
are small subgroups of the local square-class pairs, so the whole descent
reduces to GF(2) linear algebra; the resulting square condition matrix is
the "matrix of Legendre symbols" fast path.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import f2linalg
from .arithmetic import PrimeTable, factorize, is_squarefree, kronecker_symbol, squarefree_mask
from .errors import DimensionError
from .seeding import as_seed, derive_rng


class CurveHypothesisError(ValueError):
    """The curve fails a hypothesis; ``quantity`` names the offender."""

    def __init__(self, message: str, quantity: str):
        super().__init__(message)
        self.quantity = quantity


@dataclass(frozen=True)
class CurveE:
    """y^2 = x (x+a) (x+b) with full rational 2-torsion and no rational
    4-cyclic subgroup."""

    a: int
    b: int
    bad_primes: frozenset

    def __repr__(self):
        return f"CurveE(a={self.a}, b={self.b})"


@dataclass(frozen=True)
class SelmerResult:
    d: int
    dim: int  # dim_F2 Sel^2(E^(d)), 2-torsion image included

    @property
    def n1(self) -> int:
        return self.dim - 2


def _is_nonzero_square(n: int) -> bool:
    if n <= 0:
        return False
    r = math.isqrt(n)
    return r * r == n


def validate_curve(a: int, b: int) -> CurveE:
    """Check the twist-family hypotheses and build the curve.

    A rational cyclic 4-subgroup through a 2-torsion point T exists exactly
    when the half-points of T have rational x-coordinate; duplication makes
    x^2 equal to ab, a(a-b), or b(b-a), so those three integers must not be
    nonzero squares.
    """
    if a == 0 or b == 0:
        raise CurveHypothesisError("degenerate curve: a and b must be nonzero", "a*b")
    if a == b:
        raise CurveHypothesisError("degenerate curve: a = b collapses roots", "a-b")
    for value, name in ((a * b, "ab"), (a * (a - b), "a(a-b)"), (b * (b - a), "b(b-a)")):
        if _is_nonzero_square(value):
            raise CurveHypothesisError(
                f"rational 4-cyclic subgroup: {name} = {value} is a square", name
            )
    bad = {2} | {p for p, _ in factorize(abs(2 * a * b * (a - b)))}
    return CurveE(a, b, frozenset(bad))


# ---------------------------------------------------------------------------
# local square classes

def _val_unit(n: int, p: int) -> tuple[int, int]:
    v = 0
    while n % p == 0:
        n //= p
        v += 1
    return v, n


def local_dim(place) -> int:
    """dim_F2 of Q_v* / squares: 1 at the real place, 3 at 2, 2 at odd p."""
    if place == "real":
        return 1
    return 3 if place == 2 else 2


def square_class_bits(x, place) -> int:
    """Square class of nonzero rational x at a place, packed into bits.

    real: bit0 = sign.  odd p: bit0 = v_p mod 2, bit1 = nonresidue flag.
    p = 2: bit0 = v_2 mod 2, bit1 = (u-1)/2 mod 2, bit2 = (u^2-1)/8 mod 2.
    """
    if isinstance(x, Fraction):
        x = x.numerator * x.denominator
    if x == 0:
        raise ValueError("square class of 0 is undefined")
    if place == "real":
        return 1 if x < 0 else 0
    p = int(place)
    if p == 2:
        v, u = _val_unit(abs(x), 2)
        if x < 0:
            u = -u
        eps = ((u - 1) // 2) & 1
        om = ((u * u - 1) // 8) & 1
        return (v & 1) | (eps << 1) | (om << 2)
    v, u = _val_unit(abs(x), p)
    if x < 0:
        u = -u
    chi = kronecker_symbol(u, p)
    return (v & 1) | ((0 if chi == 1 else 1) << 1)


_UNIT_REP_2 = {(0, 0): 1, (1, 1): 3, (0, 1): 5, (1, 0): 7}


def class_representative(bits: int, place) -> int:
    """A small integer in the given local square class."""
    if place == "real":
        return -1 if bits else 1
    p = int(place)
    if p == 2:
        u = _UNIT_REP_2[((bits >> 1) & 1, (bits >> 2) & 1)]
        return u * (2 if bits & 1 else 1)
    if (bits >> 1) & 1:
        n = 2
        while kronecker_symbol(n, p) != -1:
            n += 1
    else:
        n = 1
    return n * (p if bits & 1 else 1)


# ---------------------------------------------------------------------------
# torsor solvability

def torsor_solvable_real(b1: int, b2: int, A: int, B: int) -> bool:
    """Real solvability of the torsor pair by sign analysis: w = b1 z1^2
    must meet the rays A + b2 [0, oo) and B + b1 b2 [0, oo)."""
    lo, hi = -math.inf, math.inf

    def cut(coeff: int, offset: float):
        nonlocal lo, hi
        if coeff > 0:
            lo = max(lo, offset)
        else:
            hi = min(hi, offset)

    cut(b1, 0.0)
    cut(b2, float(A))
    cut(b1 * b2, float(B))
    return lo <= hi


def _canonical_projective(z: tuple, p: int, mod: int) -> tuple:
    for zi in z:
        if zi % p:
            inv = pow(zi, -1, mod)
            return tuple(x * inv % mod for x in z)
    raise AssertionError("non-primitive state")


def torsor_solvable_padic(
    b1: int, b2: int, A: int, B: int, p: int, margin: int = 5, budget: int = 500_000
) -> bool:
    """p-adic solvability by exhaustive primitive-solution search modulo
    p^(2v + margin), explored by lifting solutions level by level.

    v bounds the coefficient valuations, which gives the Hensel margin.  A
    solution mod p^(2t+1) at which some 2x2 Jacobian minor has valuation
    at most t lifts outright, so such branches accept early.
    """
    vmax = max(_val_unit(abs(c), p)[0] for c in (b1, b2, A, B))
    K = 2 * vmax + margin
    c1, c2, c12 = b1, b2, b1 * b2

    def g1(z, m):
        return (c1 * z[1] * z[1] - c2 * z[2] * z[2] - A * z[0] * z[0]) % m

    def g2(z, m):
        return (c1 * z[1] * z[1] - c12 * z[3] * z[3] - B * z[0] * z[0]) % m

    def smooth_level(z) -> int | None:
        """2t+1 for the best Jacobian 2x2 minor valuation t, None if all zero."""
        r1 = (-2 * A * z[0], 2 * c1 * z[1], -2 * c2 * z[2], 0)
        r2 = (-2 * B * z[0], 2 * c1 * z[1], 0, -2 * c12 * z[3])
        best = None
        for i in range(4):
            for j in range(i + 1, 4):
                m = r1[i] * r2[j] - r1[j] * r2[i]
                if m:
                    t = _val_unit(abs(m), p)[0]
                    best = t if best is None else min(best, t)
        return None if best is None else 2 * best + 1

    def jacobian_rows(z):
        return (
            (-2 * A * z[0], 2 * c1 * z[1], -2 * c2 * z[2], 0),
            (-2 * B * z[0], 2 * c1 * z[1], 0, -2 * c12 * z[3]),
        )

    states = set()
    for z0 in range(p):
        for z1 in range(p):
            for z2 in range(p):
                for z3 in range(p):
                    z = (z0, z1, z2, z3)
                    if all(x % p == 0 for x in z):
                        continue
                    if g1(z, p) == 0 and g2(z, p) == 0:
                        states.add(_canonical_projective(z, p, p))
    level = 1
    explored = 0
    while states and level < K:
        m_next = p ** (level + 1)
        step = p**level
        nxt = set()
        for z in states:
            need = smooth_level(z)
            if need is not None and level >= need:
                return True
            explored += 1
            if explored > budget:
                raise RuntimeError("torsor lifting search exceeded budget")
            # G(z + p^level d) = G(z) + p^level J d (mod p^(level+1)) for level >= 1
            j1, j2 = jacobian_rows(z)
            rhs1 = (-(g1(z, p**level * p) // step)) % p
            rhs2 = (-(g2(z, p**level * p) // step)) % p
            for delta in _solve_two_linear_mod_p(j1, rhs1, j2, rhs2, p):
                zz = (
                    (z[0] + delta[0] * step) % m_next,
                    (z[1] + delta[1] * step) % m_next,
                    (z[2] + delta[2] * step) % m_next,
                    (z[3] + delta[3] * step) % m_next,
                )
                nxt.add(_canonical_projective(zz, p, m_next))
        states = nxt
        level += 1
    return bool(states)


def _solve_two_linear_mod_p(row1, rhs1, row2, rhs2, p: int):
    """All solutions in F_p^4 of the two linear equations row.x = rhs."""
    aug = [
        [row1[0] % p, row1[1] % p, row1[2] % p, row1[3] % p, rhs1 % p],
        [row2[0] % p, row2[1] % p, row2[2] % p, row2[3] % p, rhs2 % p],
    ]
    pivots = []
    r = 0
    for col in range(4):
        src = next((i for i in range(r, 2) if aug[i][col] % p), None)
        if src is None:
            continue
        aug[r], aug[src] = aug[src], aug[r]
        inv = pow(aug[r][col], -1, p)
        aug[r] = [v * inv % p for v in aug[r]]
        for i in range(2):
            if i != r and aug[i][col]:
                f = aug[i][col]
                aug[i] = [(v - f * w) % p for v, w in zip(aug[i], aug[r])]
        pivots.append(col)
        r += 1
        if r == 2:
            break
    for i in range(r, 2):
        if aug[i][4] % p:
            return
    free = [c for c in range(4) if c not in pivots]
    for idx in range(p ** len(free)):
        sol = [0, 0, 0, 0]
        rest = idx
        for c in free:
            sol[c] = rest % p
            rest //= p
        for rowi, col in enumerate(pivots):
            sol[col] = (aug[rowi][4] - sum(aug[rowi][c] * sol[c] for c in free)) % p
        yield tuple(sol)


def torsor_solvable_bruteforce(b1: int, b2: int, A: int, B: int, p: int, K: int) -> bool:
    """Literal enumeration of all primitive vectors modulo p^K (test oracle)."""
    mod = p**K
    rng_vals = np.arange(mod, dtype=np.int64)
    z0, z1, z2, z3 = np.meshgrid(rng_vals, rng_vals, rng_vals, rng_vals, indexing="ij", sparse=True)
    g1 = (b1 * z1 * z1 - b2 * z2 * z2 - A * z0 * z0) % mod
    g2 = (b1 * z1 * z1 - (b1 * b2) * z3 * z3 - B * z0 * z0) % mod
    prim = (z0 % p != 0) | (z1 % p != 0) | (z2 % p != 0) | (z3 % p != 0)
    return bool(np.any((g1 == 0) & (g2 == 0) & prim))


# ---------------------------------------------------------------------------
# local Kummer images

def _pair_bits(x1, x2, place) -> int:
    dv = local_dim(place)
    return square_class_bits(x1, place) | (square_class_bits(x2, place) << dv)


def _torsion_pair_vectors(roots: tuple, place) -> list[int]:
    e1, e2, e3 = roots
    t1 = _pair_bits((e1 - e2) * (e1 - e3), e1 - e2, place)
    t2 = _pair_bits(e2 - e1, (e2 - e1) * (e2 - e3), place)
    return [t1, t2]


def _span(vectors) -> set[int]:
    group = {0}
    for v in vectors:
        if v not in group:
            group |= {v ^ g for g in group}
    return group


def _image_real(roots: tuple) -> frozenset:
    e1, e2, _e3 = roots
    lo, mid = sorted(roots)[:2]
    x0 = Fraction(lo + mid, 2)
    vec = _pair_bits(x0 - e1, x0 - e2, "real")
    return frozenset({0, vec})


def _point_search_images(roots: tuple, place, group: set[int], target: int) -> set[int]:
    """Extend the image subgroup with classes of actual local points."""
    e1, e2, e3 = roots
    p = int(place)
    vspread = max(_val_unit(abs(r - s), p)[0] for r in roots for s in roots if r != s)
    wmax = vspread + 3
    for width in (8, 32, 128):
        for center in (0,) + roots:
            for w in range(-2 * wmax, wmax + 1):
                scale = Fraction(p) ** w
                for mag in range(1, width + 1):
                    if mag % p == 0:
                        continue
                    for u in (mag, -mag):
                        x = center + u * scale
                        f1, f2, f3 = x - e1, x - e2, x - e3
                        if f1 == 0 or f2 == 0 or f3 == 0:
                            continue
                        if square_class_bits(f1 * f2 * f3, place) != 0:
                            continue
                        vec = _pair_bits(f1, f2, place)
                        if vec not in group:
                            group = _span(list(group - {0}) + [vec])
                            if len(group) == target:
                                return group
        if len(group) == target:
            return group
    raise RuntimeError(
        f"local point search exhausted at place {place} for roots {roots}"
    )


def local_image(roots: tuple, place) -> frozenset:
    """Image of E(Q_v)/2E(Q_v) under (x - e1, x - e2), as packed class pairs.

    The order is forced by |E(Q_v)[2]| = 4: two at the real place, four at
    odd p, eight at p = 2.
    """
    e1, e2, e3 = roots
    if place == "real":
        return _image_real(roots)
    p = int(place)
    if p == 2:
        A, B = e2 - e1, e3 - e1
        accepted = set()
        for c1 in range(8):
            for c2 in range(8):
                b1 = class_representative(c1, 2)
                b2 = class_representative(c2, 2)
                if torsor_solvable_padic(b1, b2, A, B, 2):
                    accepted.add(c1 | (c2 << 3))
        image = frozenset(accepted)
        if len(image) != 8 or _span(list(image)) != set(image):
            raise RuntimeError(f"2-adic image is not an order-8 subgroup: {sorted(image)}")
        for t in _torsion_pair_vectors(roots, 2):
            if t not in image:
                raise RuntimeError("torsion image missing from 2-adic image")
        return image
    disc_part = (e1 - e2) * (e1 - e3) * (e2 - e3)
    if disc_part % p != 0:
        # good odd reduction: exactly the unramified (unit-valuation) classes
        return frozenset({0, 2, 8, 10})
    group = _span(_torsion_pair_vectors(roots, place))
    if len(group) < 4:
        group = _point_search_images(roots, place, group, 4)
    return frozenset(group)


# ---------------------------------------------------------------------------
# global descent

def _parity(x: int) -> int:
    return x.bit_count() & 1


class TwoDescent:
    """Descent engine for one curve; caches local images per square class
    of the twisting integer."""

    def __init__(self, curve: CurveE, table: PrimeTable | None = None):
        self.curve = curve
        self.table = table
        self._image_cache: dict = {}

    def _image_rows(self, place, d: int, roots: tuple) -> list[int]:
        """Annihilator rows of the local image (the linear membership
        conditions); cached per square class of d at the place."""
        key = (place, square_class_bits(d, place))
        hit = self._image_cache.get(key)
        if hit is not None:
            return hit
        image = local_image(roots, place)
        dv = local_dim(place)
        rows = [v for v in image if v]
        if rows:
            mat = f2linalg.BitMatrix(len(rows), 2 * dv, tuple(rows))
            ann = f2linalg.kernel_basis(mat)
        else:
            ann = [1 << i for i in range(2 * dv)]
        self._image_cache[key] = ann
        return ann

    def _generic_odd_rows(self, place, roots: tuple) -> list[int]:
        group = _span(_torsion_pair_vectors(roots, place))
        if len(group) != 4:
            raise DimensionError("torsion span degenerate at a generic place")
        rows = [v for v in group if v]
        mat = f2linalg.BitMatrix(len(rows), 4, tuple(rows))
        return f2linalg.kernel_basis(mat)

    def condition_matrix(self, d: int) -> tuple[f2linalg.BitMatrix, list[int], list]:
        """The GF(2) condition system for Sel^2(E^(d)).

        Returns (matrix, generators, places).  Unknowns are the exponent
        bits of (b1, b2) over generators [-1, 2, odd primes of S]; each
        place contributes its membership functionals.  The matrix is
        square: 4 + 2t rows and columns for t odd places.
        """
        a, b = self.curve.a, self.curve.b
        if d == 0 or not is_squarefree(d, self.table):
            raise ValueError(f"d = {d} must be a nonzero squarefree integer")
        roots = (0, -a * d, -b * d)
        support = abs(a * b * d * (a - b))
        odd_primes = sorted(
            p for p, _ in factorize(support, self.table) if p != 2
        )
        gens: list[int] = [-1, 2] + odd_primes
        places: list = ["real", 2] + odd_primes
        ngen = len(gens)
        curve_places = self.curve.bad_primes
        rows_out: list[int] = []
        for place in places:
            dv = local_dim(place)
            if place == "real" or place == 2 or place in curve_places:
                ann = self._image_rows(place, d, roots)
            else:
                # p | d only: the torsion images span the whole local image
                ann = self._generic_odd_rows(place, roots)
            loc = [square_class_bits(g, place) for g in gens]
            mask = (1 << dv) - 1
            for h in ann:
                h1, h2 = h & mask, h >> dv
                row = 0
                for i, lg in enumerate(loc):
                    if _parity(h1 & lg):
                        row |= 1 << i
                    if _parity(h2 & lg):
                        row |= 1 << (ngen + i)
                rows_out.append(row)
        if len(rows_out) != 2 * ngen:
            raise DimensionError(
                f"condition system is {len(rows_out)} x {2 * ngen}, expected square"
            )
        return f2linalg.BitMatrix(len(rows_out), 2 * ngen, tuple(rows_out)), gens, places

    def _global_vector(self, n: int, gens: list[int]) -> int:
        """Exponent bits of the square class of n over the generator list."""
        if n == 0:
            raise ValueError("zero has no square class")
        vec = 0
        if n < 0:
            vec |= 1 << gens.index(-1)
            n = -n
        for p, e in factorize(n, self.table):
            if e % 2 == 0:
                continue
            vec |= 1 << gens.index(p)
        return vec

    def sel2_dim(self, d: int) -> SelmerResult:
        mat, gens, _places = self.condition_matrix(d)
        ngen = len(gens)
        a, b = self.curve.a, self.curve.b
        e2, e3 = -a * d, -b * d
        t1 = self._global_vector((-e2) * (-e3), gens) | (
            self._global_vector(-e2, gens) << ngen
        )
        t2 = self._global_vector(e2, gens) | (
            self._global_vector(e2 * (e2 - e3), gens) << ngen
        )
        for tv in (t1, t2, t1 ^ t2):
            for row in mat.rows:
                if _parity(row & tv):
                    raise RuntimeError(f"torsion class rejected in descent for d={d}")
        dim = f2linalg.kernel_rank(mat)
        if dim < 2:
            raise RuntimeError(f"descent produced dim {dim} < 2 for d={d}")
        return SelmerResult(d, dim)


_DESCENDERS: dict = {}


def _descender(curve: CurveE, table: PrimeTable | None = None) -> TwoDescent:
    key = (curve.a, curve.b, id(table) if table is not None else None)
    eng = _DESCENDERS.get(key)
    if eng is None:
        eng = TwoDescent(curve, table)
        _DESCENDERS[key] = eng
    return eng


def sel2_dim(curve: CurveE, d: int, table: PrimeTable | None = None) -> SelmerResult:
    """dim_F2 of the 2-Selmer group of the twist by squarefree d != 0."""
    return _descender(curve, table).sel2_dim(d)


def sel2_matrix(curve: CurveE, d: int, table: PrimeTable | None = None) -> f2linalg.BitMatrix:
    """The square GF(2) condition matrix whose kernel rank is sel2_dim.

    Entries at odd places are built from Kronecker symbols of the
    generators (including the prime divisors of d) and fixed symbols at
    the curve's bad places; kernel_rank(matrix) = dim = (dim - 2) + 2,
    the frozen offset being 2.
    """
    mat, _gens, _places = _descender(curve, table).condition_matrix(d)
    return mat


@dataclass(frozen=True)
class SelmerSurvey:
    d_max: int
    residues: tuple[int, ...]
    processed: int
    histogram: dict  # n1 -> count

    def fraction(self, n1: int) -> float:
        return self.histogram.get(n1, 0) / self.processed


def selmer_survey(
    curve: CurveE,
    d_max: int,
    residue_filter=(1, 2, 3),
    rng=None,
    sample_cap: int | None = None,
    table: PrimeTable | None = None,
) -> SelmerSurvey:
    """Histogram of n1 = dim - 2 over squarefree positive d <= d_max with
    d mod 8 in the filter; optional uniform subsampling via ``sample_cap``."""
    residues = tuple(sorted(set(residue_filter)))
    sf = squarefree_mask(d_max) if d_max >= 1 else None
    eligible = [
        d for d in range(1, d_max + 1) if sf[d] and d % 8 in residues
    ] if residues else []
    if sample_cap is not None and len(eligible) > sample_cap:
        gen = derive_rng(as_seed(rng), 0)
        idx = gen.choice(len(eligible), size=sample_cap, replace=False)
        eligible = [eligible[i] for i in sorted(idx.tolist())]
    eng = _descender(curve, table)
    hist: Counter = Counter()
    for d in eligible:
        hist[eng.sel2_dim(d).n1] += 1
    return SelmerSurvey(d_max, residues, len(eligible), dict(sorted(hist.items())))
