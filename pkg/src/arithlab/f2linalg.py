"""Dense linear algebra over GF(2).

Rows are packed into machine words (bit j of a row word is column j), and
elimination is word-parallel XOR.  Two call styles coexist: a scalar
``BitMatrix`` API built on Python integers, and batched numpy paths
(``kernel_ranks_words``, the samplers) that process many matrices per call
for Monte-Carlo surveys.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Literal

import numpy as np

from .errors import CapacityError, DimensionError

Kind = Literal["alternating", "general"]

ENUM_FREE_BIT_LIMIT = 30


@dataclass(frozen=True)
class BitMatrix:
    """Matrix over GF(2) with one Python int per row; bit j is column j."""

    n_rows: int
    n_cols: int
    rows: tuple[int, ...]

    def __post_init__(self):
        if len(self.rows) != self.n_rows:
            raise DimensionError("row count does not match n_rows")
        top = 1 << self.n_cols
        if any(r < 0 or r >= top for r in self.rows):
            raise DimensionError("row has bits outside n_cols")

    @classmethod
    def from_lists(cls, entries) -> "BitMatrix":
        rows = []
        ncols = len(entries[0]) if entries else 0
        for row in entries:
            if len(row) != ncols:
                raise DimensionError("ragged rows")
            word = 0
            for j, bit in enumerate(row):
                if bit not in (0, 1):
                    raise ValueError("entries must be 0 or 1")
                word |= bit << j
            rows.append(word)
        return cls(len(entries), ncols, tuple(rows))

    def entry(self, i: int, j: int) -> int:
        return (self.rows[i] >> j) & 1

    def to_lists(self) -> list[list[int]]:
        return [[(r >> j) & 1 for j in range(self.n_cols)] for r in self.rows]

    def is_alternating(self) -> bool:
        if self.n_rows != self.n_cols:
            return False
        n = self.n_rows
        return all(
            self.entry(i, i) == 0 for i in range(n)
        ) and all(
            self.entry(i, j) == self.entry(j, i) for i in range(n) for j in range(i + 1, n)
        )


def rank(m: BitMatrix) -> int:
    """Row rank over GF(2); the input is not modified."""
    basis: dict[int, int] = {}
    for word in m.rows:
        r = word
        while r:
            h = r.bit_length() - 1
            if h in basis:
                r ^= basis[h]
            else:
                basis[h] = r
                break
    return len(basis)


def kernel_rank(m: BitMatrix) -> int:
    """n - rank(m) for a square n x n matrix."""
    if m.n_rows != m.n_cols:
        raise DimensionError(f"kernel_rank needs a square matrix, got {m.n_rows}x{m.n_cols}")
    return m.n_cols - rank(m)


def _free_positions(n: int, kind: Kind) -> list[tuple[int, int]]:
    """Free bit positions in row-major order for the matrix class."""
    if kind == "alternating":
        return [(i, j) for i in range(n) for j in range(i + 1, n)]
    if kind == "general":
        return [(i, j) for i in range(n) for j in range(n)]
    raise ValueError(f"unknown kind {kind!r}")


def free_bit_count(n: int, kind: Kind) -> int:
    return n * (n - 1) // 2 if kind == "alternating" else n * n


def _matrix_from_bits(n: int, kind: Kind, positions, bits: int) -> BitMatrix:
    rows = [0] * n
    for k, (i, j) in enumerate(positions):
        if (bits >> k) & 1:
            rows[i] |= 1 << j
            if kind == "alternating":
                rows[j] |= 1 << i
    return BitMatrix(n, n, tuple(rows))


def sample_matrix(n: int, kind: Kind, rng: np.random.Generator) -> BitMatrix:
    """Uniform draw from the alternating or general n x n matrices over GF(2)."""
    if n < 0:
        raise ValueError("n must be >= 0")
    nbits = free_bit_count(n, kind)
    positions = _free_positions(n, kind)
    bits = 0
    for k in range(nbits):
        bits |= int(rng.integers(0, 2)) << k
    return _matrix_from_bits(n, kind, positions, bits)


def enumerate_matrices(n: int, kind: Kind) -> Iterator[BitMatrix]:
    """Every matrix of the class exactly once.

    Enumeration index m runs 0 .. 2^f - 1; bit k of m is the entry at the
    k-th free position (row-major off-diagonal order for alternating).
    """
    nbits = free_bit_count(n, kind)
    if nbits > ENUM_FREE_BIT_LIMIT:
        raise CapacityError(
            f"{kind} {n}x{n} has {nbits} free bits > {ENUM_FREE_BIT_LIMIT}"
        )
    positions = _free_positions(n, kind)
    for m in range(1 << nbits):
        yield _matrix_from_bits(n, kind, positions, m)


def kernel_basis(m: BitMatrix) -> list[int]:
    """Basis of {x : M x = 0} as column-bit words (bit j = coordinate j)."""
    rows = [r for r in m.rows if r]
    # row echelon with recorded pivot columns (lowest set bit as pivot)
    pivots: dict[int, int] = {}
    for word in rows:
        r = word
        while r:
            low = r & -r
            col = low.bit_length() - 1
            if col in pivots:
                r ^= pivots[col]
            else:
                pivots[col] = r
                break
    # back-substitute to reduced form
    for col in sorted(pivots, reverse=True):
        for c2 in pivots:
            if c2 < col and (pivots[c2] >> col) & 1:
                pivots[c2] ^= pivots[col]
    free_cols = [j for j in range(m.n_cols) if j not in pivots]
    basis = []
    for j in free_cols:
        vec = 1 << j
        for col, row in pivots.items():
            if (row >> j) & 1:
                vec |= 1 << col
        basis.append(vec)
    return basis


def in_row_span(vectors: list[int], target: int) -> bool:
    """Whether ``target`` lies in the GF(2) span of ``vectors``."""
    basis: dict[int, int] = {}
    for word in vectors:
        r = word
        while r:
            h = r.bit_length() - 1
            if h in basis:
                r ^= basis[h]
            else:
                basis[h] = r
                break
    r = target
    while r:
        h = r.bit_length() - 1
        if h not in basis:
            return False
        r ^= basis[h]
    return True


# ---------------------------------------------------------------------------
# batched word-array paths (shape (batch, n) of uint64, bit j = column j)

def words_from_matrix(m: BitMatrix) -> np.ndarray:
    if m.n_cols > 64:
        raise CapacityError("word paths support n_cols <= 64")
    return np.array(m.rows, dtype=np.uint64)


def kernel_ranks_words(words: np.ndarray, n: int) -> np.ndarray:
    """Kernel ranks of a batch of n x n matrices packed as uint64 row words.

    ``words`` has shape (batch, n); it is not modified.
    """
    if n > 64:
        raise CapacityError("kernel_ranks_words supports n <= 64")
    w = words.astype(np.uint64, copy=True)
    batch = w.shape[0]
    piv = np.zeros(batch, dtype=np.int64)
    row_idx = np.arange(n, dtype=np.int64)
    bidx = np.arange(batch)
    for col in range(n):
        colbit = (w >> np.uint64(col)) & np.uint64(1)
        eligible = (colbit == 1) & (row_idx[None, :] >= piv[:, None])
        has = eligible.any(axis=1)
        src = np.argmax(eligible, axis=1)
        # swap the pivot row into position piv (only where a pivot exists)
        bsel = bidx[has]
        psel = piv[has]
        ssel = src[has]
        tmp = w[bsel, psel].copy()
        w[bsel, psel] = w[bsel, ssel]
        w[bsel, ssel] = tmp
        pivot_rows = np.where(has, w[bidx, np.minimum(piv, n - 1)], np.uint64(0))
        colbit = (w >> np.uint64(col)) & np.uint64(1)
        elim = (colbit == 1) & (row_idx[None, :] != piv[:, None]) & has[:, None]
        w ^= np.where(elim, pivot_rows[:, None], np.uint64(0))
        piv += has
    return (n - piv).astype(np.int64)


def _transpose_words(words: np.ndarray, n: int) -> np.ndarray:
    """Bit-transpose of packed rows: bit j of output row i = bit i of input row j."""
    out = np.zeros_like(words)
    for i in range(n):
        acc = np.zeros(words.shape[0], dtype=np.uint64)
        for j in range(n):
            acc |= ((words[:, j] >> np.uint64(i)) & np.uint64(1)) << np.uint64(j)
        out[:, i] = acc
    return out


def sample_words(n: int, kind: Kind, count: int, rng: np.random.Generator) -> np.ndarray:
    """Batch of ``count`` uniform matrices as packed row words, shape (count, n)."""
    if n > 63:
        raise CapacityError("sample_words supports n <= 63")
    if n == 0:
        return np.zeros((count, 0), dtype=np.uint64)
    raw = rng.integers(0, 1 << n, size=(count, n), dtype=np.uint64)
    if kind == "general":
        return raw
    if kind != "alternating":
        raise ValueError(f"unknown kind {kind!r}")
    # keep the strict upper triangle of each row, mirror it below the diagonal
    masks = np.array(
        [(((1 << n) - 1) >> (i + 1)) << (i + 1) for i in range(n)], dtype=np.uint64
    )
    upper = raw & masks[None, :]
    return upper | _transpose_words(upper, n)


def enumerate_words(n: int, kind: Kind, chunk: int = 1 << 18) -> Iterator[np.ndarray]:
    """Enumeration of the whole class as packed word chunks, same order as
    ``enumerate_matrices``."""
    nbits = free_bit_count(n, kind)
    if nbits > ENUM_FREE_BIT_LIMIT:
        raise CapacityError(
            f"{kind} {n}x{n} has {nbits} free bits > {ENUM_FREE_BIT_LIMIT}"
        )
    positions = _free_positions(n, kind)
    total = 1 << nbits
    for start in range(0, total, chunk):
        stop = min(start + chunk, total)
        counter = np.arange(start, stop, dtype=np.uint64)
        words = np.zeros((stop - start, n), dtype=np.uint64)
        for k, (i, j) in enumerate(positions):
            bit = (counter >> np.uint64(k)) & np.uint64(1)
            words[:, i] |= bit << np.uint64(j)
            if kind == "alternating":
                words[:, j] |= bit << np.uint64(i)
        yield words
