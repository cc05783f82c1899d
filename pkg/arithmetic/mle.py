"""
Multilinear and grid low-degree extensions over F_p.

Bit convention: index i on the boolean cube {0,1}^d is read LSB-first, so
bit k of i pairs with coordinate r[k]. eq_table(r)[i] == chi_index(i, r).
"""

import logging
from functools import lru_cache
from typing import Sequence

import numpy as np

from arithmetic.field import (
    P, add, sub, mul, inv, from_int, batch_inverse,
    vec_add, vec_sub, vec_mul, vec_sum, vec_from_signed, vec_dot,
)

logging.basicConfig(
    level=logging.INFO,
    format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
)
logger = logging.getLogger(__name__)


def next_power_of_two(n: int) -> int:
    return 1 if n <= 1 else 1 << (n - 1).bit_length()


def log2_exact(n: int) -> int:
    if n < 1 or n & (n - 1):
        raise ValueError(f"{n} is not a power of two")
    return n.bit_length() - 1


# ============================================================================
# Boolean-cube indicators
# ============================================================================

def chi_point(v: Sequence[int], r: Sequence[int]) -> int:
    """chi_v(r) = prod_k (r_k if v_k else 1 - r_k)."""
    if len(v) != len(r):
        raise ValueError(f"dimension mismatch: |v|={len(v)}, |r|={len(r)}")
    result = 1
    for bit, coord in zip(v, r):
        result = mul(result, coord if bit else sub(1, coord))
    return result


def chi_index(i: int, r: Sequence[int]) -> int:
    result = 1
    for coord in r:
        result = mul(result, coord if i & 1 else sub(1, coord))
        i >>= 1
    return result


def chi_indices(indices, r: Sequence[int]) -> np.ndarray:
    """chi_i(r) for every i in an integer array, O(len(indices) * d)."""
    indices = np.asarray(indices, dtype=np.int64)
    result = np.ones(indices.shape, dtype=np.uint64)
    for k, coord in enumerate(r):
        bit = (indices >> k) & 1
        factor = np.where(bit == 1, np.uint64(coord), np.uint64(sub(1, coord)))
        result = vec_mul(result, factor)
    return result


def eq_table(r: Sequence[int]) -> np.ndarray:
    """All 2^d values chi_i(r), built by doubling."""
    table = np.ones(1, dtype=np.uint64)
    for coord in r:
        low = vec_mul(table, np.uint64(sub(1, coord)))
        high = vec_mul(table, np.uint64(coord))
        table = np.concatenate([low, high])
    return table


def eq_eval(a: Sequence[int], b: Sequence[int]) -> int:
    """Equality extension prod_k (a_k b_k + (1 - a_k)(1 - b_k))."""
    if len(a) != len(b):
        raise ValueError(f"dimension mismatch: {len(a)} vs {len(b)}")
    result = 1
    for x, y in zip(a, b):
        result = mul(result, add(mul(x, y), mul(sub(1, x), sub(1, y))))
    return result


# ============================================================================
# Multilinear evaluation
# ============================================================================

def fold(values: np.ndarray, r: int) -> np.ndarray:
    """Bind the lowest variable: (1 - r) V[even] + r V[odd]."""
    even, odd = values[0::2], values[1::2]
    return vec_add(even, vec_mul(vec_sub(odd, even), np.uint64(r)))


def mle_eval(values, r: Sequence[int]) -> int:
    """Evaluate the multilinear extension of a 2^d table at r."""
    table = np.asarray(values, dtype=np.uint64)
    if table.size != 1 << len(r):
        raise ValueError(f"table of size {table.size} needs {table.size.bit_length() - 1} coordinates, got {len(r)}")
    for coord in r:
        table = fold(table, coord)
    return int(table[0])


class StreamingLdeState:
    """
    Incremental fingerprint LDE_a(r) of a frequency vector over [2^d].

    After processing updates U the accumulator equals
    sum over (i, delta) in U of delta * chi_i(r).
    """

    def __init__(self, r: Sequence[int], n: int | None = None):
        self.r = [int(c) for c in r]
        self.n = (1 << len(self.r)) if n is None else n
        if self.n > 1 << len(self.r):
            raise ValueError(f"universe {self.n} exceeds 2^{len(self.r)}")
        self.accumulator = 0
        self.updates = 0

    def update(self, index: int, delta: int) -> None:
        if not 0 <= index < self.n:
            raise ValueError(f"index {index} out of range [0, {self.n})")
        self.accumulator = add(self.accumulator, mul(from_int(delta), chi_index(index, self.r)))
        self.updates += 1

    def update_many(self, indices, deltas) -> None:
        """Vectorized update with signed integer deltas."""
        self.update_values(indices, vec_from_signed(deltas))

    def update_values(self, indices, values) -> None:
        """Vectorized update with deltas already in F_p."""
        indices = np.asarray(indices, dtype=np.int64)
        if indices.size == 0:
            return
        if indices.min() < 0 or indices.max() >= self.n:
            raise ValueError(f"index out of range [0, {self.n})")
        chis = chi_indices(indices, self.r)
        self.accumulator = add(self.accumulator, vec_dot(chis, np.asarray(values, dtype=np.uint64)))
        self.updates += int(indices.size)

    @property
    def value(self) -> int:
        return self.accumulator

    @property
    def space_words(self) -> int:
        return len(self.r) + 1


def stream_mle_eval(stream, r: Sequence[int]) -> int:
    state = StreamingLdeState(r, stream.universe_size)
    state.update_many(stream.indices, stream.deltas)
    return state.value


# ============================================================================
# Univariate Lagrange machinery on the grid [h]
# ============================================================================

class GridBasis:
    """
    Lagrange basis chi_i(x) = prod_{k != i} (x - k) / (i - k) for i in [h].

    The denominators D_i = i! (-1)^(h-1-i) (h-1-i)! are inverted once per h.
    """

    def __init__(self, h: int):
        if h < 1:
            raise ValueError("grid size must be positive")
        self.h = h
        factorial = [1] * h
        for i in range(1, h):
            factorial[i] = mul(factorial[i - 1], i)
        denominators = []
        for i in range(h):
            d = mul(factorial[i], factorial[h - 1 - i])
            denominators.append(d if (h - 1 - i) % 2 == 0 else (P - d) % P)
        self.inv_denominators = batch_inverse(denominators)

    def basis(self, x: int) -> np.ndarray:
        """Vector of chi_i(x), i in [h]."""
        h = self.h
        if 0 <= x < h:
            out = np.zeros(h, dtype=np.uint64)
            out[x] = 1
            return out
        diffs = [sub(x, k) for k in range(h)]
        prefix = [1] * (h + 1)
        for k in range(h):
            prefix[k + 1] = mul(prefix[k], diffs[k])
        suffix = 1
        out = np.zeros(h, dtype=np.uint64)
        for i in range(h - 1, -1, -1):
            out[i] = mul(mul(prefix[i], suffix), self.inv_denominators[i])
            suffix = mul(suffix, diffs[i])
        return out

    def vanishing(self, x: int) -> int:
        """H(x) = prod_{k in [h]} (x - k)."""
        result = 1
        for k in range(self.h):
            result = mul(result, sub(x, k))
        return result


@lru_cache(maxsize=64)
def grid_basis(h: int) -> GridBasis:
    return GridBasis(h)


def basis_values(h: int, x: int, points) -> np.ndarray:
    """
    chi_i(x) for each i in `points`, without the h-entry tables of GridBasis.

    One O(h) pass builds H(x) and the factorials the distinct points need;
    memory is proportional to len(points).
    """
    points = np.asarray(points, dtype=np.int64)
    if points.size == 0:
        return np.zeros(0, dtype=np.uint64)
    if 0 <= x < h:
        return (points == x).astype(np.uint64)
    distinct, position = np.unique(points, return_inverse=True)
    wanted = np.unique(np.concatenate([distinct, h - 1 - distinct])).tolist()
    factorials, f, k = {}, 1, 0
    for target in wanted:
        while k < target:
            k += 1
            f = mul(f, k)
        factorials[target] = f
    vanishing = 1
    for k in range(h):
        vanishing = mul(vanishing, sub(x, k))
    denominators = []
    for i in distinct.tolist():
        d = mul(mul(sub(x, i), factorials[i]), factorials[h - 1 - i])
        denominators.append(d if (h - 1 - i) % 2 == 0 else (P - d) % P)
    values = np.asarray([mul(vanishing, d) for d in batch_inverse(denominators)], dtype=np.uint64)
    return values[position]


def interpolate_eval(values: Sequence[int], x: int) -> int:
    """Value at x of the degree < len(values) polynomial through (k, values[k])."""
    values = np.asarray(values, dtype=np.uint64)
    if values.size == 0:
        return 0
    return vec_dot(grid_basis(int(values.size)).basis(x), values)


def grid_lde_eval(a, x: int, y: int) -> int:
    """
    Evaluate the grid LDE f of an h x w array at (x, y).

    x and y are field elements; integer arguments inside [h] or [w] land
    on the grid itself.
    """
    a = np.asarray(a, dtype=np.uint64)
    h, w = a.shape
    row_basis = grid_basis(h).basis(x % P)
    column = vec_sum(vec_mul(a, row_basis[:, None]), axis=0)
    if 0 <= y < w:
        return int(column[y])
    return vec_dot(column, grid_basis(w).basis(y % P))


def lagrange_basis(h: int, x: int) -> np.ndarray:
    """chi_i(x) for i in [h], with the denominators cached per h."""
    return grid_basis(h).basis(x)


def interpolate_coefficients(values: Sequence[int]) -> list[int]:
    """Monomial coefficients, lowest degree first, of the polynomial through (k, values[k])."""
    diffs = [int(v) % P for v in values]
    newton = []
    level = 0
    while diffs:
        newton.append(diffs[0])
        step = inv(level + 1) if len(diffs) > 1 else 1
        diffs = [mul(sub(diffs[k + 1], diffs[k]), step) for k in range(len(diffs) - 1)]
        level += 1
    coefficients = [0] * len(newton)
    falling = [1]
    for k, c in enumerate(newton):
        for e, b in enumerate(falling):
            coefficients[e] = add(coefficients[e], mul(c, b))
        shifted = [0] + falling
        falling = [sub(shifted[e], mul(k, falling[e]) if e < len(falling) else 0) for e in range(len(shifted))]
    return coefficients
