"""
Number-theoretic DFT over F_p by the Prime Factor (Good-Thomas) Algorithm.

Every transform length N is a divisor of p - 1, split into pairwise coprime
prime powers N = N_1 * ... * N_k. With M_i = N / N_i the input is permuted by
n = sum n_i M_i (mod N) and the output by k = sum k_i M_i (M_i^-1 mod N_i)
(mod N); the N-point DFT then becomes k independent small DFTs with roots
w_N^(M_i). Each small DFT is a naive O(N_i^2) contraction, so one transform
costs O((N_1 + ... + N_k) N) field operations.

Transforms act along axis 0 of the data, so a (N, w) array transforms its
w columns in one call.
"""

import bisect
import logging
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from arithmetic.field import (
    P, P_MINUS_ONE_FACTORS, GENERATOR, power, inv, mul,
    vec_add, vec_mul, as_vector,
)

logging.basicConfig(
    level=logging.INFO,
    format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
)
logger = logging.getLogger(__name__)


class TransformLengthError(ValueError):
    """Requested length exceeds every divisor of p - 1."""


def _enumerate_divisors() -> list[int]:
    divisors = [1]
    for q, e in P_MINUS_ONE_FACTORS.items():
        divisors = [d * q ** k for d in divisors for k in range(e + 1)]
    return sorted(divisors)


DIVISORS = _enumerate_divisors()

# Index maps are int64 arrays of length N, so lengths stay below 2^32.
MAX_TRANSFORM_LENGTH = max(d for d in DIVISORS if d < 1 << 32)


def factor_length(n: int) -> tuple[int, ...]:
    """Pairwise coprime prime-power factors of a divisor of p - 1."""
    factors = []
    for q in P_MINUS_ONE_FACTORS:
        part = 1
        while n % q == 0:
            n //= q
            part *= q
        if part > 1:
            factors.append(part)
    if n != 1:
        raise TransformLengthError("length does not divide p - 1")
    return tuple(factors)


@dataclass(frozen=True)
class TransformPlan:
    """Precomputed tables for one transform length."""

    length: int
    factors: tuple[int, ...]
    omega: int
    input_map: np.ndarray
    output_map: np.ndarray
    forward_tables: tuple[np.ndarray, ...]
    inverse_tables: tuple[np.ndarray, ...]
    inverse_length: int

    @property
    def operation_count(self) -> int:
        """Field multiplications per transformed column."""
        return transform_cost(self.length)


def _dft_matrix(size: int, root: int) -> np.ndarray:
    powers = [1] * size
    for k in range(1, size):
        powers[k] = mul(powers[k - 1], root)
    exponents = np.outer(np.arange(size), np.arange(size)) % size
    return np.asarray(powers, dtype=np.uint64)[exponents]


def _check_root(omega: int, length: int) -> None:
    if power(omega, length) != 1:
        raise TransformLengthError(f"root has wrong order for N={length}")
    for q in P_MINUS_ONE_FACTORS:
        if length % q == 0 and power(omega, length // q) == 1:
            raise TransformLengthError(f"root is not primitive for N={length}")


@lru_cache(maxsize=32)
def transform_plan(length: int) -> TransformPlan:
    """Build (and cache) the plan for a divisor of p - 1."""
    if (P - 1) % length:
        raise TransformLengthError(f"{length} does not divide p - 1")
    factors = factor_length(length)
    omega = power(GENERATOR, (P - 1) // length)
    _check_root(omega, length)

    forward, inverse = [], []
    input_map = np.zeros([f for f in factors], dtype=np.int64)
    output_map = np.zeros([f for f in factors], dtype=np.int64)
    for axis, size in enumerate(factors):
        cofactor = length // size
        sub_root = power(omega, cofactor)
        forward.append(_dft_matrix(size, sub_root))
        inverse.append(_dft_matrix(size, inv(sub_root)))
        shape = [1] * len(factors)
        shape[axis] = size
        steps = np.arange(size, dtype=np.int64).reshape(shape)
        input_map = input_map + steps * cofactor
        crt = cofactor * pow(cofactor, -1, size)
        output_map = output_map + steps * crt
    logger.debug(f"Built PFA plan N={length} factors={factors}")
    return TransformPlan(
        length=length,
        factors=factors,
        omega=omega,
        input_map=(input_map % length).ravel() if factors else np.zeros(1, dtype=np.int64),
        output_map=(output_map % length).ravel() if factors else np.zeros(1, dtype=np.int64),
        forward_tables=tuple(forward),
        inverse_tables=tuple(inverse),
        inverse_length=inv(length),
    )


def _smallest_divisor_at_least(min_len: int) -> int:
    if min_len < 1:
        raise ValueError("transform length must be at least 1")
    if min_len > MAX_TRANSFORM_LENGTH:
        raise TransformLengthError(f"no divisor of p - 1 is >= {min_len}")
    return DIVISORS[bisect.bisect_left(DIVISORS, min_len)]


def choose_transform_length(min_len: int) -> TransformPlan:
    """Plan for the smallest divisor N of p - 1 with N >= min_len."""
    return transform_plan(_smallest_divisor_at_least(min_len))


def transform_cost(length: int) -> int:
    """Field multiplications per transformed column, (N_1 + ... + N_k) N."""
    return sum(factor_length(length)) * length


def fastest_transform_length(min_len: int) -> TransformPlan:
    """
    Plan for the divisor N in [min_len, 2 min_len] with the lowest
    transform_cost; 512 gets 546 = 2*3*7*13 rather than 525 = 3*25*7.
    """
    smallest = _smallest_divisor_at_least(min_len)
    lo = bisect.bisect_left(DIVISORS, smallest)
    hi = bisect.bisect_right(DIVISORS, min(max(2 * min_len, smallest), MAX_TRANSFORM_LENGTH))
    best = min(DIVISORS[lo:hi], key=lambda d: (transform_cost(d), d))
    return transform_plan(best)


def _contract_axis(grid: np.ndarray, matrix: np.ndarray, axis: int) -> np.ndarray:
    """out[k] = sum_n matrix[k, n] * grid[n] along one axis."""
    moved = np.moveaxis(grid, axis, 0)
    size = moved.shape[0]
    tail = (1,) * (moved.ndim - 1)
    out = np.zeros_like(moved)
    for n in range(size):
        out = vec_add(out, vec_mul(matrix[:, n].reshape((size,) + tail), moved[n][None, ...]))
    return np.moveaxis(out, 0, axis)


def dft(plan: TransformPlan, data, inverse: bool = False) -> np.ndarray:
    """Forward (or inverse, including the 1/N scaling) transform along axis 0."""
    data = as_vector(data)
    if data.shape[0] != plan.length:
        raise ValueError(f"data length {data.shape[0]} does not match plan length {plan.length}")
    if not plan.factors:
        return data.copy()
    batch = data.shape[1:]
    grid = data[plan.input_map].reshape(plan.factors + batch)
    tables = plan.inverse_tables if inverse else plan.forward_tables
    for axis, matrix in enumerate(tables):
        grid = _contract_axis(grid, matrix, axis)
    out = np.empty_like(data)
    out[plan.output_map] = grid.reshape((plan.length,) + batch)
    if inverse:
        out = vec_mul(out, np.uint64(plan.inverse_length))
    return out


def _pad(values, length: int) -> np.ndarray:
    values = as_vector(values)
    if values.shape[0] > length:
        raise ValueError(f"input of length {values.shape[0]} exceeds transform length {length}")
    padded = np.zeros((length,) + values.shape[1:], dtype=np.uint64)
    padded[:values.shape[0]] = values
    return padded


def circular_convolution(a, b, plan: TransformPlan | None = None) -> np.ndarray:
    """
    c_j = sum_i a_i b_((j - i) mod N), both inputs zero-padded to N.

    Either input may carry trailing batch axes; they broadcast against each other.
    """
    a = as_vector(a)
    b = as_vector(b)
    if plan is None:
        plan = choose_transform_length(max(a.shape[0], b.shape[0]))
    fa = dft(plan, _pad(a, plan.length))
    fb = dft(plan, _pad(b, plan.length))
    if fa.ndim > fb.ndim:
        fb = fb.reshape(fb.shape + (1,) * (fa.ndim - fb.ndim))
    elif fb.ndim > fa.ndim:
        fa = fa.reshape(fa.shape + (1,) * (fb.ndim - fa.ndim))
    return dft(plan, vec_mul(fa, fb), inverse=True)


def padding_ratio(min_len: int) -> float:
    return choose_transform_length(min_len).length / min_len


def divisor_gaps(low: int, high: int) -> list[tuple[int, int]]:
    """(worst requested length, chosen N) for each gap between divisors in [low, high]."""
    gaps = []
    start = bisect.bisect_left(DIVISORS, low)
    previous = low - 1
    for d in DIVISORS[start:]:
        if previous + 1 <= high:
            gaps.append((previous + 1, d))
        if d >= high:
            break
        previous = d
    return gaps
