"""
Arithmetic in the Mersenne prime field F_p with p = 2^61 - 1.

Scalars are plain Python ints holding the canonical residue in [0, p).
Vectors are numpy uint64 arrays of canonical residues; every vector helper
returns canonical values, so arrays can be compared and serialized directly.

Reduction never divides: since 2^61 = 1 (mod p), a wide value folds as
(x & p) + (x >> 61) until it fits in 61 bits.
"""

import logging
from typing import Iterable

import numpy as np

logging.basicConfig(
    level=logging.INFO,
    format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
)
logger = logging.getLogger(__name__)

# ============================================================================
# Constants
# ============================================================================

P = (1 << 61) - 1
ELEMENT_BYTES = 8

# p - 1 = 2 * 3^2 * 5^2 * 7 * 11 * 13 * 31 * 41 * 61 * 151 * 331 * 1321
P_MINUS_ONE_FACTORS = {
    2: 1, 3: 2, 5: 2, 7: 1, 11: 1, 13: 1,
    31: 1, 41: 1, 61: 1, 151: 1, 331: 1, 1321: 1,
}

# Smallest generator of F_p^* found by trial over the factorization above.
GENERATOR = 37

_P64 = np.uint64(P)
_ZERO64 = np.uint64(0)
_MASK32 = np.uint64(0xFFFFFFFF)
_MASK29 = np.uint64((1 << 29) - 1)
_SHIFT3 = np.uint64(3)
_SHIFT29 = np.uint64(29)
_SHIFT32 = np.uint64(32)
_SHIFT61 = np.uint64(61)


class FieldError(ValueError):
    """Raised for zero inversion and non-canonical encodings."""


# ============================================================================
# Scalar Arithmetic
# ============================================================================

def reduce(x: int) -> int:
    """Reduce a non-negative integer of any width to its canonical residue."""
    while x >> 61:
        x = (x & P) + (x >> 61)
    return 0 if x == P else x


def from_int(x: int) -> int:
    """Map a signed integer into F_p."""
    if x >= 0:
        return reduce(x)
    return neg(reduce(-x))


def to_signed(a: int) -> int:
    """Centered representative in (-p/2, p/2]."""
    return a - P if a > P // 2 else a


def add(a: int, b: int) -> int:
    s = a + b
    return s - P if s >= P else s


def sub(a: int, b: int) -> int:
    return a - b if a >= b else a + P - b


def neg(a: int) -> int:
    return P - a if a else 0


def mul(a: int, b: int) -> int:
    return reduce(a * b)


def power(a: int, e: int) -> int:
    """Square-and-multiply; power(0, 0) == 1."""
    if e < 0:
        raise FieldError("negative exponent")
    result = 1
    base = a
    while e:
        if e & 1:
            result = reduce(result * base)
        base = reduce(base * base)
        e >>= 1
    return result


def inv(a: int) -> int:
    if a == 0:
        raise FieldError("no inverse of zero")
    return power(a, P - 2)


def inv_euclid(a: int) -> int:
    """Extended-Euclid inverse, kept as an independent check on inv()."""
    if a % P == 0:
        raise FieldError("no inverse of zero")
    old_r, r = a % P, P
    old_s, s = 1, 0
    while r:
        quotient = old_r // r
        old_r, r = r, old_r - quotient * r
        old_s, s = s, old_s - quotient * s
    return old_s % P


def div(a: int, b: int) -> int:
    return mul(a, inv(b))


def batch_inverse(values: Iterable[int]) -> list[int]:
    """Montgomery's trick: one inversion for a whole list of non-zero values."""
    values = list(values)
    prefix = [1] * (len(values) + 1)
    for i, v in enumerate(values):
        if v == 0:
            raise FieldError("no inverse of zero")
        prefix[i + 1] = mul(prefix[i], v)
    acc = inv(prefix[-1])
    out = [0] * len(values)
    for i in range(len(values) - 1, -1, -1):
        out[i] = mul(acc, prefix[i])
        acc = mul(acc, values[i])
    return out


# ============================================================================
# Serialization
# ============================================================================

def encode(a: int) -> bytes:
    return a.to_bytes(ELEMENT_BYTES, 'little')


def decode(data: bytes) -> int:
    if len(data) != ELEMENT_BYTES:
        raise FieldError(f"field element needs {ELEMENT_BYTES} bytes, got {len(data)}")
    value = int.from_bytes(data, 'little')
    if value >= P:
        raise FieldError(f"non-canonical field element {value}")
    return value


def encode_many(values) -> bytes:
    return np.asarray(values, dtype=np.uint64).astype('<u8').tobytes()


def decode_many(data: bytes) -> np.ndarray:
    if len(data) % ELEMENT_BYTES:
        raise FieldError(f"payload of {len(data)} bytes is not a whole number of elements")
    values = np.frombuffer(data, dtype='<u8').astype(np.uint64)
    if values.size and values.max() >= _P64:
        raise FieldError("non-canonical field element in payload")
    return values


# ============================================================================
# Randomness
# ============================================================================

def random_element(rng: np.random.Generator) -> int:
    return int(rng.integers(0, P, dtype=np.uint64))


def random_vector(rng: np.random.Generator, size) -> np.ndarray:
    return rng.integers(0, P, size=size, dtype=np.uint64)


# ============================================================================
# Vector Arithmetic (numpy uint64)
# ============================================================================

def as_vector(values) -> np.ndarray:
    """Canonical uint64 array from Python ints (any size) or an array."""
    if isinstance(values, np.ndarray) and values.dtype == np.uint64:
        return values
    if isinstance(values, np.ndarray) and values.dtype.kind in 'iu':
        return vec_from_signed(values)
    return np.array([from_int(int(v)) for v in np.ravel(values)],
                    dtype=np.uint64).reshape(np.shape(values))


def vec_reduce(t: np.ndarray) -> np.ndarray:
    """Canonical residues of arbitrary uint64 values."""
    t = (t & _P64) + (t >> _SHIFT61)
    return np.where(t >= _P64, t - _P64, t)


def vec_add(a, b) -> np.ndarray:
    s = np.asarray(a, dtype=np.uint64) + np.asarray(b, dtype=np.uint64)
    return np.where(s >= _P64, s - _P64, s)


def vec_sub(a, b) -> np.ndarray:
    a = np.asarray(a, dtype=np.uint64)
    b = np.asarray(b, dtype=np.uint64)
    return np.where(a >= b, a - b, a + (_P64 - b))


def vec_neg(a) -> np.ndarray:
    a = np.asarray(a, dtype=np.uint64)
    return np.where(a == _ZERO64, a, _P64 - a)


def vec_mul(a, b) -> np.ndarray:
    """Elementwise product via 32-bit limbs; inputs must be canonical."""
    a = np.asarray(a, dtype=np.uint64)
    b = np.asarray(b, dtype=np.uint64)
    a_lo, a_hi = a & _MASK32, a >> _SHIFT32
    b_lo, b_hi = b & _MASK32, b >> _SHIFT32
    lo = a_lo * b_lo
    mid = a_hi * b_lo + a_lo * b_hi
    hi = a_hi * b_hi
    # hi * 2^64 = 8 hi, mid * 2^32 = (mid >> 29) + ((mid mod 2^29) << 32)
    t = ((hi << _SHIFT3)
         + (mid >> _SHIFT29)
         + ((mid & _MASK29) << _SHIFT32)
         + (lo & _P64)
         + (lo >> _SHIFT61))
    return vec_reduce(t)


def vec_scale(a, c: int) -> np.ndarray:
    return vec_mul(a, np.uint64(c))


def vec_power(a, e: int) -> np.ndarray:
    a = np.asarray(a, dtype=np.uint64)
    result = np.ones_like(a)
    base = a
    while e:
        if e & 1:
            result = vec_mul(result, base)
        base = vec_mul(base, base)
        e >>= 1
    return result


def vec_powers_of(base: int, exponents) -> np.ndarray:
    """base^e for every entry of a non-negative integer array."""
    exponents = np.asarray(exponents, dtype=np.int64)
    result = np.ones(exponents.shape, dtype=np.uint64)
    square = np.uint64(base)
    remaining = exponents.copy()
    while np.any(remaining):
        odd = (remaining & 1) == 1
        result = np.where(odd, vec_mul(result, square), result)
        square = vec_mul(square, square)
        remaining >>= 1
    return result


def vec_inv(a) -> np.ndarray:
    a = np.asarray(a, dtype=np.uint64)
    if np.any(a == _ZERO64):
        raise FieldError("no inverse of zero")
    return vec_power(a, P - 2)


def vec_from_signed(x) -> np.ndarray:
    """Field images of signed 64-bit integers."""
    x = np.asarray(x)
    if x.dtype.kind == 'u':
        return vec_reduce(x.astype(np.uint64))
    x = x.astype(np.int64)
    magnitude = vec_reduce(np.abs(x).astype(np.uint64))
    return np.where(x < 0, vec_neg(magnitude), magnitude)


def vec_sum(a, axis=None):
    """Field sum; returns an int for axis=None, else an array."""
    a = np.asarray(a, dtype=np.uint64)
    lo = np.sum(a & _MASK32, axis=axis, dtype=np.uint64)
    hi = np.sum(a >> _SHIFT32, axis=axis, dtype=np.uint64)
    if axis is None:
        return reduce((int(hi) << 32) + int(lo))
    shifted = vec_mul(vec_reduce(hi), np.uint64(1 << 32))
    return vec_add(shifted, vec_reduce(lo))


def vec_dot(a, b) -> int:
    return vec_sum(vec_mul(a, b))


def vec_group_sum(values, groups, size: int) -> np.ndarray:
    """out[g] = sum of values[k] with groups[k] == g, for g in [0, size)."""
    values = np.asarray(values, dtype=np.uint64)
    groups = np.asarray(groups, dtype=np.int64)
    lo = np.zeros(size, dtype=np.uint64)
    hi = np.zeros(size, dtype=np.uint64)
    np.add.at(lo, groups, values & _MASK32)
    np.add.at(hi, groups, values >> _SHIFT32)
    shifted = vec_mul(vec_reduce(hi), np.uint64(1 << 32))
    return vec_add(shifted, vec_reduce(lo))


def vec_prod(a) -> int:
    result = 1
    for v in np.asarray(a, dtype=np.uint64).ravel():
        result = mul(result, int(v))
    return result


# ============================================================================
# Self-check
# ============================================================================

def _check_generator() -> None:
    for q in P_MINUS_ONE_FACTORS:
        if power(GENERATOR, (P - 1) // q) == 1:
            raise FieldError(f"{GENERATOR} is not a generator of F_p^* (fails at {q})")
    product = 1
    for q, e in P_MINUS_ONE_FACTORS.items():
        product *= q ** e
    if product != P - 1:
        raise FieldError("factorization of p - 1 is incomplete")


_check_generator()
