import logging
import math
from enum import Enum

import numpy as np

from streaming.stream import Stream, split_matrix_vector, split_text_pattern

logging.basicConfig(
    level=logging.INFO,
    format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
)
logger = logging.getLogger(__name__)


class EncodingError(ValueError):
    """Malformed matrix-vector or text-pattern layout."""


class Problem(str, Enum):
    F2 = "F2"
    F0 = "F0"
    MVMULT = "MVMULT"
    PMWW = "PMWW"


# ============================================================================
# Brute-force answers
# ============================================================================

def f2(stream: Stream) -> int:
    """Second frequency moment, exact."""
    freq = stream.frequency_vector()
    return sum(v * v for v in freq[freq != 0].tolist())


def f0(stream: Stream) -> int:
    """Number of indices with non-zero frequency."""
    return int(np.count_nonzero(stream.frequency_vector()))


def mvmult(matrix, vector) -> list[int]:
    """b = A x with exact integer arithmetic."""
    matrix = np.asarray(matrix, dtype=np.int64)
    vector = np.asarray(vector, dtype=np.int64)
    if matrix.ndim != 2 or matrix.shape[1] != vector.size:
        raise EncodingError(f"cannot multiply {matrix.shape} by a vector of length {vector.size}")
    x = vector.tolist()
    return [sum(a * b for a, b in zip(row, x)) for row in matrix.tolist()]


def pmww(text, pattern, wildcard: int) -> int:
    """Positions i <= n - q where every pattern symbol is a wildcard or equals text[i + j]."""
    text = np.asarray(text, dtype=np.int64)
    pattern = np.asarray(pattern, dtype=np.int64)
    n, q = text.size, pattern.size
    if q == 0 or q > n:
        raise EncodingError(f"pattern length {q} must lie in [1, {n}]")
    windows = np.lib.stride_tricks.sliding_window_view(text, q)
    matches = (windows == pattern) | (pattern == wildcard) | (windows == wildcard)
    return int(np.count_nonzero(matches.all(axis=1)))


def matrix_dimension(stream: Stream) -> int:
    """n with n^2 + n equal to the universe size."""
    n = math.isqrt(stream.universe_size)
    while n * n + n > stream.universe_size:
        n -= 1
    if n < 1 or n * n + n != stream.universe_size:
        raise EncodingError(f"universe {stream.universe_size} is not of the form n^2 + n")
    return n


def oracle(problem, stream: Stream, n: int | None = None):
    """
    Exact answer for `problem` on `stream`.

    `n` is the matrix dimension for MVMULT (inferred when omitted) and the
    text length for PMWW (required). MVMULT returns the list b = A x.
    """
    problem = Problem(problem)
    if problem is Problem.F2:
        return f2(stream)
    if problem is Problem.F0:
        return f0(stream)
    if problem is Problem.MVMULT:
        n = matrix_dimension(stream) if n is None else n
        try:
            matrix, vector = split_matrix_vector(stream, n)
        except ValueError as e:
            raise EncodingError(str(e)) from e
        return mvmult(matrix, vector)
    if n is None:
        raise EncodingError("PMWW needs the text length n")
    try:
        text, pattern = split_text_pattern(stream, n)
    except ValueError as e:
        raise EncodingError(str(e)) from e
    return pmww(text, pattern, wildcard=n)
