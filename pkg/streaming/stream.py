import logging
import os
from dataclasses import dataclass
from enum import Enum
from typing import Iterator

import numpy as np
import pandas as pd

# ============================================================================
# Logger Configuration
# ============================================================================

logging.basicConfig(
    level=logging.INFO,
    format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
)
logger = logging.getLogger(__name__)

STREAM_MAGIC = b"SIPS1"
_HEADER = np.dtype([('n', '<u8'), ('m', '<u8')])
_RECORD = np.dtype([('index', '<u8'), ('delta', '<i8')])

MAX_FREQUENCY = 1000
DEFAULT_ALPHABET = 4
WILDCARD_RATE = 0.25


class StreamFormatError(ValueError):
    """Malformed stream file or an update outside the universe."""


class StreamKind(str, Enum):
    UNIFORM_ITEMS = "uniform-items"
    UNIFORM_FREQUENCIES = "uniform-frequencies"
    MATRIX_VECTOR = "matrix-vector"
    TEXT_PATTERN = "text-pattern"


@dataclass(frozen=True)
class StreamUpdate:
    index: int
    delta: int


# ============================================================================
# Stream
# ============================================================================

class Stream:
    """
    An ordered sequence of (index, delta) updates over the universe [n].

    Updates are held column-wise (int64 indices and deltas) and never
    modified after construction.
    """

    def __init__(self, universe_size: int, indices, deltas):
        if universe_size < 1:
            raise StreamFormatError("universe size must be at least 1")
        indices = np.asarray(indices, dtype=np.int64).copy()
        deltas = np.asarray(deltas, dtype=np.int64).copy()
        if indices.shape != deltas.shape or indices.ndim != 1:
            raise StreamFormatError("indices and deltas must be equal-length vectors")
        if indices.size and (indices.min() < 0 or indices.max() >= universe_size):
            raise StreamFormatError(f"update index outside universe [0, {universe_size})")
        indices.setflags(write=False)
        deltas.setflags(write=False)
        self.universe_size = int(universe_size)
        self.indices = indices
        self.deltas = deltas

    @classmethod
    def from_updates(cls, universe_size: int, updates) -> "Stream":
        updates = list(updates)
        return cls(
            universe_size,
            [u.index if isinstance(u, StreamUpdate) else u[0] for u in updates],
            [u.delta if isinstance(u, StreamUpdate) else u[1] for u in updates],
        )

    @classmethod
    def from_frequencies(cls, frequencies) -> "Stream":
        """One update per non-zero entry, in index order."""
        frequencies = np.asarray(frequencies, dtype=np.int64)
        nonzero = np.flatnonzero(frequencies)
        return cls(max(1, frequencies.size), nonzero, frequencies[nonzero])

    @property
    def length(self) -> int:
        return int(self.indices.size)

    def __len__(self) -> int:
        return self.length

    def __iter__(self) -> Iterator[StreamUpdate]:
        for index, delta in zip(self.indices.tolist(), self.deltas.tolist()):
            yield StreamUpdate(index, delta)

    def __eq__(self, other) -> bool:
        return (isinstance(other, Stream)
                and self.universe_size == other.universe_size
                and np.array_equal(self.indices, other.indices)
                and np.array_equal(self.deltas, other.deltas))

    def __repr__(self) -> str:
        return f"Stream(n={self.universe_size}, m={self.length})"

    def frequency_vector(self, size: int | None = None) -> np.ndarray:
        """Aggregated a_i, optionally zero-padded to `size`."""
        size = self.universe_size if size is None else size
        if size < self.universe_size:
            raise StreamFormatError("padded size smaller than the universe")
        freq = np.zeros(size, dtype=np.int64)
        np.add.at(freq, self.indices, self.deltas)
        return freq

    def max_abs_frequency(self) -> int:
        freq = self.frequency_vector()
        return int(np.abs(freq).max()) if freq.size else 0


# ============================================================================
# Generators
# ============================================================================

def gen_stream(kind, n: int, m: int = 0, q: int = 0, seed: int = 1,
               alphabet: int = DEFAULT_ALPHABET) -> Stream:
    """
    Deterministic synthetic stream.

    uniform-items        m updates (i, +1) with i uniform in [n]
    uniform-frequencies  one update (i, a_i) per index, a_i uniform in [0, 1000]
    matrix-vector        n x n matrix A row-major at [0, n^2), then x at
                         [n^2, n^2 + n), entries uniform in [0, 1000]
    text-pattern         text of length n at [0, n), pattern of length q at
                         [n, n + q); the pattern is a text substring with
                         each symbol replaced by the wildcard n w.p. 1/4
    """
    kind = StreamKind(kind)
    if n < 1:
        raise ValueError("n must be at least 1")
    rng = np.random.default_rng(seed)
    logger.info(f"Generating {kind.value} stream (n={n}, m={m}, q={q}, seed={seed})")

    if kind is StreamKind.UNIFORM_ITEMS:
        indices = rng.integers(0, n, size=m, dtype=np.int64)
        return Stream(n, indices, np.ones(m, dtype=np.int64))

    if kind is StreamKind.UNIFORM_FREQUENCIES:
        indices = rng.permutation(n).astype(np.int64)
        deltas = rng.integers(0, MAX_FREQUENCY + 1, size=n, dtype=np.int64)
        return Stream(n, indices, deltas)

    if kind is StreamKind.MATRIX_VECTOR:
        matrix = rng.integers(0, MAX_FREQUENCY + 1, size=(n, n), dtype=np.int64)
        vector = rng.integers(0, MAX_FREQUENCY + 1, size=n, dtype=np.int64)
        return matrix_vector_stream(matrix, vector)

    if not 1 <= q <= n:
        raise ValueError(f"pattern length q={q} must lie in [1, n]")
    if not 1 <= alphabet <= n:
        raise ValueError(f"alphabet size {alphabet} must lie in [1, n]")
    text = rng.integers(0, alphabet, size=n, dtype=np.int64)
    start = int(rng.integers(0, n - q + 1))
    pattern = text[start:start + q].copy()
    pattern[rng.random(q) < WILDCARD_RATE] = n
    return text_pattern_stream(text, pattern)


def matrix_vector_stream(matrix, vector) -> Stream:
    matrix = np.asarray(matrix, dtype=np.int64)
    vector = np.asarray(vector, dtype=np.int64)
    n = vector.size
    if matrix.shape != (n, n):
        raise StreamFormatError(f"matrix shape {matrix.shape} does not match vector length {n}")
    universe = n * n + n
    return Stream(universe, np.arange(universe, dtype=np.int64),
                  np.concatenate([matrix.ravel(), vector]))


def text_pattern_stream(text, pattern) -> Stream:
    """Text symbols at [0, n), pattern at [n, n + q); the wildcard is symbol n."""
    text = np.asarray(text, dtype=np.int64)
    pattern = np.asarray(pattern, dtype=np.int64)
    n, q = text.size, pattern.size
    return Stream(n + q, np.arange(n + q, dtype=np.int64), np.concatenate([text, pattern]))


def split_matrix_vector(stream: Stream, n: int) -> tuple[np.ndarray, np.ndarray]:
    if stream.universe_size != n * n + n:
        raise StreamFormatError(f"universe {stream.universe_size} is not n^2 + n for n={n}")
    freq = stream.frequency_vector()
    return freq[:n * n].reshape(n, n), freq[n * n:]


def split_text_pattern(stream: Stream, n: int) -> tuple[np.ndarray, np.ndarray]:
    if stream.universe_size <= n:
        raise StreamFormatError(f"universe {stream.universe_size} holds no pattern after a text of length {n}")
    freq = stream.frequency_vector()
    return freq[:n], freq[n:]


# ============================================================================
# Stream Files
# ============================================================================

def write_stream_file(path: str, stream: Stream) -> None:
    """Binary SIPS1: magic, u64 n, u64 m, then m (u64 index, i64 delta) records."""
    try:
        header = np.array([(stream.universe_size, stream.length)], dtype=_HEADER)
        records = np.empty(stream.length, dtype=_RECORD)
        records['index'] = stream.indices
        records['delta'] = stream.deltas
        directory = os.path.dirname(path)
        if directory:
            os.makedirs(directory, exist_ok=True)
        with open(path, 'wb') as handle:
            handle.write(STREAM_MAGIC)
            handle.write(header.tobytes())
            handle.write(records.tobytes())
        logger.info(f"Wrote {stream.length} updates to {path}")
    except Exception as e:
        logger.error(f"Error writing stream file {path}: {str(e)}")
        raise


def read_stream_file(path: str) -> Stream:
    with open(path, 'rb') as handle:
        data = handle.read()
    if not data.startswith(STREAM_MAGIC):
        raise StreamFormatError(f"{path}: missing SIPS1 magic")
    body = data[len(STREAM_MAGIC):]
    if len(body) < _HEADER.itemsize:
        raise StreamFormatError(f"{path}: truncated header")
    header = np.frombuffer(body[:_HEADER.itemsize], dtype=_HEADER)[0]
    n, m = int(header['n']), int(header['m'])
    expected = _HEADER.itemsize + m * _RECORD.itemsize
    if len(body) != expected:
        raise StreamFormatError(f"{path}: expected {m} records, file holds {len(body) - _HEADER.itemsize} bytes")
    records = np.frombuffer(body[_HEADER.itemsize:], dtype=_RECORD)
    if m and int(records['index'].max()) >= n:
        raise StreamFormatError(f"{path}: update index outside universe [0, {n})")
    logger.info(f"Read {m} updates (n={n}) from {path}")
    return Stream(n, records['index'].astype(np.int64), records['delta'].astype(np.int64))


def write_text_stream(path: str, stream: Stream) -> None:
    frame = pd.DataFrame({'index': stream.indices, 'delta': stream.deltas})
    frame.to_csv(path, sep=' ', header=False, index=False)
    logger.info(f"Wrote {stream.length} updates to {path}")


def read_text_stream(path: str, universe_size: int | None = None) -> Stream:
    """One "i delta" pair per line; '#' starts a comment."""
    try:
        frame = pd.read_csv(path, sep=r'\s+', header=None, names=['index', 'delta'],
                            comment='#', dtype='int64', engine='python')
    except pd.errors.EmptyDataError:
        frame = pd.DataFrame({'index': [], 'delta': []}, dtype='int64')
    except ValueError as e:
        raise StreamFormatError(f"{path}: {str(e)}") from e
    if frame.isna().any().any():
        raise StreamFormatError(f"{path}: every line needs an index and a delta")
    indices = frame['index'].to_numpy(dtype=np.int64)
    if universe_size is None:
        universe_size = int(indices.max()) + 1 if indices.size else 1
    logger.info(f"Read {indices.size} updates (n={universe_size}) from {path}")
    return Stream(universe_size, indices, frame['delta'].to_numpy(dtype=np.int64))


def load_stream(path: str, universe_size: int | None = None) -> Stream:
    """Read either format, chosen by the SIPS1 magic."""
    with open(path, 'rb') as handle:
        head = handle.read(len(STREAM_MAGIC))
    if head == STREAM_MAGIC:
        stream = read_stream_file(path)
        if universe_size is not None and universe_size != stream.universe_size:
            raise StreamFormatError(f"{path}: universe {stream.universe_size} differs from requested {universe_size}")
        return stream
    return read_text_stream(path, universe_size)
