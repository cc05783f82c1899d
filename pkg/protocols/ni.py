"""
One-message protocols on an h x w grid.

A vector of length n <= h*w is laid out with linear index i at row
x = i mod h and column y = i div h; f(x, y) extends each column to a
polynomial of degree h-1 in x.

F2      the prover sends s(x) = sum_y f(x, y)^2 for x in [0, 2h). The verifier
        keeps f(r, y) for one random r and every column y, checks
        s(r) = sum_y f(r, y)^2 and answers sum_{x < h} s(x).
MVMULT  the prover sends b = A x, then (when h > 1) for each row i the values
        s_i(0..2h-2) of sum_y f_{A_i}(x, y) f_x(x, y). The verifier folds the
        rows with powers of a random z and checks one combined identity at r.
"""

import logging
import math
import struct
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from arithmetic.field import (
    P, inv, random_element, to_signed, vec_add, vec_mul, vec_sum, vec_dot, vec_from_signed,
    vec_group_sum, vec_powers_of, as_vector,
)
from arithmetic.mle import basis_values, grid_basis, interpolate_eval
from arithmetic.pfa import circular_convolution, fastest_transform_length, transform_cost
from protocols.base import ProofFormatError, Prover, RejectReason, Verdict, Verifier
from streaming.stream import StreamFormatError
from transport.channel import Endpoint, MessageTag

logging.basicConfig(
    level=logging.INFO,
    format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
)
logger = logging.getLogger(__name__)

PROOF_MAGIC = b"SIPNI1"
F2_PROTOCOL_ID = 1
MVMULT_PROTOCOL_ID = 2

_PREFIX = struct.Struct('<BQ')
_GRID = struct.Struct('<QQ')
_ALPHA = struct.Struct('<II')
_COUNT = struct.Struct('<Q')


# ============================================================================
# Proofs
# ============================================================================

@dataclass
class NiProof:
    protocol_id: int
    n: int
    h: int
    w: int
    payload: np.ndarray
    alpha: Fraction | None = None

    @property
    def size_bytes(self) -> int:
        return 8 * int(self.payload.size)

    def expected_length(self) -> int:
        if self.protocol_id == F2_PROTOCOL_ID:
            return 2 * self.h
        return self.n if self.h == 1 else self.n + self.n * (2 * self.h - 1)


def write_proof(path: str, proof: NiProof) -> None:
    try:
        with open(path, 'wb') as handle:
            handle.write(PROOF_MAGIC)
            handle.write(_PREFIX.pack(proof.protocol_id, proof.n))
            if proof.protocol_id == F2_PROTOCOL_ID:
                handle.write(_GRID.pack(proof.h, proof.w))
            else:
                handle.write(_ALPHA.pack(proof.alpha.numerator, proof.alpha.denominator))
            handle.write(_COUNT.pack(proof.payload.size))
            handle.write(proof.payload.astype('<u8').tobytes())
        logger.info(f"Wrote {proof.size_bytes}-byte proof to {path}")
    except Exception as e:
        logger.error(f"Error writing proof {path}: {str(e)}")
        raise


def read_proof(path: str) -> NiProof:
    with open(path, 'rb') as handle:
        data = handle.read()
    if not data.startswith(PROOF_MAGIC):
        raise ProofFormatError(f"{path}: missing SIPNI1 magic")
    offset = len(PROOF_MAGIC)
    try:
        protocol_id, n = _PREFIX.unpack_from(data, offset)
        offset += _PREFIX.size
        alpha = None
        if protocol_id == F2_PROTOCOL_ID:
            h, w = _GRID.unpack_from(data, offset)
            offset += _GRID.size
        elif protocol_id == MVMULT_PROTOCOL_ID:
            num, den = _ALPHA.unpack_from(data, offset)
            offset += _ALPHA.size
            if den == 0:
                raise ProofFormatError(f"{path}: zero denominator in alpha")
            alpha = Fraction(num, den)
            h, w = mvmult_shape(n, alpha)
        else:
            raise ProofFormatError(f"{path}: unknown protocol id {protocol_id}")
        (count,) = _COUNT.unpack_from(data, offset)
        offset += _COUNT.size
    except struct.error as e:
        raise ProofFormatError(f"{path}: truncated header") from e
    if len(data) - offset != 8 * count:
        raise ProofFormatError(f"{path}: payload holds {len(data) - offset} bytes, header says {count} elements")
    payload = np.frombuffer(data[offset:], dtype='<u8').astype(np.uint64)
    if payload.size and payload.max() >= np.uint64(P):
        raise ProofFormatError(f"{path}: non-canonical payload element")
    return NiProof(protocol_id, n, h, w, payload, alpha)


# ============================================================================
# Grid helpers
# ============================================================================

def default_grid(n: int) -> tuple[int, int]:
    """h = w = ceil(sqrt(n))."""
    h = max(1, math.isqrt(n - 1) + 1 if n > 1 else 1)
    return h, max(1, -(-n // h))


def to_grid(values: np.ndarray, h: int, w: int) -> np.ndarray:
    """grid[x, y] = values[y*h + x], zero-padded."""
    if values.size > h * w:
        raise ValueError(f"{values.size} values do not fit a {h}x{w} grid")
    padded = np.zeros(h * w, dtype=np.uint64)
    padded[:values.size] = values
    return padded.reshape(w, h).T.copy()


def extend_rows_naive(grid: np.ndarray) -> np.ndarray:
    """f(j, y) for j in [h, 2h), one Lagrange combination per row."""
    h, w = grid.shape
    basis = grid_basis(h)
    rows = np.zeros((h, w), dtype=np.uint64)
    for k, j in enumerate(range(h, 2 * h)):
        rows[k] = vec_sum(vec_mul(grid, basis.basis(j)[:, None]), axis=0)
    return rows


def convolution_kernel(h: int, length: int) -> np.ndarray:
    """g[t] = 1/t for t in [1, 2h), zero elsewhere."""
    kernel = np.zeros(length, dtype=np.uint64)
    for t in range(1, 2 * h):
        kernel[t] = inv(t)
    return kernel


def extend_rows_fft(grid: np.ndarray, jobs: int = 1) -> np.ndarray:
    """
    f(j, y) = H(j) * sum_i b_y(i) g(j - i) with H(j) = prod_{k<h} (j - k),
    b_y(i) = a[i, y] / D_i and g(t) = 1/t, as a circular convolution of
    length N >= 2h. For j >= h every j - i is positive, so nothing wraps.
    """
    h, w = grid.shape
    basis = grid_basis(h)
    plan = fastest_transform_length(2 * h)
    scaled = vec_mul(grid, np.asarray(basis.inv_denominators, dtype=np.uint64)[:, None])
    kernel = convolution_kernel(h, plan.length)
    vanishing = np.asarray([basis.vanishing(j) for j in range(h, 2 * h)], dtype=np.uint64)

    def extend(columns: np.ndarray) -> np.ndarray:
        conv = circular_convolution(columns, kernel, plan)
        return vec_mul(conv[h:2 * h], vanishing[:, None])

    if jobs <= 1 or w < 2:
        return extend(scaled)
    chunks = np.array_split(np.arange(w), min(jobs, w))
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        parts = list(pool.map(lambda idx: extend(scaled[:, idx]), chunks))
    return np.concatenate(parts, axis=1)


# ============================================================================
# F2
# ============================================================================

def f2_prove(stream, h: int, w: int, mode: str = 'fft', jobs: int = 1) -> NiProof:
    """payload[x] = sum_y f(x, y)^2 for x in [0, 2h)."""
    if h * w < stream.universe_size:
        raise ValueError(f"grid {h}x{w} is smaller than the universe {stream.universe_size}")
    grid = to_grid(vec_from_signed(stream.frequency_vector()), h, w)
    if mode == 'naive':
        extended = extend_rows_naive(grid)
    elif mode == 'fft':
        extended = extend_rows_fft(grid, jobs)
    else:
        raise ValueError(f"unknown prover mode {mode!r}")
    payload = np.concatenate([
        vec_sum(vec_mul(grid, grid), axis=1),
        vec_sum(vec_mul(extended, extended), axis=1),
    ])
    return NiProof(F2_PROTOCOL_ID, stream.universe_size, h, w, payload)


def f2_prover_ops(h: int, w: int, mode: str = 'fft') -> int:
    """Field operations f2_prove spends on an h x w grid."""
    squares = 4 * h * w
    if mode == 'naive':
        return 2 * h * h * w + squares
    if mode != 'fft':
        raise ValueError(f"unknown prover mode {mode!r}")
    length = fastest_transform_length(2 * h).length
    # w forward transforms, one for the kernel, w inverse, then the pointwise products
    return (2 * w + 1) * transform_cost(length) + length * w + squares


class F2NiProver(Prover):
    def __init__(self, stream, h: int, w: int, mode: str = 'fft', jobs: int = 1):
        self.stream = stream
        self.h, self.w = h, w
        self.mode = mode
        self.jobs = jobs
        self.proof: NiProof | None = None
        self.field_ops = 0

    def run(self, endpoint: Endpoint) -> None:
        self.proof = f2_prove(self.stream, self.h, self.w, self.mode, self.jobs)
        self.field_ops = f2_prover_ops(self.h, self.w, self.mode)
        endpoint.send(MessageTag.PROOF, self.proof.payload)


class F2NiVerifier(Verifier):
    """
    Holds r and the w column evaluations f(r, y). The basis values chi_x(r)
    an update batch needs are rebuilt for that batch and dropped after it.
    """

    def __init__(self, n: int, h: int, w: int, seed: int):
        super().__init__()
        if h * w < n:
            raise ValueError(f"grid {h}x{w} is smaller than the universe {n}")
        self.n, self.h, self.w = n, h, w
        self.r = random_element(np.random.default_rng(seed))
        self.rows = np.zeros(w, dtype=np.uint64)
        self.space.observe(self.words)

    @property
    def words(self) -> int:
        # r, the columns and the two sums the check folds
        return self.w + 3

    def stream(self, stream) -> None:
        indices = stream.indices
        if indices.size and indices.max() >= self.n:
            raise StreamFormatError(f"update index outside universe [0, {self.n})")
        chi = basis_values(self.h, self.r, indices % self.h)
        contributions = vec_mul(chi, vec_from_signed(stream.deltas))
        self.rows = vec_add(self.rows, vec_group_sum(contributions, indices // self.h, self.w))

    def check(self, payload: np.ndarray) -> Verdict:
        payload = as_vector(payload)
        if payload.size != 2 * self.h:
            return Verdict.reject(RejectReason.ARITY, 0)
        if interpolate_eval(payload, self.r) != vec_dot(self.rows, self.rows):
            return Verdict.reject(RejectReason.CHECK_FAILED, 0)
        return Verdict.accept(vec_sum(payload[:self.h]))

    def verify(self, endpoint: Endpoint) -> Verdict:
        return self.check(endpoint.receive(MessageTag.PROOF))

    def save_state(self, path: str) -> None:
        """Persist the check information so later proofs need no fresh randomness."""
        np.savez(path, r=np.uint64(self.r), rows=self.rows, shape=np.array([self.n, self.h, self.w]))

    @classmethod
    def load_state(cls, path: str) -> "F2NiVerifier":
        with np.load(path) as data:
            n, h, w = (int(v) for v in data['shape'])
            verifier = cls.__new__(cls)
            Verifier.__init__(verifier)
            verifier.n, verifier.h, verifier.w = n, h, w
            verifier.r = int(data['r'])
            verifier.rows = data['rows'].astype(np.uint64)
            verifier.space.observe(verifier.words)
        return verifier


# ============================================================================
# Matrix-vector multiplication
# ============================================================================

def parse_alpha(text) -> Fraction:
    alpha = Fraction(str(text)).limit_denominator(1 << 16)
    if not 0 <= alpha <= 1:
        raise ValueError(f"alpha {alpha} must lie in [0, 1]")
    return alpha


def mvmult_shape(n: int, alpha: Fraction) -> tuple[int, int]:
    """h = round(n^alpha) clamped to [1, n], w = ceil(n / h)."""
    h = min(n, max(1, round(n ** float(alpha))))
    return h, -(-n // h)


def _row_grids(matrix: np.ndarray, h: int, w: int) -> np.ndarray:
    n = matrix.shape[0]
    padded = np.zeros((n, h * w), dtype=np.uint64)
    padded[:, :matrix.shape[1]] = matrix
    return padded.reshape(n, w, h).transpose(0, 2, 1)


def mvmult_prove(matrix, vector, alpha: Fraction) -> NiProof:
    matrix = as_vector(np.asarray(matrix, dtype=np.int64))
    vector = as_vector(np.asarray(vector, dtype=np.int64))
    n = vector.size
    if matrix.shape != (n, n):
        raise ValueError(f"matrix shape {matrix.shape} does not match vector length {n}")
    h, w = mvmult_shape(n, alpha)
    b = vec_sum(vec_mul(matrix, vector[None, :]), axis=1)
    if h == 1:
        return NiProof(MVMULT_PROTOCOL_ID, n, h, w, b, alpha)
    row_grids = _row_grids(matrix, h, w)
    vector_grid = to_grid(vector, h, w)
    blocks = np.zeros((n, 2 * h - 1), dtype=np.uint64)
    basis = grid_basis(h)
    for x in range(2 * h - 1):
        if x < h:
            rows, vrow = row_grids[:, x, :], vector_grid[x]
        else:
            chi = basis.basis(x)
            rows = vec_sum(vec_mul(row_grids, chi[None, :, None]), axis=1)
            vrow = vec_sum(vec_mul(vector_grid, chi[:, None]), axis=0)
        blocks[:, x] = vec_sum(vec_mul(rows, vrow[None, :]), axis=1)
    return NiProof(MVMULT_PROTOCOL_ID, n, h, w, np.concatenate([b, blocks.ravel()]), alpha)


class MvmultNiProver(Prover):
    def __init__(self, matrix, vector, alpha: Fraction):
        self.matrix, self.vector, self.alpha = matrix, vector, alpha
        self.proof: NiProof | None = None
        self.field_ops = 0

    def run(self, endpoint: Endpoint) -> None:
        self.proof = mvmult_prove(self.matrix, self.vector, self.alpha)
        n = self.proof.n
        self.field_ops = 2 * n * n * (2 * self.proof.h - 1) + n * n
        endpoint.send(MessageTag.PROOF, self.proof.payload)


class MvmultNiVerifier(Verifier):
    """
    Keeps FA(y) = sum_i z^i f_{A_i}(r, y) for every column y and one running
    total T = sum_y FA(y) f_x(r, y). Matrix updates must arrive before
    vector updates.
    """

    def __init__(self, n: int, alpha: Fraction, seed: int):
        super().__init__()
        self.n = n
        self.alpha = alpha
        self.h, self.w = mvmult_shape(n, alpha)
        rng = np.random.default_rng(seed)
        self.z = random_element(rng)
        self.r = random_element(rng)
        self.folded = np.zeros(self.w, dtype=np.uint64)
        self.total = 0
        self.seen_vector = False
        self.space.observe(self.words)

    @property
    def words(self) -> int:
        return self.w + 4

    def stream(self, stream) -> None:
        n, h = self.n, self.h
        if stream.universe_size != n * n + n:
            raise StreamFormatError(f"universe {stream.universe_size} is not n^2 + n for n={n}")
        indices = stream.indices
        deltas = vec_from_signed(stream.deltas)
        is_vector = indices >= n * n
        if is_vector.any():
            first = int(np.argmax(is_vector))
            if self.seen_vector and not is_vector.all() or not is_vector[first:].all():
                raise StreamFormatError("matrix entries must precede the vector")
        elif self.seen_vector and indices.size:
            raise StreamFormatError("matrix entries must precede the vector")

        rows, cols = indices[~is_vector] // n, indices[~is_vector] % n
        weights = vec_mul(vec_powers_of(self.z, rows), basis_values(h, self.r, cols % h))
        self.folded = vec_add(self.folded, vec_group_sum(vec_mul(weights, deltas[~is_vector]), cols // h, self.w))

        cols = indices[is_vector] - n * n
        if cols.size:
            self.seen_vector = True
            terms = vec_mul(vec_mul(deltas[is_vector], basis_values(h, self.r, cols % h)), self.folded[cols // h])
            self.total = (self.total + vec_sum(terms)) % P

    def check(self, payload: np.ndarray) -> Verdict:
        payload = as_vector(payload)
        n, h = self.n, self.h
        expected = n if h == 1 else n + n * (2 * h - 1)
        if payload.size != expected:
            return Verdict.reject(RejectReason.ARITY, 0)
        b = payload[:n]
        z_powers = vec_powers_of(self.z, np.arange(n))
        if h == 1:
            combined = vec_dot(z_powers, b)
        else:
            blocks = payload[n:].reshape(n, 2 * h - 1)
            if not np.array_equal(vec_sum(blocks[:, :h], axis=1), b):
                return Verdict.reject(RejectReason.CHECK_FAILED, 0)
            at_r = vec_sum(vec_mul(blocks, grid_basis(2 * h - 1).basis(self.r)[None, :]), axis=1)
            combined = vec_dot(z_powers, at_r)
        if combined != self.total:
            return Verdict.reject(RejectReason.CHECK_FAILED, 0)
        return Verdict.accept([to_signed(int(v)) for v in b])

    def verify(self, endpoint: Endpoint) -> Verdict:
        return self.check(endpoint.receive(MessageTag.PROOF))
