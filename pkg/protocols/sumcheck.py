"""
Generic sum-check engine and two protocols built directly on it.

Variables are bound lowest index first, matching the LSB-first cube
indexing of arithmetic.mle, so the point a sum-check ends on is directly
usable as a multilinear evaluation point. Round polynomials travel as
their values at 0, 1, ..., degree.

mrs_f2      sum over the cube of f(x)^2, f the multilinear extension of a.
bounded_f0  sum over the cube of h(f(x)), where h vanishes at 0 and is 1 on
            every other integer in [-F, F]. Valid while |a_i| <= F.
"""

import logging
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from itertools import product
from typing import Callable, Sequence

import numpy as np

from arithmetic.field import (
    add, sub, mul, inv, random_element,
    vec_add, vec_sub, vec_mul, vec_sum, vec_from_signed,
)
from arithmetic.mle import StreamingLdeState, fold, interpolate_eval, next_power_of_two
from protocols.base import ChallengeSource, Prover, RejectReason, Verdict, Verifier
from transport.channel import Endpoint, MessageTag

logging.basicConfig(
    level=logging.INFO,
    format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
)
logger = logging.getLogger(__name__)


class FrequencyBoundError(ValueError):
    """A frequency exceeds the declared bound F, so the honest prover refuses."""


# ============================================================================
# Instances
# ============================================================================

class SumcheckInstance(ABC):
    """A polynomial g in num_vars variables with per-variable degree <= degree."""

    num_vars: int
    degree: int
    field_ops: int = 0

    @abstractmethod
    def round_evaluations(self) -> np.ndarray:
        """Values at 0..degree of g with the current variable free and later ones summed."""

    @abstractmethod
    def bind(self, r: int) -> None:
        """Fix the current variable to r."""

    def claimed_sum(self) -> int:
        evals = self.round_evaluations()
        return add(int(evals[0]), int(evals[1]))


class BruteForceInstance(SumcheckInstance):
    """Sums an arbitrary evaluable g by enumeration; a reference for tests."""

    def __init__(self, oracle: Callable[[list[int]], int], num_vars: int, degree: int):
        self.oracle = oracle
        self.num_vars = num_vars
        self.degree = degree
        self.bound: list[int] = []

    def round_evaluations(self) -> np.ndarray:
        remaining = self.num_vars - len(self.bound) - 1
        evals = []
        for t in range(self.degree + 1):
            total = 0
            for suffix in product((0, 1), repeat=remaining):
                total = add(total, self.oracle(self.bound + [t] + list(suffix)))
            evals.append(total)
        return np.asarray(evals, dtype=np.uint64)

    def bind(self, r: int) -> None:
        self.bound.append(r)


class ComposedMultilinearInstance(SumcheckInstance):
    """
    g(x) = combine(T_1(x), ..., T_s(x)) for multilinear tables T_i over {0,1}^k.

    `combine` maps a list of equal-length arrays to one array and must be a
    polynomial of total degree <= degree in its arguments.
    """

    def __init__(self, tables: Sequence[np.ndarray], combine: Callable[[list[np.ndarray]], np.ndarray],
                 degree: int):
        sizes = {int(t.size) for t in tables}
        if len(sizes) != 1:
            raise ValueError(f"tables differ in size: {sorted(sizes)}")
        size = sizes.pop()
        if size & (size - 1):
            raise ValueError(f"table size {size} is not a power of two")
        self.tables = [np.asarray(t, dtype=np.uint64) for t in tables]
        self.combine = combine
        self.degree = degree
        self.num_vars = size.bit_length() - 1
        self.field_ops = 0

    def round_evaluations(self) -> np.ndarray:
        evens = [t[0::2] for t in self.tables]
        slopes = [vec_sub(t[1::2], e) for t, e in zip(self.tables, evens)]
        evals = []
        for x in range(self.degree + 1):
            restricted = [vec_add(e, vec_mul(s, np.uint64(x))) for e, s in zip(evens, slopes)]
            evals.append(vec_sum(self.combine(restricted)))
        self.field_ops += (self.degree + 1) * len(self.tables) * int(self.tables[0].size)
        return np.asarray(evals, dtype=np.uint64)

    def bind(self, r: int) -> None:
        self.tables = [fold(t, r) for t in self.tables]
        self.field_ops += len(self.tables) * int(self.tables[0].size) * 2

    def final_values(self) -> list[int]:
        return [int(t[0]) for t in self.tables]


# ============================================================================
# Prover / verifier loops
# ============================================================================

def sumcheck_prove(instance: SumcheckInstance, endpoint: Endpoint, claim: int | None = None) -> list[int]:
    """Run all rounds; returns the verifier's challenges."""
    if claim is not None:
        endpoint.send(MessageTag.CLAIM, [claim])
    challenges = []
    for _ in range(instance.num_vars):
        endpoint.send(MessageTag.ROUND, instance.round_evaluations())
        r = endpoint.receive_challenge()
        instance.bind(r)
        challenges.append(r)
    return challenges


@dataclass
class SumcheckOutcome:
    ok: bool
    claim: int
    point: list[int] = field(default_factory=list)
    reason: RejectReason | None = None
    round_index: int | None = None


def run_sumcheck_rounds(endpoint: Endpoint, claim: int, num_vars: int, degree: int,
                        challenges: ChallengeSource, round_offset: int = 0) -> SumcheckOutcome:
    """Verifier side of the rounds; leaves the final check to the caller."""
    point = []
    for j in range(num_vars):
        evals = endpoint.receive(MessageTag.ROUND)
        if evals.size != degree + 1:
            return SumcheckOutcome(False, claim, point, RejectReason.ARITY, round_offset + j)
        if add(int(evals[0]), int(evals[1])) != claim:
            return SumcheckOutcome(False, claim, point, RejectReason.ROUND_SUM, round_offset + j)
        r = challenges.draw()
        endpoint.send_challenge(r)
        claim = interpolate_eval(evals, r)
        point.append(r)
    return SumcheckOutcome(True, claim, point)


def sumcheck_verify(claim: int, degree: int, num_vars: int, final_eval: Callable[[list[int]], int],
                    endpoint: Endpoint, challenges: ChallengeSource) -> Verdict:
    outcome = run_sumcheck_rounds(endpoint, claim, num_vars, degree, challenges)
    if not outcome.ok:
        return Verdict.reject(outcome.reason, outcome.round_index)
    if final_eval(outcome.point) != outcome.claim:
        return Verdict.reject(RejectReason.FINAL_EVAL, num_vars)
    return Verdict.accept(claim)


# ============================================================================
# MRS F2
# ============================================================================

def _padded_frequencies(stream, num_vars: int) -> np.ndarray:
    return vec_from_signed(stream.frequency_vector(1 << num_vars))


def cube_vars(universe_size: int) -> int:
    return next_power_of_two(universe_size).bit_length() - 1


class MrsF2Prover(Prover):
    def __init__(self, stream):
        self.num_vars = cube_vars(stream.universe_size)
        self.values = _padded_frequencies(stream, self.num_vars)
        self.field_ops = 0

    def run(self, endpoint: Endpoint) -> None:
        instance = ComposedMultilinearInstance([self.values], lambda t: vec_mul(t[0], t[0]), degree=2)
        claim = vec_sum(vec_mul(self.values, self.values))
        sumcheck_prove(instance, endpoint, claim)
        self.field_ops = instance.field_ops + 2 * int(self.values.size)


class MrsF2Verifier(Verifier):
    """Fixes its evaluation point before the stream; the sum-check challenges are that point."""

    def __init__(self, universe_size: int, seed: int):
        super().__init__()
        self.num_vars = cube_vars(universe_size)
        self.rng = np.random.default_rng(seed)
        self.point = [random_element(self.rng) for _ in range(self.num_vars)]
        self.lde = StreamingLdeState(self.point, universe_size)
        self.space.observe(self.lde.space_words + self.num_vars)

    def stream(self, stream) -> None:
        self.lde.update_many(stream.indices, stream.deltas)

    def verify(self, endpoint: Endpoint) -> Verdict:
        claim = endpoint.receive(MessageTag.CLAIM)
        if claim.size != 1:
            return Verdict.reject(RejectReason.ARITY, 0)
        fingerprint = self.lde.value
        self.space.observe(self.lde.space_words + self.num_vars + 4)
        return sumcheck_verify(
            int(claim[0]), 2, self.num_vars,
            lambda point: mul(fingerprint, fingerprint),
            endpoint, ChallengeSource(self.rng, fixed=self.point),
        )


# ============================================================================
# Bounded-frequency F0
# ============================================================================

class IndicatorPolynomial:
    """h(v) = 1 - prod_{t=1..F} (v^2 - t^2) / ((-1)^F (F!)^2): h(0)=0, h(+-t)=1."""

    def __init__(self, bound: int):
        if bound < 1:
            raise ValueError("frequency bound must be at least 1")
        self.bound = bound
        self.degree = 2 * bound
        denominator = 1
        for t in range(1, bound + 1):
            denominator = mul(denominator, mul(t, t))
        if bound % 2:
            denominator = sub(0, denominator)
        self.scale = inv(denominator)
        self.squares = [mul(t, t) for t in range(1, bound + 1)]

    def __call__(self, v: int) -> int:
        v2 = mul(v, v)
        acc = 1
        for s in self.squares:
            acc = mul(acc, sub(v2, s))
        return sub(1, mul(acc, self.scale))

    def apply(self, values: np.ndarray) -> np.ndarray:
        v2 = vec_mul(values, values)
        acc = np.ones_like(values)
        for s in self.squares:
            acc = vec_mul(acc, vec_sub(v2, np.uint64(s)))
        return vec_sub(np.ones_like(values), vec_mul(acc, np.uint64(self.scale)))


class BoundedF0Prover(Prover):
    def __init__(self, stream, bound: int):
        self.num_vars = cube_vars(stream.universe_size)
        freq = stream.frequency_vector(1 << self.num_vars)
        if freq.size and int(np.abs(freq).max()) > bound:
            raise FrequencyBoundError(f"frequency {int(np.abs(freq).max())} exceeds bound {bound}")
        self.values = vec_from_signed(freq)
        self.h = IndicatorPolynomial(bound)
        self.field_ops = 0

    def run(self, endpoint: Endpoint) -> None:
        instance = ComposedMultilinearInstance([self.values], lambda t: self.h.apply(t[0]), degree=self.h.degree)
        claim = vec_sum(self.h.apply(self.values))
        sumcheck_prove(instance, endpoint, claim)
        self.field_ops = instance.field_ops * (self.h.bound + 1)


class BoundedF0Verifier(Verifier):
    def __init__(self, universe_size: int, bound: int, seed: int):
        super().__init__()
        self.num_vars = cube_vars(universe_size)
        self.h = IndicatorPolynomial(bound)
        self.rng = np.random.default_rng(seed)
        self.point = [random_element(self.rng) for _ in range(self.num_vars)]
        self.lde = StreamingLdeState(self.point, universe_size)
        self.space.observe(self.lde.space_words + self.num_vars)

    def stream(self, stream) -> None:
        self.lde.update_many(stream.indices, stream.deltas)

    def verify(self, endpoint: Endpoint) -> Verdict:
        claim = endpoint.receive(MessageTag.CLAIM)
        if claim.size != 1:
            return Verdict.reject(RejectReason.ARITY, 0)
        expected = self.h(self.lde.value)
        self.space.observe(self.lde.space_words + self.num_vars + self.h.degree + 3)
        return sumcheck_verify(
            int(claim[0]), self.h.degree, self.num_vars,
            lambda point: expected,
            endpoint, ChallengeSource(self.rng, fixed=self.point),
        )
