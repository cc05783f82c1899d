import numpy as np
import pytest

from arithmetic.field import P, add, from_int, mul, vec_mul
from protocols.base import ChallengeSource, Prover, RejectReason, Verifier
from protocols.sumcheck import (
    BoundedF0Prover, BoundedF0Verifier, BruteForceInstance, ComposedMultilinearInstance,
    FrequencyBoundError, IndicatorPolynomial, MrsF2Prover, MrsF2Verifier, cube_vars,
    sumcheck_prove, sumcheck_verify,
)
from streaming.oracles import f0, f2
from streaming.stream import Stream, gen_stream
from tests.conftest import run_pair


def g(x):
    """x0 x1 + 3 x2^2 + 5, degree 2 in x2."""
    return add(add(mul(x[0], x[1]), mul(3, mul(x[2], x[2]))), 5)


class BruteProver(Prover):
    def __init__(self, claim):
        self.claim = claim

    def run(self, endpoint):
        sumcheck_prove(BruteForceInstance(g, 3, 2), endpoint, self.claim)


class BruteVerifier(Verifier):
    def __init__(self, seed):
        super().__init__()
        self.rng = np.random.default_rng(seed)

    def stream(self, stream):
        pass

    def verify(self, endpoint):
        claim = int(endpoint.receive()[0])
        return sumcheck_verify(claim, 2, 3, g, endpoint, ChallengeSource(self.rng))


class TestEngine:
    def test_brute_force_sum_checks_out(self):
        total = sum(g([a, b, c]) for a in (0, 1) for b in (0, 1) for c in (0, 1)) % P
        assert total == 2 + 12 + 40
        result, _ = run_pair(BruteProver(total), BruteVerifier(1), Stream(1, [], []))
        assert result.verdict.accepted
        assert result.verdict.answer == total

    def test_wrong_claim_is_caught_in_the_first_round(self):
        result, _ = run_pair(BruteProver(55), BruteVerifier(1), Stream(1, [], []))
        assert not result.verdict.accepted
        assert result.verdict.reason is RejectReason.ROUND_SUM
        assert result.verdict.round_index == 0

    def test_composed_instance_matches_brute_force(self, rng):
        table = rng.integers(0, 1000, size=8).astype(np.uint64)
        composed = ComposedMultilinearInstance([table], lambda t: vec_mul(t[0], t[0]), degree=2)
        assert composed.claimed_sum() == sum(int(v) ** 2 for v in table) % P
        evals = composed.round_evaluations()
        assert evals.size == 3
        composed.bind(7)
        assert composed.num_vars == 3 and composed.tables[0].size == 4
        assert composed.field_ops > 0

    def test_composed_instance_checks_tables(self):
        with pytest.raises(ValueError):
            ComposedMultilinearInstance([np.zeros(4, np.uint64), np.zeros(8, np.uint64)], lambda t: t[0], 1)
        with pytest.raises(ValueError):
            ComposedMultilinearInstance([np.zeros(6, np.uint64)], lambda t: t[0], 1)

    def test_fixed_challenges_come_first(self, rng):
        source = ChallengeSource(rng, fixed=[4, 5])
        assert [source.draw(), source.draw()] == [4, 5]
        assert 0 <= source.draw() < P


class TestMrsF2:
    @pytest.mark.parametrize("n", [1, 2, 5, 64, 1000])
    def test_completeness(self, n):
        stream = gen_stream('uniform-frequencies', n, seed=n)
        result, _ = run_pair(MrsF2Prover(stream), MrsF2Verifier(n, seed=3), stream)
        assert result.verdict.accepted
        assert result.verdict.answer == f2(stream)
        assert result.stats.rounds == max(cube_vars(n), 1)

    def test_turnstile_stream(self):
        stream = Stream(8, [1, 1, 3, 7, 3], [5, -2, -4, 1, 4])
        result, _ = run_pair(MrsF2Prover(stream), MrsF2Verifier(8, seed=9), stream)
        assert result.verdict.answer == 9 + 1

    @pytest.mark.parametrize("message, element", [(0, 0), (1, 0), (3, 1), (6, 2)])
    def test_tampered_messages_are_rejected(self, message, element):
        stream = gen_stream('uniform-frequencies', 64, seed=2)
        result, _ = run_pair(MrsF2Prover(stream), MrsF2Verifier(64, seed=5), stream,
                             adversary=f"{message}:{element}:1")
        assert not result.verdict.accepted
        if element < 2:
            assert result.verdict.reason is RejectReason.ROUND_SUM
            assert result.verdict.round_index == max(message - 1, 0)

    def test_verifier_space_is_logarithmic(self):
        verifier = MrsF2Verifier(1 << 16, seed=1)
        assert verifier.space.peak <= 2 * 16 + 1


class TestBoundedF0:
    def test_indicator_polynomial(self):
        h = IndicatorPolynomial(3)
        assert h(0) == 0
        assert [h(from_int(v)) for v in (-3, -2, -1, 1, 2, 3)] == [1] * 6
        assert h.degree == 6
        values = np.array([0, 1, from_int(-3)], dtype=np.uint64)
        assert h.apply(values).tolist() == [0, 1, 1]
        with pytest.raises(ValueError):
            IndicatorPolynomial(0)

    def test_completeness_with_deletions(self):
        stream = Stream(16, [0, 3, 3, 9, 9, 15], [2, 1, -1, -4, 1, 1])
        result, _ = run_pair(BoundedF0Prover(stream, 4), BoundedF0Verifier(16, 4, seed=1), stream)
        assert result.verdict.accepted
        assert result.verdict.answer == f0(stream) == 3
        assert result.stats.elements_to_verifier == 1 + 4 * 9

    def test_prover_refuses_out_of_bound_frequencies(self):
        stream = Stream(4, [1], [9])
        with pytest.raises(FrequencyBoundError):
            BoundedF0Prover(stream, 8)

    def test_tampered_round_is_rejected(self):
        stream = gen_stream('uniform-items', 32, m=40, seed=1)
        bound = stream.max_abs_frequency()
        result, _ = run_pair(BoundedF0Prover(stream, bound), BoundedF0Verifier(32, bound, seed=3), stream,
                             adversary="2:0:7")
        assert not result.verdict.accepted
        assert result.verdict.round_index == 1


@pytest.mark.slow
def test_random_tampering_is_always_caught():
    stream = gen_stream('uniform-frequencies', 256, seed=11)
    rng = np.random.default_rng(0)
    for trial in range(1000):
        message = int(rng.integers(0, 9))
        element = int(rng.integers(0, 3))
        delta = int(rng.integers(1, 1 << 40))
        result, _ = run_pair(MrsF2Prover(stream), MrsF2Verifier(256, seed=trial), stream,
                             adversary=f"{message}:{element}:{delta}")
        assert not result.verdict.accepted, (message, element, delta)
