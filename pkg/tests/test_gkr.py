import math

import numpy as np
import pytest

from arithmetic.field import P, random_element, random_vector
from arithmetic.mle import interpolate_eval, mle_eval
from circuits.builders import build_circuit
from protocols.base import RejectReason
from protocols.gkr import GkrProver, GkrVerifier, check_line, line_length, line_point, reduce_two_to_one
from streaming.oracles import Problem, oracle
from streaming.stream import Stream, gen_stream
from tests.conftest import run_pair
from transport.cost import cost_report


def gkr_session(problem, n, gate_set='basic', q=0, seed=1, adversary=None, stream=None, **verifier_args):
    if stream is None:
        kind = {
            Problem.F2: 'uniform-frequencies', Problem.F0: 'uniform-items',
            Problem.MVMULT: 'matrix-vector', Problem.PMWW: 'text-pattern',
        }[Problem(problem)]
        stream = gen_stream(kind, n, m=n, q=q, seed=seed)
    circuit = build_circuit(problem, n, q=q, gate_set=gate_set)
    verifier = GkrVerifier(circuit, seed + 100, **verifier_args)
    result, _ = run_pair(GkrProver(circuit, stream), verifier, stream, adversary=adversary)
    return result, stream, circuit, verifier


class TestLineReduction:
    def test_line_passes_through_both_points(self, rng):
        a = [random_element(rng) for _ in range(3)]
        b = [random_element(rng) for _ in range(3)]
        assert line_point(a, b, 0) == a
        assert line_point(a, b, 1) == b

    def test_restriction_is_consistent_with_the_extension(self, rng):
        values = random_vector(rng, 8)
        r1 = [random_element(rng) for _ in range(3)]
        r2 = [random_element(rng) for _ in range(3)]
        line = reduce_two_to_one(values, r1, r2)
        assert line.size == line_length(3) == 4
        t = random_element(rng)
        assert interpolate_eval(line, t) == mle_eval(values, line_point(r1, r2, t))
        assert check_line(line, mle_eval(values, r1), mle_eval(values, r2), 3) is None
        assert check_line(line, 0, int(line[1]), 3) is RejectReason.LINE_ENDPOINT
        assert check_line(line[:3], int(line[0]), int(line[1]), 3) is RejectReason.ARITY

    def test_zero_variable_layers_use_a_line_of_two(self):
        assert line_length(0) == 2


class TestCompleteness:
    @pytest.mark.parametrize("gate_set", ['basic', 'basic+sum'])
    def test_f2(self, gate_set):
        result, stream, circuit, _ = gkr_session(Problem.F2, 16, gate_set)
        assert result.verdict.accepted
        assert result.verdict.answer == oracle(Problem.F2, stream)

    @pytest.mark.parametrize("gate_set", ['basic', 'pow8', 'pow16', 'basic+sum', 'pow8+sum', 'pow16+sum'])
    def test_f0(self, gate_set):
        result, stream, _, _ = gkr_session(Problem.F0, 8, gate_set)
        assert result.verdict.accepted
        assert result.verdict.answer == oracle(Problem.F0, stream)

    def test_f0_with_deletions(self):
        stream = Stream(8, [1, 1, 4, 6, 6], [2, -2, 5, -1, -3])
        result, _, _, _ = gkr_session(Problem.F0, 8, 'pow16', stream=stream)
        assert result.verdict.answer == 2

    def test_mvmult(self):
        result, stream, _, _ = gkr_session(Problem.MVMULT, 4)
        assert result.verdict.accepted
        assert result.verdict.answer == oracle(Problem.MVMULT, stream, 4)

    @pytest.mark.parametrize("q", [1, 2, 5])
    def test_pmww(self, q):
        result, stream, _, _ = gkr_session(Problem.PMWW, 8, 'pow8+sum', q=q)
        assert result.verdict.accepted
        assert result.verdict.answer == oracle(Problem.PMWW, stream, 8)

    def test_offline_and_generic_modes_agree(self):
        online, _, _, _ = gkr_session(Problem.F0, 8, 'pow8', seed=3)
        offline, _, _, _ = gkr_session(Problem.F0, 8, 'pow8', seed=3, offline=True)
        generic, _, _, _ = gkr_session(Problem.F0, 8, 'pow8', seed=3, wiring_mode='generic')
        assert online.verdict == offline.verdict == generic.verdict
        assert online.stats.total_bytes == offline.stats.total_bytes == generic.stats.total_bytes

    def test_costs_scale_with_depth(self):
        basic, _, basic_circuit, _ = gkr_session(Problem.F0, 8, 'basic')
        pow16, _, pow16_circuit, _ = gkr_session(Problem.F0, 8, 'pow16')
        assert basic_circuit.depth > pow16_circuit.depth
        assert basic.stats.rounds > pow16.stats.rounds

    def test_prover_work_grows_as_size_times_log_size(self):
        ratios = []
        for n in (1 << 10, 1 << 12, 1 << 14):
            result, _, circuit, _ = gkr_session(Problem.F2, n)
            assert result.verdict.accepted
            ratios.append(result.prover_field_ops / (circuit.size * math.log2(circuit.size)))
        assert max(ratios) <= 2 * min(ratios)


class TestSoundness:
    def test_wrong_claimed_output(self):
        result, _, _, _ = gkr_session(Problem.F2, 8, adversary="0:0:1")
        assert not result.verdict.accepted
        assert result.verdict.reason is RejectReason.ROUND_SUM
        assert result.verdict.round_index == 0

    def test_wrong_mvmult_answer(self):
        result, _, _, _ = gkr_session(Problem.MVMULT, 4, adversary="0:2:5")
        assert not result.verdict.accepted

    def test_dishonest_answer_vector(self):
        stream = gen_stream('matrix-vector', 4, seed=2)
        wrong = np.asarray(oracle(Problem.MVMULT, stream, 4), dtype=np.int64)
        wrong[0] += 1
        circuit = build_circuit(Problem.MVMULT, 4)
        prover = GkrProver(circuit, stream, answer=np.asarray([v % P for v in wrong.tolist()], dtype=np.uint64))
        result, _ = run_pair(prover, GkrVerifier(circuit, 5), stream)
        assert not result.verdict.accepted
        assert result.verdict.reason is RejectReason.OUTPUT

    @pytest.mark.parametrize("message", [1, 2, 5, 9])
    def test_tampered_later_messages(self, message):
        result, _, _, _ = gkr_session(Problem.F0, 4, 'pow8', adversary=f"{message}:1:3")
        assert not result.verdict.accepted

    def test_verifier_streams_before_seeing_the_prover(self):
        stream = gen_stream('uniform-frequencies', 8, seed=1)
        circuit = build_circuit(Problem.F2, 8)
        verifier = GkrVerifier(circuit, 9)
        verifier.stream(stream)
        assert verifier.lde.updates == stream.length
        assert verifier.space.peak < 8 * circuit.depth + 16


@pytest.mark.slow
def test_f0_circuit_completeness_at_scale():
    result, stream, _, _ = gkr_session(Problem.F0, 1 << 10, 'pow16')
    assert result.verdict.answer == oracle(Problem.F0, stream)


def prover_message_count(circuit):
    """The claim, then per layer its sum-check rounds, the two claims and the line."""
    return 1 + sum(circuit.layer_vars(i) + 2 * circuit.layer_vars(i + 1) + 2 for i in range(circuit.depth))


@pytest.mark.slow
def test_random_tampering_is_always_caught():
    stream = gen_stream('uniform-frequencies', 8, seed=5)
    circuit = build_circuit(Problem.F2, 8)
    messages = prover_message_count(circuit)
    honest, _ = run_pair(GkrProver(circuit, stream), GkrVerifier(circuit, 1), stream)
    # every verifier message is a single challenge
    assert honest.stats.messages - honest.stats.elements_to_prover == messages
    rng = np.random.default_rng(6)
    for trial in range(1000):
        message = int(rng.integers(0, messages))
        element = int(rng.integers(0, 4))
        delta = int(rng.integers(1, 1 << 40))
        result, _ = run_pair(GkrProver(circuit, stream), GkrVerifier(circuit, trial), stream,
                             adversary=f"{message}:{element}:{delta}")
        assert not result.verdict.accepted, (message, element, delta)


KB = 1024


def within(value, target, tolerance=0.3):
    return abs(value - target) <= tolerance * target


def f2_cost_row(gate_set):
    n = 1 << 17
    result, _, circuit, verifier = gkr_session(Problem.F2, n, gate_set)
    return cost_report(result, 'f2', 'gkr', gate_set=gate_set, n=n, gates=circuit.size,
                       space_words=verifier.space.peak)


@pytest.mark.slow
class TestCostTableAtScale:
    def test_f2_tree_sum(self):
        report = f2_cost_row('basic')
        assert report.accepted
        assert report.gates == 393215
        assert within(report.rounds, 986)
        assert within(report.comm_bytes, 11.5 * KB)

    def test_f2_big_sum(self):
        report = f2_cost_row('basic+sum')
        assert report.accepted
        # 2^17 inputs and 2^17 squares, listed as 0.2M
        assert report.gates == 2 << 17
        assert within(report.rounds, 118)
        # one 51-round sum-check, its two claims and an 18-point line
        assert report.comm_bytes == 8 * (1 + 3 * 51 + 2 + 18)
        assert report.comm_bytes <= 1.3 * 2.5 * KB
