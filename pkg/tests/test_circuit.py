import numpy as np
import pytest

from arithmetic.field import P, random_element, vec_from_signed
from circuits.builders import (
    GATE_SETS, answer_from_output, build_circuit, build_f0, build_f2, build_mvmult, build_pmww,
    chain_exponent, chain_layers, circuit_inputs, input_terms, parse_gate_set,
)
from circuits.circuit import Circuit, Layer, generic_wiring_mle
from circuits.wiring import CircuitError, GateKind, GateTable, WiringRule
from streaming.oracles import Problem, f0, f2, mvmult, oracle
from streaming.stream import Stream, gen_stream, split_matrix_vector


def run_circuit(circuit, stream, answer=None):
    values = circuit.evaluate(circuit_inputs(circuit, stream, answer))
    return circuit.output(values)


def bits(x, k):
    return [(x >> b) & 1 for b in range(k)]


def rule_at(rule, point, shape, k, t):
    """The rule's extension at `point` with coordinate k replaced by t."""
    v_p, v = shape
    x = point[:k] + [t] + point[k + 1:]
    return rule.mle(x[:v_p], x[v_p:v_p + v], x[v_p + v:])


CLOSED_FORM_BUILDERS = [
    lambda: build_f2(8),
    lambda: build_f0(4, 'pow8'),
    lambda: build_mvmult(4),
    lambda: build_pmww(8, 3, 'pow16'),
]


class TestGateSets:
    def test_parse_gate_set(self):
        assert parse_gate_set('basic') == ('basic', False)
        assert parse_gate_set('pow16+sum') == ('pow16', True)
        with pytest.raises(CircuitError):
            parse_gate_set('pow4')

    @pytest.mark.parametrize("gate_set", list(GATE_SETS))
    def test_chains_raise_to_p_minus_one(self, gate_set):
        assert chain_exponent(gate_set) == P - 1

    @pytest.mark.parametrize("gate_set", list(GATE_SETS))
    def test_chain_maps_nonzero_to_one(self, gate_set):
        layers = chain_layers(2, gate_set)
        circuit = Circuit(layers, 2, final_sum=True)
        values = circuit.evaluate(np.array([0, 5, P - 1, 123456789], dtype=np.uint64))
        assert values[0].tolist() == [0, 1, 1, 1]


class TestBuilders:
    @pytest.mark.parametrize("gate_set", ['basic', 'basic+sum'])
    def test_f2(self, gate_set):
        stream = gen_stream('uniform-frequencies', 16, seed=1)
        circuit = build_circuit(Problem.F2, 16, gate_set=gate_set)
        assert run_circuit(circuit, stream) == f2(stream)

    @pytest.mark.parametrize("gate_set", ['basic', 'pow8', 'pow16', 'pow8+sum'])
    def test_f0_with_deletions(self, gate_set):
        stream = Stream(8, [0, 2, 2, 5, 7], [3, 1, -1, -4, 2])
        circuit = build_circuit(Problem.F0, 8, gate_set=gate_set)
        assert run_circuit(circuit, stream) == f0(stream) == 3

    def test_f0_depth_by_gate_set(self):
        assert build_f0(16, 'basic').depth == 4 + 61
        assert build_f0(16, 'pow8').depth == 4 + 23
        assert build_f0(16, 'pow16').depth == 4 + 19
        assert build_f0(16, 'pow16', final_sum=True).depth == 19

    def test_f2_sizes(self):
        circuit = build_f2(8)
        assert circuit.gate_count() == 8 + 4 + 2 + 1
        assert circuit.size == circuit.gate_count() + 8

    def test_mvmult_counts_wrong_entries(self):
        stream = gen_stream('matrix-vector', 4, seed=3)
        matrix, vector = split_matrix_vector(stream, 4)
        b = mvmult(matrix, vector)
        circuit = build_mvmult(4)
        assert run_circuit(circuit, stream, vec_from_signed(np.array(b))) == 0
        b[1] += 1
        b[3] -= 7
        assert run_circuit(circuit, stream, vec_from_signed(np.array(b))) == 2

    def test_mvmult_needs_n_at_least_four(self):
        with pytest.raises(CircuitError):
            build_mvmult(2)

    @pytest.mark.parametrize("q", [1, 3, 4])
    def test_pmww(self, q):
        n = 16
        stream = gen_stream('text-pattern', n, q=q, seed=q, alphabet=2)
        circuit = build_pmww(n, q, 'pow8', final_sum=True)
        output = run_circuit(circuit, stream)
        assert answer_from_output(circuit, output) == oracle(Problem.PMWW, stream, n)

    def test_pmww_input_terms_match_full_inputs(self):
        stream = gen_stream('text-pattern', 8, q=2, seed=1)
        circuit = build_pmww(8, 2)
        labels, values = input_terms(circuit, stream)
        full = circuit_inputs(circuit, stream)
        assert full[labels].tolist() == values.tolist()
        assert full[8:16].tolist() == [0] * 8

    @pytest.mark.parametrize("problem, kind, gate_set", [
        (Problem.F2, 'uniform-frequencies', 'basic'),
        (Problem.F0, 'uniform-items', 'pow8+sum'),
        (Problem.PMWW, 'text-pattern', 'pow16'),
    ])
    def test_evaluation_matches_the_oracle_on_random_streams(self, problem, kind, gate_set):
        n, q = 16, 3
        circuit = build_circuit(problem, n, q=q, gate_set=gate_set)
        for seed in range(100):
            stream = gen_stream(kind, n, m=n, q=q, seed=seed)
            output = run_circuit(circuit, stream)
            assert answer_from_output(circuit, output) == oracle(problem, stream, n), seed

    def test_pattern_longer_than_text(self):
        with pytest.raises(CircuitError):
            build_pmww(4, 5)


class TestWiring:
    @pytest.mark.parametrize("builder", CLOSED_FORM_BUILDERS)
    def test_closed_form_matches_gate_pass(self, builder, rng):
        circuit = builder()
        for i in range(circuit.depth):
            p = [random_element(rng) for _ in range(circuit.layer_vars(i))]
            v = circuit.layer_vars(i + 1)
            w1 = [random_element(rng) for _ in range(v)]
            w2 = [random_element(rng) for _ in range(v)]
            closed = circuit.wiring_mle(i, p, w1, w2, 'closed')
            generic = circuit.wiring_mle(i, p, w1, w2, 'generic')
            assert closed == generic, f"layer {i}"
            assert circuit.const_mle(i, p, 'closed') == circuit.const_mle(i, p, 'generic')

    @pytest.mark.parametrize("builder", CLOSED_FORM_BUILDERS)
    def test_closed_form_is_multilinear(self, builder, rng):
        circuit = builder()
        for i in range(circuit.depth):
            shape = (circuit.layer_vars(i), circuit.layer_vars(i + 1))
            for rule in circuit.layers[i].rules:
                point = [random_element(rng) for _ in range(shape[0] + 2 * shape[1])]
                for k in range(len(point)):
                    at = [rule_at(rule, point, shape, k, t) for t in (0, 1, 2)]
                    # degree one in coordinate k: the value at 2 extrapolates linearly
                    assert at[2] == (2 * at[1] - at[0]) % P, (i, rule.kind, k)

    def test_wiring_is_an_indicator_on_the_cube(self):
        circuit = build_f2(4)
        # layer 2 squares input i into gate i
        assert circuit.wiring_mle(2, bits(3, 2), bits(3, 2), bits(3, 2))[GateKind.MUL] == 1
        assert circuit.wiring_mle(2, bits(3, 2), bits(2, 2), bits(3, 2))[GateKind.MUL] == 0

    def test_gate_table_layers(self):
        table = GateTable(
            (GateKind.ADD, GateKind.MUL),
            np.array([0, 1]), np.array([0, 1]), np.array([1, 1]),
        )
        layer = Layer(1, gates=table)
        circuit = Circuit([Layer(0, (WiringRule(GateKind.SUB, (), (0,), (1,)),)), layer], 1)
        values = circuit.evaluate(np.array([3, 4], dtype=np.uint64))
        assert values[1].tolist() == [7, 16]
        assert circuit.output(values) == (7 - 16) % P
        assert not circuit.has_closed_form
        assert circuit.wiring_mle(1, [0], [0], [1])[GateKind.ADD] == 1
        generic = generic_wiring_mle(layer, [1], [1], [1])
        assert generic[GateKind.MUL] == 1 and generic[GateKind.ADD] == 0

    def test_rule_validation(self):
        with pytest.raises(CircuitError):
            Circuit([Layer(1, (WiringRule(GateKind.ADD, ('a',), ('a', 'b'), ('a', 'b')),))], 2, final_sum=True)
        with pytest.raises(CircuitError):
            Circuit([Layer(1, (WiringRule(GateKind.ADD, ('a',), ('a',), ('a',)),))], 1)
        with pytest.raises(CircuitError):
            Circuit([Layer(0, (WiringRule(GateKind.POW, (), (0,), (1,)),))], 1)
        with pytest.raises(CircuitError):
            Circuit([], 1)

    def test_dump_lists_every_gate(self):
        circuit = build_f2(4)
        lines = circuit.dump().splitlines()
        assert len(lines) == circuit.gate_count()
        assert lines[0] == "0 0 ADD 0 1"
