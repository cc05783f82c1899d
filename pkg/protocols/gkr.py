"""
Circuit checking, one sum-check per layer.

For layer i with claim V_i(z) the parties run a sum-check over
(p, w1, w2) in {0,1}^(v_i + 2 v_(i+1)) of

    beta(p) * sum_kind kind~(p, w1, w2) * op_kind(V(w1), V(w2))

where V is the extension of layer i + 1, beta is the equality polynomial
at z (or 1 for the summed top layer of a final-sum circuit) and CONST gates
are moved to the claim side. The prover's messages come from three passes
over the layer's gates, one per variable block, each a product of tables:

    p   beta(p) * A(p)             A = gate values without CONST gates
    w1  V * X + Y + V^j * Z        X, Y, Z grouped by left input
    w2  V * X2 + Y2 + V^j * Z2     grouped by right input

The sum-check leaves two claims V(r1), V(r2). The prover sends V on the
line through r1 and r2, the verifier checks its endpoints and continues at
a random point of that line. The last line lands on the input layer, whose
extension the verifier has built from the stream; its three challenges
are drawn before anything else so that point is known while streaming.
"""

import logging
from dataclasses import dataclass

import numpy as np

from arithmetic.field import (
    add, sub, mul, power, random_element, to_signed,
    vec_add, vec_sub, vec_mul, vec_power, vec_sum, vec_group_sum, vec_from_signed,
)
from arithmetic.mle import StreamingLdeState, eq_eval, eq_table, interpolate_eval, mle_eval
from circuits.builders import (
    answer_from_output, answer_labels, circuit_inputs, fixed_input_terms, input_terms,
)
from circuits.circuit import Circuit
from circuits.wiring import GateKind
from protocols.base import ChallengeSource, Prover, RejectReason, Verdict, Verifier
from protocols.sumcheck import ComposedMultilinearInstance, run_sumcheck_rounds, sumcheck_prove
from streaming.oracles import Problem
from streaming.stream import split_matrix_vector
from transport.channel import Endpoint, MessageTag

logging.basicConfig(
    level=logging.INFO,
    format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
)
logger = logging.getLogger(__name__)


def line_point(a, b, t: int) -> list[int]:
    """(1 - t) a + t b, coordinatewise."""
    return [add(x, mul(t, sub(y, x))) for x, y in zip(a, b)]


def line_length(num_vars: int) -> int:
    return max(num_vars, 1) + 1


def reduce_two_to_one(values: np.ndarray, r1, r2) -> np.ndarray:
    """Prover side: V restricted to the line through r1 and r2 at t = 0..v."""
    return np.asarray([mle_eval(values, line_point(r1, r2, t)) for t in range(line_length(len(r1)))],
                      dtype=np.uint64)


def check_line(line: np.ndarray, c1: int, c2: int, num_vars: int) -> RejectReason | None:
    """Verifier side: arity and endpoint checks of a line message."""
    if line.size != line_length(num_vars):
        return RejectReason.ARITY
    if int(line[0]) != c1 or int(line[1]) != c2:
        return RejectReason.LINE_ENDPOINT
    return None


def _combine(power_j: int):
    if power_j:
        return lambda t: vec_add(vec_add(vec_mul(t[0], t[1]), t[2]), vec_mul(vec_power(t[0], power_j), t[3]))
    return lambda t: vec_add(vec_mul(t[0], t[1]), t[2])


# ============================================================================
# Prover
# ============================================================================

class GkrProver(Prover):
    def __init__(self, circuit: Circuit, stream, answer=None):
        """For MVMULT circuits `answer` is the claimed b; the honest b = Ax is used when omitted."""
        self.circuit = circuit
        if answer is None and circuit.family == Problem.MVMULT.value:
            matrix, vector = split_matrix_vector(stream, circuit.n)
            answer = vec_sum(vec_mul(vec_from_signed(matrix), vec_from_signed(vector)[None, :]), axis=1)
        self.answer = answer
        self.inputs = circuit_inputs(circuit, stream, answer)
        self.field_ops = 0

    def run(self, endpoint: Endpoint) -> None:
        circuit = self.circuit
        values = circuit.evaluate(self.inputs)
        self.field_ops += sum(layer.gate_count() for layer in circuit.layers)
        if circuit.family == Problem.MVMULT.value:
            endpoint.send(MessageTag.ANSWER, self.inputs[answer_labels(circuit)])
        endpoint.send(MessageTag.CLAIM, [circuit.output(values)])
        z: list[int] = []
        for i in range(circuit.depth):
            z = self._prove_layer(endpoint, i, values, z)

    def _prove_layer(self, endpoint: Endpoint, i: int, values: list[np.ndarray], z: list[int]) -> list[int]:
        circuit = self.circuit
        layer = circuit.layers[i]
        below = values[i + 1]
        degree, j = layer.degree, layer.power
        wires = layer.wires
        size = below.size

        if i == 0 and circuit.final_sum:
            beta = np.ones(1 << layer.num_vars, dtype=np.uint64)
        else:
            beta = eq_table(z)
        gate_values = values[i].copy()
        if GateKind.CONST in wires:
            gate_values[wires[GateKind.CONST][0]] = 0
        phase = ComposedMultilinearInstance([beta, gate_values], lambda t: vec_mul(t[0], t[1]), degree)
        r_p = sumcheck_prove(phase, endpoint)
        self.field_ops += phase.field_ops
        beta_r = np.uint64(phase.final_values()[0])

        eq_p = eq_table(r_p)
        weights, x, y, zz = {}, np.zeros(size, np.uint64), np.zeros(size, np.uint64), np.zeros(size, np.uint64)
        for kind, (parents, lefts, rights) in wires.items():
            if kind is GateKind.CONST:
                continue
            c = vec_mul(eq_p[parents], beta_r)
            weights[kind] = c
            right_values = below[rights]
            if kind is GateKind.ADD:
                x = vec_add(x, vec_group_sum(c, lefts, size))
                y = vec_add(y, vec_group_sum(vec_mul(c, right_values), lefts, size))
            elif kind is GateKind.SUB:
                x = vec_add(x, vec_group_sum(c, lefts, size))
                y = vec_sub(y, vec_group_sum(vec_mul(c, right_values), lefts, size))
            elif kind is GateKind.MUL:
                x = vec_add(x, vec_group_sum(vec_mul(c, right_values), lefts, size))
            else:
                zz = vec_add(zz, vec_group_sum(vec_mul(c, vec_power(right_values, j)), lefts, size))
            self.field_ops += 4 * parents.size
        phase = ComposedMultilinearInstance([below, x, y, zz], _combine(j), degree)
        r1 = sumcheck_prove(phase, endpoint)
        self.field_ops += phase.field_ops
        c1 = phase.final_values()[0]

        eq_1 = eq_table(r1)
        x2, y2, z2 = np.zeros(size, np.uint64), np.zeros(size, np.uint64), np.zeros(size, np.uint64)
        for kind, c in weights.items():
            _, lefts, rights = wires[kind]
            k = vec_group_sum(vec_mul(c, eq_1[lefts]), rights, size)
            if kind is GateKind.ADD:
                x2 = vec_add(x2, k)
                y2 = vec_add(y2, vec_mul(k, np.uint64(c1)))
            elif kind is GateKind.SUB:
                x2 = vec_sub(x2, k)
                y2 = vec_add(y2, vec_mul(k, np.uint64(c1)))
            elif kind is GateKind.MUL:
                x2 = vec_add(x2, vec_mul(k, np.uint64(c1)))
            else:
                z2 = vec_add(z2, vec_mul(k, np.uint64(power(c1, j))))
            self.field_ops += 3 * c.size
        phase = ComposedMultilinearInstance([below, x2, y2, z2], _combine(j), degree)
        r2 = sumcheck_prove(phase, endpoint)
        self.field_ops += phase.field_ops
        c2 = phase.final_values()[0]

        endpoint.send(MessageTag.CLAIMS, [c1, c2])
        endpoint.send(MessageTag.LINE, reduce_two_to_one(below, r1, r2))
        self.field_ops += 2 * line_length(len(r1)) * size
        t = endpoint.receive_challenge()
        logger.debug(f"Prover finished layer {i}")
        return line_point(r1, r2, t)


# ============================================================================
# Verifier
# ============================================================================

@dataclass
class LayerChallenges:
    p: list[int]
    w1: list[int]
    w2: list[int]
    t: int

    @property
    def rounds(self) -> list[int]:
        return self.p + self.w1 + self.w2


@dataclass
class LayerChecks:
    """Data-independent quantities of one layer, known once its challenges are."""

    const_term: int
    beta: int
    wiring: dict[GateKind, int]


class GkrVerifier(Verifier):
    """
    offline=True draws every challenge up front and evaluates all wiring
    predicates before the stream is read; the online phase then does
    constant work per round. Both modes draw the same values.
    """

    def __init__(self, circuit: Circuit, seed: int, wiring_mode: str = 'closed', offline: bool = False):
        super().__init__()
        self.circuit = circuit
        self.wiring_mode = wiring_mode
        self.offline = offline
        self.rng = np.random.default_rng(seed)
        v_in = circuit.input_vars
        self.final_r1 = [random_element(self.rng) for _ in range(v_in)]
        self.final_r2 = [random_element(self.rng) for _ in range(v_in)]
        self.final_t = random_element(self.rng)
        self.input_point = line_point(self.final_r1, self.final_r2, self.final_t)
        self.lde = StreamingLdeState(self.input_point, circuit.input_size)
        self.lde.update_values(*fixed_input_terms(circuit))
        self.challenges: list[LayerChallenges] = []
        self.checks: list[LayerChecks] = []
        if offline:
            z: list[int] = []
            for i in range(circuit.depth):
                self.challenges.append(self._draw_layer(i))
                self.checks.append(self._layer_checks(i, z))
                z = line_point(self.challenges[i].w1, self.challenges[i].w2, self.challenges[i].t)
            logger.info(f"Precomputed wiring checks for {circuit.depth} layers")
        self.space.observe(self._base_words())

    def _base_words(self) -> int:
        stored = sum(len(c.rounds) + 1 + 6 for c in self.challenges)
        return self.lde.space_words + 2 * self.circuit.input_vars + 1 + stored

    def _draw_layer(self, i: int) -> LayerChallenges:
        circuit = self.circuit
        p = [random_element(self.rng) for _ in range(circuit.layer_vars(i))]
        if i == circuit.depth - 1:
            return LayerChallenges(p, self.final_r1, self.final_r2, self.final_t)
        v = circuit.layer_vars(i + 1)
        w1 = [random_element(self.rng) for _ in range(v)]
        w2 = [random_element(self.rng) for _ in range(v)]
        return LayerChallenges(p, w1, w2, random_element(self.rng))

    def _layer_checks(self, i: int, z: list[int]) -> LayerChecks:
        circuit = self.circuit
        challenges = self.challenges[i]
        if i == 0 and circuit.final_sum:
            const_term, beta = circuit.const_count(i), 1
        else:
            const_term, beta = circuit.const_mle(i, z, self.wiring_mode), eq_eval(z, challenges.p)
        wiring = circuit.wiring_mle(i, challenges.p, challenges.w1, challenges.w2, self.wiring_mode)
        return LayerChecks(const_term, beta, wiring)

    def stream(self, stream) -> None:
        self.lde.update_values(*input_terms(self.circuit, stream))

    def verify(self, endpoint: Endpoint) -> Verdict:
        circuit = self.circuit
        answer = None
        if circuit.family == Problem.MVMULT.value:
            answer = endpoint.receive(MessageTag.ANSWER)
            if answer.size != circuit.n:
                return Verdict.reject(RejectReason.ARITY, 0)
            self.lde.update_values(answer_labels(circuit), answer)
        claimed = endpoint.receive(MessageTag.CLAIM)
        if claimed.size != 1:
            return Verdict.reject(RejectReason.ARITY, 0)
        output = int(claimed[0])

        claim, z, offset = output, [], 0
        for i in range(circuit.depth):
            layer = circuit.layers[i]
            if not self.offline:
                self.challenges.append(self._draw_layer(i))
                self.checks.append(self._layer_checks(i, z))
            challenges, checks = self.challenges[i], self.checks[i]

            rounds = challenges.rounds
            outcome = run_sumcheck_rounds(endpoint, sub(claim, checks.const_term), len(rounds), layer.degree,
                                          ChallengeSource(self.rng, fixed=rounds), offset)
            if not outcome.ok:
                return Verdict.reject(outcome.reason, outcome.round_index)
            offset += len(rounds)

            claims = endpoint.receive(MessageTag.CLAIMS)
            if claims.size != 2:
                return Verdict.reject(RejectReason.ARITY, offset)
            c1, c2 = int(claims[0]), int(claims[1])
            if outcome.claim != self._expected_final(checks, layer.power, c1, c2):
                return Verdict.reject(RejectReason.FINAL_EVAL, offset)

            line = endpoint.receive(MessageTag.LINE)
            problem = check_line(line, c1, c2, len(challenges.w1))
            if problem is not None:
                return Verdict.reject(problem, offset)
            endpoint.send_challenge(challenges.t)
            claim = interpolate_eval(line, challenges.t)
            z = line_point(challenges.w1, challenges.w2, challenges.t)
            self.space.observe(self._base_words() + len(z) + len(rounds) + layer.degree + 8)
            logger.debug(f"Verifier accepted layer {i}")

        if claim != self.lde.value:
            return Verdict.reject(RejectReason.INPUT_LDE, offset)
        if answer is not None:
            if output != 0:
                return Verdict.reject(RejectReason.OUTPUT, offset)
            return Verdict.accept([to_signed(int(b)) for b in answer])
        return Verdict.accept(answer_from_output(circuit, output))

    @staticmethod
    def _expected_final(checks: LayerChecks, j: int, c1: int, c2: int) -> int:
        w = checks.wiring
        total = mul(w[GateKind.ADD], add(c1, c2))
        total = add(total, mul(w[GateKind.SUB], sub(c1, c2)))
        total = add(total, mul(w[GateKind.MUL], mul(c1, c2)))
        if j:
            total = add(total, mul(w[GateKind.POW], mul(power(c1, j), power(c2, j))))
        return mul(checks.beta, total)
