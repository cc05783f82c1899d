"""
Circuit builders for F2, F0, MVMULT and PMWW, and the maps between
streams and circuit inputs.

Gate sets select how the F0 chain computes a^(p-1) for p = 2^61 - 1:

basic   two MUL gates per level (square, running product), 61 levels
pow8    POW gates with j=4 raise the running power to the 8th, 23 levels
pow16   POW gates with j=8 raise it to the 16th, 19 levels

A "+sum" suffix drops the final addition tree; the circuit then reports
the sum of its top layer.
"""

import logging

import numpy as np

from arithmetic.field import as_vector, vec_from_signed
from arithmetic.mle import log2_exact, next_power_of_two
from circuits.circuit import Circuit, Layer
from circuits.wiring import (
    CircuitError, GateKind, SumBit, WiringRule, const_bits, var_bits, zero_bits,
)
from streaming.oracles import Problem

logging.basicConfig(
    level=logging.INFO,
    format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
)
logger = logging.getLogger(__name__)

ADD, SUB, MUL, POW, CONST = GateKind.ADD, GateKind.SUB, GateKind.MUL, GateKind.POW, GateKind.CONST

GATE_SETS = {'basic': 0, 'pow8': 4, 'pow16': 8}
SUM_SUFFIX = '+sum'

# Levels of P -> P^(2j) after the prelude of each chain.
_CHAIN_STEPS = {'basic': 59, 'pow8': 19, 'pow16': 14}


def parse_gate_set(gate_set: str) -> tuple[str, bool]:
    """'pow8+sum' -> ('pow8', True)."""
    base, final_sum = gate_set, False
    if gate_set.endswith(SUM_SUFFIX):
        base, final_sum = gate_set[:-len(SUM_SUFFIX)], True
    if base not in GATE_SETS:
        raise CircuitError(f"unknown gate set {gate_set!r}; expected basic, pow8 or pow16 with optional {SUM_SUFFIX}")
    return base, final_sum


# ============================================================================
# Building blocks
# ============================================================================

def tree_layers(count: int, suffix: tuple = ()) -> list[Layer]:
    """
    Binary addition trees over the low `count` label bits, one tree per
    assignment of the trailing `suffix` bits. Top layer first.
    """
    layers = []
    for u in range(count):
        g = var_bits('g', u)
        layers.append(Layer(u + len(suffix), (
            WiringRule(ADD, g + suffix, (0,) + g + suffix, (1,) + g + suffix),
        )))
    return layers


def chain_layers(v: int, gate_set: str, limit: int | None = None) -> list[Layer]:
    """
    Per-label a -> a^(p-1) over a layer of 2^v values, so each output is 1
    for non-zero a and 0 otherwise. Label (s, i) carries slot s of value i:
    slot 0 holds the running power P, slot 1 the running product Q.

    `limit` keeps only labels i <= limit at the first level; the others
    then stay 0 throughout. Top layer first.
    """
    if gate_set not in GATE_SETS:
        raise CircuitError(f"unknown gate set {gate_set!r}")
    j = GATE_SETS[gate_set]
    i = var_bits('i', v)
    s0, s1 = (0,) + i, (1,) + i
    bound = (i, limit) if limit is not None else None

    def first(kind, out):
        if kind is CONST:
            return WiringRule(CONST, out, limit=bound)
        return WiringRule(kind, out, i, i, limit=bound)

    def level(*rules, power=0):
        return Layer(v + 1, tuple(rules), power=power)

    if gate_set == 'basic':
        # a^2, 1
        prelude = [level(first(MUL, s0), first(CONST, s1))]
        step = level(WiringRule(MUL, s0, s0, s0), WiringRule(MUL, s1, s1, s0))
    elif gate_set == 'pow8':
        # (a^2, a^8) -> (a^10, a^4) -> (a^14, 1)
        prelude = [
            level(first(MUL, s0), first(POW, s1), power=j),
            level(WiringRule(MUL, s0, s0, s1), WiringRule(MUL, s1, s0, s0)),
            level(WiringRule(MUL, s0, s0, s1), WiringRule(CONST, s1)),
        ]
        step = level(WiringRule(POW, s0, s0, s0), WiringRule(MUL, s1, s1, s0), power=j)
    else:
        # (a^2, a^16) -> (a^18, a^4) -> (a^22, a^8) -> (a^30, 1)
        prelude = [
            level(first(MUL, s0), first(POW, s1), power=j),
            level(WiringRule(MUL, s0, s0, s1), WiringRule(MUL, s1, s0, s0)),
            level(WiringRule(MUL, s0, s0, s1), WiringRule(MUL, s1, s1, s1)),
            level(WiringRule(MUL, s0, s0, s1), WiringRule(CONST, s1)),
        ]
        step = level(WiringRule(POW, s0, s0, s0), WiringRule(MUL, s1, s1, s0), power=j)

    closing = Layer(v, (WiringRule(MUL, i, s1, s0),))
    bottom_up = prelude + [step] * _CHAIN_STEPS[gate_set] + [closing]
    return bottom_up[::-1]


def chain_exponent(gate_set: str) -> int:
    """The exponent a chain raises its input to, for tests and audits."""
    j = GATE_SETS[gate_set]
    base = {'basic': 2, 'pow8': 14, 'pow16': 30}[gate_set]
    ratio = 2 if j == 0 else 2 * j
    p_exp, q_exp = base, 0
    for _ in range(_CHAIN_STEPS[gate_set]):
        p_exp, q_exp = p_exp * ratio, q_exp + p_exp
    return p_exp + q_exp


# ============================================================================
# Problem circuits
# ============================================================================

def build_f2(n: int, final_sum: bool = False) -> Circuit:
    v = log2_exact(n)
    i = var_bits('i', v)
    square = Layer(v, (WiringRule(MUL, i, i, i),))
    layers = [square] if final_sum else tree_layers(v) + [square]
    return Circuit(layers, v, family=Problem.F2.value, gate_set='basic' + (SUM_SUFFIX if final_sum else ''),
                   final_sum=final_sum, n=n)


def build_f0(n: int, gate_set: str = 'basic', final_sum: bool = False) -> Circuit:
    v = log2_exact(n)
    chain = chain_layers(v, gate_set)
    layers = chain if final_sum else tree_layers(v) + chain
    return Circuit(layers, v, family=Problem.F0.value, gate_set=gate_set + (SUM_SUFFIX if final_sum else ''),
                   final_sum=final_sum, n=n)


def mvmult_labels(n: int) -> dict[str, int]:
    return {'x': n * n, 'b': n * n + n, 'const0': n * n + 2 * n, 'const1': n * n + 2 * n + 1}


def build_mvmult(n: int, gate_set: str = 'basic', final_sum: bool = False) -> Circuit:
    """
    Counts the entries with (Ax)_i != b_i. Inputs: A_ij at i*n + j, x_j at
    n^2 + j, b_i at n^2 + n + i, then the constants 0 and 1.
    """
    v = log2_exact(n)
    if n < 4:
        raise CircuitError("MVMULT circuits need n >= 4")
    width = 2 * v + 1
    i, jv = var_bits('i', v), var_bits('j', v)
    labels = mvmult_labels(n)
    product = Layer(width, (
        WiringRule(MUL, jv + i + (0,), jv + i + (0,), jv + zero_bits(v) + (1,)),
        WiringRule(ADD, zero_bits(v) + i + (1,), i + (1,) + zero_bits(v - 1) + (1,),
                   const_bits(labels['const0'], width)),
    ))
    sums = []
    for u in range(v):
        g = var_bits('g', u)
        sums.append(Layer(u + v + 1, (
            WiringRule(ADD, g + i + (0,), (0,) + g + i + (0,), (1,) + g + i + (0,)),
            # b_i rides along at j = 0 of the upper half; its j = 1 neighbour holds no gate.
            WiringRule(ADD, zero_bits(u) + i + (1,), zero_bits(u + 1) + i + (1,), (1,) + zero_bits(u) + i + (1,)),
        )))
    difference = Layer(v, (WiringRule(SUB, i, i + (0,), i + (1,)),))
    chain = chain_layers(v, gate_set)
    top = chain if final_sum else tree_layers(v) + chain
    return Circuit(top + [difference] + sums + [product], width, family=Problem.MVMULT.value,
                   gate_set=gate_set + (SUM_SUFFIX if final_sum else ''), final_sum=final_sum, n=n)


def build_pmww(n: int, q: int, gate_set: str = 'basic', final_sum: bool = False) -> Circuit:
    """
    Counts positions i <= n - q whose window mismatches, from
    I_i = sum_j t_(i+j) p_j (t_(i+j) - p_j)^2 over symbol codes (0 = wildcard).
    Inputs: text at [0, n), zeros at [n, 2n), pattern at 2n + j.
    """
    v = log2_exact(n)
    if not 1 <= q <= n:
        raise CircuitError(f"pattern length q={q} must lie in [1, {n}]")
    c = log2_exact(next_power_of_two(q))
    i, jv = var_bits('i', v), var_bits('j', c)
    text = tuple(SumBit(k) for k in range(v + 1)) + (0,)
    pattern = jv + zero_bits(v - c) + (0, 1)
    window = Layer(2 + c + v, (
        WiringRule(SUB, (0, 0) + jv + i, text, pattern, carry=(i, jv)),
        WiringRule(MUL, (1, 0) + jv + i, text, pattern, carry=(i, jv)),
    ))
    square = Layer(1 + c + v, (
        WiringRule(MUL, (0,) + jv + i, (0, 0) + jv + i, (0, 0) + jv + i),
        WiringRule(ADD, (1,) + jv + i, (1, 0) + jv + i, (0, 1) + jv + i),
    ))
    term = Layer(c + v, (WiringRule(MUL, jv + i, (0,) + jv + i, (1,) + jv + i),))
    chain = chain_layers(v, gate_set, limit=n - q)
    top = chain if final_sum else tree_layers(v) + chain
    layers = top + tree_layers(c, suffix=i) + [term, square, window]
    return Circuit(layers, v + 2, family=Problem.PMWW.value,
                   gate_set=gate_set + (SUM_SUFFIX if final_sum else ''), final_sum=final_sum, n=n, q=q)


def build_circuit(problem, n: int, q: int = 0, gate_set: str = 'basic') -> Circuit:
    problem = Problem(problem)
    base, final_sum = parse_gate_set(gate_set)
    if problem is Problem.F2:
        if base != 'basic':
            raise CircuitError("F2 circuits only use the basic gate set")
        circuit = build_f2(n, final_sum)
    elif problem is Problem.F0:
        circuit = build_f0(n, base, final_sum)
    elif problem is Problem.MVMULT:
        circuit = build_mvmult(n, base, final_sum)
    else:
        circuit = build_pmww(n, q, base, final_sum)
    logger.info(f"Built {problem.value} circuit ({gate_set}, n={n}): depth {circuit.depth}, "
                f"{circuit.size} gates")
    return circuit


# ============================================================================
# Inputs and answers
# ============================================================================

def symbol_codes(symbols, wildcard: int) -> np.ndarray:
    """symbol + 1, and 0 for the wildcard."""
    symbols = np.asarray(symbols, dtype=np.int64)
    return np.where(symbols == wildcard, 0, symbols + 1)


def input_terms(circuit: Circuit, stream) -> tuple[np.ndarray, np.ndarray]:
    """
    (label, value) contributions of each stream update to the input layer.

    Text-pattern streams are read as one update per position, the delta
    being the symbol.
    """
    indices = stream.indices
    if circuit.family == Problem.PMWW.value:
        n = circuit.n
        labels = np.where(indices < n, indices, indices + n)
        return labels, vec_from_signed(symbol_codes(stream.deltas, wildcard=n))
    return indices, vec_from_signed(stream.deltas)


def fixed_input_terms(circuit: Circuit) -> tuple[np.ndarray, np.ndarray]:
    """Inputs the verifier knows without the stream."""
    if circuit.family == Problem.MVMULT.value:
        return np.array([mvmult_labels(circuit.n)['const1']], dtype=np.int64), np.ones(1, dtype=np.uint64)
    return np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.uint64)


def answer_labels(circuit: Circuit) -> np.ndarray:
    """Input labels of the prover-supplied answer vector (MVMULT's b)."""
    if circuit.family != Problem.MVMULT.value:
        return np.zeros(0, dtype=np.int64)
    return mvmult_labels(circuit.n)['b'] + np.arange(circuit.n, dtype=np.int64)


def circuit_inputs(circuit: Circuit, stream, answer=None) -> np.ndarray:
    """Full input layer: stream contributions, constants and the answer vector."""
    values = np.zeros(circuit.input_size, dtype=np.uint64)
    if circuit.family == Problem.PMWW.value:
        freq = stream.frequency_vector()
        n = circuit.n
        values[:n] = vec_from_signed(symbol_codes(freq[:n], wildcard=n))
        pattern = freq[n:n + circuit.q]
        values[2 * n:2 * n + pattern.size] = vec_from_signed(symbol_codes(pattern, wildcard=n))
        return values
    freq = vec_from_signed(stream.frequency_vector())
    if freq.size > circuit.input_size:
        raise CircuitError(f"stream universe {freq.size} exceeds {circuit.input_size} input labels")
    values[:freq.size] = freq
    labels, fixed = fixed_input_terms(circuit)
    values[labels] = fixed
    if answer is not None:
        values[answer_labels(circuit)] = as_vector(answer)
    return values


def answer_from_output(circuit: Circuit, output: int) -> int:
    if circuit.family == Problem.PMWW.value:
        return (circuit.n - circuit.q + 1) - output
    return output
