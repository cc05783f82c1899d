"""
Layered arithmetic circuits.

Layer 0 is the output side and layer d (not stored as a Layer) holds the
inputs; gates at layer i read two gates of layer i + 1. Labels at layer i
range over [0, 2^v_i); a label without a gate has value 0.

Gate kinds: ADD, SUB, MUL, POW (in1^j * in2^j with j the layer's power)
and CONST (value 1, no inputs).
"""

import logging
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from arithmetic.field import (
    P, vec_add, vec_sub, vec_mul, vec_power, vec_sum, vec_dot, as_vector,
)
from arithmetic.mle import eq_table
from circuits.wiring import CircuitError, GateKind, GateTable, WiringRule

logging.basicConfig(
    level=logging.INFO,
    format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
)
logger = logging.getLogger(__name__)

WIRING_MODES = ('closed', 'generic')


@dataclass
class Layer:
    num_vars: int
    rules: tuple[WiringRule, ...] = ()
    power: int = 0
    gates: GateTable | None = None

    @property
    def has_closed_form(self) -> bool:
        return self.gates is None

    @cached_property
    def kinds(self) -> frozenset[GateKind]:
        if self.gates is not None:
            return frozenset(self.gates.kinds)
        return frozenset(rule.kind for rule in self.rules)

    @property
    def degree(self) -> int:
        """Per-variable degree of the layer's sum-check polynomial."""
        return max(2, self.power + 1) if GateKind.POW in self.kinds else 2

    @cached_property
    def wires(self) -> dict[GateKind, tuple[np.ndarray, np.ndarray, np.ndarray]]:
        """Expanded (parent, left, right) label arrays per gate kind."""
        if self.gates is not None:
            return self.gates.grouped()
        grouped: dict[GateKind, list] = {}
        for rule in self.rules:
            grouped.setdefault(rule.kind, []).append(rule.expand())
        return {
            kind: tuple(np.concatenate([part[c] for part in parts]) for c in range(3))
            for kind, parts in grouped.items()
        }

    def gate_count(self) -> int:
        if self.gates is not None:
            return len(self.gates.kinds)
        return sum(rule.gate_count() for rule in self.rules)


@dataclass
class Circuit:
    """
    A layered circuit plus the metadata needed to feed it and read it.

    final_sum marks circuits whose answer is the sum of every top-layer
    gate rather than the single gate 0.
    """

    layers: list[Layer]
    input_vars: int
    family: str = 'custom'
    gate_set: str = ''
    final_sum: bool = False
    n: int = 0
    q: int = 0
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.layers:
            raise CircuitError("a circuit needs at least one layer")
        if not self.final_sum and self.layers[0].num_vars != 0:
            raise CircuitError("the top layer of a single-output circuit has exactly one gate")
        for i, layer in enumerate(self.layers):
            if layer.gates is None:
                for rule in layer.rules:
                    rule.validate(layer.num_vars, self.layer_vars(i + 1))
                    if rule.kind is GateKind.POW and layer.power < 1:
                        raise CircuitError(f"layer {i} has POW gates but no power")

    @property
    def depth(self) -> int:
        return len(self.layers)

    def layer_vars(self, i: int) -> int:
        return self.layers[i].num_vars if i < self.depth else self.input_vars

    @property
    def input_size(self) -> int:
        return 1 << self.input_vars

    def gate_count(self) -> int:
        """Gates above the input layer."""
        return sum(layer.gate_count() for layer in self.layers)

    @property
    def size(self) -> int:
        """Gates including the n input gates."""
        return self.gate_count() + (self.n or self.input_size)

    @property
    def has_closed_form(self) -> bool:
        return all(layer.has_closed_form for layer in self.layers)

    # ------------------------------------------------------------------
    # Evaluation
    # ------------------------------------------------------------------

    def evaluate(self, inputs) -> list[np.ndarray]:
        """Values of every layer, index 0 (top) through d (inputs)."""
        values = as_vector(np.asarray(inputs))
        if values.size > self.input_size:
            raise CircuitError(f"{values.size} inputs exceed the {self.input_size} input labels")
        padded = np.zeros(self.input_size, dtype=np.uint64)
        padded[:values.size] = values
        layers = [padded]
        for layer in reversed(self.layers):
            layers.append(evaluate_layer(layer, layers[-1]))
        layers.reverse()
        return layers

    def output(self, values: list[np.ndarray]) -> int:
        top = values[0]
        return vec_sum(top) if self.final_sum else int(top[0])

    # ------------------------------------------------------------------
    # Wiring predicates
    # ------------------------------------------------------------------

    def wiring_mle(self, i: int, p, w1, w2, mode: str = 'closed') -> dict[GateKind, int]:
        """Extensions of the ADD, SUB, MUL, POW and CONST predicates of layer i."""
        if mode not in WIRING_MODES:
            raise ValueError(f"unknown wiring mode {mode!r}")
        layer = self.layers[i]
        if mode == 'closed' and not layer.has_closed_form:
            logger.warning(f"Layer {i} has no closed-form wiring; falling back to the generic pass")
            mode = 'generic'
        if mode == 'closed':
            out = {kind: 0 for kind in GateKind}
            for rule in layer.rules:
                out[rule.kind] = (out[rule.kind] + rule.mle(p, w1, w2)) % P
            return out
        return generic_wiring_mle(layer, p, w1, w2)

    def const_mle(self, i: int, p, mode: str = 'closed') -> int:
        layer = self.layers[i]
        if GateKind.CONST not in layer.kinds:
            return 0
        if mode == 'closed' and layer.has_closed_form:
            total = 0
            for rule in layer.rules:
                if rule.kind is GateKind.CONST:
                    total = (total + rule.mle(p)) % P
            return total
        parents = layer.wires[GateKind.CONST][0]
        return vec_sum(eq_table(p)[parents])

    def const_count(self, i: int) -> int:
        layer = self.layers[i]
        if GateKind.CONST not in layer.kinds:
            return 0
        if layer.gates is not None:
            return int(layer.wires[GateKind.CONST][0].size)
        return sum(rule.gate_count() for rule in layer.rules if rule.kind is GateKind.CONST)

    # ------------------------------------------------------------------
    # Debug
    # ------------------------------------------------------------------

    def dump(self) -> str:
        """One line per gate: layer, label, kind, in1, in2."""
        lines = []
        for i, layer in enumerate(self.layers):
            rows = []
            for kind, (parents, lefts, rights) in layer.wires.items():
                for k in range(parents.size):
                    if kind is GateKind.CONST:
                        rows.append((int(parents[k]), f"{i} {int(parents[k])} CONST - -"))
                    else:
                        rows.append((int(parents[k]),
                                     f"{i} {int(parents[k])} {kind.value} {int(lefts[k])} {int(rights[k])}"))
            lines.extend(text for _, text in sorted(rows))
        return "\n".join(lines)


def evaluate_layer(layer: Layer, below: np.ndarray) -> np.ndarray:
    out = np.zeros(1 << layer.num_vars, dtype=np.uint64)
    for kind, (parents, lefts, rights) in layer.wires.items():
        if kind is GateKind.CONST:
            out[parents] = 1
            continue
        out[parents] = apply_gate(kind, below[lefts], below[rights], layer.power)
    return out


def apply_gate(kind: GateKind, left: np.ndarray, right: np.ndarray, power: int = 0) -> np.ndarray:
    if kind is GateKind.ADD:
        return vec_add(left, right)
    if kind is GateKind.SUB:
        return vec_sub(left, right)
    if kind is GateKind.MUL:
        return vec_mul(left, right)
    if kind is GateKind.POW:
        return vec_mul(vec_power(left, power), vec_power(right, power))
    raise CircuitError(f"{kind.value} gates have no inputs")


def generic_wiring_mle(layer: Layer, p, w1, w2) -> dict[GateKind, int]:
    """
    One pass over the layer's gates with full equality tables.

    Reference path only: the tables take O(2^v) space per label. The closed
    forms in circuits.wiring evaluate the same MLEs in O(label bits) space.
    """
    eq_p, eq_1, eq_2 = eq_table(p), eq_table(w1), eq_table(w2)
    out = {kind: 0 for kind in GateKind}
    for kind, (parents, lefts, rights) in layer.wires.items():
        if kind is GateKind.CONST:
            out[kind] = vec_sum(eq_p[parents])
        else:
            out[kind] = vec_dot(eq_p[parents], vec_mul(eq_1[lefts], eq_2[rights]))
    return out
