"""
Wiring rules: gate families described as data.

A rule names a gate kind and three bit tuples (parent label, left input
label, right input label), LSB-first. Each entry is a constant bit, a
variable name or a SumBit. Every assignment of the rule's variables gives
one gate, so a layer of 2^17 identical gates is a single rule.

The multilinear extension of the rule's predicate
    W(p, w1, w2) = sum over assignments a of [p = P(a)] [w1 = L(a)] [w2 = R(a)]
has a product form. Constant bits contribute one equality factor each, a
free variable x contributes prod_{z at x} z + prod_{z at x} (1 - z), and
two optional constraints are folded in by small dynamic programs:

limit   the integer spelled by some variables is at most a bound
carry   SumBit(k) entries spell the bits of x + y for two variable groups
"""

import logging
from dataclasses import dataclass
from enum import Enum
from typing import Sequence, Union

import numpy as np

from arithmetic.field import add, sub, mul

logging.basicConfig(
    level=logging.INFO,
    format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
)
logger = logging.getLogger(__name__)


class CircuitError(ValueError):
    """Malformed rule or layer, or an unsupported circuit request."""


class GateKind(str, Enum):
    ADD = "ADD"
    SUB = "SUB"
    MUL = "MUL"
    POW = "POW"
    CONST = "CONST"


BINARY_KINDS = (GateKind.ADD, GateKind.SUB, GateKind.MUL, GateKind.POW)


@dataclass(frozen=True)
class SumBit:
    """Bit k of x + y for the rule's carry groups; k = len(x) is the carry out."""

    k: int


Entry = Union[int, str, SumBit]


def var_bits(name: str, count: int) -> tuple[str, ...]:
    return tuple(f"{name}{k}" for k in range(count))


def zero_bits(count: int) -> tuple[int, ...]:
    return (0,) * count


def const_bits(value: int, count: int) -> tuple[int, ...]:
    if value >> count:
        raise CircuitError(f"label {value} does not fit in {count} bits")
    return tuple((value >> k) & 1 for k in range(count))


def eq_bit(z: int, bit: int) -> int:
    return z if bit else sub(1, z)


# ============================================================================
# Rules
# ============================================================================

@dataclass(frozen=True)
class WiringRule:
    kind: GateKind
    parent: tuple
    left: tuple = ()
    right: tuple = ()
    limit: tuple[tuple[str, ...], int] | None = None
    carry: tuple[tuple[str, ...], tuple[str, ...]] | None = None

    # ------------------------------------------------------------------
    # Structure
    # ------------------------------------------------------------------

    def variables(self) -> list[str]:
        names = []
        for entry in self.parent + self.left + self.right:
            if isinstance(entry, str) and entry not in names:
                names.append(entry)
        return names

    def validate(self, parent_vars: int, child_vars: int) -> None:
        if len(self.parent) != parent_vars:
            raise CircuitError(f"{self.kind.value} rule: parent has {len(self.parent)} bits, layer has {parent_vars}")
        if self.kind is GateKind.CONST:
            if self.left or self.right:
                raise CircuitError("CONST rules take no inputs")
        elif len(self.left) != child_vars or len(self.right) != child_vars:
            raise CircuitError(f"{self.kind.value} rule: input labels need {child_vars} bits")
        names = set(self.variables())
        for entry in self.left + self.right:
            if isinstance(entry, str) and entry not in self.parent:
                raise CircuitError(f"variable {entry} feeds an input but not the parent label")
        for entry in self.parent + self.left + self.right:
            if isinstance(entry, int) and entry not in (0, 1):
                raise CircuitError(f"bit entries must be 0 or 1, got {entry}")
        limit_vars = set(self.limit[0]) if self.limit else set()
        carry_vars = set(self.carry[0]) | set(self.carry[1]) if self.carry else set()
        if not limit_vars <= names or not carry_vars <= names:
            raise CircuitError("limit and carry variables must appear in the labels")
        if limit_vars & carry_vars:
            raise CircuitError("a variable cannot be both limited and carried")
        sum_bits = [e for e in self.parent + self.left + self.right if isinstance(e, SumBit)]
        if sum_bits and not self.carry:
            raise CircuitError("SumBit entries need a carry declaration")
        if self.carry:
            xs, ys = self.carry
            if len(ys) > len(xs):
                raise CircuitError("the second carry group may not be longer than the first")
            if any(not 0 <= s.k <= len(xs) for s in sum_bits):
                raise CircuitError("SumBit index beyond the carry width")

    def gate_count(self) -> int:
        free = len(self.variables())
        if not self.limit:
            return 1 << free
        names, bound = self.limit
        if bound < 0:
            return 0
        return (min(bound, (1 << len(names)) - 1) + 1) << (free - len(names))

    # ------------------------------------------------------------------
    # Expansion
    # ------------------------------------------------------------------

    def expand(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Parent, left and right labels of every gate the rule describes."""
        names = self.variables()
        assignments = np.arange(1 << len(names), dtype=np.int64)
        values = {name: (assignments >> k) & 1 for k, name in enumerate(names)}
        if self.limit:
            limit_names, bound = self.limit
            keep = _spelled(limit_names, values) <= bound
            assignments = assignments[keep]
            values = {name: v[keep] for name, v in values.items()}
        total = None
        if self.carry:
            xs, ys = self.carry
            total = _spelled(xs, values) + _spelled(ys, values)

        def label(bits: tuple) -> np.ndarray:
            out = np.zeros(assignments.size, dtype=np.int64)
            for position, entry in enumerate(bits):
                if isinstance(entry, SumBit):
                    out |= ((total >> entry.k) & 1) << position
                elif isinstance(entry, str):
                    out |= values[entry] << position
                elif entry:
                    out |= 1 << position
            return out

        parent = label(self.parent)
        if self.kind is GateKind.CONST:
            empty = np.zeros(0, dtype=np.int64)
            return parent, empty, empty
        return parent, label(self.left), label(self.right)

    # ------------------------------------------------------------------
    # Closed-form extension
    # ------------------------------------------------------------------

    def mle(self, p: Sequence[int], w1: Sequence[int] = (), w2: Sequence[int] = ()) -> int:
        """W(p, w1, w2) in O(label bits) field operations."""
        fixed = 1
        occurrences: dict[str, list[int]] = {}
        sum_coords: dict[int, list[int]] = {}
        pairs = list(zip(self.parent, p))
        if self.kind is not GateKind.CONST:
            pairs += list(zip(self.left, w1)) + list(zip(self.right, w2))
        for entry, z in pairs:
            if isinstance(entry, str):
                occurrences.setdefault(entry, []).append(z)
            elif isinstance(entry, SumBit):
                sum_coords.setdefault(entry.k, []).append(z)
            else:
                fixed = mul(fixed, eq_bit(z, entry))

        def weight(name: str | None, bit: int) -> int:
            result = 1
            for z in occurrences.get(name, ()):
                result = mul(result, eq_bit(z, bit))
            return result

        constrained = set()
        if self.limit:
            constrained |= set(self.limit[0])
        if self.carry:
            constrained |= set(self.carry[0]) | set(self.carry[1])

        result = fixed
        for name in occurrences:
            if name not in constrained:
                result = mul(result, add(weight(name, 0), weight(name, 1)))

        if self.limit:
            result = mul(result, _limit_sum(self.limit, weight))
        if self.carry:
            result = mul(result, _carry_sum(self.carry, weight, sum_coords))
        return result


def _spelled(names: Sequence[str], values: dict[str, np.ndarray]) -> np.ndarray:
    out = 0
    for k, name in enumerate(names):
        out = out + (values[name] << k)
    return out


def _limit_sum(limit, weight) -> int:
    """Sum of weights over assignments whose value is <= bound, MSB first."""
    names, bound = limit
    if bound < 0:
        return 0
    if bound >= (1 << len(names)) - 1:
        result = 1
        for name in names:
            result = mul(result, add(weight(name, 0), weight(name, 1)))
        return result
    tight, loose = 1, 0
    for k in range(len(names) - 1, -1, -1):
        w0, w1 = weight(names[k], 0), weight(names[k], 1)
        if (bound >> k) & 1:
            loose = add(mul(loose, add(w0, w1)), mul(tight, w0))
            tight = mul(tight, w1)
        else:
            loose = mul(loose, add(w0, w1))
            tight = mul(tight, w0)
    return add(loose, tight)


def _carry_sum(carry, weight, sum_coords: dict[int, list[int]]) -> int:
    """Sum over x, y of their weights times the weights of the bits of x + y, LSB first."""
    xs, ys = carry

    def sum_weight(k: int, bit: int) -> int:
        result = 1
        for z in sum_coords.get(k, ()):
            result = mul(result, eq_bit(z, bit))
        return result

    state = [1, 0]
    for k in range(len(xs)):
        new = [0, 0]
        x_weights = (weight(xs[k], 0), weight(xs[k], 1))
        y_weights = (weight(ys[k], 0), weight(ys[k], 1)) if k < len(ys) else (1, 0)
        s_weights = (sum_weight(k, 0), sum_weight(k, 1))
        for c in (0, 1):
            if not state[c]:
                continue
            for xb in (0, 1):
                for yb in (0, 1):
                    term = mul(x_weights[xb], y_weights[yb])
                    if not term:
                        continue
                    s = xb + yb + c
                    new[s >> 1] = add(new[s >> 1], mul(state[c], mul(term, s_weights[s & 1])))
        state = new
    return add(mul(state[0], sum_weight(len(xs), 0)), mul(state[1], sum_weight(len(xs), 1)))


# ============================================================================
# Explicit gate tables
# ============================================================================

@dataclass(frozen=True)
class GateTable:
    """Gates listed one by one, for circuits not described by rules."""

    kinds: tuple[GateKind, ...]
    parents: np.ndarray
    lefts: np.ndarray
    rights: np.ndarray

    def __post_init__(self):
        size = len(self.kinds)
        if not (self.parents.size == self.lefts.size == self.rights.size == size):
            raise CircuitError("gate table columns differ in length")

    def grouped(self) -> dict[GateKind, tuple[np.ndarray, np.ndarray, np.ndarray]]:
        kinds = np.array([k.value for k in self.kinds])
        out = {}
        for kind in GateKind:
            mask = kinds == kind.value
            if mask.any():
                out[kind] = (self.parents[mask].astype(np.int64),
                             self.lefts[mask].astype(np.int64),
                             self.rights[mask].astype(np.int64))
        return out
