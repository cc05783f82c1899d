"""
Protocols for expressions built from sum, OR, AND and linearization
operators over a multilinear base polynomial f on {0,1}^d.

The base is the indicator of a key set K. Variables 0..k1-1 are summed;
every later variable c is collapsed by an OR or an AND, after which all
lower variables are linearized again, so each round polynomial has degree
at most 2. Written outermost first:

    SUM_0 .. SUM_(k1-1) | LIN_(k1-1) .. LIN_0 Q_k1 | ... | LIN_(d-2) .. LIN_0 Q_(d-1) | f

Because linearization keeps values on the cube, the expression below the
block of variable c is the multilinear extension of a boolean support set
S_c (S_d = K, S_c = the OR / AND of S_(c+1) over variable c). The prover
works from these sets alone.

F0     keys item | position << log n; items summed, positions ORed.
PMWW   keys over [position | offset | symbol | side]: positions summed,
       offsets ANDed, symbols ORed, the text/pattern side ANDed.
"""

import logging
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from arithmetic.field import (
    P, add, sub, mul, random_element,
    vec_add, vec_sub, vec_mul, vec_sum, vec_dot, vec_group_sum,
)
from arithmetic.mle import chi_indices, interpolate_eval, log2_exact, next_power_of_two
from protocols.base import Prover, RejectReason, Verdict, Verifier
from streaming.oracles import Problem
from streaming.stream import DEFAULT_ALPHABET, StreamFormatError
from transport.channel import Endpoint, MessageTag

logging.basicConfig(
    level=logging.INFO,
    format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
)
logger = logging.getLogger(__name__)


# ============================================================================
# Expressions
# ============================================================================

class LinOp(str, Enum):
    SUM = "SUM"
    OR = "OR"
    AND = "AND"
    LIN = "LIN"


QUANTIFIERS = (LinOp.SUM, LinOp.OR, LinOp.AND)


@dataclass(frozen=True)
class LinOperator:
    """One operator; `block` is the variable collapsed by its block (-1 for sums)."""

    op: LinOp
    var: int
    block: int = -1

    @property
    def arity(self) -> int:
        """Evaluations per round message."""
        return 3 if self.op is LinOp.LIN else 2


@dataclass(frozen=True)
class LinExpression:
    operators: tuple[LinOperator, ...]
    quantifiers: tuple[LinOp, ...]

    @property
    def num_vars(self) -> int:
        return len(self.quantifiers)

    @property
    def leading_sums(self) -> int:
        return sum(1 for q in self.quantifiers if q is LinOp.SUM)

    def size(self) -> int:
        """Operators other than the leading sums."""
        return sum(1 for o in self.operators if o.op is not LinOp.SUM)

    def max_degree(self) -> int:
        return max((o.arity - 1 for o in self.operators), default=0)

    def final_bindings(self) -> list[bool]:
        """True where an operator binds its variable for the last time."""
        seen: set[int] = set()
        last = [False] * len(self.operators)
        for t in range(len(self.operators) - 1, -1, -1):
            var = self.operators[t].var
            if var not in seen:
                last[t] = True
                seen.add(var)
        return last

    def describe(self) -> str:
        return " ".join(f"{o.op.value}_{o.var}" for o in self.operators)


def linearized_expression(quantifiers) -> LinExpression:
    quantifiers = tuple(LinOp(q) for q in quantifiers)
    if any(q not in QUANTIFIERS for q in quantifiers):
        raise ValueError("quantifiers must be SUM, OR or AND")
    k1 = 0
    while k1 < len(quantifiers) and quantifiers[k1] is LinOp.SUM:
        k1 += 1
    if any(q is LinOp.SUM for q in quantifiers[k1:]):
        raise ValueError("summed variables must come first")
    operators = [LinOperator(LinOp.SUM, k) for k in range(k1)]
    for c in range(k1, len(quantifiers)):
        operators.extend(LinOperator(LinOp.LIN, j, c) for j in range(c - 1, -1, -1))
        operators.append(LinOperator(quantifiers[c], c, c))
    return LinExpression(tuple(operators), quantifiers)


def expression_size_bound(d: int) -> int:
    """(3d^2 + 3d) / 2, the size bound for d variables."""
    return (3 * d * d + 3 * d) // 2


@dataclass(frozen=True)
class PmwwLayout:
    """Bit widths of [position | offset | symbol | side]."""

    n: int
    q: int
    alphabet: int

    def __post_init__(self):
        if not 1 <= self.q <= self.n:
            raise ValueError(f"pattern length q={self.q} must lie in [1, {self.n}]")
        if self.alphabet < 1:
            raise ValueError("alphabet must hold at least one symbol")

    @property
    def position_bits(self) -> int:
        return log2_exact(next_power_of_two(self.n))

    @property
    def offset_bits(self) -> int:
        return log2_exact(next_power_of_two(self.q))

    @property
    def symbol_bits(self) -> int:
        return log2_exact(next_power_of_two(self.alphabet))

    @property
    def num_vars(self) -> int:
        return self.position_bits + self.offset_bits + self.symbol_bits + 1

    def key(self, position, offset, symbol, side):
        shift_o = self.position_bits
        shift_s = shift_o + self.offset_bits
        shift_c = shift_s + self.symbol_bits
        return position | (offset << shift_o) | (symbol << shift_s) | (side << shift_c)

    def split(self, point):
        a, b, c = self.position_bits, self.offset_bits, self.symbol_bits
        return point[:a], point[a:a + b], point[a + b:a + b + c], point[a + b + c]

    def check_symbols(self, symbols) -> None:
        symbols = np.asarray(symbols, dtype=np.int64)
        bad = (symbols != self.n) & ((symbols < 0) | (symbols >= self.alphabet))
        if bad.any():
            raise StreamFormatError(
                f"symbol {int(symbols[bad][0])} outside the alphabet [0, {self.alphabet}) and not the wildcard"
            )


def build_expression(problem, n: int, m: int = 0, q: int = 0, alphabet: int = DEFAULT_ALPHABET) -> LinExpression:
    problem = Problem(problem)
    if problem is Problem.F0:
        return linearized_expression([LinOp.SUM] * log2_exact(n) + [LinOp.OR] * log2_exact(m))
    if problem is Problem.PMWW:
        layout = PmwwLayout(n, q, alphabet)
        return linearized_expression(
            [LinOp.SUM] * layout.position_bits + [LinOp.AND] * layout.offset_bits
            + [LinOp.OR] * layout.symbol_bits + [LinOp.AND]
        )
    raise ValueError(f"no linearized expression for {problem.value}")


# ============================================================================
# Key sets
# ============================================================================

def _inserted_items(stream, m: int) -> np.ndarray:
    """Items of the nonzero updates; zero deltas are no-ops and take no position."""
    if stream.length and int(stream.deltas.min()) < 0:
        raise StreamFormatError("distinct-element linearization needs an insert-only stream")
    items = stream.indices[stream.deltas != 0]
    if items.size > m:
        raise StreamFormatError(f"stream of {items.size} insertions exceeds m={m}")
    return items


def f0_keys(stream, n: int, m: int) -> np.ndarray:
    """item | position << log n for every insertion of an insert-only stream."""
    items = _inserted_items(stream, m)
    positions = np.arange(items.size, dtype=np.int64)
    return np.unique(items | (positions << log2_exact(n)))


def pmww_keys(text, pattern, layout: PmwwLayout) -> np.ndarray:
    """
    Side 0 holds (position, offset, symbol) when text[position + offset]
    is symbol or a wildcard; side 1 holds them when pattern[offset] is.
    Offsets past the pattern hold every key on both sides.
    """
    n, q = layout.n, layout.q
    text = np.asarray(text, dtype=np.int64)
    pattern = np.asarray(pattern, dtype=np.int64)
    layout.check_symbols(text)
    layout.check_symbols(pattern)
    positions = np.arange(1 << layout.position_bits, dtype=np.int64)
    symbols = np.arange(1 << layout.symbol_bits, dtype=np.int64)

    def every_symbol(pos, offset, side):
        pos_grid, sym_grid = np.meshgrid(pos, symbols, indexing='ij')
        return layout.key(pos_grid.ravel(), offset, sym_grid.ravel(), side)

    keys = []
    for offset in range(1 << layout.offset_bits):
        if offset >= q:
            keys.append(every_symbol(positions, offset, 0))
            keys.append(every_symbol(positions, offset, 1))
            continue
        valid = positions[positions + offset < n]
        chars = text[valid + offset]
        wild = chars == n
        keys.append(layout.key(valid[~wild], offset, chars[~wild], 0))
        keys.append(every_symbol(valid[wild], offset, 0))
        if pattern[offset] == n:
            keys.append(every_symbol(positions, offset, 1))
        else:
            keys.append(layout.key(positions, offset, np.full(positions.size, pattern[offset]), 1))
    return np.unique(np.concatenate(keys).astype(np.int64))


def support_sets(keys: np.ndarray, expression: LinExpression) -> dict[int, np.ndarray]:
    """S_c for c = k1..d: the collapse of the key set down to its first c bits."""
    d = expression.num_vars
    sets = {d: np.unique(np.asarray(keys, dtype=np.int64))}
    for c in range(d - 1, expression.leading_sums - 1, -1):
        prefixes = sets[c + 1] & ((1 << c) - 1)
        unique, counts = np.unique(prefixes, return_counts=True)
        sets[c] = unique if expression.quantifiers[c] is LinOp.OR else unique[counts == 2]
    return sets


def quantify(op: LinOp, g0, g1):
    """SUM, OR or AND of two field vectors."""
    if op is LinOp.OR:
        return vec_sub(vec_add(g0, g1), vec_mul(g0, g1))
    if op is LinOp.AND:
        return vec_mul(g0, g1)
    return vec_add(g0, g1)


def quantify_scalar(op: LinOp, s0: int, s1: int) -> int:
    if op is LinOp.OR:
        return sub(add(s0, s1), mul(s0, s1))
    if op is LinOp.AND:
        return mul(s0, s1)
    return add(s0, s1)


# ============================================================================
# Grid tables
# ============================================================================

@dataclass
class GridTable:
    """
    A polynomial of degree <= 2 per variable, held by its values on
    {0,1,2}^k. Axis a of `values` is variable `variables[a]`.
    """

    values: np.ndarray
    variables: list[int] = field(default_factory=list)

    @classmethod
    def from_boolean(cls, cube: np.ndarray, num_vars: int) -> "GridTable":
        """Multilinear extension of a table over {0,1}^d indexed LSB-first."""
        values = np.asarray(cube, dtype=np.uint64).reshape((2,) * num_vars, order='F')
        for axis in range(num_vars):
            v0 = np.take(values, 0, axis=axis)
            v1 = np.take(values, 1, axis=axis)
            v2 = vec_sub(vec_add(v1, v1), v0)
            values = np.stack([v0, v1, v2], axis=axis)
        return cls(values, list(range(num_vars)))

    def axis(self, var: int) -> int:
        return self.variables.index(var)

    def at(self, var: int, x: int) -> np.ndarray:
        return np.take(self.values, x, axis=self.axis(var))

    def scalar(self) -> int:
        if self.variables:
            raise ValueError(f"variables {self.variables} are still free")
        return int(self.values)


def apply_operator(operator: LinOperator, table: GridTable) -> GridTable:
    """Apply one operator to a grid table; quantifiers remove their variable."""
    g0, g1 = table.at(operator.var, 0), table.at(operator.var, 1)
    if operator.op is LinOp.LIN:
        g2 = vec_sub(vec_add(g1, g1), g0)
        values = np.stack([g0, g1, g2], axis=table.axis(operator.var))
        return GridTable(values, list(table.variables))
    remaining = [v for v in table.variables if v != operator.var]
    return GridTable(np.asarray(quantify(operator.op, g0, g1), dtype=np.uint64), remaining)


def evaluate_expression(expression: LinExpression, keys: np.ndarray) -> int:
    """Apply every operator, innermost first, to the key indicator."""
    d = expression.num_vars
    cube = np.zeros(1 << d, dtype=np.uint64)
    cube[np.asarray(keys, dtype=np.int64)] = 1
    table = GridTable.from_boolean(cube, d)
    for operator in reversed(expression.operators):
        table = apply_operator(operator, table)
    return table.scalar()


# ============================================================================
# Prover
# ============================================================================

class LinProver(Prover):
    def __init__(self, expression: LinExpression, keys: np.ndarray):
        self.expression = expression
        self.supports = support_sets(keys, expression)
        self.point = [0] * expression.num_vars
        self.field_ops = 0
        logger.info(
            f"Linearization prover: d={expression.num_vars}, {len(expression.operators)} operators, "
            f"{self.supports[expression.num_vars].size} keys"
        )

    @property
    def answer(self) -> int:
        return int(self.supports[self.expression.leading_sums].size)

    def run(self, endpoint: Endpoint) -> None:
        endpoint.send(MessageTag.CLAIM, [self.answer])
        for operator in self.expression.operators:
            endpoint.send(MessageTag.ROUND, self.message(operator))
            self.point[operator.var] = endpoint.receive_challenge()

    def message(self, operator: LinOperator) -> np.ndarray:
        if operator.op is LinOp.LIN:
            return self._linearization_message(operator.var, operator.block)
        if operator.op is LinOp.SUM:
            support = self.supports[self.expression.leading_sums]
        else:
            support = self.supports[operator.var + 1]
        return self._split_message(support, operator.var)

    def _split_message(self, support: np.ndarray, var: int) -> np.ndarray:
        """s(0), s(1) of sum_s chi_(s below var)(a) chi_(s_var)(X)."""
        weights = chi_indices(support, self.point[:var])
        self.field_ops += int(support.size) * (var + 1)
        return vec_group_sum(weights, (support >> var) & 1, 2)

    def _linearization_message(self, j: int, c: int) -> np.ndarray:
        """
        s(X) = sum_b chi_b(a_<j) OP(G_b(0, X), G_b(1, X)) over prefixes b of
        bits below j, with G_b(side, X) the base restricted to prefix b, bit
        j = X, bits j+1..c-1 at a and bit c = side.
        """
        support = self.supports[c + 1]
        op = self.expression.quantifiers[c]
        bit_j = (support >> j) & 1
        side = (support >> c) & 1
        suffix = chi_indices(support >> (j + 1), self.point[j + 1:c])
        prefixes, inverse = np.unique(support & ((1 << j) - 1), return_inverse=True)
        cells = vec_group_sum(suffix, inverse * 4 + side * 2 + bit_j, 4 * prefixes.size).reshape(-1, 2, 2)
        outer = chi_indices(prefixes, self.point[:j])
        evals = []
        for x in range(3):
            g = vec_add(vec_mul(cells[:, :, 0], np.uint64((1 - x) % P)), vec_mul(cells[:, :, 1], np.uint64(x)))
            evals.append(vec_dot(outer, quantify(op, g[:, 0], g[:, 1])))
        self.field_ops += int(support.size) * (c + 1) + 12 * int(prefixes.size)
        return np.asarray(evals, dtype=np.uint64)


# ============================================================================
# Verifiers
# ============================================================================

class LinVerifier(Verifier):
    """
    Fixes the final point r before the stream. Each variable's last
    binding uses r; every other challenge is fresh.
    """

    def __init__(self, expression: LinExpression, seed: int):
        super().__init__()
        self.expression = expression
        self.rng = np.random.default_rng(seed)
        self.point = [random_element(self.rng) for _ in range(expression.num_vars)]
        self.base_value = 0
        self.space.observe(expression.num_vars + 1)

    def _accumulate(self, contributions: np.ndarray) -> None:
        self.base_value = add(self.base_value, vec_sum(contributions))

    def verify(self, endpoint: Endpoint) -> Verdict:
        claim = endpoint.receive(MessageTag.CLAIM)
        if claim.size != 1:
            return Verdict.reject(RejectReason.ARITY, 0)
        answer = int(claim[0])
        current = answer
        bound = [0] * self.expression.num_vars
        final = self.expression.final_bindings()
        self.space.observe(3 * self.expression.num_vars + 6)
        for t, operator in enumerate(self.expression.operators):
            evals = endpoint.receive(MessageTag.ROUND)
            if evals.size != operator.arity:
                return Verdict.reject(RejectReason.ARITY, t + 1)
            s0, s1 = int(evals[0]), int(evals[1])
            if operator.op is LinOp.LIN:
                a = bound[operator.var]
                expected = add(mul(a, s1), mul(sub(1, a), s0))
            else:
                expected = quantify_scalar(operator.op, s0, s1)
            if expected != current:
                return Verdict.reject(RejectReason.ROUND_SUM, t + 1)
            r = self.point[operator.var] if final[t] else random_element(self.rng)
            endpoint.send_challenge(r)
            bound[operator.var] = r
            current = interpolate_eval(evals, r)
        if current != self.base_value:
            return Verdict.reject(RejectReason.FINAL_EVAL, len(self.expression.operators))
        return Verdict.accept(answer)


class F0LinVerifier(LinVerifier):
    """f(r) = sum over updates of chi_(item | position << log n)(r)."""

    def __init__(self, n: int, m: int, seed: int):
        super().__init__(build_expression(Problem.F0, n, m), seed)
        self.n, self.m = n, m
        self.position = 0

    def stream(self, stream) -> None:
        items = _inserted_items(stream, self.m)
        if self.position + items.size > self.m:
            raise StreamFormatError(f"more than m={self.m} insertions")
        positions = self.position + np.arange(items.size, dtype=np.int64)
        keys = items | (positions << log2_exact(self.n))
        self._accumulate(chi_indices(keys, self.point))
        self.position += int(items.size)


class PmwwLinVerifier(LinVerifier):
    """
    A text symbol at t adds chi(t - k, k, symbol, 0) for every offset k < q;
    a pattern symbol at k adds chi(k, symbol, 1), since its keys cover every
    position. Wildcards cover every symbol, whose chi values sum to 1.
    """

    def __init__(self, n: int, q: int, seed: int, alphabet: int = DEFAULT_ALPHABET):
        super().__init__(build_expression(Problem.PMWW, n, q=q, alphabet=alphabet), seed)
        self.layout = PmwwLayout(n, q, alphabet)
        self.r_pos, self.r_off, self.r_sym, self.r_side = self.layout.split(self.point)
        padding = np.arange(q, 1 << self.layout.offset_bits, dtype=np.int64)
        self._accumulate(chi_indices(padding, self.r_off))

    def _symbol_factor(self, symbols: np.ndarray) -> np.ndarray:
        weights = chi_indices(np.where(symbols == self.layout.n, 0, symbols), self.r_sym)
        return np.where(symbols == self.layout.n, np.uint64(1), weights)

    def stream(self, stream) -> None:
        n, q = self.layout.n, self.layout.q
        if stream.indices.size and int(stream.indices.max()) >= n + q:
            raise StreamFormatError(f"update index beyond text and pattern [0, {n + q})")
        self.layout.check_symbols(stream.deltas)
        is_text = stream.indices < n
        t = stream.indices[is_text]
        if t.size:
            offsets = np.arange(q, dtype=np.int64)
            positions = t[:, None] - offsets[None, :]
            valid = positions >= 0
            weights = vec_mul(
                chi_indices(np.where(valid, positions, 0), self.r_pos),
                chi_indices(np.broadcast_to(offsets, positions.shape), self.r_off),
            )
            weights = vec_mul(weights, self._symbol_factor(stream.deltas[is_text])[:, None])
            weights = np.where(valid, weights, np.uint64(0))
            self._accumulate(vec_mul(weights, np.uint64(sub(1, self.r_side))))
        k = stream.indices[~is_text] - n
        if k.size:
            weights = vec_mul(chi_indices(k, self.r_off), self._symbol_factor(stream.deltas[~is_text]))
            self._accumulate(vec_mul(weights, np.uint64(self.r_side)))


# ============================================================================
# Construction
# ============================================================================

def lin_parties(problem, stream, *, n: int, m: int = 0, q: int = 0, seed: int = 1,
                alphabet: int = DEFAULT_ALPHABET) -> tuple[LinProver, LinVerifier]:
    """Honest prover and verifier for F0 (m = padded stream length) or PMWW (n = text length)."""
    problem = Problem(problem)
    if problem is Problem.F0:
        m = next_power_of_two(max(m, stream.length, 1))
        universe = next_power_of_two(n)
        expression = build_expression(problem, universe, m)
        return LinProver(expression, f0_keys(stream, universe, m)), F0LinVerifier(universe, m, seed)
    if problem is Problem.PMWW:
        layout = PmwwLayout(n, q, alphabet)
        freq = stream.frequency_vector()
        text, pattern = freq[:n], freq[n:n + q]
        expression = build_expression(problem, n, q=q, alphabet=alphabet)
        return LinProver(expression, pmww_keys(text, pattern, layout)), PmwwLinVerifier(n, q, seed, alphabet)
    raise ValueError(f"linearization supports F0 and PMWW, not {problem.value}")
