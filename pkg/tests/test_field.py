import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from arithmetic.field import (
    P, GENERATOR, P_MINUS_ONE_FACTORS, FieldError,
    add, sub, neg, mul, power, inv, inv_euclid, div, batch_inverse, from_int, to_signed, reduce,
    encode, decode, encode_many, decode_many, as_vector, random_vector,
    vec_add, vec_sub, vec_neg, vec_mul, vec_scale, vec_power, vec_powers_of, vec_inv,
    vec_from_signed, vec_sum, vec_dot, vec_group_sum, vec_prod,
)

elements = st.integers(min_value=0, max_value=P - 1)
nonzero = st.integers(min_value=1, max_value=P - 1)


class TestScalars:
    @given(elements, elements)
    def test_add_sub_mul_match_python_modular_arithmetic(self, a, b):
        assert add(a, b) == (a + b) % P
        assert sub(a, b) == (a - b) % P
        assert mul(a, b) == (a * b) % P

    @given(nonzero)
    def test_inverse_agrees_with_extended_euclid(self, a):
        assert inv(a) == inv_euclid(a)
        assert mul(a, inv(a)) == 1

    @given(elements)
    def test_negation(self, a):
        assert add(a, neg(a)) == 0

    def test_zero_has_no_inverse(self):
        with pytest.raises(FieldError):
            inv(0)
        with pytest.raises(FieldError):
            inv_euclid(P)
        with pytest.raises(FieldError):
            div(5, 0)

    def test_power_edge_cases(self):
        assert power(0, 0) == 1
        assert power(GENERATOR, P - 1) == 1
        with pytest.raises(FieldError):
            power(3, -1)

    def test_generator_has_full_order(self):
        for q in P_MINUS_ONE_FACTORS:
            assert power(GENERATOR, (P - 1) // q) != 1

    @given(st.integers(min_value=-(1 << 80), max_value=1 << 80))
    def test_from_int_handles_signed_wide_values(self, x):
        assert from_int(x) == x % P

    def test_reduce_folds_wide_values(self):
        assert reduce(P) == 0
        assert reduce(P * P + 7) == 7
        assert reduce((1 << 122) - 1) == ((1 << 122) - 1) % P

    def test_to_signed_centers_values(self):
        assert to_signed(from_int(-5)) == -5
        assert to_signed(5) == 5

    @given(st.lists(nonzero, min_size=1, max_size=20))
    def test_batch_inverse(self, values):
        assert batch_inverse(values) == [inv(v) for v in values]

    def test_batch_inverse_rejects_zero(self):
        with pytest.raises(FieldError):
            batch_inverse([1, 0, 2])


class TestEncoding:
    def test_encoding_is_eight_little_endian_bytes(self):
        assert encode(1) == b"\x01" + b"\x00" * 7
        assert decode(encode(P - 1)) == P - 1

    def test_non_canonical_values_are_rejected(self):
        with pytest.raises(FieldError):
            decode(P.to_bytes(8, 'little'))
        with pytest.raises(FieldError):
            decode_many(((1 << 64) - 1).to_bytes(8, 'little'))
        with pytest.raises(FieldError):
            decode(b"\x00" * 7)
        with pytest.raises(FieldError):
            decode_many(b"\x00" * 9)

    def test_decode_many(self):
        values = np.array([0, 1, P - 1], dtype=np.uint64)
        assert np.array_equal(decode_many(encode_many(values)), values)


class TestVectors:
    @settings(max_examples=50)
    @given(st.lists(st.tuples(elements, elements), min_size=1, max_size=30))
    def test_vector_ops_match_scalar_ops(self, pairs):
        a = np.array([x for x, _ in pairs], dtype=np.uint64)
        b = np.array([y for _, y in pairs], dtype=np.uint64)
        assert vec_add(a, b).tolist() == [add(x, y) for x, y in pairs]
        assert vec_sub(a, b).tolist() == [sub(x, y) for x, y in pairs]
        assert vec_mul(a, b).tolist() == [mul(x, y) for x, y in pairs]
        assert vec_neg(a).tolist() == [neg(x) for x, _ in pairs]
        assert vec_sum(a) == sum(x for x, _ in pairs) % P
        assert vec_dot(a, b) == sum(x * y for x, y in pairs) % P

    def test_extreme_products(self, rng):
        a = np.array([P - 1, P - 1, 1 << 60, P - 2], dtype=np.uint64)
        b = np.array([P - 1, 2, 1 << 60, P - 2], dtype=np.uint64)
        assert vec_mul(a, b).tolist() == [mul(int(x), int(y)) for x, y in zip(a, b)]
        v = random_vector(rng, 1000)
        assert vec_mul(v, vec_inv(v)).tolist() == [1] * 1000

    def test_sum_along_axis(self, rng):
        grid = random_vector(rng, (5, 7))
        rows = vec_sum(grid, axis=1)
        assert rows.tolist() == [sum(int(v) for v in row) % P for row in grid]

    def test_powers(self):
        a = np.array([2, 3, 0], dtype=np.uint64)
        assert vec_power(a, 5).tolist() == [32, 243, 0]
        assert vec_powers_of(3, [0, 1, 4]).tolist() == [1, 3, 81]
        assert vec_scale(a, 2).tolist() == [4, 6, 0]
        assert vec_prod(np.array([2, 3, 7], dtype=np.uint64)) == 42

    def test_signed_conversion(self):
        assert vec_from_signed(np.array([-1, 0, 5])).tolist() == [P - 1, 0, 5]
        assert as_vector([-(1 << 70), 3]).tolist() == [from_int(-(1 << 70)), 3]

    def test_group_sum(self):
        values = np.array([P - 1, P - 1, 4, 5], dtype=np.uint64)
        assert vec_group_sum(values, [0, 0, 2, 2], 3).tolist() == [P - 2, 0, 9]

    def test_vec_inv_rejects_zero(self):
        with pytest.raises(FieldError):
            vec_inv(np.array([1, 0], dtype=np.uint64))
