import numpy as np
import pytest

from arithmetic.field import P, mul, power, random_vector, vec_mul, vec_powers_of, vec_sum
from arithmetic.pfa import (
    DIVISORS, MAX_TRANSFORM_LENGTH, TransformLengthError,
    choose_transform_length, circular_convolution, dft, divisor_gaps, factor_length,
    fastest_transform_length, padding_ratio, transform_cost, transform_plan,
)


def naive_dft(values, omega):
    n = len(values)
    return [sum(mul(int(values[j]), power(omega, j * k)) for j in range(n)) % P for k in range(n)]


def direct_dft(values, omega, block=1 << 20):
    """sum_j values[j] omega^(jk) for every k, the O(N^2) way, in row blocks."""
    n = values.size
    powers = vec_powers_of(omega, np.arange(n))
    j = np.arange(n, dtype=np.int64)
    rows = max(1, block // n)
    out = []
    for start in range(0, n, rows):
        k = np.arange(start, min(n, start + rows), dtype=np.int64)
        out.append(vec_sum(vec_mul(powers[np.outer(k, j) % n], values[None, :]), axis=1))
    return np.concatenate(out)


def naive_convolution(a, b):
    n = len(a)
    return [sum(mul(int(a[i]), int(b[(j - i) % n])) for i in range(n)) % P for j in range(n)]


def test_divisors_of_p_minus_one():
    assert DIVISORS[0] == 1
    assert DIVISORS[-1] == P - 1
    assert all((P - 1) % d == 0 for d in DIVISORS)
    assert MAX_TRANSFORM_LENGTH < 1 << 32


def test_factor_length_splits_into_coprime_prime_powers():
    assert factor_length(90) == (2, 9, 5)
    assert factor_length(1) == ()
    with pytest.raises(TransformLengthError):
        factor_length(17)


@pytest.mark.parametrize("length", [1, 2, 6, 30, 90, 11 * 13, 2 * 9 * 5 * 7])
def test_forward_transform_matches_naive_dft(length, rng):
    plan = transform_plan(length)
    values = random_vector(rng, length)
    assert dft(plan, values).tolist() == naive_dft(values, plan.omega)
    assert power(plan.omega, length) == 1


@pytest.mark.parametrize("length", [6, 150, 3 * 5 * 7 * 11])
def test_inverse_transform_restores_input(length, rng):
    plan = transform_plan(length)
    values = random_vector(rng, (length, 3))
    assert np.array_equal(dft(plan, dft(plan, values), inverse=True), values)


def test_transform_rejects_non_divisor_and_mismatched_data():
    with pytest.raises(TransformLengthError):
        transform_plan(4)
    with pytest.raises(ValueError):
        dft(transform_plan(6), np.zeros(5, dtype=np.uint64))


def test_choose_transform_length_picks_smallest_divisor():
    assert choose_transform_length(64).length == 65
    assert choose_transform_length(66).length == 66
    assert choose_transform_length(4).length == 5
    assert choose_transform_length(100).length == 105
    assert choose_transform_length(90000).length == 90090
    with pytest.raises(TransformLengthError):
        choose_transform_length(MAX_TRANSFORM_LENGTH + 1)
    with pytest.raises(ValueError):
        choose_transform_length(0)


def test_circular_convolution_matches_naive(rng):
    plan = transform_plan(30)
    a, b = random_vector(rng, 30), random_vector(rng, 30)
    assert circular_convolution(a, b, plan).tolist() == naive_convolution(a, b)


def test_convolution_pads_and_batches(rng):
    a = random_vector(rng, (5, 4))
    b = random_vector(rng, 7)
    out = circular_convolution(a, b)
    n = out.shape[0]
    assert n == choose_transform_length(7).length
    padded_b = np.zeros(n, dtype=np.uint64)
    padded_b[:7] = b
    for column in range(4):
        padded_a = np.zeros(n, dtype=np.uint64)
        padded_a[:5] = a[:, column]
        assert out[:, column].tolist() == naive_convolution(padded_a, padded_b)


def test_padding_ratio_and_gaps():
    assert padding_ratio(66) == 1.0
    assert padding_ratio(64) == pytest.approx(65 / 64)
    assert divisor_gaps(60, 70) == [(60, 61), (62, 62), (63, 63), (64, 65), (66, 66), (67, 70)]
    assert max(chosen / requested for requested, chosen in divisor_gaps(100, 10 ** 6)) <= 1.16


@pytest.mark.parametrize("min_len, expected", [(1, 1), (512, 546), (1024, 1155), (4096, 4290)])
def test_fastest_transform_length_minimizes_cost(min_len, expected):
    plan = fastest_transform_length(min_len)
    assert plan.length == expected
    assert plan.operation_count == transform_cost(expected)
    assert transform_cost(expected) <= transform_cost(choose_transform_length(min_len).length)


@pytest.mark.slow
def test_every_small_divisor_matches_the_direct_dft(rng):
    for length in [d for d in DIVISORS if d <= 10 ** 4]:
        plan = transform_plan(length)
        values = random_vector(rng, length)
        assert np.array_equal(dft(plan, values), direct_dft(values, plan.omega)), length
