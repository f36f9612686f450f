import itertools
import math

import numpy as np
import pytest

from ensdecomp.errors import DomainError, ParityError
from ensdecomp.theory import (
    diversity_effect_independent,
    majority_error_independent,
    nonexistence_counterexample,
    simulate_diversity_effect,
)


def enumerate_majority_error(eps, m):
    """Oracle: enumerate all 2^m correctness patterns."""
    total = 0.0
    for pattern in itertools.product([0, 1], repeat=m):  # 1 = error
        errors = sum(pattern)
        if errors > m / 2:
            total += (eps**errors) * ((1 - eps) ** (m - errors))
    return total


def test_majority_error_examples():
    assert majority_error_independent(0.0, 7) == 0.0
    assert majority_error_independent(1.0, 7) == 1.0
    assert majority_error_independent(0.5, 11) == pytest.approx(0.5, abs=1e-12)
    assert majority_error_independent(0.3, 3) == pytest.approx(3 * 0.09 * 0.7 + 0.027, abs=1e-12)
    assert majority_error_independent(0.3, 3) == pytest.approx(
        enumerate_majority_error(0.3, 3), abs=1e-12
    )
    with pytest.raises(ParityError):
        majority_error_independent(0.3, 4)
    with pytest.raises(DomainError):
        majority_error_independent(1.3, 3)


def test_majority_error_matches_enumeration():
    for eps in (0.1, 0.37, 0.5, 0.81):
        for m in (1, 3, 5, 7, 9):
            assert majority_error_independent(eps, m) == pytest.approx(
                enumerate_majority_error(eps, m), abs=1e-12
            )


def test_diversity_effect_examples():
    assert diversity_effect_independent(0.5, 9) == pytest.approx(0.0, abs=1e-12)
    assert diversity_effect_independent(0.3, 3) == pytest.approx(0.084, abs=1e-12)
    assert diversity_effect_independent(0.7, 3) == pytest.approx(-0.084, abs=1e-12)
    assert diversity_effect_independent(0.0, 5) == 0.0
    assert diversity_effect_independent(1.0, 5) == 0.0


def test_diversity_effect_antisymmetry():
    for m in (3, 11, 51):
        for eps in np.linspace(0.02, 0.48, 12):
            left = diversity_effect_independent(float(eps), m)
            right = diversity_effect_independent(float(1 - eps), m)
            assert left == pytest.approx(-right, abs=1e-12)


def test_diversity_effect_monotone_in_m():
    for eps in (0.1, 0.25, 0.4):
        values = [diversity_effect_independent(eps, m) for m in range(1, 103, 2)]
        diffs = np.diff(values)
        assert np.all(diffs >= -1e-12)


def test_large_m_stability():
    value = majority_error_independent(0.45, 1001)
    assert 0.0 <= value <= 1.0
    assert math.isfinite(value)


def test_simulation_degenerate_and_matching():
    result = simulate_diversity_effect(2, 0.7, 11, 5000, 3)
    closed = diversity_effect_independent(0.3, 11)
    assert abs(result["mean"] - closed) <= 3 * result["se"]
    with pytest.raises(DomainError):
        simulate_diversity_effect(2, 1.0, 11, 100, 0)


def test_simulation_multiclass_nonnegative():
    result = simulate_diversity_effect(4, 0.6, 21, 10_000, 5)
    assert result["mean"] >= -3 * result["se"]


def test_simulation_deterministic():
    a = simulate_diversity_effect(3, 0.55, 7, 2000, 11)
    b = simulate_diversity_effect(3, 0.55, 7, 2000, 11)
    assert a == b


def test_counterexample_table_two_class():
    table = nonexistence_counterexample((0.6, 0.4))
    assert table[0, 0] == 0.4 and table[0, 1] == -0.4
    assert table[1, 0] == -0.6 and table[1, 1] == 0.6


def test_counterexample_table_multiclass_pattern():
    table = nonexistence_counterexample((0.6, 0.4, 0.0, 0.0))
    assert np.array_equal(table[2], np.array([-0.6, -0.4, 1.0, 0.0]))
    assert np.array_equal(table[3], np.array([-0.6, -0.4, 0.0, 1.0]))


def test_counterexample_deterministic_member():
    table = nonexistence_counterexample((0.0, 1.0, 0.0))
    assert np.allclose(table[1], 0.0)  # q* equal to the deterministic member


def test_counterexample_completeness():
    for k in (2, 3, 4, 6):
        probs = np.zeros(k)
        probs[0], probs[1] = 0.6, 0.4
        table = nonexistence_counterexample(tuple(probs))
        spans = table.max(axis=1) - table.min(axis=1)
        assert np.all(spans > 0.1)  # no candidate gives a label-free column
