import math

import pytest

from qdarwin.darwinism import (average_bound, broadcast_epsilon, chain_bound, is_vacuous, optimal_k, theorem1_bound,
                               theorem2_bound)
from qdarwin.errors import ValidationError


def _direct(d, n, delta):
    return (27 * math.log(2) * d**6 * math.log2(d) / (n * delta**3)) ** (1 / 3)


def test_fixed_point():
    delta = 0.5
    n = 27 * math.log(2) * 64 / delta**3
    assert theorem1_bound(2, n, delta) == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("d,n,delta", [(2, 1e9, 0.1), (3, 1e6, 0.25), (2, 8, 0.25), (4, 50, 1.0)])
def test_matches_direct_evaluation(d, n, delta):
    assert theorem1_bound(d, n, delta) == pytest.approx(_direct(d, n, delta), rel=1e-12)


def test_reference_value():
    assert theorem1_bound(2, 1e9, 0.1) == pytest.approx(0.10624, abs=1e-4)


def test_desk_scale_is_vacuous():
    assert is_vacuous(theorem1_bound(2, 8, 0.25))


def test_theorem2_scaling():
    base = theorem1_bound(2, 1e9, 0.1)
    assert theorem2_bound(2, 1e9, 1, 0.1) == base
    assert theorem2_bound(2, 1e9, 8, 0.1) == pytest.approx(2 * base, rel=1e-15)
    assert theorem2_bound(2, 1e9, 27, 0.1) == pytest.approx(3 * base, rel=1e-15)


def test_domain_errors():
    with pytest.raises(ValidationError):
        theorem1_bound(1, 10, 0.1)
    with pytest.raises(ValidationError):
        theorem1_bound(2, 10, 0.0)
    with pytest.raises(ValidationError):
        theorem2_bound(2, 4, 5, 0.1)


def test_average_and_chain_bounds():
    assert average_bound(2, 10, 2) == pytest.approx(math.sqrt(2 * math.log(2) * 64 / 2) + 0.4)
    assert chain_bound(2, 0.0) == 0.0
    assert chain_bound(3, 0.5) == pytest.approx(27 * math.sqrt(math.log(2)))
    k = optimal_k(2, 1000)
    assert all(average_bound(2, 1000, k) <= average_bound(2, 1000, j) for j in range(1, 999))
    assert broadcast_epsilon(2, 1e9, 0.1) == pytest.approx(2 * theorem1_bound(2, 1e9, 0.1))
