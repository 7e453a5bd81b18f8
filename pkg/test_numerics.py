"""Special functions, quadrature, root bracketing and check records."""
import sys, os
import math
sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

import pytest

from src.errors import ConvergenceError, DomainError
from src.numerics import (
    Tolerance, adaptive_quad, agreement, bessel_k0, bracketed_root, deterministic_sum,
    ein, heat_integral_identity_check,
)


def test_bessel_k0_known_value():
    assert bessel_k0(1.0) == pytest.approx(0.42102443824070834, rel=1e-14)
    assert bessel_k0(800.0) == 0.0


def test_bessel_k0_rejects_non_positive():
    with pytest.raises(DomainError):
        bessel_k0(0.0)


@pytest.mark.parametrize("z", [0.3, -0.7, 2.5, -3.0, 20.0])
def test_ein_matches_its_integral(z):
    quad = adaptive_quad(lambda t: -math.expm1(-t) / t if t != 0 else 1.0,
                         min(0.0, z), max(0.0, z))
    expected = quad.value if z > 0 else -quad.value
    assert ein(z) == pytest.approx(expected, rel=1e-9, abs=1e-14)


def test_heat_integral_identity():
    for d, lam in [(1.0, -2.0), (0.3, -50.0), (2.0, -0.1)]:
        result = heat_integral_identity_check(d, lam)
        closed = 2.0 * math.sqrt(math.pi) * math.exp(-d * math.sqrt(-lam)) / d
        assert result.value == pytest.approx(closed, rel=1e-9)


def test_heat_integral_domain():
    with pytest.raises(DomainError):
        heat_integral_identity_check(1.0, 0.5)
    with pytest.raises(DomainError):
        heat_integral_identity_check(0.0, -1.0)


def test_bracketed_root():
    assert bracketed_root(math.cos, 1.0, 2.0) == pytest.approx(math.pi / 2, abs=1e-11)
    with pytest.raises(DomainError):
        bracketed_root(math.cos, 2.0, 3.0)
    with pytest.raises(DomainError):
        bracketed_root(math.cos, 2.0, 1.0)


def test_bracketed_root_iteration_budget():
    with pytest.raises(ConvergenceError):
        bracketed_root(lambda x: x ** 3 - 2.0, 0.0, 5.0, Tolerance(abs_tol=1e-300, rel_tol=1e-15, max_iter=2))


def test_tolerance_validation():
    with pytest.raises(DomainError):
        Tolerance(abs_tol=0.0, rel_tol=0.0)
    with pytest.raises(DomainError):
        Tolerance(abs_tol=-1.0)
    with pytest.raises(DomainError):
        Tolerance(max_iter=0)


def test_deterministic_sum_is_exact_and_order_free():
    assert deterministic_sum([1e16, 1.0, -1e16]) == 1.0
    terms = [0.1 * k for k in range(1, 200)]
    assert deterministic_sum(terms) == deterministic_sum(list(reversed(terms)))


def test_agreement_uses_larger_of_tol_and_bound():
    assert agreement('x', 1.0, 1.0 + 5e-7, 1e-6).passed
    assert not agreement('x', 1.0, 1.0 + 5e-6, 1e-6).passed
    assert agreement('x', 1.0, 1.0 + 5e-6, 1e-6, bound=1e-5).passed
    assert not agreement('x', float('nan'), 1.0, 1.0).passed


def test_check_result_record_order():
    record = agreement('demo', 2.0, 2.5, 1.0, detail='note').to_dict()
    assert list(record) == ['name', 'lhs', 'rhs', 'abs_diff', 'tol', 'bound', 'pass', 'detail']
    assert record['abs_diff'] == 0.5
    assert record['pass'] is True
