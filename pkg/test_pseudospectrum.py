"""Secular roots, interlacing, the Krein resolvent and paired spectral sums."""
import sys, os
import math
sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

import pytest

from config import Config
from src.errors import CutoffError, DomainError, FriedrichsError
from src.models import LatticeBasis, ManifoldModel, enumerate_levels, resolvent_kernel
from src.pseudospectrum import (
    auto_cutoff, check_interlacing, krein_resolvent, negative_root, negative_root_count,
    secular_roots, spectral_log_ratio, trace_difference, verify_trace_identity,
)
from src.scattering import ExtensionParam, f_closed, kappa, krein_coefficient, shift_derivative

SPHERE = ManifoldModel.sphere3()
CUBE = ManifoldModel.flat_torus(LatticeBasis.cubic())
SQUARE = ManifoldModel.flat_torus(LatticeBasis.cubic(dimension=2))
HALF_PI = ExtensionParam(math.pi / 2)
QUARTER = ExtensionParam(math.pi / 4)


def test_sphere_roots_at_right_angle():
    # F = 0 exactly where sqrt(lam + 1) is a half integer
    ps = secular_roots(SPHERE, HALF_PI, 20.0)
    expected = [(n + 0.5) ** 2 - 1.0 for n in range(5)]
    assert ps.values.tolist() == pytest.approx(expected, rel=1e-9)
    assert ps.retained == ((3.0, 3), (8.0, 8), (15.0, 15))
    assert ps.upper_level == 24.0
    assert check_interlacing(ps) == []


def test_root_records():
    ps = secular_roots(SPHERE, HALF_PI, 20.0)
    records = ps.to_records()
    assert records[0]['source_mu'] is None
    assert [r['source_mu'] for r in records[1:]] == [0.0, 3.0, 8.0, 15.0]
    assert list(ps.to_dict()) == ['model', 'alpha', 'cutoff', 'upper_level', 'roots', 'retained']


@pytest.mark.parametrize("model", [SPHERE, CUBE, SQUARE])
def test_roots_solve_the_secular_equation(model):
    ps = secular_roots(model, QUARTER, 3.0 * 4.0 * math.pi ** 2)
    assert check_interlacing(ps) == []
    for root in ps.roots:
        assert f_closed(model, root.value).value == pytest.approx(1.0, abs=1e-7)
    assert ps.roots[0].value < 0


def test_threaded_search_gives_same_roots():
    serial = secular_roots(CUBE, QUARTER, 200.0, workers=1)
    threaded = secular_roots(CUBE, QUARTER, 200.0, workers=3)
    assert threaded.values.tolist() == pytest.approx(serial.values.tolist(), rel=1e-14)


@pytest.mark.parametrize("model", [SPHERE, CUBE])
def test_roots_increase_with_alpha(model):
    cutoff = 60.0
    previous = None
    for alpha in (math.pi / 6, math.pi / 4, math.pi / 2, 3 * math.pi / 4):
        values = secular_roots(model, ExtensionParam(alpha), cutoff).values
        if previous is not None:
            assert len(values) == len(previous)
            assert (values > previous).all()
        previous = values


@pytest.mark.parametrize("model", [SPHERE, CUBE])
def test_roots_approach_levels_for_small_alpha(model):
    # cot(alpha) = 1e3: nu_j - mu_j ~ m_j / (Vol cot(alpha))
    c = 1e3
    ext = ExtensionParam(math.atan(1.0 / c))
    ps = secular_roots(model, ext, 60.0)
    table = enumerate_levels(model, ps.upper_level)
    for root in ps.roots[1:]:
        j = root.source_level
        shift = root.value - float(table.values[j])
        assert 0 < shift < 1.1 * int(table.multiplicities[j]) / (model.volume * c)


def test_two_dimensional_negative_root_scale():
    alpha = ExtensionParam(math.pi / 3)
    nu0 = negative_root(SQUARE, alpha).value
    assert math.log(-nu0) == pytest.approx(kappa(alpha), abs=1e-8)


@pytest.mark.parametrize("alpha", [math.pi / 6, math.pi / 4, math.pi / 2, 3 * math.pi / 4, 0.999 * math.pi])
def test_exactly_one_negative_root(alpha):
    assert negative_root_count(SPHERE, ExtensionParam(alpha)) == 1
    assert negative_root_count(CUBE, ExtensionParam(alpha)) == 1
    assert negative_root_count(SQUARE, ExtensionParam(alpha)) == 1


def test_friedrichs_has_no_secular_equation():
    with pytest.raises(FriedrichsError):
        secular_roots(SPHERE, ExtensionParam(0.0), 20.0)
    with pytest.raises(FriedrichsError):
        negative_root(CUBE, ExtensionParam(0.0))


def test_bad_cutoff_and_workers():
    with pytest.raises(DomainError):
        secular_roots(SPHERE, QUARTER, -1.0)
    with pytest.raises(DomainError):
        secular_roots(SPHERE, QUARTER, 20.0, workers=0)


def test_trace_identity_on_the_sphere():
    ps = secular_roots(SPHERE, HALF_PI, 1e4)
    check = verify_trace_identity(SPHERE, HALF_PI, -2.0, 1e4, tol=1e-4, ps=ps)
    assert check.passed
    closed = 0.5 * (1.0 - math.pi / (math.sinh(math.pi) * math.cosh(math.pi)))
    assert check.rhs == pytest.approx(closed, rel=1e-12)
    assert check.lhs == pytest.approx(closed, abs=1e-4)


def test_trace_identity_on_the_cube():
    cutoff = 4.0 * math.pi ** 2 * 400.0
    ps = secular_roots(CUBE, QUARTER, cutoff)
    check = verify_trace_identity(CUBE, QUARTER, -5.0, cutoff, tol=1e-6, ps=ps)
    assert check.passed
    assert abs(check.lhs - check.rhs) <= 1e-6


def test_trace_bound_shrinks_with_cutoff():
    bounds = [trace_difference(SPHERE, QUARTER, -2.0, cutoff).error_bound for cutoff in (2500.0, 5000.0, 1e4)]
    assert bounds[0] > 2.0 * bounds[1] > 4.0 * bounds[2]


def test_trace_difference_is_zero_for_friedrichs():
    result = trace_difference(SPHERE, ExtensionParam(0.0), -2.0, 20.0)
    assert result.value == 0.0 and result.error_bound == 0.0


def test_trace_difference_needs_lambda_below_table():
    ps = secular_roots(SPHERE, HALF_PI, 20.0)
    with pytest.raises(CutoffError):
        trace_difference(SPHERE, HALF_PI, 30.0, 20.0, ps)


def test_log_ratio_matches_scattering_quotient():
    cutoff = 4e4
    ps = secular_roots(SPHERE, QUARTER, cutoff)
    for a, b in ((-2.0, -5.0), (-5.0, -10.0)):
        ratio = spectral_log_ratio(SPHERE, QUARTER, a, b, cutoff, ps)
        expected = (1.0 - f_closed(SPHERE, a).value) / (1.0 - f_closed(SPHERE, b).value)
        assert abs(ratio.value - math.log(abs(expected))) <= max(1e-4, ratio.error_bound)
        assert ratio.sign == (1 if expected > 0 else -1)


def test_log_ratio_sign_across_negative_root():
    ps = secular_roots(SPHERE, QUARTER, 1e3)
    nu0 = ps.roots[0].value
    ratio = spectral_log_ratio(SPHERE, QUARTER, 0.5 * nu0, 2.0 * nu0, 1e3, ps)
    assert ratio.sign == -1


def test_krein_resolvent():
    d_xy, d_xp, d_py, lam = 1.0, math.pi / 2, math.pi / 2, -2.0
    base = resolvent_kernel(SPHERE, d_xy, lam)
    assert krein_resolvent(SPHERE, ExtensionParam(0.0), d_xy, d_xp, d_py, lam) == base
    k = krein_coefficient(SPHERE, lam, QUARTER)
    expected = base + k * resolvent_kernel(SPHERE, d_xp, lam) ** 2
    assert krein_resolvent(SPHERE, QUARTER, d_xy, d_xp, d_py, lam) == pytest.approx(expected, rel=1e-14)


def test_auto_cutoff_is_clamped():
    assert auto_cutoff(SPHERE, 1e-12) == Config.MAX_CUTOFF
    assert auto_cutoff(SPHERE, 0.5) == pytest.approx(12.0)
    with pytest.raises(DomainError):
        auto_cutoff(SPHERE, 0.0)


def test_shift_derivative_at_a_root_is_a_pole():
    ps = secular_roots(SPHERE, QUARTER, 20.0)
    nu = ps.roots[1].value
    # g has a simple pole with residue -1 at every root
    h = 1e-6
    assert shift_derivative(SPHERE, nu - h, QUARTER) * -h == pytest.approx(-1.0, rel=1e-4)
