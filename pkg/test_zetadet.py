"""Zeta-regularized determinants and the relative zeta derivative."""
import sys, os
import math
sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

import numpy as np
import pytest

from src.errors import DomainError, FriedrichsError
from src.models import LatticeBasis, ManifoldModel
from src.pseudospectrum import negative_root
from src.scattering import ExtensionParam, f_closed, f_prime
from src.zetadet import (
    RelativeZetaParams, SignedLogDet, corollary_limit_path, expected_constant,
    logdet_pseudo_at_zero, logdet_pseudo_theorem, logdet_star, logdet_star_crosscheck,
    logdet_unperturbed, relative_zeta_prime_numeric,
)

SPHERE = ManifoldModel.sphere3()
CUBE = ManifoldModel.flat_torus(LatticeBasis.cubic())
SQUARE = ManifoldModel.flat_torus(LatticeBasis.cubic(dimension=2))
QUARTER = ExtensionParam(math.pi / 4)


def test_signed_log_det():
    det = SignedLogDet(-1, math.log(2.0))
    assert det.value == pytest.approx(-2.0)
    assert det.to_dict() == {'sign': -1, 'log_abs': math.log(2.0)}
    with pytest.raises(DomainError):
        SignedLogDet(0, 1.0)
    with pytest.raises(DomainError):
        SignedLogDet(1, float('inf'))


@pytest.mark.parametrize("model", [SPHERE, CUBE, SQUARE])
def test_logdet_does_not_depend_on_split(model):
    first = logdet_unperturbed(model, -1.0, 1.0)
    second = logdet_unperturbed(model, -1.0, 0.5)
    assert first.sign == 1
    assert first.log_abs == pytest.approx(second.log_abs, abs=1e-8)


@pytest.mark.parametrize("model", [SPHERE, CUBE, SQUARE])
def test_logdet_second_derivative_is_volume_times_f_prime(model):
    # d^2/dlam^2 log det(Delta - lam) = -sum m / (mu - lam)^2 = Vol F'(lam)
    lam = -2.0

    def second_difference(h):
        values = [logdet_unperturbed(model, lam + k * h).log_abs for k in (-1, 0, 1)]
        return (values[0] - 2.0 * values[1] + values[2]) / h ** 2

    coarse, fine = second_difference(0.1), second_difference(0.05)
    richardson = (4.0 * fine - coarse) / 3.0
    assert richardson == pytest.approx(model.volume * f_prime(model, lam).value, rel=1e-5)


def test_logdet_domain():
    with pytest.raises(DomainError):
        logdet_unperturbed(SPHERE, 0.5)
    with pytest.raises(DomainError):
        logdet_unperturbed(SPHERE, -1.0, split=0.0)


@pytest.mark.parametrize("model", [SPHERE, CUBE, SQUARE])
def test_logdet_star_split_check(model):
    check = logdet_star_crosscheck(model)
    assert check.passed
    assert check.name == 'logdet_star_split'


def test_logdet_star_is_limit_of_shifted_determinant():
    # det(Delta - lam) ~ -lam det* Delta as lam -> 0-
    for model in (SPHERE, CUBE, SQUARE):
        lam = -1e-5
        shifted = logdet_unperturbed(model, lam).log_abs - math.log(-lam)
        assert shifted == pytest.approx(logdet_star(model).log_abs, abs=1e-3)


def test_comparison_formula():
    base = logdet_unperturbed(SPHERE, -2.0)
    det = logdet_pseudo_theorem(SPHERE, QUARTER, -2.0)
    gap = f_closed(SPHERE, -2.0).value - 1.0
    assert det.sign == -1
    assert det.log_abs == pytest.approx(math.log(4.0 * math.pi * abs(gap)) + base.log_abs, rel=1e-12)
    assert logdet_pseudo_theorem(SPHERE, ExtensionParam(0.0), -2.0) == base


def test_two_dimensional_prefactor_has_euler_gamma():
    base = logdet_unperturbed(SQUARE, -2.0)
    det = logdet_pseudo_theorem(SQUARE, QUARTER, -2.0)
    gap = abs(f_closed(SQUARE, -2.0).value - 1.0)
    assert det.log_abs - base.log_abs == pytest.approx(
        math.log(4.0 * math.pi * gap) + np.euler_gamma, rel=1e-12)


@pytest.mark.parametrize("model", [SPHERE, CUBE])
def test_sign_rule(model):
    nu0 = negative_root(model, QUARTER).value
    assert logdet_pseudo_theorem(model, QUARTER, 1.5 * nu0).sign == 1
    assert logdet_pseudo_theorem(model, QUARTER, 0.5 * nu0).sign == -1


@pytest.mark.parametrize("model", [SPHERE, CUBE, SQUARE])
def test_determinant_at_zero(model):
    at_zero = logdet_pseudo_at_zero(model, QUARTER)
    assert at_zero.sign == -1
    other = logdet_pseudo_at_zero(model, ExtensionParam(math.pi / 6))
    assert other.log_abs == at_zero.log_abs
    path = corollary_limit_path(model, QUARTER)
    assert path.sign == -1
    assert path.log_abs == pytest.approx(at_zero.log_abs, abs=1e-4)


@pytest.mark.parametrize("model", [SPHERE, CUBE])
def test_limit_path_near_alpha_pi(model):
    ext = ExtensionParam(0.999 * math.pi)
    nu0 = negative_root(model, ext).value
    assert -1e-2 < nu0 < 0
    at_zero = logdet_pseudo_at_zero(model, ext)
    path = corollary_limit_path(model, ext)
    assert -abs(nu0) / 50.0 <= path.lam_tilde < 0
    assert path.to_dict()['lambda_tilde'] == path.lam_tilde
    assert path.sign == at_zero.sign == -1
    assert path.log_abs == pytest.approx(at_zero.log_abs, abs=1e-4)


def test_limit_path_keeps_a_small_start():
    path = corollary_limit_path(SPHERE, QUARTER, lam_tilde=-1e-4)
    assert path.lam_tilde == -1e-4


def test_determinant_at_zero_needs_extension():
    with pytest.raises(FriedrichsError):
        logdet_pseudo_at_zero(SPHERE, ExtensionParam(0.0))
    with pytest.raises(DomainError):
        corollary_limit_path(SPHERE, QUARTER, lam_tilde=0.1)


def test_relative_zeta_on_the_sphere():
    nu0 = negative_root(SPHERE, QUARTER).value
    lam_tilde = 1.5 * nu0
    result = relative_zeta_prime_numeric(SPHERE, QUARTER, lam_tilde)
    assert -result.value == pytest.approx(result.closed + expected_constant(SPHERE), abs=1e-5)
    assert abs(result.fitted_constant) <= 1e-11
    moved = relative_zeta_prime_numeric(SPHERE, QUARTER, lam_tilde, RelativeZetaParams(C=4.0 * result.C))
    assert moved.value == pytest.approx(result.value, abs=1e-6)


def test_relative_zeta_on_the_square_torus():
    nu0 = negative_root(SQUARE, QUARTER).value
    result = relative_zeta_prime_numeric(SQUARE, QUARTER, 1.5 * nu0)
    assert result.fitted_constant == pytest.approx(np.euler_gamma, abs=1e-3)
    assert list(result.to_dict()) == ['D', 'error_estimate', 'closed', 'fitted_constant', 'C']


def test_relative_zeta_domain():
    nu0 = negative_root(SPHERE, QUARTER).value
    with pytest.raises(DomainError):
        relative_zeta_prime_numeric(SPHERE, QUARTER, 0.5 * nu0)
    with pytest.raises(FriedrichsError):
        relative_zeta_prime_numeric(SPHERE, ExtensionParam(0.0), -10.0)
    with pytest.raises(DomainError):
        RelativeZetaParams(C=5.0)
    assert expected_constant(SQUARE) == pytest.approx(np.euler_gamma)
    assert expected_constant(CUBE) == 0.0
