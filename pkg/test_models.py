"""Lattices, spectra, heat traces and free resolvent kernels."""
import sys, os
import math
sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

import numpy as np
import pytest

from config import Config
from src.errors import DomainError, SpectrumTooLargeError
from src.models import (
    FOUR_PI_SQ, EigenLevel, LatticeBasis, ManifoldModel, ModelKind, enumerate_levels, heat_trace,
    heat_trace_dual_remainder, heat_trace_leading, image_norms, levels_through, minimal_vector_length,
    resolvent_kernel, weyl_count,
)
from src.scattering import f_closed

SPHERE = ManifoldModel.sphere3()
CUBE = ManifoldModel.flat_torus(LatticeBasis.cubic())
SQUARE = ManifoldModel.flat_torus(LatticeBasis.cubic(dimension=2))


def test_basis_parsing():
    basis = LatticeBasis.from_string("1,0,0; 0,2,0; 0,0,3")
    assert basis.dimension == 3
    assert basis.volume == pytest.approx(6.0)
    assert basis.to_string() == "1,0,0;0,2,0;0,0,3"


@pytest.mark.parametrize("text", ["1,0;1,0", "0,1;1,0", "1,0,0;0,1", "a,b;c,d", "1,0,0;0,1,0;0,0,nan"])
def test_bad_bases(text):
    with pytest.raises(DomainError):
        LatticeBasis.from_string(text)


def test_model_properties():
    assert SPHERE.volume == pytest.approx(2.0 * math.pi ** 2)
    assert SPHERE.dimension == 3 and not SPHERE.is_torus
    assert SQUARE.kind == ModelKind.FLAT_TORUS2
    assert SQUARE.name == "torus2(1,0;0,1)"
    with pytest.raises(DomainError):
        ManifoldModel(ModelKind.FLAT_TORUS3, LatticeBasis.cubic(dimension=2))
    with pytest.raises(DomainError):
        ManifoldModel(ModelKind.SPHERE3, LatticeBasis.cubic())


def test_sphere_levels():
    table = enumerate_levels(SPHERE, 15.0)
    assert table.values.tolist() == [0.0, 3.0, 8.0, 15.0]
    assert table.multiplicities.tolist() == [1, 4, 9, 16]
    assert table.levels[1] == EigenLevel(3.0, 4)
    assert table.to_records()[2] == {"mu": 8.0, "multiplicity": 9}


def test_cubic_torus_levels():
    table = enumerate_levels(CUBE, 4.5 * FOUR_PI_SQ)
    assert table.values / FOUR_PI_SQ == pytest.approx([0.0, 1.0, 2.0, 3.0, 4.0])
    assert table.multiplicities.tolist() == [1, 6, 12, 8, 6]


def test_square_torus_levels():
    table = enumerate_levels(SQUARE, 5.5 * FOUR_PI_SQ)
    assert table.values / FOUR_PI_SQ == pytest.approx([0.0, 1.0, 2.0, 4.0, 5.0])
    assert table.multiplicities.tolist() == [1, 4, 4, 4, 8]


def test_sheared_torus_matches_brute_force():
    basis = LatticeBasis(((1.0, 0.0), (math.sqrt(0.5), 1.1)))
    model = ManifoldModel.flat_torus(basis)
    cutoff = 30.0 * FOUR_PI_SQ
    table = enumerate_levels(model, cutoff)
    dual = basis.dual_matrix
    n = np.arange(-12, 13)
    grid = np.stack(np.meshgrid(n, n, indexing='ij'), axis=-1).reshape(-1, 2) @ dual
    eig = FOUR_PI_SQ * np.einsum('ij,ij->i', grid, grid)
    assert table.count() == int(np.sum(eig <= cutoff * (1 + 1e-12)))
    assert table.values[0] == 0.0 and table.multiplicities[0] == 1


def test_truncate_and_levels_through():
    table = enumerate_levels(SPHERE, 100.0)
    assert table.truncate(15.0).values.tolist() == [0.0, 3.0, 8.0, 15.0]
    wider = levels_through(SPHERE, 10.0)
    assert wider.values[-1] == 15.0
    assert table.to_records()[1] == {'mu': 3.0, 'multiplicity': 4}


def test_weyl_count_is_leading_order():
    table = enumerate_levels(CUBE, 2e4)
    assert table.count() == pytest.approx(weyl_count(CUBE, 2e4), rel=0.05)


def test_level_budget(monkeypatch):
    monkeypatch.setattr(Config, 'MAX_LATTICE_POINTS', 1000)
    model = ManifoldModel.flat_torus(LatticeBasis.cubic(side=0.37))
    with pytest.raises(SpectrumTooLargeError):
        enumerate_levels(model, 1e6)


def test_enumerate_rejects_bad_cutoff():
    with pytest.raises(DomainError):
        enumerate_levels(SPHERE, 0.0)


def test_minimal_vector():
    assert minimal_vector_length(LatticeBasis.cubic()) == pytest.approx(1.0)
    norms = image_norms(LatticeBasis.cubic(), 1.0)
    assert len(norms) == 6


@pytest.mark.parametrize("model, t", [(SPHERE, 1.0), (CUBE, 0.05), (SQUARE, 0.05)])
def test_heat_trace_regimes_agree(model, t):
    direct = heat_trace(model, t, method='direct')
    dual = heat_trace(model, t, method='dual')
    # both sides carry more than the zero mode and the leading term
    assert direct - 1.0 > 1e-3
    assert abs(heat_trace_dual_remainder(model, t)) > 1e-4
    assert direct == pytest.approx(dual, rel=1e-10)


def test_heat_trace_small_time_leading_term():
    t = 1e-3
    assert heat_trace(CUBE, t) == pytest.approx(heat_trace_leading(CUBE, t), rel=1e-12)
    with pytest.raises(DomainError):
        heat_trace(CUBE, -1.0)


def test_sphere_resolvent_closed_form():
    theta, lam = math.pi / 2, -2.0
    expected = math.sinh(math.pi / 2) / (4.0 * math.pi * math.sinh(math.pi))
    assert resolvent_kernel(SPHERE, theta, lam) == pytest.approx(expected, rel=1e-12)


def test_torus_resolvent_constant_term_is_minus_f():
    r, lam = 1e-5, -4.0
    regular = resolvent_kernel(CUBE, r, lam) - 1.0 / (4.0 * math.pi * r)
    assert regular == pytest.approx(-f_closed(CUBE, lam).value, abs=1e-5)
    with pytest.raises(DomainError):
        resolvent_kernel(CUBE, r, 1.0)
