import cmath

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nonlocal_index.bvp import numerical_index
from nonlocal_index.covering import build_covering
from nonlocal_index.discretize import OperatorSpec
from nonlocal_index.errors import DomainError, PreconditionError
from nonlocal_index.invariants import (
    CoveredCylinder, DiskModel, DisjointCopies, ModNValue, check_lefschetz_congruence,
    equivariant_index, equivariant_index_by_modes, freed_melrose_mod_n, hirzebruch_model_check,
    homotopy_scan, ind_tilde, lefschetz_contribution, one_sheet_perturbation,
    random_anticommuting_pair, relative_eta,
)
from nonlocal_index.spectral import eta_closed_form


def test_mod_n_value_normalizes_and_wraps():
    v = ModNValue(-1.0, 3)
    assert v.representative == 2.0
    assert ModNValue(2.99999, 3).distance(0.0) == pytest.approx(1e-5)
    assert ModNValue(0.5, 2).close_to(2.5)
    with pytest.raises(DomainError):
        ModNValue(0.0, 0)


def test_relative_eta_examples():
    assert relative_eta(OperatorSpec.constant(0.2), build_covering(2, 8)) == pytest.approx(-1.0, abs=1e-6)
    assert relative_eta(OperatorSpec.constant(0.2), build_covering(3, 8, trivial=True)) == pytest.approx(0, abs=1e-6)
    assert relative_eta(OperatorSpec.constant(0.2), build_covering(1, 8)) == pytest.approx(0, abs=1e-6)
    # a = 0: the untwisted operator has a kernel
    cm = build_covering(2, 8)
    assert relative_eta(OperatorSpec.constant(0.0), cm) == pytest.approx(0.0, abs=1e-6)
    assert relative_eta(OperatorSpec.constant(0.0), cm, "aps") == pytest.approx(-0.5, abs=1e-6)
    with pytest.raises(DomainError):
        relative_eta(OperatorSpec.constant(0.0), cm, "other")


@settings(max_examples=15, deadline=None)
@given(st.floats(min_value=0.02, max_value=0.98), st.integers(min_value=2, max_value=4))
def test_relative_eta_matches_closed_form(a, n):
    shifts = [(a + j / n) % 1.0 for j in range(n)]
    if min(min(s, 1 - s) for s in shifts) < 0.02:
        return
    expected = sum(eta_closed_form(s).value for s in shifts) - n * eta_closed_form(a).value
    assert relative_eta(OperatorSpec.constant(a), build_covering(n, 8)) == pytest.approx(expected, abs=1e-6)


@pytest.mark.parametrize("n", [2, 3])
def test_product_cylinder_defect_vanishes(n):
    geo = CoveredCylinder(OperatorSpec.constant(0.2), build_covering(n, 25), bvp_cutoff=12, N_t=16)
    rep = ind_tilde(geo)
    assert rep.ind_tilde.modulus == n
    assert rep.ind_tilde.close_to(0.0)


def test_non_lifted_perturbation_is_rejected():
    geo = CoveredCylinder(OperatorSpec.constant(0.2), build_covering(2, 25), bvp_cutoff=12, N_t=16,
                          perturbation=one_sheet_perturbation())
    with pytest.raises(PreconditionError):
        ind_tilde(geo)


def test_freed_melrose_copies():
    value, report = freed_melrose_mod_n(DisjointCopies(0.2, (0, 1, 1), bvp_cutoff=12, N_t=16))
    assert value.modulus == 3
    assert value.close_to(2.0)
    assert ModNValue(report.unreduced, 3).close_to(2.0)


def test_lefschetz_contribution():
    assert lefschetz_contribution(-1) == pytest.approx(0.5)
    w = cmath.exp(2j * cmath.pi / 5)
    assert lefschetz_contribution(w.conjugate()) == pytest.approx(lefschetz_contribution(w).conjugate())
    assert (lefschetz_contribution(w) + lefschetz_contribution(w.conjugate())).real == pytest.approx(1.0)
    with pytest.raises(DomainError):
        lefschetz_contribution(1.0)
    with pytest.raises(DomainError):
        lefschetz_contribution(2.0)


@pytest.mark.parametrize("condition", ["aps", "none", "invariant_part", "dirichlet"])
def test_equivariant_index_routes_agree(condition):
    model = DiskModel(3, cutoff=10, condition=condition)
    prob = model.problem()
    for g in range(3):
        assert equivariant_index(prob, g) == pytest.approx(equivariant_index_by_modes(prob, g), abs=1e-9)
    # the identity element gives the ordinary index
    res = numerical_index(prob.assemble(), refine=False)
    assert equivariant_index(prob, 0) == pytest.approx(res.index, abs=1e-9)


def test_lefschetz_congruence_two_sheets():
    report = check_lefschetz_congruence(2)
    assert report.passed, report.values


def test_hirzebruch_small_example():
    rep = hirzebruch_model_check(np.zeros((2, 2)), np.diag([1.0, -1.0]))
    assert rep.passed and rep.values["index"] == 1


def test_hirzebruch_preconditions():
    with pytest.raises(PreconditionError):
        hirzebruch_model_check(np.eye(2), np.diag([1.0, -1.0]))
    with pytest.raises(PreconditionError):
        hirzebruch_model_check(np.zeros((2, 2)), 2 * np.eye(2))
    with pytest.raises(DomainError):
        random_anticommuting_pair(5, 2, np.random.default_rng(0))


@settings(max_examples=30, deadline=None)
@given(st.integers(min_value=1, max_value=5), st.integers(min_value=0, max_value=5),
       st.integers(min_value=0, max_value=2**31 - 1))
def test_hirzebruch_random_pairs(m, k, seed):
    k = min(k, m)
    A, G = random_anticommuting_pair(2 * m, 2 * k, np.random.default_rng(seed))
    rep = hirzebruch_model_check(A, G)
    assert rep.passed and rep.values["index"] == k


def test_short_homotopy_scan():
    report = homotopy_scan(np.linspace(0.6, -0.4, 6), bvp_cutoff=8, N_t=12)
    assert report.passed, report.values
