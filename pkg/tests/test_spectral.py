import cmath
import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nonlocal_index.covering import build_covering, flat_decomposition
from nonlocal_index.discretize import (HermitianOperator, OperatorSpec, assemble_tangential, deck_matrix,
                                       lift_operator, twist_with_flat_bundle)
from nonlocal_index.errors import DomainError, NumericalStabilityError, PathTooCoarseError, UnresolvedTailError
from nonlocal_index.spectral import (Spectrum, eigendecompose, equivariant_eta, eta_closed_form,
                                     eta_regularized, kernel_dim, spectral_flow, spectral_projection)


def hurwitz_eta(a):
    """eta(0) of {k + a}: zeta(0, a) - zeta(0, 1 - a) by analytic continuation."""
    return float(mpmath.zeta(0, a) - mpmath.zeta(0, 1 - a))


def eta_of(spec):
    return eta_regularized(eigendecompose(assemble_tangential(spec)))


@pytest.mark.parametrize("a", [0.1, 0.25, 0.4, 0.7, 0.93])
def test_eta_matches_hurwitz_zeta(a):
    res = eta_of(OperatorSpec.constant(a, fourier_cutoff=64))
    assert abs(res.value - hurwitz_eta(a)) < 1e-8
    assert res.estimated_error < 1e-6
    assert res.kernel_dim == 0


def test_eta_with_kernel():
    res = eta_of(OperatorSpec.constant(0.0, fourier_cutoff=32))
    assert abs(res.value) < 1e-10 and res.kernel_dim == 1
    assert res.aps_value == pytest.approx(0.5)
    assert eta_closed_form(1.0).kernel_dim == 1


def test_eta_gauge_invariance_with_nonconstant_potential():
    # a + cos x + 0.3 sin 2x has mean a: eta depends on the mean only
    spec = OperatorSpec.from_trig({0: 0.3, 1: 0.5, 2: -0.15j}, fourier_cutoff=64)
    assert abs(eta_of(spec).value - hurwitz_eta(0.3)) < 1e-6


@settings(max_examples=20, deadline=None)
@given(st.floats(0.02, 0.98), st.integers(16, 48))
def test_eta_is_odd_under_negation(a, K):
    op = assemble_tangential(OperatorSpec.constant(a, fourier_cutoff=K))
    plus = eta_regularized(eigendecompose(op))
    minus = eta_regularized(eigendecompose(-op))
    assert abs(plus.value + minus.value) < 1e-9


def test_small_window_without_tail_model_is_unresolved():
    op = assemble_tangential(OperatorSpec.constant(0.3, fourier_cutoff=8))
    with pytest.raises(UnresolvedTailError):
        eta_regularized(eigendecompose(op), tail=False)


def test_eigenvalue_in_ambiguity_band():
    spec = eigendecompose(np.diag([3e-9, 1.0, -2.0]))
    with pytest.raises(NumericalStabilityError):
        eta_regularized(spec, window=np.inf, tail=False)
    with pytest.warns(RuntimeWarning):
        kernel_dim(eigendecompose(np.diag([1e-9, 1.0])))


@pytest.mark.parametrize("n, a", [(2, 0.2), (3, 0.1), (4, 0.3)])
def test_lift_eta_is_sum_over_twists(n, a):
    spec = OperatorSpec.constant(a, fourier_cutoff=64)
    cm = build_covering(n, 129)
    lifted = eta_regularized(eigendecompose(lift_operator(spec, cm))).value
    ref = sum(hurwitz_eta((a + j / n) % 1.0) for j in range(n))
    assert abs(lifted - ref) < 1e-8


def test_eigendecompose_phase_convention():
    spec = eigendecompose(np.array([[1.0, 1j], [-1j, 1.0]]))
    V = spec.eigenvectors
    pivots = V[np.argmax(np.abs(V), axis=0), np.arange(2)]
    assert np.allclose(pivots.imag, 0) and np.all(pivots.real > 0)
    with pytest.raises(DomainError):
        eigendecompose(np.array([[0.0, 1.0], [0.0, 0.0]]))


def test_spectral_projection_kernel_convention():
    spec = eigendecompose(np.diag([-1.0, 0.0, 2.0]))
    P = spectral_projection(spec, 1e-6)
    assert np.allclose(P, np.diag([0, 1, 1]))
    with pytest.raises(DomainError):
        spectral_projection(eigendecompose(np.diag([-1e-7, 1.0])), 1e-6)


def test_spectral_flow_counts_crossings():
    path = [assemble_tangential(OperatorSpec.constant(a, fourier_cutoff=16)) for a in np.linspace(0.25, 2.25, 41)]
    assert spectral_flow(path) == 2
    assert spectral_flow(path[::-1]) == -2
    with pytest.raises(PathTooCoarseError):
        spectral_flow([path[0], path[-1]])


def test_equivariant_eta_abel_sum():
    # on q/n spectrum, eta(A, g) = zeta/(1 - zeta) - conj, and xi(A, g) = 1/(1 - zeta)
    for n in (2, 3, 4):
        K = 192
        cm = build_covering(n, 2 * K + 1)
        A = lift_operator(OperatorSpec.constant(0.0, fourier_cutoff=K), cm)
        spec = eigendecompose(A.with_matrix(n * A.matrix), window=n * K / 2)
        for g in range(1, n):
            zeta = cmath.exp(2j * math.pi * g / n)
            value, ker_trace, err = equivariant_eta(spec, deck_matrix(A, g), t_grid=(0.4, 0.2, 0.1, 0.05))
            assert ker_trace == pytest.approx(1.0)
            assert abs(0.5 * (value + ker_trace) - 1 / (1 - zeta)) < 1e-4
