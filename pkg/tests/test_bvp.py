import numpy as np
import pytest

from nonlocal_index.bvp import (
    Condition, CylinderProblem, DiskProblem, assemble_disk_modes, chebyshev_collocation,
    explicit_assembly, mode_index_oracle, numerical_index, smooth_step, spectral_count_index,
)
from nonlocal_index.covering import build_covering
from nonlocal_index.discretize import HermitianOperator, OperatorSpec, lift_operator
from nonlocal_index.errors import DomainError, IllConditionedRankError


def lifted(a, n, K, trig=None):
    cm = build_covering(n, 16)
    spec = OperatorSpec.from_trig(trig, fourier_cutoff=K) if trig else OperatorSpec.constant(a, fourier_cutoff=K)
    if trig:
        spec = spec.with_changes(potential={**spec.potential, 0: np.array([[a]])})
    return lift_operator(spec, cm)


def cylinder(a, n, K, start, end, T=4.0, a_end=None, trig=None):
    def build(k):
        op = lifted(a, n, k, trig)
        end_op = None if a_end is None else lifted(a_end, n, k, trig)
        return CylinderProblem(op, start, end, T, end_op, rebuild=build, cutoff=k)
    return build(K)


def test_collocation_differentiates_polynomials():
    nodes, gauss, E, D = chebyshev_collocation(10, 2.0)
    f = nodes ** 3 - nodes
    assert np.allclose(E @ f, gauss ** 3 - gauss)
    assert np.allclose(D @ f, 3 * gauss ** 2 - 1)


def test_smooth_step_is_flat_at_the_ends():
    s = np.linspace(0, 1, 101)
    v = smooth_step(s)
    assert np.all(np.diff(v) >= -1e-15)
    assert np.allclose(v[s <= 0.2], 0) and np.allclose(v[s >= 0.8], 1)


def test_explicit_assembly_counts():
    rng = np.random.default_rng(1)
    M = rng.normal(size=(5, 5))
    res = numerical_index(explicit_assembly(M))
    assert (res.index, res.stable) == (0, True)
    dup = explicit_assembly(np.vstack([M, M[:1]]))
    res = numerical_index(dup)
    assert (res.dim_ker, res.dim_coker, res.index) == (0, 1, -1)
    adj = numerical_index(dup.adjoint())
    assert (adj.dim_ker, adj.dim_coker) == (1, 0)
    wide = numerical_index(explicit_assembly(M[:3]))
    assert (wide.dim_ker, wide.index) == (2, 2)


def test_small_gap_raises():
    M = np.diag([1.0, 2e-8, 5e-9])
    with pytest.raises(IllConditionedRankError):
        numerical_index(explicit_assembly(M))


@pytest.mark.parametrize("a,n", [(0.3, 2), (0.0, 2), (1 / 3, 3)])
def test_aps_product_cylinder_matches_oracles(a, n):
    prob = cylinder(a, n, 12, Condition("aps"), Condition("aps"))
    res = numerical_index(prob.assemble(16))
    assert res.stable
    assert res.index == mode_index_oracle(prob) == spectral_count_index(prob)


def test_full_and_reduced_agree():
    prob = cylinder(0.3, 2, 4, Condition("aps"), Condition("aps"))
    asm = prob.assemble(10)
    full = numerical_index(asm, method="full", refine=False)
    red = numerical_index(asm, method="reduced", refine=False)
    assert (full.dim_ker, full.dim_coker) == (red.dim_ker, red.dim_coker)


def test_reduced_rejects_mixing_family():
    rng = np.random.default_rng(3)
    X = rng.normal(size=(4, 4))
    A0 = HermitianOperator.from_matrix(X + X.T)
    A1 = HermitianOperator.from_matrix(np.diag([1.0, -2.0, 3.0, -4.0]))
    prob = CylinderProblem(A0, Condition("aps"), Condition("aps"), 1.0, A1)
    with pytest.raises(DomainError):
        numerical_index(prob.assemble(12), method="reduced")


def test_t_dependent_path_matches_endpoint_count():
    prob = cylinder(0.25, 2, 6, Condition("aps"), Condition("aps"), a_end=1.25)
    res = numerical_index(prob.assemble(16))
    assert res.stable and res.index == spectral_count_index(prob)
    full = numerical_index(prob.assemble(16), method="full", refine=False)
    assert full.index == res.index


@pytest.mark.parametrize("start,end", [("dirichlet", "none"), ("none", "dirichlet")])
def test_dirichlet_type_on_short_cylinder(start, end):
    prob = cylinder(0.3, 2, 12, Condition(start), Condition(end), T=0.5)
    res = numerical_index(prob.assemble(24))
    assert res.stable and res.index == mode_index_oracle(prob) == 0


def test_invariant_anti_invariant_pair():
    prob = cylinder(0.3, 2, 12, Condition("invariant_part"), Condition("anti_invariant_part"), T=0.5)
    res = numerical_index(prob.assemble(24))
    assert res.stable and res.index == mode_index_oracle(prob)


def test_wrong_spectral_side_is_not_certified():
    prob = cylinder(0.3, 2, 12, Condition("aps"), Condition("aps_complement"))
    try:
        res = numerical_index(prob.assemble(24))
    except IllConditionedRankError:
        return
    assert not res.stable


def test_matrix_model_conditions():
    rng = np.random.default_rng(7)
    X = rng.normal(size=(6, 6)) + 1j * rng.normal(size=(6, 6))
    op = HermitianOperator.from_matrix(X + X.conj().T)
    for start, end, expected in [("dirichlet", "dirichlet", -6), ("none", "none", 6)]:
        prob = CylinderProblem(op, Condition(start), Condition(end), 1.0)
        res = numerical_index(prob.assemble(24))
        assert res.stable and res.index == expected == mode_index_oracle(prob)
    rows = rng.normal(size=(4, 6))
    prob = CylinderProblem(op, Condition("rows", matrix=rows), Condition("aps"), 1.0)
    res = numerical_index(prob.assemble(24))
    assert res.stable and res.index == mode_index_oracle(prob)


def test_condition_errors():
    op = HermitianOperator.from_matrix(np.eye(3))
    with pytest.raises(DomainError):
        Condition("rows", matrix=np.eye(2)).rows(op)
    with pytest.raises(DomainError):
        Condition("sideways").rows(op)
    with pytest.raises(DomainError):
        Condition("invariant_part").rows(op)


def test_disk_modes():
    op = lifted(0.0, 2, 8)
    prob = DiskProblem(op, Condition("aps"))
    modes = assemble_disk_modes(prob, window=4)
    assert all(m.holomorphic == (m.frequency >= 0) for m in modes)
    res = numerical_index(prob.assemble())
    # APS sees every holomorphic mode (q >= 0), so the kernel is trivial
    assert (res.dim_ker, res.dim_coker) == (0, 0)
    with pytest.raises(DomainError):
        assemble_disk_modes(prob, window=100)
