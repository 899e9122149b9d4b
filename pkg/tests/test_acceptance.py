"""End-to-end acceptance suite: one test per criterion, each printing a pass/fail line."""

import math
import time

import mpmath
import numpy as np

from nonlocal_index.bvp import Condition, CylinderProblem, mode_index_oracle, numerical_index
from nonlocal_index.covering import build_covering, flat_decomposition
from nonlocal_index.discretize import (
    HermitianOperator, OperatorSpec, assemble_tangential, lift_operator, twist_with_flat_bundle,
)
from nonlocal_index.errors import NumericalStabilityError
from nonlocal_index.invariants import (
    CoveredCylinder, DisjointCopies, check_lefschetz_congruence, freed_melrose_mod_n,
    hirzebruch_model_check, homotopy_scan, pullback_vanishing_check, random_anticommuting_pair,
    relative_eta,
)
from nonlocal_index.kproj import (
    ProjectionFamily, embedded_ingredients, random_unitary_symbol, verify_projection_family,
)
from nonlocal_index.spectral import eigendecompose, eta_regularized
from nonlocal_index.symbols import (
    BUILTINS, brute_force_lopatinskii, builtin_pair, check_shapiro_lopatinskii,
    homotopy_min_singular_value, projection_of,
)


def hurwitz_eta(a):
    return float(mpmath.zeta(0, a) - mpmath.zeta(0, 1 - a))


def eta(op):
    return eta_regularized(eigendecompose(op)).value


def test_01_eta_closed_form(record):
    worst, slowest = 0.0, 0.0
    for a in (0.1, 0.25, 0.4, 0.7):
        t0 = time.perf_counter()
        value = eta(assemble_tangential(OperatorSpec.constant(a, fourier_cutoff=64)))
        slowest = max(slowest, time.perf_counter() - t0)
        worst = max(worst, abs(value - hurwitz_eta(a)), abs(value - (1 - 2 * a)))
    record(1, "eta closed form", worst < 1e-6 and slowest < 5, f"max error {worst:.1e}, {slowest:.2f} s")


def test_02_gauge_invariance(record):
    worst = 0.0
    for a in (0.1, 0.25, 0.4, 0.7):
        V = OperatorSpec.from_trig({0: a, 1: 0.5, 2: -0.15j}, fourier_cutoff=64)
        worst = max(worst, abs(eta(assemble_tangential(V))
                               - eta(assemble_tangential(OperatorSpec.constant(a, fourier_cutoff=64)))))
    record(2, "gauge invariance of eta", worst < 1e-6, f"max difference {worst:.1e}")


def test_03_covering_spectral_identity(record):
    spec_gap = eta_gap = 0.0
    for n in (2, 3, 4):
        spec = OperatorSpec.from_trig({0: 0.3, 1: 0.4, 2: 0.1j}, fourier_cutoff=32)
        cm = build_covering(n, 16)
        lifted = np.linalg.eigvalsh(lift_operator(spec, cm).matrix)
        twists = [twist_with_flat_bundle(spec, float(al)) for al in flat_decomposition(cm).exponents]
        union = np.sort(np.concatenate([np.linalg.eigvalsh(t.matrix) for t in twists]))
        spec_gap = max(spec_gap, np.abs(lifted - union).max())
        eta_gap = max(eta_gap, abs(eta(lift_operator(spec, cm)) - sum(eta(t) for t in twists)))
    record(3, "covering spectral identity", spec_gap < 1e-10 and eta_gap < 1e-8,
           f"spectrum {spec_gap:.1e}, eta {eta_gap:.1e}")


def test_04_relative_eta(record):
    r2 = relative_eta(OperatorSpec.constant(0.2), build_covering(2, 8))
    r3 = [relative_eta(OperatorSpec.constant(a), build_covering(3, 8)) for a in (0.05, 0.17, 0.3)]
    trivial = relative_eta(OperatorSpec.constant(0.2), build_covering(3, 8, trivial=True))
    ok = abs(r2 + 1) < 1e-6 and all(abs(r + 2) < 1e-6 for r in r3) and abs(trivial) < 1e-8
    record(4, "relative eta", ok, f"n=2: {r2:.9f}, n=3: {[round(r, 9) for r in r3]}, trivial: {trivial:.1e}")


def _covered(a, n, K, start, end, T, trig=None, trivial=False):
    cm = build_covering(n, 2 * K + 1, trivial=trivial)

    def build(k):
        spec = OperatorSpec.from_trig({0: a, **(trig or {})}, fourier_cutoff=k)
        return CylinderProblem(lift_operator(spec, cm), start, end, T, rebuild=build, cutoff=k)
    return build(K)


def _matrix_instances():
    rng = np.random.default_rng(11)
    X = rng.normal(size=(6, 6)) + 1j * rng.normal(size=(6, 6))
    op = HermitianOperator.from_matrix(X + X.conj().T)
    G = np.kron(np.array([[0, 1], [1, 0]]), np.eye(3))
    p = int(np.sum(np.linalg.eigvalsh(op.matrix) > 0))
    return [
        ("matrix dirichlet/dirichlet", CylinderProblem(op, Condition("dirichlet"), Condition("dirichlet"), 1.0), -6),
        ("matrix none/none", CylinderProblem(op, Condition("none"), Condition("none"), 1.0), 6),
        ("matrix random rows/aps", CylinderProblem(op, Condition("rows", matrix=rng.normal(size=(4, 6))),
                                                    Condition("aps"), 1.0), None),
        ("matrix aps/dirichlet", CylinderProblem(op, Condition("aps"), Condition("dirichlet"), 1.0), -p),
        ("matrix (1+G)/2 rows", CylinderProblem(op, Condition("projection", matrix=(np.eye(6) + G) / 2),
                                                 Condition("aps"), 1.0), None),
    ]


def test_05_numerical_index_vs_mode_oracle(record):
    K, N_t = 24, 24
    inst = [
        ("aps/aps n=2 a=0.3", _covered(0.3, 2, K, Condition("aps"), Condition("aps"), 4.0), None),
        ("aps/aps n=2 a=0", _covered(0.0, 2, K, Condition("aps"), Condition("aps"), 4.0), -1),
        ("aps/aps trivial n=3 a=0", _covered(0.0, 3, K, Condition("aps"), Condition("aps"), 4.0, trivial=True), -3),
        ("aps/aps n=3 a=1/3", _covered(1 / 3, 3, K, Condition("aps"), Condition("aps"), 4.0), -1),
        ("dirichlet/none n=2", _covered(0.3, 2, K, Condition("dirichlet"), Condition("none"), 0.3), None),
        ("none/dirichlet n=2", _covered(0.3, 2, K, Condition("none"), Condition("dirichlet"), 0.3), None),
        ("invariant/anti-invariant n=2", _covered(0.3, 2, K, Condition("invariant_part"),
                                                  Condition("anti_invariant_part"), 0.3), None),
        ("anti-invariant/invariant n=3 trig", _covered(0.2, 3, K, Condition("anti_invariant_part"),
                                                       Condition("invariant_part"), 0.3, {1: 0.3}), None),
        ("aps/aps n=2 trig", _covered(0.2, 2, K, Condition("aps"), Condition("aps"), 4.0, {1: 0.4}), None),
    ] + _matrix_instances()
    failures, slowest = [], 0.0
    for name, prob, expected in inst:
        t0 = time.perf_counter()
        try:
            res = numerical_index(prob.assemble(N_t))
            # second refinement level on top of the one inside numerical_index
            finer = prob.rebuild(math.ceil(1.5 * K)) if prob.rebuild else prob
            res2 = numerical_index(finer.assemble(math.ceil(1.5 * N_t)))
        except NumericalStabilityError as exc:
            failures.append(f"{name}: {exc}")
            continue
        slowest = max(slowest, time.perf_counter() - t0)
        oracle = mode_index_oracle(prob)
        ok = (res.stable and res2.stable and res.index == res2.index == oracle
              and min(res.rank_gap, res2.rank_gap) > 1e4 and (expected is None or oracle == expected))
        if not ok:
            failures.append(f"{name}: index {res.index}/{res2.index} oracle {oracle} stable {res.stable}/{res2.stable}")
    ok = not failures and len(inst) >= 12 and slowest < 30
    record(5, "numerical index vs mode oracle", ok,
           f"{len(inst) - len(failures)}/{len(inst)} instances, slowest {slowest:.1f} s" + "; ".join(failures))


def test_06_homotopy_invariance(record):
    rep = homotopy_scan(np.linspace(0.25, 1.25, 21), n=2)
    v = rep.values
    ok = rep.passed and len(v["events"]) == 1 and v["reduced_spread"] < 1e-4
    record(6, "homotopy invariance", ok,
           f"events {v['events']}, jumps {[round(j, 6) for j in v['jumps']]}, spread {v['reduced_spread']:.1e}")


def test_07_pullback_vanishing(record):
    cm = build_covering(2, 25)
    geos = [
        CoveredCylinder(OperatorSpec.constant(0.2), cm, bvp_cutoff=12, N_t=16),
        CoveredCylinder(OperatorSpec.constant(0.25), cm, OperatorSpec.constant(1.25), bvp_cutoff=12, N_t=16),
        CoveredCylinder(OperatorSpec.from_trig({0: 0.2, 1: 0.3}), cm, OperatorSpec.from_trig({0: 1.3, 1: -0.2}),
                        bvp_cutoff=12, N_t=16),
    ]
    reports = [pullback_vanishing_check(g) for g in geos]
    dist = max(r.values["distance"] for r in reports)
    record(7, "pullback vanishing", all(r.passed for r in reports) and dist < 1e-4,
           f"ind_aps {[r.values['ind_aps'] for r in reports]}, max distance {dist:.1e}")


def test_08_freed_melrose(record):
    cases = [(0.2, (0, 1, 1)), (0.3, (0, 0)), (0.45, (0, 1, -1, 2))]
    failures = []
    for a, shifts in cases:
        dc = DisjointCopies(a, shifts, bvp_cutoff=12, N_t=16)
        value, rep = freed_melrose_mod_n(dc)
        copies = sum(numerical_index(dc.copy_problem(i).assemble(16)).index for i in range(len(shifts)))
        if not (rep.fractional_part < 1e-6 or rep.fractional_part > 1 - 1e-6) or value.distance(copies) != 0:
            failures.append(f"a={a} shifts={shifts}: {value.representative} vs {copies}, frac {rep.fractional_part:.1e}")
    record(8, "Freed-Melrose reduction", not failures, "; ".join(failures) or f"{len(cases)} configurations")


def test_09_lefschetz_congruence(record):
    reports = [check_lefschetz_congruence(n) for n in (2, 3)]
    gaps = [r.values["route_gap"] for r in reports]
    dists = [r.values["distance"] for r in reports]
    record(9, "Lefschetz congruence", all(r.passed for r in reports),
           f"distances {[f'{d:.1e}' for d in dists]}, route gaps {[f'{g:.1e}' for g in gaps]}")


def test_10_hirzebruch_model(record):
    rng = np.random.default_rng(2024)
    good = 0
    for _ in range(100):
        m = int(rng.integers(1, 9))
        k = int(rng.integers(0, m + 1))
        A, G = random_anticommuting_pair(2 * m, 2 * k, rng)
        rep = hirzebruch_model_check(A, G)
        good += rep.passed and rep.values["index"] == k and rep.values["surjective"]
    record(10, "Hirzebruch model", good == 100, f"{good}/100")


def test_11_projection_families(record):
    rng = np.random.default_rng(5)
    reports = []
    for n in (2, 3):
        ing = embedded_ingredients(3, 4, 2, random_unitary_symbol(2, rng), rng=rng)
        reports.append(verify_projection_family(ProjectionFamily(ing, build_covering(n, 8))))
    ok = all(r.passed for r in reports)
    worst = {k: max(getattr(r, k) for r in reports) for k in ("idempotency", "self_adjointness", "seam", "gluing")}
    bad = embedded_ingredients(3, 4, 2, lambda x, xi: np.diag([2.0, 0.5]) + 0.3 * xi, normalize=False)
    control = verify_projection_family(ProjectionFamily(bad, build_covering(2, 8)), num_xi=33, num_t=11)
    record(11, "projection families", ok and not control.passed,
           ", ".join(f"{k} {v:.1e}" for k, v in worst.items()) + f"; negative control passed={control.passed}")


def test_12_shapiro_lopatinskii(record):
    pairs = [("aps_model", {"side": "positive"}), ("aps_model", {"side": "negative"}),
             ("reflecting_boundary", {"variant": "invariant"}), ("reflecting_boundary", {"variant": "wrong_side"}),
             ("dbar_disk", {"side": "positive"}), ("dbar_disk", {"side": "negative"})]
    assert {p[0] for p in pairs} == set(BUILTINS)
    failures, min_sv = [], math.inf
    for name, params in pairs:
        a, b = builtin_pair(name, **params)
        elliptic = check_shapiro_lopatinskii(a, b).elliptic
        if elliptic != brute_force_lopatinskii(a, b):
            failures.append(f"{name} {params}: checker and brute force disagree")
        if elliptic:
            min_sv = min(min_sv, homotopy_min_singular_value(a, projection_of(b), num_eps=101, num_angle=101))
    reflect = check_shapiro_lopatinskii(*builtin_pair("reflecting_boundary", variant="invariant")).elliptic
    wrong = check_shapiro_lopatinskii(*builtin_pair("reflecting_boundary", variant="wrong_side")).elliptic
    ok = not failures and reflect and not wrong and min_sv > 1e-6
    record(12, "Shapiro-Lopatinskii checker", ok,
           "; ".join(failures) or f"homotopy min singular value {min_sv:.3f}")
