"""Mod-n index defect, relative eta invariants, equivariant indices and the
verification drivers built on them.

The defect of a problem on a manifold whose boundary covers a base with n
sheets is

    ind(D, Pi_+) + xi(A) - n xi(A_0)   (mod n),   xi = (eta + dim ker) / 2,

summed over boundary components, where A is the tangential operator on the
cover boundary and A_0 the base operator it is lifted from.
"""
from __future__ import annotations

import cmath
import functools
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .bvp import (Condition, CylinderProblem, DiskProblem, IndexResult, assemble_disk_modes,
                  numerical_index, range_rows)
from .covering import CoveringMap, build_covering, flat_decomposition
from .discretize import (HermitianOperator, OperatorSpec, assemble_tangential, deck_matrix,
                         lift_operator, synthesis_matrix, twist_with_flat_bundle)
from .errors import DomainError, PreconditionError
from .spectral import EtaResult, eigendecompose, equivariant_eta, eta_regularized, spectral_flow

# plain eta jumps by this much per unit of spectral flow (eigenvalue crossing upward through 0)
ETA_JUMP_PER_CROSSING = 2.0
CONGRUENCE_TOL = 1e-4
COMMUTATOR_TOL = 1e-10


@dataclass(frozen=True)
class ModNValue:
    representative: float
    modulus: int

    def __post_init__(self):
        if self.modulus < 1:
            raise DomainError("modulus must be a positive integer")
        r = math.fmod(self.representative, self.modulus)
        if r < 0:
            r += self.modulus
        if r >= self.modulus:  # fmod rounding at the top edge
            r = 0.0
        object.__setattr__(self, "representative", float(r))

    def distance(self, other) -> float:
        b = other.representative if isinstance(other, ModNValue) else float(other)
        d = abs(self.representative - math.fmod(b, self.modulus)) % self.modulus
        return min(d, self.modulus - d)

    def close_to(self, other, tol: float = CONGRUENCE_TOL) -> bool:
        return self.distance(other) <= tol

    def to_dict(self):
        return {"representative": self.representative, "modulus": self.modulus}


@dataclass(frozen=True)
class DefectReport:
    ind_aps: int
    eta_cover: EtaResult
    eta_base: EtaResult
    ind_tilde: ModNValue
    fractional_part: float
    unreduced: float
    diagnostics: dict = field(default_factory=dict, compare=False)

    @property
    def error_budget(self) -> float:
        return self.eta_cover.estimated_error + self.ind_tilde.modulus * self.eta_base.estimated_error

    def to_dict(self):
        return {"ind_aps": self.ind_aps, "eta_cover": self.eta_cover.to_dict(),
                "eta_base": self.eta_base.to_dict(), "ind_tilde": self.ind_tilde.to_dict(),
                "fractional_part": self.fractional_part, "unreduced": self.unreduced,
                "error_budget": self.error_budget, "diagnostics": self.diagnostics}


@dataclass(frozen=True)
class CheckReport:
    name: str
    passed: bool
    values: dict = field(default_factory=dict)
    message: str = ""

    def to_dict(self):
        return {"name": self.name, "passed": self.passed, "values": self.values, "message": self.message}


def _sum_eta(results) -> EtaResult:
    results = list(results)
    return EtaResult(float(sum(r.value for r in results)), "sum",
                     float(sum(r.estimated_error for r in results)),
                     int(sum(r.kernel_dim for r in results)))


def _eta(op: HermitianOperator) -> EtaResult:
    return eta_regularized(eigendecompose(op))


@dataclass(frozen=True, eq=False)
class BoundaryComponent:
    """One boundary component: the operator on it and the base operator it covers n times."""

    cover: HermitianOperator
    base: HermitianOperator
    sheets: int


def combine_defect(ind: IndexResult | int, components, diagnostics=None) -> DefectReport:
    components = list(components)
    sheets = {c.sheets for c in components}
    if len(sheets) != 1:
        raise DomainError("all boundary components must cover their base with the same number of sheets")
    n = sheets.pop()
    ind_aps = ind.index if isinstance(ind, IndexResult) else int(ind)
    cover = _sum_eta(_eta(c.cover) for c in components)
    base = _sum_eta(_eta(c.base) for c in components)
    relative = cover.aps_value - n * base.aps_value
    unreduced = ind_aps + relative
    diag = dict(diagnostics or {})
    if isinstance(ind, IndexResult):
        diag["index"] = ind.to_dict()
    return DefectReport(ind_aps, cover, base, ModNValue(unreduced, n),
                        float(relative - math.floor(relative)), float(unreduced), diag)


# ------------------------------------------------------------- geometries

def _lift(spec: OperatorSpec, cm: CoveringMap, K: int) -> HermitianOperator:
    return lift_operator(spec.with_changes(fourier_cutoff=K), cm)


@dataclass(frozen=True, eq=False)
class CoveredCylinder:
    """[0, length] x cover circle, the pullback of d/dt + A_0(t) from [0, length] x base circle.

    The tangential operator runs from the lift of ``base_start`` to the lift of
    ``base_end`` (product type if ``base_end`` is None).  Both ends carry APS
    conditions.  ``perturbation(op)`` is an optional extra matrix added to the
    tangential operator at both ends; it must commute with the deck group.
    """

    base_start: OperatorSpec
    covering: CoveringMap
    base_end: OperatorSpec | None = None
    length: float = 4.0
    bvp_cutoff: int = 24
    eta_cutoff: int = 64
    N_t: int = 24
    eps: float = 1e-6
    perturbation: object = None

    @property
    def sheets(self) -> int:
        return self.covering.sheets

    def _perturb(self, op: HermitianOperator) -> HermitianOperator:
        if self.perturbation is None:
            return op
        return op.with_matrix(op.matrix + self.perturbation(op))

    def problem(self, K: int | None = None) -> CylinderProblem:
        K = self.bvp_cutoff if K is None else K
        A0 = self._perturb(_lift(self.base_start, self.covering, K))
        A1 = None if self.base_end is None else self._perturb(_lift(self.base_end, self.covering, K))
        aps = Condition("aps", eps=self.eps)
        return CylinderProblem(A0, aps, aps, self.length, A1, rebuild=self.problem, cutoff=K,
                               label="covered-cylinder")

    def boundary_components(self):
        K, cm = self.eta_cutoff, self.covering
        end = self.base_start if self.base_end is None else self.base_end
        out = []
        for spec, sign in ((self.base_start, 1), (end, -1)):
            s = spec.with_changes(fourier_cutoff=K)
            cover = self._perturb(lift_operator(s, cm))
            base = assemble_tangential(s)
            if sign < 0:
                cover, base = -cover, -base
            out.append(BoundaryComponent(cover, base, cm.sheets))
        return out

    def check_lifted(self):
        """Reject tangential operators that are not lifted from the base (deck commutator test)."""
        op = self.problem().start_operator
        for g in range(1, self.sheets):
            G = deck_matrix(op, g)
            c = np.abs(G @ op.matrix - op.matrix @ G).max()
            if c > COMMUTATOR_TOL:
                raise PreconditionError(
                    f"tangential operator does not commute with deck transformation {g} ({c:.2e})")


@dataclass(frozen=True, eq=False)
class DiskModel:
    """The d-bar operator on the unit disk, boundary circle covering a base circle n times.

    The boundary operator is the lift of -i d/dx; rotation by 2 pi / n acts
    freely on the boundary and fixes the centre.
    """

    sheets: int
    cutoff: int = 24
    eta_cutoff: int = 64
    eps: float = 1e-6
    condition: str = "aps"

    @property
    def covering(self) -> CoveringMap:
        return build_covering(self.sheets, 2 * self.cutoff + 1)

    def base_spec(self, K: int) -> OperatorSpec:
        return OperatorSpec.constant(0.0, fourier_cutoff=K)

    def problem(self, K: int | None = None) -> DiskProblem:
        K = self.cutoff if K is None else K
        cm = build_covering(self.sheets, 2 * K + 1)
        boundary = lift_operator(self.base_spec(K), cm)
        return DiskProblem(boundary, Condition(self.condition, eps=self.eps, covering=cm),
                           rebuild=self.problem, cutoff=K)

    def boundary_components(self):
        K = self.eta_cutoff
        cm = build_covering(self.sheets, 2 * K + 1)
        spec = self.base_spec(K)
        return [BoundaryComponent(lift_operator(spec, cm), assemble_tangential(spec), self.sheets)]


def ind_tilde(geometry, cm: CoveringMap | None = None, method: str = "auto") -> DefectReport:
    """Mod-n index defect of a covered geometry (:class:`CoveredCylinder` or :class:`DiskModel`)."""
    if cm is not None and cm.sheets != geometry.sheets:
        raise DomainError("covering does not match the geometry")
    if isinstance(geometry, CoveredCylinder):
        geometry.check_lifted()
        ind = numerical_index(geometry.problem().assemble(geometry.N_t), method=method)
    else:
        ind = numerical_index(geometry.problem().assemble())
    if not ind.stable:
        from .errors import IllConditionedRankError
        raise IllConditionedRankError("index not stable under refinement", ind.audit)
    return combine_defect(ind, geometry.boundary_components(),
                          {"sheets": geometry.sheets, "geometry": type(geometry).__name__})


def relative_eta(spec: OperatorSpec, cm: CoveringMap, normalization: str = "spectral") -> float:
    """sum_j eta(A_0 twisted by L_j) - n eta(A_0), over the flat line bundles L_j of the fiber.

    ``normalization="aps"`` uses (eta + dim ker) / 2 throughout.
    """
    if normalization not in ("spectral", "aps"):
        raise DomainError(f"unknown normalization {normalization!r}")
    pick = (lambda r: r.value) if normalization == "spectral" else (lambda r: r.aps_value)
    base = eta_regularized(eigendecompose(assemble_tangential(spec)))
    twists = [eta_regularized(eigendecompose(twist_with_flat_bundle(spec, float(a))))
              for a in flat_decomposition(cm).exponents]
    return float(sum(pick(t) for t in twists) - cm.sheets * pick(base))


# ------------------------------------------------------------- Freed-Melrose

@dataclass(frozen=True, eq=False)
class DisjointCopies:
    """n disjoint cylinders whose ends form the trivial n-sheeted cover of one base circle.

    Copy i runs from -i d/dx + a to -i d/dx + a + shifts[i]; the far end of every
    copy is gauge-equivalent to -i d/dx + a, so both ends cover a single base
    operator and the copies differ only in their interiors.
    """

    a: float
    shifts: tuple
    length: float = 4.0
    bvp_cutoff: int = 24
    eta_cutoff: int = 64
    N_t: int = 24
    eps: float = 1e-6

    @property
    def sheets(self) -> int:
        return len(self.shifts)

    def _ops(self, K):
        cm = build_covering(self.sheets, 2 * K + 1, trivial=True)
        start = lift_operator(OperatorSpec.constant(self.a, fourier_cutoff=K), cm)
        ends = [assemble_tangential(OperatorSpec.constant(self.a + s, fourier_cutoff=K)).matrix
                for s in self.shifts]
        return start, start.with_matrix(scipy.linalg.block_diag(*ends))

    def problem(self, K: int | None = None) -> CylinderProblem:
        K = self.bvp_cutoff if K is None else K
        start, end = self._ops(K)
        aps = Condition("aps", eps=self.eps)
        return CylinderProblem(start, aps, aps, self.length, end, rebuild=self.problem, cutoff=K,
                               label="disjoint-copies")

    def copy_problem(self, i: int, K: int | None = None) -> CylinderProblem:
        K = self.bvp_cutoff if K is None else K
        s0 = OperatorSpec.constant(self.a, fourier_cutoff=K)
        s1 = OperatorSpec.constant(self.a + self.shifts[i], fourier_cutoff=K)
        aps = Condition("aps", eps=self.eps)
        return CylinderProblem(assemble_tangential(s0), aps, aps, self.length, assemble_tangential(s1),
                               rebuild=lambda k: self.copy_problem(i, k), cutoff=K)

    def boundary_components(self):
        start, end = self._ops(self.eta_cutoff)
        base = assemble_tangential(OperatorSpec.constant(self.a, fourier_cutoff=self.eta_cutoff))
        return [BoundaryComponent(start, base, self.sheets), BoundaryComponent(-end, -base, self.sheets)]


def freed_melrose_mod_n(problem: DisjointCopies) -> tuple[ModNValue, DefectReport]:
    ind = numerical_index(problem.problem().assemble(problem.N_t))
    report = combine_defect(ind, problem.boundary_components(), {"sheets": problem.sheets})
    return ModNValue(round(report.unreduced), problem.sheets), report


# ------------------------------------------------------------- equivariant index

def _null_space(M, tol=1e-8):
    if M.shape[0] == 0:
        return np.eye(M.shape[1], dtype=complex)
    U, s, Vh = np.linalg.svd(M)
    rank = int(np.count_nonzero(s > tol * s.max())) if s.size else 0
    return Vh[rank:].conj().T


def _equivariant_pieces(problem: DiskProblem):
    op = problem.boundary
    n = op.covering.sheets
    R = problem.condition.rows(op)
    if R.shape[0]:
        R = range_rows(np.linalg.pinv(R) @ R)
    G = deck_matrix(op, 1)
    P = R.conj().T @ R
    c = max(np.abs(G @ op.matrix - op.matrix @ G).max(), np.abs(G @ P - P @ G).max(initial=0))
    if c > COMMUTATOR_TOL:
        raise PreconditionError(f"problem does not commute with the rotation ({c:.2e})")
    H = problem.holomorphic
    RH = R[:, H]
    GH = G[np.ix_(H, H)]
    T = R @ G @ R.conj().T  # action on the condition's target space
    ker = _null_space(RH)
    coker = _null_space(RH.conj().T)
    return n, ker.conj().T @ GH @ ker, coker.conj().T @ T @ coker


def _isotypic_multiplicities(action: np.ndarray, n: int) -> np.ndarray:
    m = np.zeros(n, dtype=int)
    if action.size == 0:
        return m
    w = np.linalg.eigvals(action)
    s = np.rint(np.angle(w) * n / (2 * np.pi)).astype(int) % n
    if np.abs(w - np.exp(2j * np.pi * s / n)).max() > 1e-8:
        raise DomainError("group action on kernel is not of order n")
    np.add.at(m, s, 1)
    return m


def equivariant_index(problem: DiskProblem, g: int) -> complex:
    """sum over isotypic components of (tr g on ker - tr g on coker)."""
    n, ker_action, coker_action = _equivariant_pieces(problem)
    m = _isotypic_multiplicities(ker_action, n) - _isotypic_multiplicities(coker_action, n)
    return complex(np.sum(m * np.exp(2j * np.pi * np.arange(n) * g / n)))


def equivariant_index_by_modes(problem: DiskProblem, g: int) -> complex:
    """Character sum over boundary modes for conditions diagonal in the Fourier basis."""
    n = problem.boundary.covering.sheets
    total = 0j
    for mode in assemble_disk_modes(problem):
        chi = cmath.exp(2j * cmath.pi * mode.frequency * g / n)
        if mode.holomorphic and not mode.constrained:
            total += chi
        elif mode.constrained and not mode.holomorphic:
            total -= chi
    return total


def lefschetz_contribution(omega: complex, operator_kind: str = "holomorphic") -> complex:
    """Fixed-point contribution 1 / (1 - omega) of an isolated rotation fixed point."""
    if operator_kind != "holomorphic":
        raise DomainError("only the holomorphic (d-bar) contribution is implemented")
    omega = complex(omega)
    if abs(omega - 1) < 1e-12:
        raise DomainError("rotation must not be the identity")
    if abs(abs(omega) - 1) > 1e-12:
        raise DomainError("rotation number must have modulus one")
    return 1.0 / (1.0 - omega)


@functools.lru_cache(maxsize=8)
def _rotation_spectrum(n: int, K: int):
    cm = build_covering(n, 2 * K + 1)
    A = lift_operator(OperatorSpec.constant(0.0, fourier_cutoff=K), cm)
    # rescaled to integer spectrum; the window K n / 2 is then in the units of t
    return A, eigendecompose(A.with_matrix(n * A.matrix), window=n * K / 2)


def equivariant_aps_route(model: DiskModel, g: int, K: int = 192,
                          t_grid=(0.4, 0.2, 0.1, 0.05)) -> complex:
    """ind_g(D, Pi_+) + (eta(A, g) + tr(g | ker A)) / 2 on the boundary of the disk model."""
    A, spec = _rotation_spectrum(model.sheets, K)
    eta_g, ker_trace, _ = equivariant_eta(spec, deck_matrix(A, g), t_grid=t_grid)
    return equivariant_index(model.problem(), g) + 0.5 * (eta_g + ker_trace)


def check_lefschetz_congruence(model: DiskModel | int, tol: float = CONGRUENCE_TOL) -> CheckReport:
    """ind~ D against -sum_{g != e} L(D, g) mod n, with L cross-checked by the equivariant APS route."""
    if not isinstance(model, DiskModel):
        model = DiskModel(int(model))
    n = model.sheets
    omega = cmath.exp(2j * cmath.pi / n)
    contributions = [lefschetz_contribution(omega ** g) for g in range(1, n)]
    routes = [equivariant_aps_route(model, g) for g in range(1, n)]
    route_gap = max((abs(a - b) for a, b in zip(contributions, routes)), default=0.0)
    rhs = -sum(contributions, 0j)
    lhs = ind_tilde(model)
    imag_ok = abs(rhs.imag) < tol
    dist = lhs.ind_tilde.distance(rhs.real)
    budget = lhs.error_budget
    passed = bool(imag_ok and route_gap < tol and dist < tol)
    return CheckReport("lefschetz", passed, {
        "n": n, "lhs": lhs.ind_tilde.representative, "rhs": [rhs.real, rhs.imag],
        "distance": dist, "route_gap": float(route_gap), "error_budget": budget,
        "contributions": [[c.real, c.imag] for c in contributions],
        "aps_route": [[c.real, c.imag] for c in routes]})


# ------------------------------------------------------------- pullback / Hirzebruch

def one_sheet_perturbation(amplitude: float = 0.3, width: float = 0.5):
    """Perturbation callback: a bump potential on sheet 0 of a connected cover only."""
    def build(op: HermitianOperator) -> np.ndarray:
        S = synthesis_matrix(op)
        n = op.covering.sheets
        theta = 2 * np.pi * np.arange(S.shape[0]) / S.shape[0]
        bump = amplitude * np.exp(-((theta - np.pi / n) / width) ** 2)
        return S.conj().T @ (bump[:, None] * S)
    return build


def pullback_vanishing_check(geometry: CoveredCylinder, tol: float = CONGRUENCE_TOL) -> CheckReport:
    report = ind_tilde(geometry)
    dist = report.ind_tilde.distance(0.0)
    return CheckReport("pullback", bool(dist <= tol), {
        "n": geometry.sheets, "ind_aps": report.ind_aps, "ind_tilde": report.ind_tilde.representative,
        "distance": dist, "error_budget": report.error_budget})


def hirzebruch_model_check(A, G, eps: float | None = None, tol: float = 1e-12) -> CheckReport:
    """Index of (1 + G): Im Pi_+(A + eps) -> invariant subspace of G."""
    A = np.asarray(A, dtype=complex)
    G = np.asarray(G, dtype=complex)
    d = A.shape[0]
    scale = max(1.0, np.abs(A).max())
    if np.abs(A - A.conj().T).max() > tol * scale:
        raise PreconditionError("A is not Hermitian")
    if np.abs(G @ G - np.eye(d)).max() > tol * 10 or np.abs(G @ G.conj().T - np.eye(d)).max() > tol * 10:
        raise PreconditionError("G is not a unitary involution")
    if np.abs(G @ A + A @ G).max() > tol * 10 * scale:
        raise PreconditionError("G does not anticommute with A")
    lam, V = scipy.linalg.eigh(A)
    ktol = 1e-9 * scale
    if eps is None:
        eps = ktol
    nonzero = np.abs(lam[np.abs(lam) > ktol])
    if nonzero.size and eps >= nonzero.min():
        raise DomainError("eps must be below the smallest non-zero |eigenvalue|")
    kerA = V[:, np.abs(lam) <= ktol]
    if kerA.shape[1] % 2:
        raise PreconditionError("odd-dimensional kernel: the anticommuting model is inconsistent")
    Qplus = V[:, lam > -eps]
    w, W = scipy.linalg.eigh(0.5 * (G + G.conj().T))
    Qinv = W[:, w > 0]
    M = Qinv.conj().T @ (np.eye(d) + G) @ Qplus
    s = np.linalg.svd(M, compute_uv=False)
    rank = int(np.count_nonzero(s > 1e-8 * max(s.max(initial=0), 1)))
    ker_M = Qplus.shape[1] - rank
    coker_M = Qinv.shape[1] - rank
    # G preserves ker A and splits it evenly into +1 and -1 parts
    Gk = kerA.conj().T @ G @ kerA
    preserved = bool(np.abs(G @ kerA - kerA @ Gk).max(initial=0) < 1e-8)
    plus = int(np.count_nonzero(np.linalg.eigvalsh(0.5 * (Gk + Gk.conj().T)) > 0)) if Gk.size else 0
    half = kerA.shape[1] // 2
    passed = coker_M == 0 and ker_M == half and preserved and plus == half
    return CheckReport("hirzebruch", bool(passed), {
        "dim": d, "dim_ker_A": kerA.shape[1], "index": ker_M - coker_M, "dim_ker": ker_M,
        "dim_coker": coker_M, "surjective": coker_M == 0, "kernel_preserved": preserved,
        "kernel_invariant_part": plus})


def random_anticommuting_pair(dim: int, kernel_dim: int, rng: np.random.Generator):
    """Random Hermitian A and unitary involution G with GA = -AG and dim ker A = kernel_dim."""
    if dim % 2 or kernel_dim % 2 or kernel_dim > dim:
        raise DomainError("dimension and kernel dimension must be even, kernel_dim <= dim")
    m = dim // 2
    B = rng.standard_normal((m, m)) + 1j * rng.standard_normal((m, m))
    U, s, Vh = np.linalg.svd(B)
    s[m - kernel_dim // 2:] = 0.0
    s[:m - kernel_dim // 2] = 0.5 + s[:m - kernel_dim // 2]
    B = U @ np.diag(s) @ Vh
    A = np.block([[np.zeros((m, m)), B], [B.conj().T, np.zeros((m, m))]])
    G = np.diag(np.r_[np.ones(m), -np.ones(m)]).astype(complex)
    Z = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    Q = np.linalg.qr(Z)[0]
    A = Q @ A @ Q.conj().T
    return 0.5 * (A + A.conj().T), Q @ G @ Q.conj().T


# ------------------------------------------------------------- homotopy scan

@dataclass(frozen=True)
class ScanSample:
    s: float
    a: float
    ind_aps: int
    unreduced: float
    ind_tilde: float
    error_budget: float


def homotopy_scan(a_values, n: int = 2, a_ref: float = 0.25, tol: float = CONGRUENCE_TOL,
                  bvp_cutoff: int = 24, eta_cutoff: int = 64, N_t: int = 24) -> CheckReport:
    """Follow the defect along the start potential a(s), far end pinned at ``a_ref``.

    Between spectral-flow events the unreduced defect must be constant; at events
    it may jump by multiples of n; the reduced defect must never move.
    """
    a_values = [float(a) for a in a_values]
    cm = build_covering(n, 2 * bvp_cutoff + 1)
    samples = []
    for i, a in enumerate(a_values):
        geo = CoveredCylinder(OperatorSpec.constant(a), cm, OperatorSpec.constant(a_ref),
                              bvp_cutoff=bvp_cutoff, eta_cutoff=eta_cutoff, N_t=N_t)
        rep = ind_tilde(geo)
        samples.append(ScanSample(i / max(len(a_values) - 1, 1), a, rep.ind_aps, rep.unreduced,
                                  rep.ind_tilde.representative, rep.error_budget))
    base_path = [assemble_tangential(OperatorSpec.constant(a, fourier_cutoff=bvp_cutoff)) for a in a_values]
    events, jumps, problems = [], [], []
    for i in range(len(samples) - 1):
        sf = spectral_flow(base_path[i:i + 2])
        jump = samples[i + 1].unreduced - samples[i].unreduced
        if sf:
            events.append(i)
            k = round(jump / n)
            jumps.append(jump)
            if abs(jump - n * k) > tol:
                problems.append(f"jump {jump:.6g} at step {i} is not a multiple of {n}")
        elif abs(jump) > max(tol, samples[i].error_budget + samples[i + 1].error_budget):
            problems.append(f"unreduced defect moved by {jump:.3g} at step {i} without spectral flow")
    ref = ModNValue(samples[0].ind_tilde, n)
    spread = max(ref.distance(s.ind_tilde) for s in samples)
    if spread > tol:
        problems.append(f"reduced defect varies by {spread:.3g}")
    return CheckReport("homotopy-scan", not problems, {
        "n": n, "events": events, "jumps": jumps, "reduced_spread": spread,
        "samples": [vars(s) for s in samples]}, "; ".join(problems))
