"""Discretized first-order boundary value problems d/dt + A(t) on a cylinder
[0, T] x circle, APS and non-local boundary conditions, numerical indices.

The normal variable is discretized by polynomial collocation: unknowns are
values at ``N_t`` Chebyshev-Lobatto nodes and the equation is imposed at the
``N_t - 1`` Chebyshev-Gauss points, so the interior map is onto and its
kernel is one discrete solution per tangential mode.  At t = T the outward
normal is reversed, so every end condition is phrased in terms of the end's
own tangential operator (``-A(T)`` at the far end).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np
import scipy.linalg
from numpy.polynomial import chebyshev as C

from .covering import CoveringMap
from .discretize import HermitianOperator, synthesis_matrix
from .errors import DomainError, IllConditionedRankError
from .spectral import KERNEL_TOL, eigendecompose, positive_basis

RANK_TOL = 1e-8
STABLE_GAP = 1e4
MIN_GAP = 1e2
REFINE = 1.5


# ---------------------------------------------------------------- conditions

@dataclass(frozen=True, eq=False)
class Condition:
    """Boundary condition descriptor, turned into rows on the trace by :meth:`rows`.

    kinds: ``aps`` (Pi_+ of the end's tangential operator plus eps),
    ``aps_complement`` (1 - that; the wrong spectral side), ``dirichlet``,
    ``none``, ``projection`` (explicit projection), ``rows`` (explicit rows),
    ``nonlocal`` (a fiber matrix applied at every base point after the
    direct image), ``invariant_part`` (fiber average, i.e. (1 + G)/2 for two
    sheets) and ``anti_invariant_part`` (its orthogonal complement in each fiber).
    """

    kind: str
    eps: float = 1e-6
    matrix: np.ndarray | None = None
    covering: CoveringMap | None = None

    def rows(self, op: HermitianOperator) -> np.ndarray:
        d = op.dim
        if self.kind == "none":
            return np.zeros((0, d), dtype=complex)
        if self.kind == "dirichlet":
            return np.eye(d, dtype=complex)
        if self.kind in ("aps", "aps_complement"):
            spec = eigendecompose(op)
            Q = positive_basis(spec, self.eps)
            if self.kind == "aps_complement":
                Q = spec.eigenvectors[:, spec.eigenvalues <= -self.eps]
            return Q.conj().T
        if self.kind == "projection":
            return range_rows(self.matrix)
        if self.kind == "rows":
            R = np.asarray(self.matrix, dtype=complex)
            if R.shape[1] != d:
                raise DomainError("condition rows do not match the trace dimension")
            return R
        if self.kind in ("nonlocal", "invariant_part", "anti_invariant_part"):
            cm = self.covering if self.covering is not None else op.covering
            if cm is None:
                raise DomainError("non-local condition needs a covering")
            r = int(op.components.max()) + 1
            n = cm.sheets
            if self.kind == "invariant_part":
                b = np.kron(np.ones((1, n)) / n, np.eye(r))
            elif self.kind == "anti_invariant_part":
                b = range_rows(np.kron(np.eye(n) - np.ones((n, n)) / n, np.eye(r)))
            else:
                b = np.asarray(self.matrix, dtype=complex)
            return nonlocal_condition_rows(cm, b, op)
        raise DomainError(f"unknown condition kind {self.kind!r}")

    def to_dict(self):
        return {"kind": self.kind, "eps": self.eps}


def range_rows(P) -> np.ndarray:
    """Orthonormal rows spanning the range of a Hermitian projection."""
    P = np.asarray(P, dtype=complex)
    w, V = scipy.linalg.eigh(0.5 * (P + P.conj().T))
    return V[:, w > 0.5].conj().T


def nonlocal_condition_rows(cm: CoveringMap, B, op: HermitianOperator) -> np.ndarray:
    """Rows of B . beta . trace on Fourier coefficients of the cover trace.

    ``B`` is either a fiber matrix of shape (m, n*r), applied at every base
    point, or a full matrix on base grid functions of shape (M, N*n*r) in
    point-major order.  The base grid has ``dim / (n r)`` points so that grid
    synthesis of the trace is invertible.
    """
    n = cm.sheets
    r = int(op.components.max()) + 1
    nN = op.dim // r
    if nN % n:
        raise DomainError("trace dimension is incompatible with the covering")
    N = nN // n
    S = synthesis_matrix(op, nN)  # (nN r, dim): rows (cover point, component)
    fibers = np.arange(N)[:, None] + N * np.arange(n)[None, :]
    beta_rows = (fibers[:, :, None] * r + np.arange(r)[None, None, :]).ravel()
    base_values = S[beta_rows]  # rows (base point, sheet, component)
    B = np.asarray(B, dtype=complex)
    if B.shape[1] == n * r:
        B = np.kron(np.eye(N), B)
    if B.shape[1] != N * n * r:
        raise DomainError(f"B has {B.shape[1]} columns, expected {n * r} or {N * n * r}")
    return B @ base_values


# ------------------------------------------------------------ collocation

def chebyshev_collocation(N_t: int, T: float):
    """Lobatto nodes, Gauss collocation points, interpolation and derivative matrices."""
    if N_t < 2:
        raise DomainError("need at least two collocation nodes")
    j = np.arange(N_t)
    x_nodes = -np.cos(np.pi * j / (N_t - 1))
    i = np.arange(N_t - 1)
    x_gauss = -np.cos(np.pi * (2 * i + 1) / (2 * (N_t - 1)))
    Vinv = np.linalg.inv(C.chebvander(x_nodes, N_t - 1))
    E = C.chebvander(x_gauss, N_t - 1) @ Vinv
    dcoef = C.chebder(np.eye(N_t), axis=0)  # derivative coefficients of each basis polynomial
    Dvander = C.chebvander(x_gauss, N_t - 2) @ dcoef
    D = Dvander @ Vinv * (2.0 / T)
    to_t = lambda x: 0.5 * T * (x + 1.0)
    return to_t(x_nodes), to_t(x_gauss), E, D


def smooth_step(s):
    """C-infinity step: 0 for s <= 0.2, 1 for s >= 0.8."""
    s = np.clip((np.asarray(s, dtype=float) - 0.2) / 0.6, 0.0, 1.0)
    f = lambda u: np.where(u > 0, np.exp(-1.0 / np.maximum(u, 1e-300)), 0.0)
    return f(s) / (f(s) + f(1.0 - s))


# ------------------------------------------------------------- problems

@dataclass(frozen=True, eq=False)
class CylinderProblem:
    """d/dt + A(t) on [0, length] with A(t) interpolating start -> end operator.

    ``rebuild(K)`` returns the same problem at Fourier cutoff K (used for grid
    refinement); problems without it are refined in N_t only.
    """

    start_operator: HermitianOperator
    start: Condition
    end: Condition
    length: float = 1.0
    end_operator: HermitianOperator | None = None
    rebuild: Callable[[int], "CylinderProblem"] | None = None
    cutoff: int | None = None
    label: str = ""

    @property
    def dim(self) -> int:
        return self.start_operator.dim

    @property
    def product_type(self) -> bool:
        return self.end_operator is None

    def A(self, t) -> np.ndarray:
        A0 = self.start_operator.matrix
        if self.end_operator is None:
            return A0
        chi = float(smooth_step(t / self.length))
        return (1 - chi) * A0 + chi * self.end_operator.matrix

    def far_operator(self) -> HermitianOperator:
        """Tangential operator of the far end (orientation reversed)."""
        op = self.start_operator if self.end_operator is None else self.end_operator
        return -op

    def assemble(self, N_t: int = 24) -> "BVPAssembly":
        return assemble_cylinder_aps(self, N_t)


@dataclass(frozen=True, eq=False)
class BVPAssembly:
    """Interior collocation rows plus boundary rows on the traces u(0), u(T).

    The interior block is kept in factored form; :attr:`interior_matrix`
    materializes it.
    """

    start_rows: np.ndarray
    end_rows: np.ndarray
    provenance: object
    grid_params: dict
    nodes: np.ndarray | None = None
    gauss: np.ndarray | None = None
    E: np.ndarray | None = None
    D: np.ndarray | None = None
    A_gauss: np.ndarray | None = None  # (N_t - 1, d, d)
    explicit: np.ndarray | None = None  # plain stacked matrix without interior structure

    @property
    def dim(self) -> int:
        return self.start_rows.shape[1]

    @property
    def num_unknowns(self) -> int:
        if self.explicit is not None:
            return self.explicit.shape[1]
        return self.nodes.size * self.dim

    @property
    def interior_matrix(self) -> np.ndarray:
        if self.explicit is not None:
            return np.zeros((0, self.explicit.shape[1]), dtype=complex)
        d, n = self.dim, self.nodes.size
        blocks = self.E[:, :, None, None] * self.A_gauss[:, None, :, :]
        blocks = blocks + self.D[:, :, None, None] * np.eye(d)[None, None]
        return blocks.transpose(0, 2, 1, 3).reshape((n - 1) * d, n * d)

    @property
    def boundary_rows(self) -> np.ndarray:
        if self.explicit is not None:
            return self.explicit
        d, n = self.dim, self.nodes.size
        R = np.zeros((self.start_rows.shape[0] + self.end_rows.shape[0], n * d), dtype=complex)
        R[:self.start_rows.shape[0], :d] = self.start_rows
        R[self.start_rows.shape[0]:, (n - 1) * d:] = self.end_rows
        return R

    def stacked(self) -> np.ndarray:
        return np.vstack([self.interior_matrix, self.boundary_rows])

    def adjoint(self) -> "BVPAssembly":
        return explicit_assembly(self.stacked().conj().T, provenance=("adjoint", self.provenance))


def explicit_assembly(matrix, provenance=None) -> BVPAssembly:
    """A plain matrix treated as a (boundary-rows-only) assembly."""
    M = np.asarray(matrix, dtype=complex)
    empty = np.zeros((0, M.shape[1]), dtype=complex)
    return BVPAssembly(empty, empty, provenance, {}, explicit=M)


def assemble_cylinder_aps(problem: CylinderProblem, N_t: int = 24) -> BVPAssembly:
    T = problem.length
    if not T > 0:
        raise DomainError("cylinder length must be positive")
    nodes, gauss, E, D = chebyshev_collocation(N_t, T)
    A_gauss = np.stack([problem.A(s) for s in gauss])
    start_rows = problem.start.rows(problem.start_operator)
    end_rows = problem.end.rows(problem.far_operator())
    d = problem.dim
    if start_rows.shape[1] != d or end_rows.shape[1] != d:
        raise DomainError("condition rows do not match the tangential dimension")
    return BVPAssembly(start_rows, end_rows, problem,
                       {"K": problem.cutoff, "N_t": N_t, "T": T},
                       nodes, gauss, E, D, A_gauss)


# ------------------------------------------------------------- index extraction

@dataclass(frozen=True)
class IndexResult:
    index: int
    dim_ker: int
    dim_coker: int
    rank_gap: float
    stable: bool
    audit: dict = field(default_factory=dict, compare=False)

    def to_dict(self):
        return {"index": self.index, "dim_ker": self.dim_ker, "dim_coker": self.dim_coker,
                "rank_gap": self.rank_gap, "stable": self.stable, "audit": self.audit}


def _rank_decision(s: np.ndarray, tol: float):
    if s.size == 0:
        return 0, np.inf, s
    smax = s[0]
    kept = s[s > tol * smax] if smax > 0 else s[:0]
    dropped = s[kept.size:]
    floor = np.finfo(float).eps * max(smax, 1e-300)
    largest_dropped = max(dropped.max() if dropped.size else 0.0, floor)
    gap = kept.min() / largest_dropped if kept.size else np.inf
    return kept.size, float(gap), s


def _solution_basis(asm: BVPAssembly):
    """Traces at t = 0 and t = T of a basis of the discrete solution space.

    Returns (Z0, ZT), each (d, d); column m is one solution, scaled to unit
    max-norm over the nodes.  Only available when all A(t) are diagonal in one
    basis, where each mode is a scalar ODE; returns None otherwise (shooting
    through a general family mixes exponentially growing and decaying modes).
    """
    d = asm.dim
    A = asm.A_gauss
    A0, A1 = A[0], A[-1]
    U = scipy.linalg.eigh(A0 + 0.6180339887 * A1 + 0.1 * (A0 @ A1 + A1 @ A0))[1]
    Ad = U.conj().T[None] @ A @ U[None]
    off = Ad - np.einsum("sii->si", Ad)[:, :, None] * np.eye(d)[None]
    if np.max(np.abs(off)) < 1e-10 * max(1.0, np.abs(A).max()):
        lam = np.einsum("sii->si", Ad).real  # (N_t - 1, d)
        z0 = np.empty(d, dtype=complex)
        zT = np.empty(d, dtype=complex)
        for m in range(d):
            Cm = asm.D + lam[:, m][:, None] * asm.E
            z = np.linalg.svd(Cm)[2][-1].conj()
            z = z / z[np.argmax(np.abs(z))]
            z0[m], zT[m] = z[0], z[-1]
        return U * z0[None, :], U * zT[None, :]
    return None


def _index_on_grid(asm: BVPAssembly, tol: float, method: str):
    if asm.explicit is not None:
        M = asm.explicit
        s = np.linalg.svd(M, compute_uv=False)
        rank, gap, s = _rank_decision(s, tol)
        return M.shape[1] - rank, M.shape[0] - rank, gap, s
    rows0, rowsT = asm.start_rows, asm.end_rows
    if method not in ("auto", "full", "reduced"):
        raise DomainError(f"unknown method {method!r}")
    basis = _solution_basis(asm) if method != "full" else None
    if method == "reduced" and basis is None:
        raise DomainError("reduced method needs a tangential family diagonal in one basis")
    if basis is None:
        M = asm.stacked()
        s = np.linalg.svd(M, compute_uv=False)
        rank, gap, s = _rank_decision(s, tol)
        return M.shape[1] - rank, M.shape[0] - rank, gap, s
    Z0, ZT = basis
    M = np.vstack([rows0 @ Z0, rowsT @ ZT])
    s = np.linalg.svd(M, compute_uv=False) if M.size else np.zeros(0)
    rank, gap, s = _rank_decision(s, tol)
    return asm.dim - rank, M.shape[0] - rank, gap, s


def numerical_index(asm: BVPAssembly, tol: float = RANK_TOL, method: str = "auto",
                    refine: bool = True) -> IndexResult:
    """Kernel/cokernel dimensions by singular values, confirmed on a refined grid."""
    ker, coker, gap, s = _index_on_grid(asm, tol, method)
    audit = {"grids": [dict(asm.grid_params, dim_ker=ker, dim_coker=coker, rank_gap=gap,
                            singular_tail=[float(v) for v in s[-6:]])]}
    if gap < MIN_GAP:
        raise IllConditionedRankError(f"rank gap {gap:.3g} below {MIN_GAP:g}", audit)
    stable = gap > STABLE_GAP
    problem = asm.provenance
    if refine and isinstance(problem, (CylinderProblem, DiskProblem)):
        finer = refined(problem, asm.grid_params)
        asm2 = finer.assemble(math.ceil(REFINE * asm.grid_params.get("N_t", 1)))
        ker2, coker2, gap2, s2 = _index_on_grid(asm2, tol, method)
        audit["grids"].append(dict(asm2.grid_params, dim_ker=ker2, dim_coker=coker2, rank_gap=gap2,
                                   singular_tail=[float(v) for v in s2[-6:]]))
        stable = stable and gap2 > STABLE_GAP and (ker2, coker2) == (ker, coker)
        gap = min(gap, gap2)
    return IndexResult(ker - coker, ker, coker, float(gap), bool(stable), audit)


def refined(problem, grid_params):
    K = grid_params.get("K")
    if K is not None and problem.rebuild is not None:
        return problem.rebuild(math.ceil(REFINE * K))
    return problem


# ------------------------------------------------------------- mode oracle

_SPECTRAL_KINDS = {"aps", "aps_complement", "dirichlet", "none"}


def mode_index_oracle(problem: CylinderProblem) -> int:
    """Index of a product-type problem by separation of variables.

    Each eigenmode lam of A carries the exact solution exp(-lam t).  For spectral
    conditions every mode is counted directly (index contribution 1 - number of
    ends whose condition sees the mode); otherwise the traces of the exact
    solutions, normalized at the end where they are largest, are fed to the
    condition rows and the rank is taken.
    """
    if not problem.product_type:
        raise DomainError("mode oracle needs a t-independent tangential operator")
    A = problem.start_operator.matrix
    lam, V = np.linalg.eigh(A)
    T = problem.length
    if problem.start.kind in _SPECTRAL_KINDS and problem.end.kind in _SPECTRAL_KINDS:
        total = 0
        for mu in lam:
            hits = _sees(problem.start, mu) + _sees(problem.end, -mu)
            total += 1 - hits
        return total
    grow = lam <= 0
    z0 = np.where(grow, np.exp(lam * T), 1.0)   # exp(-lam (0 - T)) for growing modes
    zT = np.where(grow, 1.0, np.exp(-lam * T))
    rows0 = problem.start.rows(problem.start_operator)
    rowsT = problem.end.rows(problem.far_operator())
    M = np.vstack([rows0 @ V * z0[None, :], rowsT @ V * zT[None, :]])
    s = np.linalg.svd(M, compute_uv=False)
    rank = int(np.count_nonzero(s > RANK_TOL * s.max())) if s.size else 0
    return (A.shape[0] - rank) - (M.shape[0] - rank)


def _sees(cond: Condition, mu: float) -> int:
    """Does a spectral condition at an end with tangential eigenvalue mu constrain that mode?"""
    if cond.kind == "none":
        return 0
    if cond.kind == "dirichlet":
        return 1
    if cond.kind == "aps":
        return int(mu > -cond.eps)
    return int(mu <= -cond.eps)


def spectral_count_index(problem: CylinderProblem, eps: float = 1e-6) -> int:
    """APS index at both ends from eigenvalue counts of the end operators alone."""
    lam0 = np.linalg.eigvalsh(problem.start_operator.matrix)
    lamT = np.linalg.eigvalsh(problem.far_operator().matrix)
    return problem.dim - int(np.sum(lam0 > -eps)) - int(np.sum(lamT > -eps))


# ------------------------------------------------------------------ disk

@dataclass(frozen=True)
class DiskMode:
    frequency: int          # cover Fourier index q of exp(i q theta)
    holomorphic: bool       # r^q exp(i q theta) is regular at the centre
    constrained: bool       # the boundary condition sees this mode


@dataclass(frozen=True, eq=False)
class DiskProblem:
    """d-bar on the unit disk; boundary modes are those of the lifted operator ``boundary``.

    Mode q of the boundary circle extends regularly into the disk iff q >= 0, so
    the index problem reduces to the condition rows restricted to holomorphic modes.
    """

    boundary: HermitianOperator
    condition: Condition
    rebuild: Callable[[int], "DiskProblem"] | None = None
    cutoff: int | None = None

    @property
    def frequencies(self) -> np.ndarray:
        n = 1 if self.boundary.covering is None else self.boundary.covering.sheets
        return np.rint(n * self.boundary.exponents).astype(int)

    @property
    def holomorphic(self) -> np.ndarray:
        return self.frequencies >= 0

    def assemble(self, N_t: int | None = None) -> BVPAssembly:
        R = self.condition.rows(self.boundary)[:, self.holomorphic]
        asm = explicit_assembly(R, provenance=self)
        return replace(asm, grid_params={"K": self.cutoff, "N_t": 1})


def assemble_disk_modes(problem: DiskProblem, window: int | None = None) -> list[DiskMode]:
    """Per-mode data for conditions that act diagonally on boundary Fourier modes."""
    R = problem.condition.rows(problem.boundary)
    q = problem.frequencies
    if window is not None and (q.min() > -window or q.max() < window):
        raise DomainError("mode range too small for the certified window")
    P = np.linalg.pinv(R) @ R if R.size else np.zeros((q.size, q.size))
    if np.abs(P - np.diag(np.diag(P))).max() > 1e-8:
        raise DomainError("condition mixes boundary modes; mode data are not diagonal")
    seen = np.diag(P).real > 0.5
    return [DiskMode(int(f), bool(f >= 0), bool(c)) for f, c in zip(q, seen)]
