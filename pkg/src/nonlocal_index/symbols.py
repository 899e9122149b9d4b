"""Principal-symbol checks: Calderon subspaces, Shapiro-Lopatinskii condition,
order-reduction homotopy and compatibility of admissible symbols."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterable

import numpy as np
import scipy.linalg

from .covering import CoveringMap
from .errors import DegenerateSymbolError, DomainError

ISO_RTOL = 1e-8


@dataclass(frozen=True)
class SymbolFunction:
    """Homogeneous matrix-valued symbol ``evaluator(x, xi, tau=None)``."""

    evaluator: Callable
    rank_in: int
    rank_out: int
    order: float = 1.0

    def __call__(self, x, xi, tau=None):
        return np.atleast_2d(np.asarray(self.evaluator(x, xi, tau), dtype=complex))

    def is_homogeneous(self, samples, scales=(0.5, 2.0, 7.0), rtol=1e-10) -> bool:
        for x, xi in samples:
            base = self(x, xi)
            for lam in scales:
                if not np.allclose(self(x, lam * xi), lam ** self.order * base,
                                   rtol=rtol, atol=rtol * (1 + np.abs(base).max())):
                    return False
        return True


@dataclass(frozen=True)
class BoundarySymbol:
    """Symbol of a boundary condition: a projection (square, self-adjoint, idempotent) or full-row-rank rows."""

    evaluator: Callable
    target_rank: int | None = None

    def __call__(self, x, xi):
        return np.atleast_2d(np.asarray(self.evaluator(x, xi), dtype=complex))


@dataclass(frozen=True)
class EllipticityReport:
    elliptic: bool
    min_singular_value: float
    witness: tuple
    failures: tuple = ()


def _hermitian_part_check(a):
    scale = max(np.linalg.norm(a), 1e-300)
    if np.linalg.norm(a - a.conj().T) > 1e-12 * scale:
        raise DomainError("symbol value is not Hermitian")
    return scale


def calderon_subspace(a) -> np.ndarray:
    """Orthonormal basis of the span of eigenvectors of ``a`` with positive eigenvalues."""
    a = np.atleast_2d(np.asarray(a, dtype=complex))
    scale = _hermitian_part_check(a)
    w, V = scipy.linalg.eigh(a)
    if np.any(np.abs(w) < 1e-10 * scale):
        raise DegenerateSymbolError(f"symbol has eigenvalue {w[np.argmin(np.abs(w))]:.3e} in the zero band")
    return V[:, w > 0]


def _is_projection(b):
    return (b.shape[0] == b.shape[1] and np.allclose(b, b.conj().T, atol=1e-12)
            and np.allclose(b @ b, b, atol=1e-12))


def boundary_restriction(b, L) -> np.ndarray:
    """Matrix of ``b`` restricted to span(L), written in coordinates of its target."""
    if _is_projection(b):
        w, V = scipy.linalg.eigh(b)
        target = V[:, w > 0.5]
        return target.conj().T @ b @ L
    return b @ L


def is_isomorphism(M, norm_ref) -> tuple[bool, float]:
    if M.shape[0] != M.shape[1]:
        s = np.linalg.svd(M, compute_uv=False) if M.size else np.zeros(0)
        return False, float(s.min()) if s.size else 0.0
    if M.shape[0] == 0:
        return True, np.inf
    smin = float(np.linalg.svd(M, compute_uv=False).min())
    return smin > ISO_RTOL * max(norm_ref, 1e-300), smin


def default_samples(num_x: int = 64):
    xs = 2 * np.pi * np.arange(num_x) / num_x
    return [(x, xi) for x in xs for xi in (1.0, -1.0)]


def check_shapiro_lopatinskii(a: SymbolFunction, b: BoundarySymbol, samples=None) -> EllipticityReport:
    """Is b(x, xi) restricted to the Calderon subspace L+(a(x, xi)) an isomorphism onto its target?"""
    samples = default_samples() if samples is None else list(samples)
    worst, witness, failures = np.inf, None, []
    for x, xi in samples:
        L = calderon_subspace(a(x, xi))
        bv = b(x, xi)
        ok, smin = is_isomorphism(boundary_restriction(bv, L), np.linalg.norm(bv, 2))
        if not ok:
            failures.append((x, xi))
        if smin < worst or witness is None:
            worst, witness = smin, (x, xi)
    return EllipticityReport(not failures, float(worst), witness, tuple(failures))


def _newton_sign(a, iters: int = 100) -> np.ndarray:
    S = a / np.linalg.norm(a, 2)
    for _ in range(iters):
        nxt = 0.5 * (S + np.linalg.inv(S))
        if np.linalg.norm(nxt - S) < 1e-14:
            return nxt
        S = nxt
    return S


def brute_force_lopatinskii(a: SymbolFunction, b: BoundarySymbol, samples=None) -> bool:
    """Independent check through the half-line ODE u' + a u = 0.

    The initial data of bounded solutions form the range of (1 + sign a)/2,
    with the matrix sign computed by Newton iteration (no eigendecomposition);
    a basis comes from a rank-revealing SVD.  The condition is elliptic iff
    ``b`` maps that space isomorphically onto its target.
    """
    samples = default_samples() if samples is None else list(samples)
    for x, xi in samples:
        av = a(x, xi)
        sv = np.linalg.svd(av, compute_uv=False)
        if sv.min() < 1e-10 * sv.max():
            raise DegenerateSymbolError("symbol is singular at a sample point")
        Pplus = 0.5 * (np.eye(av.shape[0]) + _newton_sign(av))
        U, s, _ = np.linalg.svd(Pplus)
        decaying = U[:, s > 0.5]
        bv = b(x, xi)
        target_dim = int(round(np.trace(bv).real)) if _is_projection(bv) else bv.shape[0]
        if decaying.shape[1] != target_dim:
            return False
        M = bv @ decaying
        if target_dim and np.linalg.matrix_rank(M, tol=ISO_RTOL * max(np.linalg.norm(bv, 2), 1e-300)) != target_dim:
            return False
    return True


def order_reduction_homotopy(a, P, eps: float, tau: float, xi_norm: float | None = None) -> np.ndarray:
    """(1 - eps) (i tau + a) + eps (2 P - 1)."""
    a = np.atleast_2d(np.asarray(a, dtype=complex))
    P = np.atleast_2d(np.asarray(P, dtype=complex))
    if xi_norm is not None and abs(tau ** 2 + xi_norm ** 2 - 1) > 1e-9:
        raise DomainError("(tau, xi) must lie on the unit cosphere")
    one = np.eye(a.shape[0])
    return (1 - eps) * (1j * tau * one + a) + eps * (2 * P - one)


def homotopy_min_singular_value(a: SymbolFunction, P: Callable, x: float = 0.0,
                                num_eps: int = 101, num_angle: int = 101) -> float:
    """Smallest singular value of the order-reduction homotopy on an (eps, cosphere) grid.

    ``P(x, xi)`` returns the boundary projection; it is evaluated at the sign of xi
    (at xi = 0 the +1 side is used), since a zero-order condition depends only on
    the covector direction.
    """
    worst = np.inf
    for ang in np.linspace(0.0, 2 * np.pi, num_angle):
        tau, xi = np.sin(ang), np.cos(ang)
        av = a(x, xi)
        Pv = np.atleast_2d(P(x, 1.0 if xi >= 0 else -1.0))
        for eps in np.linspace(0.0, 1.0, num_eps):
            s = np.linalg.svd(order_reduction_homotopy(av, Pv, eps, tau), compute_uv=False)
            worst = min(worst, float(s.min()))
    return worst


def direct_image_symbol(sigma_M: SymbolFunction, cm: CoveringMap, x: float, xi: float) -> np.ndarray:
    """Block-diagonal symbol over the fiber of base point x (covector pulled back by theta -> n theta)."""
    n = cm.sheets
    thetas = (x + 2 * np.pi * np.arange(n)) / n * (cm.cover.circumference / (2 * np.pi))
    blocks = [sigma_M(th, n * xi) for th in thetas]
    return scipy.linalg.block_diag(*blocks)


def check_admissible_compatibility(sigma_M: SymbolFunction, sigma_X: SymbolFunction, cm: CoveringMap,
                                   samples: Iterable, atol: float = 1e-10) -> bool:
    for x, xi in samples:
        lifted = direct_image_symbol(sigma_M, cm, x, xi)
        target = sigma_X(x, xi)
        if lifted.shape != target.shape or not np.allclose(lifted, target, rtol=0, atol=atol):
            return False
    return True


# built-in symbol/condition pairs -------------------------------------------------

def _sign_projection(av, positive=True):
    w, V = scipy.linalg.eigh(av)
    keep = V[:, w > 0] if positive else V[:, w < 0]
    return keep @ keep.conj().T


def aps_model(side: str = "positive"):
    """Two-mode model a = xi diag(1, -1) with the spectral projection of the chosen side."""
    a = SymbolFunction(lambda x, xi, tau=None: xi * np.diag([1.0, -1.0]), 2, 2, 1.0)
    positive = side == "positive"
    b = BoundarySymbol(lambda x, xi: _sign_projection(a(x, xi if xi != 0 else 1.0), positive))
    return a, b


def reflecting_boundary(variant: str = "invariant"):
    """Two-sheet model of the reflecting boundary: a = diag(xi, -xi).

    ``invariant`` uses the invariant-part row (1, 1)/sqrt 2; ``wrong_side``
    uses the row selecting the negative eigenvector of a, whose restriction to
    the Calderon subspace vanishes.
    """
    a = SymbolFunction(lambda x, xi, tau=None: np.diag([xi, -xi]).astype(float), 2, 2, 1.0)
    if variant == "invariant":
        row = np.array([[1.0, 1.0]]) / np.sqrt(2)
        b = BoundarySymbol(lambda x, xi: row, 1)
    elif variant == "wrong_side":
        b = BoundarySymbol(lambda x, xi: np.array([[0.0, 1.0]]) if xi > 0 else np.array([[1.0, 0.0]]), 1)
    else:
        raise DomainError(f"unknown reflecting_boundary variant {variant!r}")
    return a, b


def dbar_disk(side: str = "positive"):
    """Boundary symbol of the d-bar model on the disk: a = xi with the APS projection."""
    a = SymbolFunction(lambda x, xi, tau=None: np.array([[xi]], dtype=float), 1, 1, 1.0)
    positive = side == "positive"
    b = BoundarySymbol(lambda x, xi: np.array([[1.0 if (xi > 0) == positive else 0.0]]))
    return a, b


BUILTINS = {"aps_model": aps_model, "reflecting_boundary": reflecting_boundary, "dbar_disk": dbar_disk}


def builtin_pair(name: str, **params):
    try:
        factory = BUILTINS[name]
    except KeyError:
        raise DomainError(f"unknown built-in symbol {name!r}") from None
    return factory(**params)


def projection_of(b: BoundarySymbol):
    """Hermitian projection with the same kernel as the condition symbol (row form -> b^+ b)."""
    def P(x, xi):
        bv = b(x, xi)
        if _is_projection(bv):
            return bv
        return np.linalg.pinv(bv) @ bv
    return P
