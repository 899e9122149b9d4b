"""Projection families of the difference construction.

A symbol sigma is viewed as an isomorphism between two orthogonal subbundles
Im P_E and Im P_C of a trivial bundle; the projections rotate Im P_E towards
Im P_C through the graph of sigma as |xi| runs from 0 to pi/2.

Matrices of sigma are given in adapted orthonormal bases Q_E, Q_C of the two
ranges, so the ambient operator is W = Q_C sigma Q_E^*.  The term mapping
Im P_C back to Im P_E is W^* (equal to W^{-1} once sigma is unitary).
"""
from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.linalg

from .bvp import range_rows
from .covering import CoveringMap, TWO_PI
from .errors import DomainError

HALF_PI = 0.5 * math.pi
SEAM_OFFSET = 1e-3


def polar_unitary(s: np.ndarray) -> np.ndarray:
    """Unitary factor s (s^* s)^{-1/2} of the polar decomposition."""
    u, _, vh = np.linalg.svd(s)
    return u @ vh


@dataclass(frozen=True, eq=False)
class ProjectionIngredients:
    P_E: np.ndarray
    P_C: np.ndarray
    sigma: Callable  # (x, xi) -> k x k matrix in the adapted bases
    normalize: bool = True
    basis_E: np.ndarray | None = None  # adapted orthonormal bases; derived from the projections if omitted
    basis_C: np.ndarray | None = None

    def __post_init__(self):
        P_E = np.asarray(self.P_E, dtype=complex)
        P_C = np.asarray(self.P_C, dtype=complex)
        for P in (P_E, P_C):
            if P.shape != P_E.shape or np.abs(P @ P - P).max() > 1e-12 or np.abs(P - P.conj().T).max() > 1e-12:
                raise DomainError("ingredient projections must be orthogonal projections of one size")
        if np.abs(P_E @ P_C).max() > 1e-12:
            raise DomainError("ingredient projections must have orthogonal ranges")
        QE = _basis(P_E, self.basis_E)
        QC = _basis(P_C, self.basis_C)
        if QE.shape[1] != QC.shape[1]:
            raise DomainError("ingredient projections must have equal rank")
        object.__setattr__(self, "P_E", P_E)
        object.__setattr__(self, "P_C", P_C)
        object.__setattr__(self, "_QE", QE)
        object.__setattr__(self, "_QC", QC)

    @property
    def ambient_dim(self) -> int:
        return self.P_E.shape[0]

    @property
    def rank(self) -> int:
        return self._QE.shape[1]

    def graph_map(self, x, xi) -> np.ndarray:
        """W = Q_C sigma Q_E^* on the ambient space."""
        s = np.asarray(self.sigma(x, xi), dtype=complex)
        if s.shape != (self.rank, self.rank):
            raise DomainError(f"sigma must be {self.rank} x {self.rank}")
        if self.normalize:
            s = polar_unitary(s)
        return self._QC @ s @ self._QE.conj().T


def _basis(P, Q):
    if Q is None:
        Q = range_rows(P).conj().T
        # phase convention: largest entry of each column real positive
        idx = np.argmax(np.abs(Q), axis=0)
        ph = Q[idx, np.arange(Q.shape[1])]
        return Q * (np.abs(ph) / ph)[None, :]
    Q = np.asarray(Q, dtype=complex)
    if np.abs(Q.conj().T @ Q - np.eye(Q.shape[1])).max() > 1e-12 or np.abs(Q @ Q.conj().T - P).max() > 1e-12:
        raise DomainError("adapted basis must be orthonormal and span the projection's range")
    return Q


def _rotation(ing: ProjectionIngredients, W: np.ndarray, angle: float) -> np.ndarray:
    c, s = math.cos(angle), math.sin(angle)
    return ing.P_E * c * c + ing.P_C * s * s + (W + W.conj().T) * (s * c)


def projection_P1(ing: ProjectionIngredients, xi: float, x: float = 0.0) -> np.ndarray:
    r = abs(float(xi))
    if r > HALF_PI:
        return ing.P_C.copy()
    return _rotation(ing, ing.graph_map(x, xi), r)


def projection_P2(ing: ProjectionIngredients, x: float, xi: float, t: float,
                  variant: str = "continuous") -> np.ndarray:
    """Projection over the collar X x [0, 1] (``ing`` holds the direct-image ingredients).

    For t >= 1/2 it is the P1 rotation by |xi|; for t < 1/2 the angle is
    phi = |xi| + (pi/2)(1 - 2t).  ``continuous`` applies the second case only
    while phi <= pi/2 and evaluates sigma at the actual covector, which makes
    the family continuous across all region interfaces; ``printed`` uses the
    literal regions (t < 1/2, |xi| < pi/2) and sigma at the zero covector.
    """
    if not 0.0 <= t <= 1.0:
        raise DomainError("t must lie in [0, 1]")
    if variant not in ("continuous", "printed"):
        raise DomainError(f"unknown variant {variant!r}")
    W_xi = ing.graph_map(x, xi) if abs(xi) <= HALF_PI else None
    W_0 = ing.graph_map(x, 0.0) if variant == "printed" and abs(xi) < HALF_PI else None
    return _collar_value(ing, xi, t, variant, W_xi, W_0)


def _collar_value(ing, xi, t, variant, W_xi, W_0):
    r = abs(float(xi))
    if t >= 0.5:
        return ing.P_C.copy() if r > HALF_PI else _rotation(ing, W_xi, r)
    phi = r + HALF_PI * (1.0 - 2.0 * t)
    if variant == "continuous":
        return ing.P_C.copy() if phi > HALF_PI else _rotation(ing, W_xi, phi)
    return ing.P_C.copy() if r >= HALF_PI else _rotation(ing, W_0, phi)


def projection_P2_flat(ing: ProjectionIngredients, x: float, t: float,
                       variant: str = "corrected") -> np.ndarray:
    """Rotation of Im P_E onto Im P_C through a bundle isomorphism, phi = (pi/2)(1 - t).

    ``printed`` keeps only the single off-diagonal term P_C sigma P_E sin 2 phi,
    which is not idempotent for 0 < phi < pi/2.
    """
    if not 0.0 <= t <= 1.0:
        raise DomainError("t must lie in [0, 1]")
    phi = HALF_PI * (1.0 - t)
    W = ing.graph_map(x, 0.0)
    if variant == "corrected":
        return _rotation(ing, W, phi)
    if variant == "printed":
        c, s = math.cos(phi), math.sin(phi)
        return ing.P_E * c * c + ing.P_C * s * s + W * math.sin(2 * phi)
    raise DomainError(f"unknown variant {variant!r}")


def direct_image_ingredients(ing: ProjectionIngredients, cm: CoveringMap) -> ProjectionIngredients:
    """Fiberwise block-diagonal ingredients on the base: sheet j sees the cover point (x + 2 pi j) / n.

    Covectors are measured in the pulled-back metric, so the same |xi| is used on every sheet.
    """
    n = cm.sheets
    L = cm.base.circumference

    def sigma(x, xi):
        pts = (x + L * np.arange(n)) / n
        return scipy.linalg.block_diag(*[np.asarray(ing.sigma(p, xi), dtype=complex) for p in pts])

    I = np.eye(n)
    return ProjectionIngredients(np.kron(I, ing.P_E), np.kron(I, ing.P_C), sigma, ing.normalize,
                                 np.kron(I, ing._QE), np.kron(I, ing._QC))


@dataclass(frozen=True, eq=False)
class ProjectionFamily:
    """P1 over the interior and P2 over the collar of one problem, with its covering."""

    ingredients: ProjectionIngredients
    covering: CoveringMap
    variant: str = "continuous"

    @property
    def ambient_dim(self) -> int:
        return self.ingredients.ambient_dim

    @functools.cached_property
    def collar(self) -> ProjectionIngredients:
        return direct_image_ingredients(self.ingredients, self.covering)

    def P1(self, x, xi):
        return projection_P1(self.ingredients, xi, x)

    def P2(self, x, xi, t):
        return projection_P2(self.collar, x, xi, t, self.variant)


@dataclass(frozen=True)
class ProjectionReport:
    passed: bool
    idempotency: float
    self_adjointness: float
    seam: float
    seam_offset_jump: float
    gluing: float
    support: float
    rank_constant: bool
    details: dict = field(default_factory=dict)

    def to_dict(self):
        return dict(vars(self))


def _defects(P):
    return np.abs(P @ P - P).max(), np.abs(P - P.conj().T).max()


def verify_projection_family(family: ProjectionFamily, num_xi: int = 257, num_t: int = 101,
                             points=(0.0, 2.1, 4.4), tol: float = 1e-12,
                             seam_tol: float = 1e-10) -> ProjectionReport:
    """Idempotency, self-adjointness, region continuity, t = 1 gluing and exact support, on sampling grids."""
    xi_grid = np.linspace(0.0, math.pi, num_xi)
    xi_signed = np.concatenate([xi_grid, -xi_grid[1:]])
    t_grid = np.linspace(0.0, 1.0, num_t)
    ing, collar = family.ingredients, family.collar
    n = family.covering.sheets
    idem = sa = glue = support = 0.0
    ranks = set()
    for x in points:
        pts = (x + family.covering.base.circumference * np.arange(n)) / n
        W_0 = collar.graph_map(x, 0.0)
        for xi in xi_signed:
            P = family.P1(x, xi)
            d1, d2 = _defects(P)
            idem, sa = max(idem, d1), max(sa, d2)
            ranks.add(int(round(np.trace(P).real)))
            if abs(xi) > HALF_PI:
                support = max(support, np.abs(P - ing.P_C).max())
            W_xi = collar.graph_map(x, xi) if abs(xi) <= HALF_PI else None
            # gluing: collar at t = 1 against the fiberwise P1 on the cover
            image = scipy.linalg.block_diag(*[family.P1(p, xi) for p in pts])
            top = _collar_value(collar, xi, 1.0, family.variant, W_xi, W_0)
            glue = max(glue, np.abs(top - image).max())
            for t in t_grid:
                Q = _collar_value(collar, xi, t, family.variant, W_xi, W_0)
                d1, d2 = _defects(Q)
                idem, sa = max(idem, d1), max(sa, d2)
                ranks.add(int(round(np.trace(Q).real)) // n)
                outside = abs(xi) > HALF_PI or (t < 0.5 and abs(xi) + HALF_PI * (1 - 2 * t) > HALF_PI)
                if outside and family.variant == "continuous":
                    support = max(support, np.abs(Q - collar.P_C).max())
    seam, offset = _seam_defects(family, points, t_grid, xi_grid)
    passed = (idem < tol and sa < tol and seam < seam_tol and glue < tol and support == 0.0
              and len(ranks) == 1)
    return ProjectionReport(bool(passed), float(idem), float(sa), float(seam), float(offset),
                            float(glue), float(support), len(ranks) == 1,
                            {"num_xi": num_xi, "num_t": num_t, "points": list(points), "variant": family.variant})


def _seam_defects(family: ProjectionFamily, points, t_grid, xi_grid):
    """One-sided limits of the region formulas on each interface, plus jumps across +-offset."""
    ing, collar = family.ingredients, family.collar
    d = SEAM_OFFSET
    seam = offset = 0.0
    for x in points:
        for sgn in (1.0, -1.0):
            # |xi| = pi/2 for P1 and for the collar at t >= 1/2
            W = ing.graph_map(x, sgn * HALF_PI)
            seam = max(seam, np.abs(_rotation(ing, W, HALF_PI) - ing.P_C).max())
            offset = max(offset, np.abs(family.P1(x, sgn * (HALF_PI - d)) - family.P1(x, sgn * (HALF_PI + d))).max())
            for t in t_grid[t_grid >= 0.5]:
                Wc = collar.graph_map(x, sgn * HALF_PI)
                seam = max(seam, np.abs(_rotation(collar, Wc, HALF_PI) - collar.P_C).max())
            for xi in xi_grid[xi_grid <= HALF_PI]:
                # t = 1/2 between the two rotation formulas
                inner = _second_case(family, collar, x, sgn * xi, 0.5)
                seam = max(seam, np.abs(inner - projection_P1(collar, sgn * xi, x)).max())
                offset = max(offset, np.abs(family.P2(x, sgn * xi, 0.5 - d) - family.P2(x, sgn * xi, 0.5 + d)).max())
            for t in t_grid[t_grid < 0.5]:
                # phi = pi/2 curve, |xi| = pi t
                xi = math.pi * t
                limit = _second_case(family, collar, x, sgn * xi, t)
                seam = max(seam, np.abs(limit - collar.P_C).max())
    return seam, offset


def _second_case(family, collar, x, xi, t):
    phi = abs(xi) + HALF_PI * (1.0 - 2.0 * t)
    arg = xi if family.variant == "continuous" else 0.0
    return _rotation(collar, collar.graph_map(x, arg), phi)


# ------------------------------------------------------------- example ingredients

def embedded_ingredients(N: int, L: int, k: int, sigma: Callable, normalize: bool = True,
                         rng: np.random.Generator | None = None) -> ProjectionIngredients:
    """Rank-k projections inside C^N + 0 and 0 + C^L (random ranges if ``rng`` is given)."""
    if k > min(N, L):
        raise DomainError("rank exceeds the embedding dimensions")
    P_E = np.zeros((N + L, N + L), dtype=complex)
    P_C = np.zeros_like(P_E)
    BE = np.zeros((N + L, k), dtype=complex)
    BC = np.zeros_like(BE)
    if rng is None:
        QE = np.eye(N)[:, :k]
        QC = np.eye(L)[:, :k]
    else:
        QE = np.linalg.qr(rng.standard_normal((N, k)) + 1j * rng.standard_normal((N, k)))[0]
        QC = np.linalg.qr(rng.standard_normal((L, k)) + 1j * rng.standard_normal((L, k)))[0]
    BE[:N], BC[N:] = QE, QC
    return ProjectionIngredients(BE @ BE.conj().T, BC @ BC.conj().T, sigma, normalize, BE, BC)


def random_unitary_symbol(k: int, rng: np.random.Generator):
    """sigma(x, xi) = exp(i (H0 + cos x H1 + xi H2)), smooth in both variables."""
    def herm():
        A = rng.standard_normal((k, k)) + 1j * rng.standard_normal((k, k))
        return 0.5 * (A + A.conj().T)
    H0, H1, H2 = herm(), herm(), herm()
    return lambda x, xi: scipy.linalg.expm(1j * (H0 + math.cos(x) * H1 + xi * H2))
