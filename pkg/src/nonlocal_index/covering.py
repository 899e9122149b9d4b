"""Discretized circles, n-fold coverings and the direct-image isomorphism.

The connected covering is the circle map theta -> n*theta with cover and base
both of circumference 2*pi.  A cover grid always has exactly ``n`` times as many
points as the base grid, so cover point ``m`` lies over base point
``m % base_points`` and the fiber over base point ``i`` is
``(i, i + N, ..., i + (n-1) N)`` ordered by increasing cover angle.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError

TWO_PI = 2.0 * np.pi


@dataclass(frozen=True)
class CircleGrid:
    num_points: int
    circumference: float = TWO_PI

    def __post_init__(self):
        if self.num_points < 1:
            raise DomainError("num_points must be positive")
        if not self.circumference > 0:
            raise DomainError("circumference must be positive")

    @property
    def step(self) -> float:
        return self.circumference / self.num_points

    @property
    def points(self) -> np.ndarray:
        return np.arange(self.num_points) * self.step


@dataclass(frozen=True)
class CoveringMap:
    """An ``sheets``-fold covering of a base circle.

    ``trivial=True`` describes the disjoint union of ``sheets`` copies of the
    base.  Fiber bookkeeping is identical to the connected case; only the way
    operators lift differs (see :func:`nonlocal_index.discretize.lift_operator`).
    """

    sheets: int
    base: CircleGrid
    cover: CircleGrid
    trivial: bool = False
    fiber_index: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.cover.num_points != self.sheets * self.base.num_points:
            raise DomainError("cover grid must have sheets * base points")
        N = self.base.num_points
        fibers = np.arange(N)[:, None] + N * np.arange(self.sheets)[None, :]
        fibers.setflags(write=False)
        object.__setattr__(self, "fiber_index", fibers)

    def project(self, cover_index):
        """Base index of a cover grid point."""
        return np.asarray(cover_index) % self.base.num_points

    def deck_permutation(self, g: int) -> np.ndarray:
        """Index map of the deck transformation ``g``: point m goes to ``perm[m]``."""
        nN = self.cover.num_points
        return (np.arange(nN) + (g % self.sheets) * self.base.num_points) % nN


@dataclass(frozen=True)
class FlatBundleDecomposition:
    holonomies: np.ndarray

    @property
    def exponents(self) -> np.ndarray:
        """Holonomy exponents alpha_j in [0, 1) with holonomy exp(2 pi i alpha_j)."""
        return np.mod(np.angle(self.holonomies) / TWO_PI, 1.0)


@dataclass(frozen=True)
class GridFunction:
    grid: CircleGrid
    values: np.ndarray  # shape (num_points, rank)

    def __post_init__(self):
        vals = np.asarray(self.values)
        if vals.ndim == 1:
            vals = vals[:, None]
        if vals.shape[0] != self.grid.num_points:
            raise DomainError("values length must equal grid.num_points")
        object.__setattr__(self, "values", vals)

    @property
    def rank(self) -> int:
        return self.values.shape[1]


def build_covering(n: int, base_points: int, circumference: float = TWO_PI,
                   trivial: bool = False) -> CoveringMap:
    if n < 1:
        raise DomainError(f"number of sheets must be >= 1, got {n}")
    if base_points < 2:
        raise DomainError(f"need at least 2 base points, got {base_points}")
    base = CircleGrid(base_points, circumference)
    cover = CircleGrid(n * base_points, circumference)
    return CoveringMap(n, base, cover, trivial=trivial)


def _check_grid(u: GridFunction, grid: CircleGrid, what: str):
    if u.grid != grid:
        raise DomainError(f"function does not live on the {what} grid")


def direct_image(cm: CoveringMap, u: GridFunction) -> GridFunction:
    """Stack the values of ``u`` over each fiber: rank r on the cover -> rank n*r on the base."""
    _check_grid(u, cm.cover, "cover")
    stacked = u.values[cm.fiber_index]  # (N, n, r)
    return GridFunction(cm.base, stacked.reshape(cm.base.num_points, -1))


def inverse_image(cm: CoveringMap, v: GridFunction) -> GridFunction:
    _check_grid(v, cm.base, "base")
    if v.rank % cm.sheets:
        raise DomainError(f"rank {v.rank} is not divisible by {cm.sheets} sheets")
    r = v.rank // cm.sheets
    out = np.empty((cm.cover.num_points, r), dtype=v.values.dtype)
    out[cm.fiber_index] = v.values.reshape(cm.base.num_points, cm.sheets, r)
    return GridFunction(cm.cover, out)


def deck_action(cm: CoveringMap, g: int, u: GridFunction) -> GridFunction:
    """Rotate the cover by ``g`` sheets: (g.u)(theta) = u(theta + g * circumference / n)."""
    _check_grid(u, cm.cover, "cover")
    return GridFunction(cm.cover, u.values[cm.deck_permutation(g)])


def flat_decomposition(cm: CoveringMap) -> FlatBundleDecomposition:
    """Holonomies of the flat line bundles whose sum is the direct image of the trivial bundle."""
    if cm.trivial:
        return FlatBundleDecomposition(np.ones(cm.sheets, dtype=complex))
    j = np.arange(cm.sheets)
    return FlatBundleDecomposition(np.exp(2j * np.pi * j / cm.sheets))


def fiber_block_permutation(cm: CoveringMap, g: int, rank: int = 1) -> np.ndarray:
    """The pointwise action of deck ``g`` on C^{n*rank}-valued base functions."""
    n = cm.sheets
    P = np.zeros((n, n))
    for j in range(n):
        P[j, (j + g) % n] = 1.0
    return np.kron(P, np.eye(rank))
