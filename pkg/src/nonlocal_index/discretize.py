"""Fourier discretization of first-order operators -i d/dx + V(x) on the circle.

Sections with holonomy exponent ``alpha`` are expanded in ``exp(i (k + alpha) x)``,
``k = -K..K``.  The derivative part is diagonal and a trigonometric-polynomial
potential acts by exact convolution of Fourier blocks, so model operators
with constant potential are represented without discretization error.

The lift to an n-fold covering is assembled in the cover's own Fourier basis
``exp(i nu theta)``.  Its truncation is the union of the base truncations of
the twisted operators (one per flat line bundle in the direct image of the
trivial bundle), which makes the covering spectral identity exact.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .covering import CoveringMap, flat_decomposition
from .errors import DomainError

HERMITIAN_RTOL = 1e-12


def _as_block(value, rank):
    block = np.atleast_2d(np.asarray(value, dtype=complex))
    if block.shape == (1, 1) and rank > 1:
        block = block[0, 0] * np.eye(rank)
    if block.shape != (rank, rank):
        raise DomainError(f"potential block has shape {block.shape}, expected {(rank, rank)}")
    return block


@dataclass(frozen=True, eq=False)
class OperatorSpec:
    """-i d/dx + V(x) on a rank-``rank`` bundle over the circle.

    ``potential`` maps a frequency m to the Fourier coefficient matrix of
    V(x) = sum_m V_m exp(i m x).  V is Hermitian-valued iff V_{-m} = V_m^*.
    """

    rank: int = 1
    potential: Mapping[int, np.ndarray] = field(default_factory=dict)
    holonomy: float = 0.0
    fourier_cutoff: int = 32

    def __post_init__(self):
        if self.rank < 1:
            raise DomainError("rank must be positive")
        if self.fourier_cutoff < 4:
            raise DomainError("fourier_cutoff must be at least 4")
        if not 0.0 <= self.holonomy < 1.0:
            raise DomainError("holonomy exponent must lie in [0, 1)")
        blocks = {int(m): _as_block(v, self.rank) for m, v in dict(self.potential).items()}
        blocks = {m: v for m, v in blocks.items() if np.any(v)}
        object.__setattr__(self, "potential", blocks)
        zero = np.zeros((self.rank, self.rank))
        for m, v in blocks.items():
            partner = blocks.get(-m, zero)
            if np.max(np.abs(partner - v.conj().T), initial=0.0) > 1e-12 * (1 + np.abs(v).max()):
                raise DomainError(f"potential is not Hermitian-valued (frequency {m})")

    @classmethod
    def constant(cls, a, rank=1, holonomy=0.0, fourier_cutoff=32):
        return cls(rank, {0: a}, holonomy, fourier_cutoff)

    @classmethod
    def from_trig(cls, coefficients, rank=1, holonomy=0.0, fourier_cutoff=32):
        """Scalar potential from ``{m: c_m}`` without requiring the conjugate partners.

        Missing negative frequencies are filled in so that V is real.
        """
        coeffs = {int(m): complex(c) for m, c in coefficients.items()}
        for m, c in list(coeffs.items()):
            coeffs.setdefault(-m, np.conj(c))
        return cls(rank, {m: c * np.eye(rank) for m, c in coeffs.items()}, holonomy, fourier_cutoff)

    def with_changes(self, **kw):
        fields = dict(rank=self.rank, potential=self.potential, holonomy=self.holonomy,
                      fourier_cutoff=self.fourier_cutoff)
        fields.update(kw)
        return OperatorSpec(**fields)

    @property
    def mean_potential(self) -> np.ndarray:
        return self.potential.get(0, np.zeros((self.rank, self.rank), dtype=complex))

    @property
    def max_frequency(self) -> int:
        return max((abs(m) for m in self.potential), default=0)

    def evaluate_potential(self, x) -> np.ndarray:
        x = np.atleast_1d(np.asarray(x, dtype=float))
        out = np.zeros((x.size, self.rank, self.rank), dtype=complex)
        for m, v in self.potential.items():
            out += np.exp(1j * m * x)[:, None, None] * v
        return out

    def scaled(self, c: float) -> "OperatorSpec":
        return self.with_changes(potential={m: c * v for m, v in self.potential.items()})

    def to_dict(self):
        return {
            "rank": self.rank,
            "holonomy": self.holonomy,
            "fourier_cutoff": self.fourier_cutoff,
            "potential": [
                [m, [[[complex(z).real, complex(z).imag] for z in row] for row in v]]
                for m, v in sorted(self.potential.items())
            ],
        }


@dataclass(frozen=True, eq=False)
class HermitianOperator:
    """A Hermitian matrix in a labelled Fourier basis.

    ``exponents[b]`` is the frequency (in base units, so the derivative part
    contributes exactly ``exponents[b]``) of basis function ``b``;
    ``components[b]`` its bundle component and ``sectors[b]`` the flat line
    bundle (or disjoint copy) it belongs to.
    """

    matrix: np.ndarray
    exponents: np.ndarray
    components: np.ndarray
    sectors: np.ndarray
    spec: OperatorSpec | None = None
    covering: CoveringMap | None = None
    window: float = np.inf

    def __post_init__(self):
        H = np.asarray(self.matrix, dtype=complex)
        if H.ndim != 2 or H.shape[0] != H.shape[1]:
            raise DomainError("operator matrix must be square")
        scale = max(np.linalg.norm(H), 1.0)
        if np.linalg.norm(H - H.conj().T) > HERMITIAN_RTOL * scale:
            raise DomainError("operator matrix is not Hermitian")
        object.__setattr__(self, "matrix", H)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def basis_labels(self):
        modes = np.rint(self.exponents - np.mod(self.exponents, 1.0)).astype(int)
        return list(zip(modes.tolist(), self.components.tolist()))

    def __neg__(self):
        return HermitianOperator(-self.matrix, self.exponents, self.components, self.sectors,
                                 self.spec, self.covering, self.window)

    def with_matrix(self, matrix):
        return HermitianOperator(matrix, self.exponents, self.components, self.sectors,
                                 self.spec, self.covering, self.window)

    @classmethod
    def from_matrix(cls, matrix):
        """Wrap a plain Hermitian matrix (no Fourier provenance, whole spectrum resolved)."""
        matrix = np.asarray(matrix, dtype=complex)
        d = matrix.shape[0]
        return cls(matrix, np.zeros(d), np.zeros(d, dtype=int), np.zeros(d, dtype=int))


def _sector_matrix(spec: OperatorSpec, shift: float) -> np.ndarray:
    K, r = spec.fourier_cutoff, spec.rank
    k = np.arange(-K, K + 1)
    H = np.kron(np.diag(k + shift), np.eye(r)).astype(complex)
    for m, v in spec.potential.items():
        if abs(m) <= 2 * K:
            H += np.kron(np.eye(2 * K + 1, k=-m), v)
    return H


def _sector_basis(spec: OperatorSpec, shift: float, sector: int):
    K, r = spec.fourier_cutoff, spec.rank
    k = np.arange(-K, K + 1)
    return (np.repeat(k + shift, r), np.tile(np.arange(r), 2 * K + 1),
            np.full((2 * K + 1) * r, sector))


def assemble_tangential(spec: OperatorSpec) -> HermitianOperator:
    """Matrix of -i d/dx + V on sections with holonomy exp(2 pi i spec.holonomy)."""
    exps, comps, sectors = _sector_basis(spec, spec.holonomy, 0)
    H = _sector_matrix(spec, spec.holonomy)
    return HermitianOperator(H, exps, comps, sectors, spec=spec,
                             window=spec.fourier_cutoff / 2)


def twist_with_flat_bundle(spec: OperatorSpec, alpha: float) -> HermitianOperator:
    """The operator with coefficients in the flat line bundle of holonomy exponent ``alpha``."""
    if not 0.0 <= alpha < 1.0:
        raise DomainError("twist exponent must lie in [0, 1)")
    return assemble_tangential(spec.with_changes(holonomy=float(np.mod(spec.holonomy + alpha, 1.0))))


def lift_operator(spec: OperatorSpec, cm: CoveringMap) -> HermitianOperator:
    """The pullback of ``spec`` (with coefficients in the direct image bundle) to the cover."""
    n, K, r = cm.sheets, spec.fourier_cutoff, spec.rank
    if cm.trivial:
        block = _sector_matrix(spec, spec.holonomy)
        exps, comps, _ = _sector_basis(spec, spec.holonomy, 0)
        d = block.shape[0]
        return HermitianOperator(
            np.kron(np.eye(n), block), np.tile(exps, n), np.tile(comps, n),
            np.repeat(np.arange(n), d), spec=spec, covering=cm, window=K / 2)

    # cover frequencies nu (in theta); base-unit exponent mu = nu / n
    shifts = np.mod(spec.holonomy + flat_decomposition(cm).exponents, 1.0)
    k = np.arange(-K, K + 1)
    nu = (n * (k[None, :] + shifts[:, None])).ravel()
    sector = np.repeat(np.arange(n), 2 * K + 1)
    order = np.argsort(nu, kind="stable")
    nu, sector = nu[order], sector[order]
    mu = nu / n

    d = nu.size
    H = np.zeros((d * r, d * r), dtype=complex)
    H[np.diag_indices(d * r)] = np.repeat(mu, r)
    # V(n theta) couples cover frequencies differing by n*m
    diff = (nu[:, None] - nu[None, :]) / n
    step = np.rint(diff)
    coupled = np.abs(diff - step) < 1e-9
    for m, v in spec.potential.items():
        rows, cols = np.nonzero(coupled & (step == m))
        for a, b in zip(rows, cols):
            H[a * r:(a + 1) * r, b * r:(b + 1) * r] += v
    return HermitianOperator(H, np.repeat(mu, r), np.tile(np.arange(r), d), np.repeat(sector, r),
                             spec=spec, covering=cm, window=K / 2)


def deck_matrix(op: HermitianOperator, g: int) -> np.ndarray:
    """Matrix of the deck transformation ``g`` in the operator's basis.

    For the connected covering this is rotation by g sheets, i.e. x -> x + 2 pi g,
    which multiplies exp(i mu x) by exp(2 pi i mu g).  For the trivial covering
    it cyclically permutes the copies.
    """
    cm = op.covering
    if cm is None:
        raise DomainError("operator carries no covering")
    if cm.trivial:
        n = cm.sheets
        per = op.dim // n
        P = np.zeros((n, n))
        P[np.arange(n), (np.arange(n) + g) % n] = 1.0
        return np.kron(P, np.eye(per))
    return np.diag(np.exp(2j * np.pi * op.exponents * g))


def synthesis_matrix(op: HermitianOperator, num_points: int | None = None) -> np.ndarray:
    """Values on the cover grid (point-major, then component) from Fourier coefficients.

    Defaults to the square case ``num_points = dim / rank`` where synthesis is
    invertible.
    """
    cm = op.covering
    n = 1 if cm is None else cm.sheets
    r = int(op.components.max()) + 1
    if num_points is None:
        num_points = op.dim // r
    if cm is not None and cm.trivial:
        raise DomainError("grid synthesis is defined for connected coverings only")
    theta = 2 * np.pi * np.arange(num_points) / num_points
    phase = np.exp(1j * np.outer(theta, n * op.exponents)) / np.sqrt(num_points)
    S = np.zeros((num_points * r, op.dim), dtype=complex)
    for c in range(r):
        cols = op.components == c
        S[c::r, cols] = phase[:, cols]
    return S


def adjoint(op) -> np.ndarray:
    M = op.matrix if isinstance(op, HermitianOperator) else np.asarray(op)
    return M.conj().T
