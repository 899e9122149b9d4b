"""Eigendecomposition, eta invariants, spectral projections and spectral flow."""
from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np
import scipy.linalg

from .discretize import HermitianOperator
from .errors import DomainError, NumericalStabilityError, PathTooCoarseError, UnresolvedTailError

log = logging.getLogger(__name__)

DEFAULT_T_GRID = (0.2, 0.1, 0.05, 0.025)
KERNEL_TOL = 1e-9
# Gaussian factors below exp(-GAUSS_CUT**2) are dropped
GAUSS_CUT = 7.0
WEYL_TOL = 0.05


@dataclass(frozen=True)
class Spectrum:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    resolved_window: float = np.inf

    @property
    def dim(self) -> int:
        return self.eigenvalues.size

    def resolved(self) -> np.ndarray:
        return np.abs(self.eigenvalues) <= self.resolved_window

    def __neg__(self):
        return Spectrum(-self.eigenvalues[::-1], self.eigenvectors[:, ::-1], self.resolved_window)


@dataclass(frozen=True)
class EtaResult:
    value: float
    method: str  # "closed_form" | "heat_regularized"
    estimated_error: float
    kernel_dim: int

    @property
    def aps_value(self) -> float:
        """(eta + dim ker) / 2, the normalization entering the index formulas."""
        return 0.5 * (self.value + self.kernel_dim)

    def to_dict(self):
        return {"value": self.value, "method": self.method,
                "estimated_error": self.estimated_error, "kernel_dim": self.kernel_dim}


def _matrix(H) -> np.ndarray:
    return H.matrix if isinstance(H, HermitianOperator) else np.asarray(H, dtype=complex)


def eigendecompose(H, window: float | None = None) -> Spectrum:
    """Full Hermitian eigendecomposition with a reproducible eigenvector phase.

    Each eigenvector is rotated so that its largest-magnitude entry (first one
    on ties) is real and positive.
    """
    M = _matrix(H)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise DomainError("matrix must be square")
    if np.linalg.norm(M - M.conj().T) > 1e-12 * max(np.linalg.norm(M), 1.0):
        raise DomainError("matrix is not Hermitian")
    w, V = scipy.linalg.eigh(M, driver="evd")
    idx = np.argmax(np.abs(V) - 1e-12 * np.arange(V.shape[0])[:, None], axis=0)
    pivots = V[idx, np.arange(V.shape[1])]
    V = V * (np.abs(pivots) / pivots)[None, :]
    if window is None:
        window = H.window if isinstance(H, HermitianOperator) else np.inf
    return Spectrum(w, V, float(window))


def kernel_dim(spec: Spectrum, tol: float = KERNEL_TOL) -> int:
    lam = np.abs(spec.eigenvalues)
    near = (lam >= tol / 2) & (lam <= 2 * tol)
    if np.any(near):
        warnings.warn(f"eigenvalue {lam[near].min():.3e} is ambiguous against kernel tolerance {tol:.1e}",
                      RuntimeWarning, stacklevel=2)
    return int(np.count_nonzero(lam < tol))


def eta_closed_form(a: float) -> EtaResult:
    """Eta invariant of the spectrum {k + a : k in Z}."""
    frac = a - math.floor(a)
    if frac < 1e-15 or frac > 1 - 1e-15:
        return EtaResult(0.0, "closed_form", 0.0, 1)
    return EtaResult(1.0 - 2.0 * frac, "closed_form", 0.0, 0)


def _neville_at_zero(s: np.ndarray, h: np.ndarray) -> np.ndarray:
    """Neville table for polynomial extrapolation of h(s) to s = 0."""
    m = len(s)
    T = np.zeros((m, m), dtype=np.result_type(h, float))
    T[:, 0] = h
    for j in range(1, m):
        for i in range(j, m):
            T[i, j] = T[i, j - 1] + (T[i, j - 1] - T[i - 1, j - 1]) * s[i] / (s[i - j] - s[i])
    return T


def _richardson(t_grid, h):
    s = np.asarray(t_grid, dtype=float) ** 2
    T = _neville_at_zero(s, np.asarray(h))
    m = len(s)
    value = T[m - 1, m - 1]
    if m == 1:
        return value, np.inf
    err = max(abs(value - T[m - 1, m - 2]), abs(value - T[m - 2, m - 2]))
    return value, float(err)


def _fit_tail(lam: np.ndarray):
    """Fit the top of a resolved (positive, ascending) sequence by periodic arithmetic progressions.

    Returns ``(period_values, step)``: the spectrum beyond ``lam[-1]`` is modelled
    as ``period_values + m * step`` for m = 1, 2, ...
    """
    count = lam.size
    block = max(int(math.ceil(0.1 * count)), min(count, 48))
    top = lam[-block:]
    for p in range(1, block // 3 + 1):
        d = top[p:] - top[:-p]
        step = float(np.median(d))
        if step <= 0:
            continue
        if np.max(np.abs(d - step)) <= WEYL_TOL * step:
            return top[-p:], step
    raise UnresolvedTailError(
        f"top {block} resolved eigenvalues do not follow linear Weyl growth within {WEYL_TOL:.0%}")


def _tail_magnitudes(period_values, step, t_min):
    reach = GAUSS_CUT / t_min
    m_max = max(int(math.ceil((reach - period_values.min()) / step)), 1)
    m = np.arange(1, m_max + 1)
    return (period_values[None, :] + step * m[:, None]).ravel()


def _gauss_sums(mags: np.ndarray, t_grid) -> np.ndarray:
    mags = np.sort(mags)
    return np.array([np.sum(np.exp(-(t * mags) ** 2)) for t in t_grid])


def eta_regularized(spec: Spectrum, window: float | None = None, t_grid=DEFAULT_T_GRID,
                    kernel_tol: float = KERNEL_TOL, tail: bool = True) -> EtaResult:
    """Gaussian-regularized spectral asymmetry, extrapolated to t -> 0.

    h(t) = sum_{0 < |lam| <= W} sign(lam) exp(-(t lam)^2) plus the contribution of
    an arithmetic-progression model of the unresolved tail; the t -> 0 limit is
    taken by polynomial extrapolation in t^2.  Zero modes are excluded.
    """
    W = spec.resolved_window if window is None else float(window)
    t_grid = tuple(sorted(t_grid, reverse=True))
    lam = spec.eigenvalues
    k = kernel_dim(spec, kernel_tol)
    if np.any((np.abs(lam) >= kernel_tol) & (np.abs(lam) < 10 * kernel_tol)):
        raise NumericalStabilityError("eigenvalue inside the kernel ambiguity band")
    inside = np.abs(lam) <= W
    pos = lam[inside & (lam >= kernel_tol)]
    neg = -lam[inside & (lam <= -kernel_tol)][::-1]
    if not np.isfinite(W) or not tail:
        if np.isfinite(W) and W * t_grid[-1] < GAUSS_CUT:
            raise UnresolvedTailError(f"window {W} is too small for t = {t_grid[-1]} without a tail model")
        h = _gauss_sums(pos, t_grid) - _gauss_sums(neg, t_grid)
    else:
        pos_all = np.concatenate([pos, _tail_magnitudes(*_fit_tail(pos), t_grid[-1])])
        neg_all = np.concatenate([neg, _tail_magnitudes(*_fit_tail(neg), t_grid[-1])])
        h = _gauss_sums(pos_all, t_grid) - _gauss_sums(neg_all, t_grid)
    value, err = _richardson(t_grid, h)
    return EtaResult(float(value), "heat_regularized", err, k)


def equivariant_eta(spec: Spectrum, group_matrix: np.ndarray, t_grid=DEFAULT_T_GRID,
                    window: float | None = None, kernel_tol: float = KERNEL_TOL):
    """Character-weighted eta: sum sign(lam) tr(g | E_lam), with tr(g | ker) returned alongside.

    No tail model is used; the window must satisfy window * min(t) >= GAUSS_CUT.
    Returns ``(value, kernel_trace, estimated_error)``.
    """
    W = spec.resolved_window if window is None else float(window)
    t_grid = tuple(sorted(t_grid, reverse=True))
    if W * t_grid[-1] < GAUSS_CUT:
        raise UnresolvedTailError(f"window {W} is too small for t = {t_grid[-1]}")
    lam, V = spec.eigenvalues, spec.eigenvectors
    chars = np.einsum("ij,ij->j", V.conj(), group_matrix @ V)
    inside = np.abs(lam) <= W
    ker = np.abs(lam) < kernel_tol
    live = inside & ~ker
    h = [np.sum(np.sign(lam[live]) * chars[live] * np.exp(-(t * lam[live]) ** 2)) for t in t_grid]
    value, err = _richardson(t_grid, np.array(h))
    return complex(value), complex(np.sum(chars[ker])), err


def spectral_projection(spec: Spectrum, eps: float, kernel_tol: float = KERNEL_TOL) -> np.ndarray:
    """Orthogonal projection onto eigenvectors with lam > -eps (spectral projection of A + eps)."""
    return _projection_from_basis(positive_basis(spec, eps, kernel_tol))


def positive_basis(spec: Spectrum, eps: float, kernel_tol: float = KERNEL_TOL) -> np.ndarray:
    if eps <= 0:
        raise DomainError("eps must be positive")
    lam = spec.eigenvalues
    swallowed = (lam > -eps) & (lam <= -kernel_tol)
    if np.any(swallowed):
        raise DomainError(f"eps = {eps:g} swallows the negative eigenvalue {lam[swallowed].max():.3e}")
    return spec.eigenvectors[:, lam > -eps]


def _projection_from_basis(Q):
    return Q @ Q.conj().T


def _count_above(lam, line):
    return int(np.count_nonzero(lam >= line))


def spectral_flow(path: Sequence, eps: float = 1e-8, cluster_tol: float = 1e-9) -> int:
    """Net number of eigenvalues crossing the level -eps/2 upward along the path."""
    if len(path) < 2:
        return 0
    line = -eps / 2
    spectra = [np.linalg.eigvalsh(_matrix(H)) for H in path]
    dims = {s.size for s in spectra}
    if len(dims) != 1:
        raise DomainError("path operators must share one dimension")
    flow = 0
    for a, b in zip(spectra[:-1], spectra[1:]):
        motion = float(np.max(np.abs(b - a)))
        near = np.concatenate([a[np.abs(a - line) <= 3 * motion + cluster_tol],
                               b[np.abs(b - line) <= 3 * motion + cluster_tol]])
        gap = np.inf
        for vals in (a, b):
            local = np.unique(np.round(vals[np.abs(vals - line) <= 3 * motion + 1.0] / cluster_tol)) * cluster_tol
            if local.size > 1:
                gap = min(gap, float(np.min(np.diff(local))))
        if near.size and motion >= gap / 2:
            raise PathTooCoarseError(f"eigenvalue motion {motion:.3g} exceeds half the local gap {gap:.3g}")
        flow += _count_above(b, line) - _count_above(a, line)
    return flow
