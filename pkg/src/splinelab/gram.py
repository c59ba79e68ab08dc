"""Banded Gram matrices, dual B-spline coefficients, and decay fits.

The Gram matrix G_ij = ∫ N_i N_j dλ is symmetric positive definite with
bandwidth k-1.  Its inverse A carries the dual-basis coefficients
N_i* = Σ_j a_ij N_j, whose entries decay geometrically away from the
diagonal once weighted by the support-hull lengths h_ij; `fit_decay`
measures that rate.
"""

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_solve_banded, cholesky_banded

from .bspline import SplineSpace, eval_basis, eval_basis_many
from .quadrature import nodes_for_degree, panel_rule

__all__ = ["BandedSPDMatrix", "DecayFit", "gram_matrix", "dual_coefficients",
           "eval_dual", "fit_decay"]

# Above this dimension the dense inverse is not materialized; dual rows
# are obtained by banded solves on demand.
DENSE_DUAL_LIMIT = 2000


class GramFactorizationError(RuntimeError):
    """Cholesky pivot collapsed; the underlying grid is degenerate."""


@dataclass
class BandedSPDMatrix:
    """Symmetric positive definite matrix in lower banded storage:
    ab[r, i] = A[i + r, i] for offsets r = 0..bandwidth."""

    ab: np.ndarray

    def __post_init__(self):
        self.ab = np.asarray(self.ab, dtype=float)
        self._factor = None

    @property
    def dim(self) -> int:
        return self.ab.shape[1]

    @property
    def bandwidth(self) -> int:
        return self.ab.shape[0] - 1

    @property
    def factor(self) -> np.ndarray:
        if self._factor is None:
            try:
                self._factor = cholesky_banded(self.ab, lower=True)
            except np.linalg.LinAlgError as exc:
                raise GramFactorizationError(str(exc)) from exc
            if np.min(self._factor[0]) <= 1e-300:
                raise GramFactorizationError("vanishing Cholesky pivot")
        return self._factor

    def solve(self, b: np.ndarray) -> np.ndarray:
        return cho_solve_banded((self.factor, True), b)

    def entry(self, i: int, j: int) -> float:
        r = abs(i - j)
        if r > self.bandwidth:
            return 0.0
        return float(self.ab[r, min(i, j)])

    def to_dense(self) -> np.ndarray:
        n, bw = self.dim, self.bandwidth
        A = np.zeros((n, n))
        for r in range(bw + 1):
            for i in range(n - r):
                A[i + r, i] = self.ab[r, i]
                A[i, i + r] = self.ab[r, i]
        return A


def gram_matrix(space: SplineSpace) -> BandedSPDMatrix:
    """Assemble G_ij = ∫ N_i N_j dλ exactly (per-span Gauss-Legendre of
    degree 2k-2) into banded storage."""
    k, dim = space.k, space.dim
    ab = np.zeros((k, dim))
    m = nodes_for_degree(2 * k - 2)
    knots = space.knots
    for mu, a, b in space.spans():
        x, w = panel_rule(a, b, m)
        firsts, V = eval_basis_many(space, x)
        f0 = mu - (k - 1)
        block = V.T @ (w[:, None] * V)
        for r in range(k):
            for c in range(r + 1):
                ab[r - c, f0 + c] += block[r, c]
    return BandedSPDMatrix(ab)


def _gram(space: SplineSpace) -> BandedSPDMatrix:
    if space._gram is None:
        space._gram = gram_matrix(space)
    return space._gram


def dual_coefficients(space: SplineSpace) -> np.ndarray:
    """Dense inverse of the Gram matrix; row i holds the expansion of
    the dual function N_i* in the B-spline basis."""
    if space._dual is None:
        G = _gram(space)
        if space.dim > DENSE_DUAL_LIMIT:
            raise ValueError(
                f"dim {space.dim} > {DENSE_DUAL_LIMIT}: use on-demand solves")
        A = G.solve(np.eye(space.dim))
        space._dual = 0.5 * (A + A.T)
    return space._dual


def dual_row(space: SplineSpace, i: int) -> np.ndarray:
    """Coefficients of N_i*; solves on demand above the dense limit."""
    if space.dim <= DENSE_DUAL_LIMIT:
        return dual_coefficients(space)[i]
    e = np.zeros(space.dim)
    e[i] = 1.0
    return _gram(space).solve(e)


def eval_dual(space: SplineSpace, i: int, t: float) -> float:
    """N_i*(t) = Σ_j a_ij N_j(t)."""
    row = dual_row(space, i)
    first, vals = eval_basis(space, t)
    return float(row[first:first + space.k] @ vals)


def eval_dual_many(space: SplineSpace, rows: np.ndarray, ts) -> np.ndarray:
    """Evaluate several dual functions at several points.

    rows: (p, dim) dual coefficient rows; returns (len(ts), p).
    """
    ts = np.atleast_1d(np.asarray(ts, dtype=float))
    firsts, V = eval_basis_many(space, ts)
    out = np.zeros((len(ts), rows.shape[0]))
    for r in range(space.k):
        out += V[:, r, None] * rows[:, firsts + r].T
    return out


@dataclass
class DecayFit:
    """Geometric fit of the hull-weighted inverse entries: for every
    offset m, max_{|i-j|=m} |a_ij| h_ij <= C_hat * q_hat**m."""

    q_hat: float
    C_hat: float
    offsets: np.ndarray
    weighted_max: np.ndarray

    @property
    def residuals(self) -> np.ndarray:
        return self.weighted_max / self.q_hat ** self.offsets if self.q_hat > 0 \
            else self.weighted_max

    @property
    def max_residual(self) -> float:
        return float(np.max(self.residuals))


NOISE_FLOOR = 1e-14


def hull_lengths(knots: np.ndarray, k: int) -> np.ndarray:
    """Matrix of hull lengths h_ij = knots[max(i,j)+k] - knots[min(i,j)]."""
    dim = len(knots) - k
    idx = np.arange(dim)
    hi = np.maximum.outer(idx, idx)
    lo = np.minimum.outer(idx, idx)
    return knots[hi + k] - knots[lo]


def decay_fit_from_matrix(A: np.ndarray, H: np.ndarray) -> DecayFit:
    """Fit C, q with |a_ij| * h_ij <= C * q**|i-j| from a dense inverse.

    Offsets whose weighted maximum drops below the noise floor are
    discarded; if no positive offset survives (k = 1), the fit is
    degenerate and reported as q_hat = 0.  The slope is fitted on the
    upper half of the surviving offsets: near the diagonal the hull
    lengths still grow linearly with the offset, which would bias a
    full-range fit of the asymptotic ratio upward.
    """
    W = np.abs(A) * H
    offsets, weighted = [], []
    for m in range(A.shape[0]):
        w = np.max(np.diagonal(W, offset=m))
        if w >= NOISE_FLOOR:
            offsets.append(m)
            weighted.append(w)
    offsets = np.asarray(offsets, dtype=float)
    weighted = np.asarray(weighted)
    if offsets.size < 2 or offsets.max() < 1:
        w0 = float(weighted[0]) if weighted.size else 0.0
        return DecayFit(0.0, w0, offsets, weighted)
    tail = offsets >= max(1.0, offsets.max() / 2.0)
    if np.sum(tail) < 2:
        tail = offsets >= 1.0
    if np.sum(tail) < 2:
        tail = np.ones_like(offsets, dtype=bool)
    slope = np.polyfit(offsets[tail], np.log(weighted[tail]), 1)[0]
    q = float(np.exp(min(slope, -1e-12)))
    q = min(q, 0.999)
    C = float(np.max(weighted / q ** offsets))
    return DecayFit(q, C, offsets, weighted)


def fit_decay(space: SplineSpace) -> DecayFit:
    """Geometric decay fit of the space's dual-coefficient matrix."""
    if space.dim <= space.k:
        raise ValueError("space too small to fit decay (dim <= k)")
    A = dual_coefficients(space)
    H = hull_lengths(space.knots, space.k)
    return decay_fit_from_matrix(A, H)
