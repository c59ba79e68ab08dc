"""B-spline bases on arbitrary knot sequences: evaluation, integrals,
knot insertion, and refinement.

Conventions: basis values are right-continuous at interior knots; at the
right end of the domain left-limits are used, so the partition of unity
holds on the closed interval.  Zero-length spans in the recursion
contribute zero terms.
"""

from dataclasses import dataclass

import numpy as np

from .knots import Grid
from .quadrature import nodes_for_degree, panel_rule

__all__ = ["SplineSpace", "Spline", "eval_basis", "eval_basis_many",
           "basis_integral", "insert_knot", "refine"]


class SplineSpace:
    """Order-k B-spline space over a clamped knot sequence.

    The sequence must start and end with k-fold multiplicity, so the
    basis is a partition of unity on the closed domain
    [knots[0], knots[-1]].  Grids on [0, 1] carry this padding by
    construction; local limit constructions clamp their sequences before
    building a space and select the windows they need by index.

    Instances are immutable and hash by identity; the Gram matrix and
    the dual-coefficient matrix are computed once on first use.
    """

    def __init__(self, knots, k: int, grid: Grid | None = None):
        knots = np.asarray(knots, dtype=float).copy()
        if knots.ndim != 1:
            raise ValueError("knots must be one-dimensional")
        if np.any(np.diff(knots) < 0):
            raise ValueError("knots must be non-decreasing")
        k = int(k)
        if k < 1:
            raise ValueError("order must be >= 1")
        if len(knots) < 2 * k:
            raise ValueError("need at least 2k knots")
        if knots[0] != knots[k - 1] or knots[-1] != knots[-k]:
            raise ValueError("knot sequence must be clamped (k-fold ends)")
        if knots[k - 1] >= knots[-k]:
            raise ValueError("domain has zero length")
        knots.setflags(write=False)
        self.knots = knots
        self.k = k
        self.grid = grid
        self._gram = None
        self._dual = None

    @classmethod
    def from_grid(cls, grid: Grid) -> "SplineSpace":
        return cls(grid.knots, grid.k, grid)

    @property
    def dim(self) -> int:
        return len(self.knots) - self.k

    @property
    def domain(self) -> tuple[float, float]:
        return float(self.knots[self.k - 1]), float(self.knots[-self.k])

    def support(self, i: int) -> tuple[float, float]:
        return float(self.knots[i]), float(self.knots[i + self.k])

    def breakpoints(self) -> np.ndarray:
        """Distinct knot values inside the domain (inclusive)."""
        lo, hi = self.domain
        vals = np.unique(self.knots)
        return vals[(vals >= lo) & (vals <= hi)]

    def spans(self):
        """Positive-length spans inside the domain as (left_knot_index, a, b)."""
        k, knots = self.k, self.knots
        out = []
        for mu in range(k - 1, len(knots) - k):
            if knots[mu + 1] > knots[mu]:
                out.append((mu, float(knots[mu]), float(knots[mu + 1])))
        return out

    def greville(self) -> np.ndarray:
        """Knot averages; coefficients at these abscissae reproduce t (k >= 2)."""
        k, knots = self.k, self.knots
        if k == 1:
            return 0.5 * (knots[:-1] + knots[1:])
        return np.array([knots[i + 1:i + k].mean() for i in range(self.dim)])

    def hull_length(self, i: int, j: int) -> float:
        lo, hi = min(i, j), max(i, j)
        return float(self.knots[hi + self.k] - self.knots[lo])


def _find_span(knots: np.ndarray, k: int, t: float) -> int:
    m = len(knots)
    hi = m - k
    if t >= knots[hi]:
        mu = hi - 1
        while knots[mu + 1] <= knots[mu]:
            mu -= 1
        return mu
    mu = int(np.searchsorted(knots, t, side="right")) - 1
    if mu < k - 1:
        if t < knots[k - 1]:
            raise ValueError(f"t={t} below the domain")
        mu = k - 1
    return mu


def eval_basis(space: SplineSpace, t: float) -> tuple[int, np.ndarray]:
    """The k (at most) nonzero basis values at t.

    Returns (first_index, values) with values[r] = N_{first+r}(t); all
    other basis functions vanish identically at t.
    """
    first, vals = eval_basis_many(space, np.array([float(t)]))
    return int(first[0]), vals[0]

def eval_basis_many(space: SplineSpace, ts) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized basis evaluation.

    Returns (firsts, V) with V of shape (len(ts), k); row p holds the
    values of N_{firsts[p]} .. N_{firsts[p]+k-1} at ts[p].  The triangle
    runs over positive-length spans only, so no denominator vanishes.
    """
    knots, k = space.knots, space.k
    ts = np.asarray(ts, dtype=float)
    lo, hi = space.domain
    if ts.size and (ts.min() < lo - 1e-12 or ts.max() > hi + 1e-12):
        raise ValueError("evaluation point outside the domain")
    m = len(knots)
    mu = np.searchsorted(knots, ts, side="right") - 1
    top = ts >= knots[m - k]
    if np.any(top):
        mu_top = m - k - 1
        while knots[mu_top + 1] <= knots[mu_top]:
            mu_top -= 1
        mu[top] = mu_top
    np.clip(mu, k - 1, None, out=mu)

    npts = len(ts)
    N = np.zeros((npts, k))
    N[:, 0] = 1.0
    left = np.zeros((npts, k))
    right = np.zeros((npts, k))
    for j in range(1, k):
        left[:, j] = ts - knots[mu + 1 - j]
        right[:, j] = knots[mu + j] - ts
        saved = np.zeros(npts)
        for r in range(j):
            tmp = N[:, r] / (right[:, r + 1] + left[:, j - r])
            N[:, r] = saved + right[:, r + 1] * tmp
            saved = left[:, j - r] * tmp
        N[:, j] = saved
    return mu - (k - 1), N


@dataclass(frozen=True)
class Spline:
    """Coefficient representation of an element of a spline space with
    values in R^d: coeffs has shape (dim, d)."""

    space: SplineSpace
    coeffs: np.ndarray

    def __post_init__(self):
        c = np.atleast_2d(np.asarray(self.coeffs, dtype=float))
        if c.shape[0] == 1 and self.space.dim > 1:
            c = c.T
        if c.shape[0] != self.space.dim:
            raise ValueError(
                f"coefficient rows {c.shape[0]} != space dimension {self.space.dim}")
        c = c.copy()
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    @property
    def d(self) -> int:
        return self.coeffs.shape[1]

    def eval(self, ts) -> np.ndarray:
        """Values at ts, shape (len(ts), d)."""
        ts = np.atleast_1d(np.asarray(ts, dtype=float))
        firsts, V = eval_basis_many(self.space, ts)
        out = np.zeros((len(ts), self.d))
        for r in range(self.space.k):
            out += V[:, r, None] * self.coeffs[firsts + r, :]
        return out

    def value_at(self, t: float) -> np.ndarray:
        return self.eval([t])[0]

    def integral(self) -> np.ndarray:
        """∫ over the domain, exact: sum of coeff_i * ∫ N_i."""
        w = np.array([basis_integral(self.space, i) for i in range(self.space.dim)])
        return w @ self.coeffs

    def sup_norm(self, points_per_span: int | None = None) -> float:
        """Sup of the Euclidean norm on a per-span Chebyshev lattice
        (4k points per span plus span endpoints)."""
        pts = _sup_lattice(self.space, points_per_span)
        vals = self.eval(pts)
        return float(np.max(np.linalg.norm(vals, axis=1)))

    def l1_norm(self, panels: int = 4) -> float:
        """∫ ‖s(t)‖ dt by per-span composite quadrature.  Exact for k=1;
        for higher orders sign changes inside panels make this a close
        approximation, good enough for the probes that consume it."""
        k = self.space.k
        m = nodes_for_degree(k - 1) + 2
        total = 0.0
        for _, a, b in self.space.spans():
            edges = np.linspace(a, b, panels + 1)
            for c, dd in zip(edges[:-1], edges[1:]):
                x, w = panel_rule(c, dd, m)
                total += float(w @ np.linalg.norm(self.eval(x), axis=1))
        return total


def _sup_lattice(space: SplineSpace, points_per_span: int | None = None) -> np.ndarray:
    n = points_per_span or 4 * space.k
    pts = []
    for _, a, b in space.spans():
        cheb = 0.5 * (a + b) + 0.5 * (b - a) * np.cos(
            np.pi * (2 * np.arange(n) + 1) / (2 * n))
        pts.append(cheb)
        pts.append([a, b])
    return np.unique(np.concatenate([np.asarray(p, dtype=float) for p in pts]))


def basis_integral(space: SplineSpace, i: int) -> float:
    """∫ N_i dλ by Gauss-Legendre over the spans of the support."""
    knots, k = space.knots, space.k
    if not 0 <= i < space.dim:
        raise IndexError("basis index out of range")
    m = nodes_for_degree(k - 1) + 1
    total = 0.0
    for mu in range(i, i + k):
        a, b = knots[mu], knots[mu + 1]
        if b <= a:
            continue
        x, w = panel_rule(a, b, m)
        firsts, V = eval_basis_many(space, x)
        col = i - firsts
        vals = V[np.arange(len(x)), col]
        total += float(w @ vals)
    return total


def insert_knot(s: Spline, x: float) -> Spline:
    """Insert one knot; the returned spline is the same function on a
    finer space, each new coefficient a convex combination of its two
    parents (Boehm's rule)."""
    space = s.space
    knots, k = space.knots, space.k
    lo, hi = space.domain
    if not lo < x < hi:
        raise ValueError(f"insertion point {x} outside the open domain")
    mult = int(np.sum(knots == x))
    if mult + 1 > max(k - 1, 1):
        raise ValueError(
            f"inserting {x} would raise its multiplicity to {mult + 1} (order {k})")
    mu = int(np.searchsorted(knots, x, side="right")) - 1
    new_knots = np.insert(knots, mu + 1, x)
    old = s.coeffs
    new = np.empty((old.shape[0] + 1, old.shape[1]))
    new[:mu - k + 2] = old[:mu - k + 2]
    for i in range(mu - k + 2, mu + 1):
        denom = knots[i + k - 1] - knots[i]
        w = (x - knots[i]) / denom
        new[i] = (1.0 - w) * old[i - 1] + w * old[i]
    new[mu + 1:] = old[mu:]
    finer = SplineSpace(new_knots, k)
    return Spline(finer, new)


def refine(s: Spline, finer: SplineSpace) -> Spline:
    """Re-express s on a finer space whose knot multiset contains the
    current one; repeated single insertions, so single-basis refinements
    have coefficients in [0, 1]."""
    missing = _multiset_difference(finer.knots, s.space.knots)
    if missing is None:
        raise ValueError("target space does not contain the current knots")
    out = s
    for x in missing:
        out = insert_knot(out, x)
    if len(out.space.knots) != len(finer.knots) or not np.array_equal(
            out.space.knots, finer.knots):
        raise ValueError("refinement did not reach the target knot sequence")
    return Spline(finer, out.coeffs)


def _multiset_difference(fine: np.ndarray, coarse: np.ndarray):
    """Sorted elements of fine minus coarse, or None if not a superset."""
    i = j = 0
    out = []
    while i < len(fine) and j < len(coarse):
        if fine[i] == coarse[j]:
            i += 1
            j += 1
        elif fine[i] < coarse[j]:
            out.append(float(fine[i]))
            i += 1
        else:
            return None
    if j < len(coarse):
        return None
    out.extend(float(v) for v in fine[i:])
    return out
