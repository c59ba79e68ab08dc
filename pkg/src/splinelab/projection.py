"""The orthogonal projection onto a spline space, for functions and for
finite measures, plus the operator probes built on it.

P f = Σ_j c_j N_j with G c = b, b_i = ∫ f N_i dλ.  Moments of splines
and other piecewise polynomials are exact (panels split at breakpoints,
node counts matched to the degree); smooth inputs use a fixed
high-order composite rule with `quad_depth` panels per knot span.

The probes: self-adjointness defect, L¹ bump sweeps for the operator
norm, a lattice Hardy-Littlewood maximal function used as a reference
envelope for sup_n ‖P_n g(t)‖, moduli of smoothness, and approximation
ratio sweeps against them.
"""

from dataclasses import dataclass

import numpy as np

from .bspline import Spline, SplineSpace, basis_integral, eval_basis_many
from .functions import FunctionSpec, MeasureSpec, cantor_cells
from .gram import _gram
from .quadrature import composite_rule, merge_breaks, nodes_for_degree

__all__ = [
    "project_function", "project_spline", "project_measure",
    "check_self_adjoint", "shadrin_probe",
    "maximal_function", "check_maximal_inequality", "MaximalReport",
    "modulus_of_smoothness", "jackson_check", "JacksonRecord",
]


def _panel_nodes(space: SplineSpace, f: FunctionSpec | None, quad_depth: int):
    """Quadrature nodes/weights over the domain, split at knot spans and
    the function's breakpoints."""
    k = space.k
    if f is not None and f.poly_degree is not None:
        m = nodes_for_degree(f.poly_degree + k - 1)
        depth = 1
    else:
        m = k + 8
        depth = max(1, quad_depth)
    lo, hi = space.domain
    breaks = merge_breaks(space.breakpoints(),
                          f.breakpoints if f is not None else (), lo, hi)
    return composite_rule(breaks, m, depth)


def _moments(space: SplineSpace, values: np.ndarray, nodes: np.ndarray,
             weights: np.ndarray) -> np.ndarray:
    """b_i = Σ_nodes w * f(node) * N_i(node), shape (dim, d)."""
    firsts, V = eval_basis_many(space, nodes)
    k = space.k
    b = np.zeros((space.dim, values.shape[1]))
    wvals = weights[:, None] * values
    for r in range(k):
        np.add.at(b, firsts + r, V[:, r, None] * wvals)
    return b


def function_moments(space: SplineSpace, f: FunctionSpec,
                     quad_depth: int = 2) -> np.ndarray:
    nodes, weights = _panel_nodes(space, f, quad_depth)
    return _moments(space, f(nodes), nodes, weights)


def project_function(space: SplineSpace, f: FunctionSpec,
                     quad_depth: int = 2) -> Spline:
    """Orthogonal projection of a bounded function onto the space."""
    b = function_moments(space, f, quad_depth)
    return Spline(space, _gram(space).solve(b))


def project_spline(space: SplineSpace, s: Spline) -> Spline:
    """Projection of a spline from another space; moments are exact
    because panels split at the union of both knot sets."""
    f = FunctionSpec.from_spline(s)
    deg = (s.space.k - 1) + (space.k - 1)
    m = nodes_for_degree(deg)
    lo, hi = space.domain
    breaks = merge_breaks(space.breakpoints(), f.breakpoints, lo, hi)
    nodes, weights = composite_rule(breaks, m, 1)
    b = _moments(space, f(nodes), nodes, weights)
    return Spline(space, _gram(space).solve(b))


def measure_moments(space: SplineSpace, nu: MeasureSpec,
                    quad_depth: int = 2) -> np.ndarray:
    """b_i = ∫ N_i dν for the three parts of the measure.

    Atoms are exact; the Cantor part integrates the basis exactly over
    every level-L cell (cells split at interior knots), which realizes
    the level-L self-similar approximation of the Cantor measure.
    """
    b = np.zeros((space.dim, nu.d))
    if nu.density is not None:
        b += function_moments(space, nu.density, quad_depth)
    if nu.atoms:
        locs = np.array([loc for loc, _ in nu.atoms])
        W = np.stack([w for _, w in nu.atoms])
        firsts, V = eval_basis_many(space, locs)
        for r in range(space.k):
            np.add.at(b, firsts + r, V[:, r, None] * W)
    if nu.cantor_level is not None:
        lefts, width = cantor_cells(nu.cantor_level)
        scale = 2.0 ** (-nu.cantor_level) / width
        m = nodes_for_degree(space.k - 1)
        knots = space.breakpoints()
        masses = np.zeros(space.dim)
        for left in lefts:
            breaks = merge_breaks([left, left + width], knots, left, left + width)
            nodes, weights = composite_rule(breaks, m, 1)
            firsts, V = eval_basis_many(space, nodes)
            for r in range(space.k):
                np.add.at(masses, firsts + r, V[:, r] * weights)
        b += scale * np.outer(masses, nu.cantor_weight)
    return b


def project_measure(space: SplineSpace, nu: MeasureSpec,
                    quad_depth: int = 2) -> Spline:
    """Projection of a finite measure, defined by ⟨Pν, s⟩ = ∫ s dν on
    the space."""
    b = measure_moments(space, nu, quad_depth)
    return Spline(space, _gram(space).solve(b))


def cantor_truncation_bound(space: SplineSpace, nu: MeasureSpec) -> float:
    """Bound on the moment error of the level-L Cantor approximation:
    transporting mass within a cell moves each ∫ N_i dν by at most the
    basis oscillation over the cell width."""
    if nu.cantor_level is None:
        return 0.0
    width = 3.0 ** (-nu.cantor_level)
    k = space.knots
    gaps = np.diff(k)
    min_span = float(gaps[gaps > 0].min())
    lipschitz = 2.0 * (space.k - 1) / min_span if space.k > 1 else 0.0
    mass = float(np.linalg.norm(nu.cantor_weight))
    if space.k == 1:
        return mass  # indicators can jump inside a cell; crude but honest
    return mass * min(1.0, lipschitz * width)


def integrate_pairing(a: Spline, b: Spline) -> np.ndarray:
    """∫ a(t) * b(t) dλ over the overlap of the domains, exact.

    One factor must be scalar (d = 1); the result has the other's
    dimension.  Panels split at the union of both knot sets.
    """
    if a.d != 1 and b.d != 1:
        raise ValueError("at least one factor must be scalar")
    lo = max(a.space.domain[0], b.space.domain[0])
    hi = min(a.space.domain[1], b.space.domain[1])
    if hi <= lo:
        return np.zeros(max(a.d, b.d))
    deg = (a.space.k - 1) + (b.space.k - 1)
    m = nodes_for_degree(deg)
    breaks = merge_breaks(
        [lo, hi],
        np.concatenate([a.space.breakpoints(), b.space.breakpoints()]), lo, hi)
    nodes, weights = composite_rule(breaks, m, 1)
    if nodes.size == 0:
        return np.zeros(max(a.d, b.d))
    return weights @ (a.eval(nodes) * b.eval(nodes))


def integrate_against(s: Spline, f: FunctionSpec,
                      quad_depth: int = 2) -> np.ndarray:
    """∫ s(t) f(t) dλ; one of the factors must be scalar.  The composite
    rule splits at both breakpoint sets."""
    if s.d != 1 and f.d != 1:
        raise ValueError("at least one factor must be scalar")
    lo, hi = s.space.domain
    m = (nodes_for_degree((s.space.k - 1) + f.poly_degree)
         if f.poly_degree is not None else s.space.k + 8)
    depth = 1 if f.poly_degree is not None else max(1, quad_depth)
    breaks = merge_breaks(s.space.breakpoints(), f.breakpoints, lo, hi)
    nodes, weights = composite_rule(breaks, m, depth)
    return weights @ (s.eval(nodes) * f(nodes))


def check_self_adjoint(space: SplineSpace, g: FunctionSpec, f: FunctionSpec,
                       quad_depth: int = 2) -> float:
    """‖∫ (Pg)·f − ∫ g·(Pf)‖ for scalar f and possibly vector g."""
    if f.d != 1:
        raise ValueError("f must be scalar")
    Pg = project_function(space, g, quad_depth)
    Pf = project_function(space, f, quad_depth)
    lhs = integrate_against(Pg, f, quad_depth)
    rhs = integrate_against(Pf, g, quad_depth)
    return float(np.linalg.norm(lhs - rhs))


def shadrin_probe(space: SplineSpace, bump_width: float,
                  centers=None) -> float:
    """Estimate of ‖P‖_{L¹→L¹} from below: max over normalized indicator
    bumps of ‖P b‖_{L¹} (each bump has unit mass)."""
    if bump_width <= 0:
        raise ValueError("bump width must be positive")
    lo, hi = space.domain
    w = min(bump_width, hi - lo)
    if centers is None:
        mids = [0.5 * (a + b) for _, a, b in space.spans()]
        quarters = [0.75 * a + 0.25 * b for _, a, b in space.spans()]
        centers = np.clip(np.array(mids + quarters), lo + w / 2, hi - w / 2)
        centers = np.unique(centers)
    best = 0.0
    for c in centers:
        a, b = c - w / 2, c + w / 2
        bump = FunctionSpec("probe-bump",
                            lambda t, a=a, b=b: ((t >= a) & (t < b)) / w,
                            breakpoints=(a, b), poly_degree=0)
        Pb = project_function(space, bump)
        best = max(best, Pb.l1_norm())
    return best


def maximal_function(g: FunctionSpec, t: float, scales,
                     placements: int = 33) -> float:
    """Lattice lower bound of the Hardy-Littlewood maximal function:
    max over interval lengths in `scales` and a placement sweep of the
    average of ‖g‖ over intervals of [0, 1] containing t."""
    best = 0.0
    for ell in scales:
        if ell <= 0:
            raise ValueError("scales must be positive")
        ell = min(ell, 1.0)
        a_min, a_max = max(0.0, t - ell), min(t, 1.0 - ell)
        if a_max < a_min:
            continue
        starts = np.linspace(a_min, a_max, placements) if a_max > a_min \
            else np.array([a_min])
        for a in starts:
            avg = _interval_average(g, a, a + ell)
            best = max(best, avg)
    return best


def _interval_average(g: FunctionSpec, a: float, b: float,
                      m: int = 8) -> float:
    breaks = merge_breaks([a, b], g.breakpoints, a, b)
    nodes, weights = composite_rule(breaks, m, 1)
    if nodes.size == 0:
        return 0.0
    return float(weights @ g.norm_values(nodes)) / (b - a)


@dataclass
class MaximalReport:
    """Ratios ‖P_n g(t)‖ / Mg(t) across a schedule of spaces."""

    points: np.ndarray
    mg: np.ndarray                  # (pts,)
    ratios: np.ndarray              # (len(schedule), pts)
    per_n_max: np.ndarray

    @property
    def constant(self) -> float:
        return float(np.max(self.ratios))

    @property
    def trend_slope(self) -> float:
        """Least-squares slope of the per-n max against schedule index,
        normalized by the overall constant."""
        if len(self.per_n_max) < 2 or self.constant == 0:
            return 0.0
        x = np.arange(len(self.per_n_max), dtype=float)
        slope = np.polyfit(x, self.per_n_max, 1)[0]
        return float(slope / self.constant)


def check_maximal_inequality(spaces, g: FunctionSpec, points,
                             scales=None, quad_depth: int = 2) -> MaximalReport:
    """sup_n ‖P_n g(t)‖ against the maximal-function envelope Mg(t).

    Using the lattice lower bound for Mg only makes the asserted
    inequality stronger.
    """
    points = np.asarray(points, dtype=float)
    if scales is None:
        scales = [2.0 ** (-j) for j in range(0, 13)]
    mg = np.array([maximal_function(g, t, scales) for t in points])
    if np.any(mg <= 0):
        raise ValueError("maximal function vanished at a sample point")
    ratios = np.zeros((len(spaces), len(points)))
    for row, space in enumerate(spaces):
        Pg = project_function(space, g, quad_depth)
        vals = np.linalg.norm(Pg.eval(points), axis=1)
        ratios[row] = vals / mg
    return MaximalReport(points, mg, ratios, ratios.max(axis=1))


def modulus_of_smoothness(f: FunctionSpec, k: int, delta: float,
                          h_samples: int = 65, t_samples: int = 513) -> float:
    """Lattice sup of k-th forward differences with steps up to delta.

    The h-lattice includes delta itself; resolution is documented by the
    two sample counts.
    """
    if not 0.0 <= delta <= 1.0 / k:
        raise ValueError("need 0 <= delta <= 1/k")
    if delta == 0.0:
        return 0.0
    binom = np.array([(-1.0) ** (k - j) * _comb(k, j) for j in range(k + 1)])
    best = 0.0
    for h in np.linspace(0.0, delta, h_samples)[1:]:
        ts = np.linspace(0.0, 1.0 - k * h, t_samples)
        acc = np.zeros((len(ts), f.d))
        for j in range(k + 1):
            acc += binom[j] * f(ts + j * h)
        best = max(best, float(np.max(np.linalg.norm(acc, axis=1))))
    return best


def _comb(n: int, r: int) -> float:
    from math import comb
    return float(comb(n, r))


@dataclass
class JacksonRecord:
    n: int
    mesh: float
    sup_error: float
    omega: float
    ratio: float | None          # None flags exact reproduction
    exact: bool


EXACT_REPRODUCTION = 1e-9


def jackson_check(spaces, f: FunctionSpec, quad_depth: int = 2,
                  omega_floor: float = 1e-13) -> list[JacksonRecord]:
    """Ratios ‖f − P_n f‖_∞ / ω_k(f, |Δ_n|) across a family of spaces.

    Bounded ratios certify the approximation estimate; when either the
    error or the modulus collapses, the record is flagged as exact
    reproduction instead of dividing by ~0.
    """
    records = []
    for space in spaces:
        k = space.k
        gaps = np.diff(space.knots)
        mesh = float(gaps.max())
        Pf = project_function(space, f, quad_depth)
        lattice = _error_lattice(space)
        err = float(np.max(np.linalg.norm(f(lattice) - Pf.eval(lattice), axis=1)))
        omega = modulus_of_smoothness(f, k, min(mesh, 1.0 / k))
        exact = err <= EXACT_REPRODUCTION or omega <= omega_floor
        ratio = None if exact else err / omega
        records.append(JacksonRecord(
            n=space.grid.n_interior if space.grid is not None else -1,
            mesh=mesh, sup_error=err, omega=omega, ratio=ratio, exact=exact))
    return records


def _error_lattice(space: SplineSpace) -> np.ndarray:
    pts = []
    n = 4 * space.k
    for _, a, b in space.spans():
        cheb = 0.5 * (a + b) + 0.5 * (b - a) * np.cos(
            np.pi * (2 * np.arange(n) + 1) / (2 * n))
        pts.append(cheb)
        pts.append([a, b])
    return np.unique(np.concatenate([np.asarray(p, dtype=float) for p in pts]))
