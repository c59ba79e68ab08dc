"""Spline-martingale sequences, the stabilized pairing functional,
limit bases on accumulation-free regions, predicted pointwise limits,
and convergence reports.

A spline martingale is a sequence g_n, one per schedule entry, with
g_n in the n-th space and P_m g_n = g_m for m <= n.  Projections of a
fixed function or measure have this property by the tower rule, and the
consistency defect is validated on every schedule pair at construction.

On each accumulation-free interval the knot sequence eventually freezes
locally, so the B-splines built from the local knots (with k-fold
padding at unreachable boundary points) are the pointwise limits of the
global basis restricted there.  Their duals, computed on growing local
truncations until stabilization, give the explicit limit of the
martingale on that interval:

    limit(t) = sum_j  T(local_j) * local_dual_j(t),

where T pairs the martingale against a spline and stabilizes once the
spline's knots are resolved.  Off the accumulation-free region the
limit is the density of the absolutely continuous part of the source;
purely singular parts project to zero almost everywhere, which
`singular_decay_experiment` measures together with its geometric
majorant.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .bspline import Spline, SplineSpace, eval_basis_many, _multiset_difference
from .functions import FunctionSpec, MeasureSpec
from .gram import (BandedSPDMatrix, DecayFit, decay_fit_from_matrix,
                   fit_decay, gram_matrix, hull_lengths)
from .knots import (Decomposition, KnotProgram, anchor_index_on, decompose,
                    realize, span_containing)
from .projection import (integrate_pairing, project_function, project_measure,
                         project_spline)

__all__ = [
    "SplineMartingale", "make_martingale", "functional_T",
    "LimitBasis", "build_limit_basis", "PredictedLimit", "predicted_limit",
    "ConvergenceReport", "singular_decay_experiment", "convergence_report",
    "MartingaleConsistencyError", "StabilizationError",
]


class MartingaleConsistencyError(RuntimeError):
    """A schedule pair violated P_m g_n = g_m beyond tolerance."""


class StabilizationError(RuntimeError):
    """A quantity that must be constant across the schedule is not."""


CONSISTENCY_HARD_LIMIT = 1e-7
T_STABILITY_LIMIT = 1e-8


@dataclass
class SplineMartingale:
    """Cached projections of one source across an increasing schedule."""

    program: KnotProgram
    source: FunctionSpec | MeasureSpec
    schedule: tuple[int, ...]
    spaces: list[SplineSpace]
    gs: list[Spline]
    consistency_defects: dict[tuple[int, int], float]
    l1_norms: list[float]

    @property
    def d(self) -> int:
        return self.gs[0].d

    @property
    def max_consistency_defect(self) -> float:
        return max(self.consistency_defects.values(), default=0.0)

    def space_containing(self, s: Spline) -> int | None:
        """Smallest schedule index whose space contains the spline."""
        for idx, space in enumerate(self.spaces):
            if s.space.k == space.k and \
                    _multiset_difference(space.knots, s.space.knots) is not None:
                return idx
        return None


def make_martingale(program: KnotProgram, source, schedule,
                    quad_depth: int = 3) -> SplineMartingale:
    """Project the source onto every schedule space and validate the
    martingale property on all schedule pairs."""
    schedule = tuple(int(n) for n in schedule)
    if any(b <= a for a, b in zip(schedule, schedule[1:])):
        raise ValueError("schedule must be strictly increasing")
    spaces = [SplineSpace.from_grid(realize(program, n)) for n in schedule]
    if isinstance(source, MeasureSpec):
        gs = [project_measure(sp, source, quad_depth) for sp in spaces]
    else:
        gs = [project_function(sp, source, quad_depth) for sp in spaces]
    defects: dict[tuple[int, int], float] = {}
    for i in range(len(schedule)):
        for j in range(i + 1, len(schedule)):
            down = project_spline(spaces[i], gs[j])
            defect = float(np.max(np.abs(down.coeffs - gs[i].coeffs)))
            defects[(schedule[i], schedule[j])] = defect
            if defect > CONSISTENCY_HARD_LIMIT:
                raise MartingaleConsistencyError(
                    f"consistency defect {defect:.3e} on pair "
                    f"(m={schedule[i]}, n={schedule[j]})")
    l1 = [g.l1_norm() for g in gs]
    return SplineMartingale(program, source, schedule, spaces, gs, defects, l1)


def functional_T(mart: SplineMartingale, f: Spline) -> np.ndarray:
    """Stabilized pairing T(f) = ∫ g_m f dλ for f in a schedule space.

    Exact once m is large enough that the space contains f; verified
    against the next schedule entry.
    """
    if f.d != 1:
        raise ValueError("the pairing functional takes scalar splines")
    idx = mart.space_containing(f)
    if idx is None:
        raise ValueError("spline does not belong to any schedule space")
    value = integrate_pairing(mart.gs[idx], f)
    if idx + 1 < len(mart.gs):
        nxt = integrate_pairing(mart.gs[idx + 1], f)
        defect = float(np.linalg.norm(nxt - value))
        scale = max(1.0, float(np.linalg.norm(value)))
        if defect > T_STABILITY_LIMIT * scale:
            raise StabilizationError(
                f"pairing not stabilized: defect {defect:.3e} between "
                f"n={mart.schedule[idx]} and n={mart.schedule[idx + 1]}")
    return value


# ---------------------------------------------------------------------------
# Local limit bases


@dataclass
class _LocalFamily:
    """The B-splines over a finite local knot sequence.

    The sequence is clamped (end values raised to multiplicity k) to
    build a host space; the family consists of the windows of the
    original sequence, a contiguous index range inside the host basis.
    Gram and duals are those of the family alone.
    """

    seq: np.ndarray
    k: int
    host: SplineSpace
    offset: int
    size: int
    dual: np.ndarray            # (size, size) inverse of family Gram
    hulls: np.ndarray           # (size, size) support-hull lengths

    @classmethod
    def build(cls, seq: np.ndarray, k: int) -> "_LocalFamily":
        seq = np.asarray(seq, dtype=float)
        if len(seq) < k + 1:
            raise ValueError("local sequence shorter than one window")
        pre = k - int(np.sum(seq == seq[0]))
        post = k - int(np.sum(seq == seq[-1]))
        pre, post = max(pre, 0), max(post, 0)
        ext = np.concatenate([np.full(pre, seq[0]), seq, np.full(post, seq[-1])])
        host = SplineSpace(ext, k)
        size = len(seq) - k
        G = gram_matrix(host)
        sub = G.ab[:, pre:pre + size].copy()
        for r in range(1, k):
            sub[r, max(0, size - r):] = 0.0
        dual = BandedSPDMatrix(sub).solve(np.eye(size))
        dual = 0.5 * (dual + dual.T)
        hulls = hull_lengths(ext, k)[pre:pre + size, pre:pre + size]
        return cls(seq, k, host, pre, size, dual, hulls)

    def window(self, j: int) -> tuple[float, ...]:
        return tuple(self.seq[j:j + self.k + 1])

    def window_index(self, window: tuple[float, ...]) -> int | None:
        left = np.searchsorted(self.seq, window[0], side="left")
        for j in range(left, min(left + self.k + 1, self.size)):
            if self.window(j) == window:
                return j
        for j in range(max(0, left - self.k - 1), min(left, self.size)):
            if self.window(j) == window:
                return j
        return None

    def eval_family(self, ts) -> np.ndarray:
        """Values of all family members at ts, shape (len(ts), size)."""
        ts = np.atleast_1d(np.asarray(ts, dtype=float))
        firsts, V = eval_basis_many(self.host, ts)
        out = np.zeros((len(ts), self.size))
        rows = np.arange(len(ts))
        for r in range(self.k):
            col = firsts + r - self.offset
            ok = (col >= 0) & (col < self.size)
            out[rows[ok], col[ok]] += V[ok, r]
        return out

    def eval_duals(self, indices, ts) -> np.ndarray:
        """Values of the dual functions for the given family indices,
        shape (len(ts), len(indices))."""
        E = self.eval_family(ts)
        return E @ self.dual[np.asarray(indices, dtype=int)].T

    def member_spline(self, j: int) -> Spline:
        c = np.zeros((self.host.dim, 1))
        c[self.offset + j, 0] = 1.0
        return Spline(self.host, c)

    def anchor(self, t: float) -> int:
        a = anchor_index_on(self.host.knots, self.k, t) - self.offset
        return int(np.clip(a, 0, self.size - 1))

    def span_length(self, t: float) -> float:
        a, b = span_containing(self.host.knots, t)
        return b - a

    def fit(self) -> DecayFit:
        return decay_fit_from_matrix(self.dual, self.hulls)


@dataclass
class LimitBasis:
    """Stabilized local B-splines and duals on one accumulation-free
    interval V_{j0}, with the knots of V's unreachable boundary points
    included k-fold."""

    j0: int
    interval: tuple[float, float, bool, bool]   # lo, hi, lo_closed, hi_closed
    family: _LocalFamily
    tracked: list[tuple[float, ...]]            # windows, stable under growth
    tracked_indices: np.ndarray                 # indices in `family`
    stabilization_n: dict[int, int]             # tracked position -> n
    n_used: int
    probes: np.ndarray
    decay: DecayFit
    stabilized: bool
    history: list[tuple[int, float]] = field(default_factory=list)

    @property
    def duals_at(self):
        return lambda ts: self.family.eval_duals(self.tracked_indices, ts)

    def basis_spline(self, pos: int) -> Spline:
        return self.family.member_spline(int(self.tracked_indices[pos]))

    def biorthogonality_defect(self) -> float:
        """max |<dual_i, member_j> - delta_ij| over the whole family,
        via exact quadrature on the host space."""
        fam = self.family
        G_host = gram_matrix(fam.host).to_dense()
        G_fam = G_host[fam.offset:fam.offset + fam.size,
                       fam.offset:fam.offset + fam.size]
        return float(np.max(np.abs(fam.dual @ G_fam - np.eye(fam.size))))


class LimitBudgetExceeded(RuntimeError):
    """Local duals did not stabilize within the knot budget."""


def _local_sequence(program: KnotProgram, interval, n: int) -> np.ndarray:
    lo, hi, lo_closed, hi_closed = interval
    interior = program.interior_knots(n)
    inside = np.sort(interior[(interior > lo) & (interior < hi)])
    parts = []
    if lo_closed:
        parts.append(np.full(program.k, lo))
    parts.append(inside)
    if hi_closed:
        parts.append(np.full(program.k, hi))
    return np.concatenate(parts)


def build_limit_basis(program: KnotProgram, j0: int, tol: float = 1e-9,
                      margin: float | None = None, n_start: int = 8,
                      n_budget: int = 2048,
                      probes: np.ndarray | None = None) -> LimitBasis:
    """Construct the limit B-splines and duals for the interval V_{j0}.

    The local knot sequence is realized at increasing depth until the
    tracked dual functions stop moving (sup change <= tol on the probe
    lattice).  Non-stabilization within the budget raises
    LimitBudgetExceeded carrying the partial history.
    """
    decomp = decompose(program)
    if not 0 <= j0 < len(decomp.U_intervals):
        raise ValueError(f"no interval with index {j0}")
    interval = decomp.V_intervals[j0]
    lo, hi, lo_closed, hi_closed = interval
    if probes is None:
        m = margin if margin is not None else 0.05 * (hi - lo)
        probes = np.linspace(lo + m, hi - m, 33)
    probes = np.asarray(probes, dtype=float)
    if np.any((probes <= lo) | (probes >= hi)):
        raise ValueError("probes must lie strictly inside the interval")

    k = program.k
    tracked: list[tuple[float, ...]] | None = None
    tracked_idx: np.ndarray | None = None
    prev_vals: np.ndarray | None = None
    stab_n: dict[int, int] = {}
    history: list[tuple[int, float]] = []
    fam = None
    n = n_start
    while True:
        seq = _local_sequence(program, interval, n)
        usable = (len(seq) >= k + 1 and seq[0] <= probes.min()
                  and seq[-1] >= probes.max())
        if usable:
            fam = _LocalFamily.build(seq, k)
            if tracked is None:
                selection = _select_tracked(fam, probes, tol, interval)
                if selection is not None:
                    tracked, tracked_idx = selection
            else:
                idx = [fam.window_index(w) for w in tracked]
                if any(i is None for i in idx):
                    raise LimitBudgetExceeded(
                        f"a tracked window was broken by new knots at n={n}")
                tracked_idx = np.asarray(idx, dtype=int)
            if tracked is not None:
                vals = fam.eval_duals(tracked_idx, probes)
                if prev_vals is not None and vals.shape == prev_vals.shape:
                    delta = np.max(np.abs(vals - prev_vals), axis=0)
                    history.append((n, float(delta.max())))
                    for pos in range(len(tracked)):
                        if delta[pos] <= tol and pos not in stab_n:
                            stab_n[pos] = n
                        elif delta[pos] > tol and pos in stab_n:
                            del stab_n[pos]  # keep waiting if it moved again
                    if len(stab_n) == len(tracked):
                        return LimitBasis(j0, interval, fam, tracked,
                                          tracked_idx, stab_n, n, probes,
                                          fam.fit(), True, history)
                prev_vals = vals
        if n >= n_budget:
            if fam is None or tracked is None:
                raise LimitBudgetExceeded(
                    f"no usable local family within budget n<={n_budget}")
            return LimitBasis(j0, interval, fam, tracked,
                              tracked_idx, stab_n, n, probes,
                              fam.fit(), False, history)
        n = min(2 * n, n_budget) if n < n_budget else n_budget + 1


def _select_tracked(fam: _LocalFamily, probes: np.ndarray, tol: float,
                    interval) -> tuple | None:
    """Windows to follow: everything within decay reach of the probes.

    A window j contributes at most C q^{|j - anchor|} mass(supp_j) / lam
    to the limit series at a probe; on an open side the combined mass of
    all windows beyond a cutoff is at most the source mass of the
    remaining gap toward the accumulation endpoint, which shrinks to
    zero.  The cutoff is placed where that bound (with unit density as
    the mass proxy) drops below tol.  Returns None when the realized
    family cannot host the cutoff yet, so the caller grows the sequence
    first and the tracked range never needs to change later.
    """
    lo, hi, lo_closed, hi_closed = interval
    fit = fam.fit()
    anchors = np.array([fam.anchor(t) for t in probes])
    lam = min(fam.span_length(t) for t in probes)
    q = fit.q_hat if fit.q_hat > 0.0 else 0.5
    C = max(fit.C_hat, 1.0)
    scale = (1.0 - q) * lam * tol

    a = 0
    if not lo_closed:
        a = None
        for j in range(int(anchors.min()) - fam.k, -1, -1):
            gap = max(int(anchors.min()) - fam.k + 1 - j, 0)
            if C * q ** gap * (fam.seq[j + fam.k] - lo) <= scale:
                a = j
                break
        if a is None:
            return None
    b = fam.size
    if not hi_closed:
        b = None
        for j in range(int(anchors.max()) + 2, fam.size + 1):
            gap = max(j - 1 - int(anchors.max()), 0)
            if j < len(fam.seq) and \
                    C * q ** gap * (hi - fam.seq[j]) <= scale:
                b = j
                break
        if b is None or b > fam.size:
            return None
    idx = np.arange(a, b, dtype=int)
    return [fam.window(int(j)) for j in idx], idx


def tail_certificate(basis: LimitBasis, source, ts) -> float:
    """Bound on the dropped (untracked) part of the limit series at the
    given points.

    Untracked windows live beyond the tracked cutoffs on the open sides;
    each contributes at most C q^{distance} mass(supp)/lam, and their
    joint mass is at most the source mass of the remaining gap toward
    the accumulation endpoint.
    """
    fit = basis.decay
    if len(basis.tracked_indices) == 0:
        return math.inf
    q = fit.q_hat if fit.q_hat > 0.0 else 0.5
    C = max(fit.C_hat, 1.0)
    lo, hi, lo_closed, hi_closed = basis.interval
    fam = basis.family
    lo_t = int(basis.tracked_indices.min())
    hi_t = int(basis.tracked_indices.max())
    mass_left = mass_right = 0.0
    if not lo_closed and lo_t > 0:
        mass_left = _regional_mass(source, lo, float(fam.seq[lo_t + fam.k]))
    if not hi_closed and hi_t + 1 < len(fam.seq):
        mass_right = _regional_mass(source, float(fam.seq[hi_t + 1]), hi)
    if mass_left == 0.0 and mass_right == 0.0:
        return 0.0
    total = 0.0
    for t in np.atleast_1d(ts):
        lam = fam.span_length(float(t))
        a = fam.anchor(float(t))
        bound = mass_left * q ** max(a - lo_t - fam.k + 1, 0) \
            + mass_right * q ** max(hi_t + 1 - a, 0)
        total = max(total, C * bound / ((1.0 - q) * lam))
    return total


def _regional_mass(source, lo: float, hi: float) -> float:
    """Total-variation mass of the source restricted to [lo, hi]."""
    if hi <= lo:
        return 0.0
    mass = 0.0
    density = source.density if isinstance(source, MeasureSpec) else source
    if density is not None:
        ts = np.linspace(lo, hi, 129)
        vals = density.norm_values(ts)
        mass += float(np.trapezoid(vals, ts))
    if isinstance(source, MeasureSpec):
        mass += source.tv_interval(lo, hi)
    return mass


# ---------------------------------------------------------------------------
# Predicted limits and reports


@dataclass
class PredictedLimit:
    """Evaluable pointwise limit of a spline martingale.

    On each accumulation-free interval with a limit basis the value is
    the truncated dual series; elsewhere it is the density of the
    absolutely continuous part (zero for purely singular sources).
    """

    fn: FunctionSpec
    decomposition: Decomposition
    t_values: dict[int, np.ndarray]          # j0 -> (tracked, d)
    pairing_defects: dict[int, float]
    tail_certificates: dict[int, float]
    source_mass: float

    def __call__(self, ts) -> np.ndarray:
        return self.fn(ts)

    @property
    def max_pairing_defect(self) -> float:
        return max(self.pairing_defects.values(), default=0.0)

    @property
    def max_tail_certificate(self) -> float:
        return max(self.tail_certificates.values(), default=0.0)


def source_total_mass(mart: SplineMartingale) -> float:
    """Total-variation style mass bound of the source, used by the tail
    certificates: the last cached L1 norm dominates the function part,
    plus the singular masses for measures."""
    mass = max(mart.l1_norms)
    if isinstance(mart.source, MeasureSpec):
        mass = max(mass, mart.source.tv_interval(0.0, 1.0))
    return mass


def predicted_limit(mart: SplineMartingale, decomposition: Decomposition,
                    bases: dict[int, LimitBasis],
                    g_abscont: FunctionSpec | None,
                    tol: float = 1e-8) -> PredictedLimit:
    """Assemble the explicit limit function of the martingale.

    Every positive-length accumulation-free interval must come with a
    limit basis; the dual series there is truncated to the tracked
    windows, with the dropped tail certified against `tol` via the
    fitted decay.  Pairings T(local_j) are taken at the top of the
    schedule and their stabilization defect is recorded.
    """
    for j, (lo, hi) in enumerate(decomposition.U_intervals):
        if hi > lo and j not in bases:
            raise ValueError(f"missing limit basis for interval {j}")
    d = mart.d
    t_values: dict[int, np.ndarray] = {}
    defects: dict[int, float] = {}
    certs: dict[int, float] = {}
    mass = source_total_mass(mart)
    g_last, g_prev = mart.gs[-1], mart.gs[-2] if len(mart.gs) > 1 else None
    for j0, basis in bases.items():
        vals = np.zeros((len(basis.tracked_indices), d))
        defect = 0.0
        for pos in range(len(basis.tracked_indices)):
            member = basis.basis_spline(pos)
            v = integrate_pairing(g_last, member)
            if g_prev is not None:
                w = integrate_pairing(g_prev, member)
                defect = max(defect, float(np.linalg.norm(v - w)))
            vals[pos] = v
        t_values[j0] = vals
        defects[j0] = defect
        certs[j0] = tail_certificate(basis, mart.source, basis.probes)

    def evaluate(ts):
        ts = np.atleast_1d(np.asarray(ts, dtype=float))
        out = np.zeros((len(ts), d))
        region = np.array([_region_index(decomposition, t) for t in ts])
        for j0, basis in bases.items():
            mask = region == j0
            if mask.any():
                D = basis.duals_at(ts[mask])
                out[mask] = D @ t_values[j0]
        rest = region < 0
        if rest.any() and g_abscont is not None:
            out[rest] = g_abscont(ts[rest])
        return out

    fn = FunctionSpec("predicted-limit", evaluate, d=d, kind="closed-form")
    return PredictedLimit(fn, decomposition, t_values, defects, certs, mass)


def _region_index(decomp: Decomposition, t: float) -> int:
    j = decomp.region_of(t)
    return -1 if j is None else j


@dataclass
class ConvergenceReport:
    """Per-point trajectories of the gap to a predicted limit (or to
    zero for singular decay), with fitted rates and verdicts."""

    points: np.ndarray
    schedule: tuple[int, ...]
    gaps: np.ndarray                     # (len(schedule), len(points))
    predicted: np.ndarray                # (len(points), d)
    thresholds: dict
    bounds: np.ndarray | None = None
    extras: dict = field(default_factory=dict)

    @property
    def final_gaps(self) -> np.ndarray:
        return self.gaps[-1]

    @property
    def rates(self) -> np.ndarray:
        """Per-point slope of log10(gap) per schedule step."""
        out = np.zeros(len(self.points))
        x = np.arange(len(self.schedule), dtype=float)
        for i in range(len(self.points)):
            y = np.log10(np.maximum(self.gaps[:, i], 1e-300))
            out[i] = np.polyfit(x, y, 1)[0] if len(x) > 1 else 0.0
        return out

    @property
    def verdicts(self) -> np.ndarray:
        thr = self.thresholds.get("pointwise")
        if thr is not None:
            return self.final_gaps <= thr
        factor = self.thresholds.get("decay_factor", 10.0)
        return self.final_gaps <= self.gaps[0] / factor

    @property
    def dominated(self) -> np.ndarray | None:
        if self.bounds is None:
            return None
        return np.all(self.gaps <= self.bounds * (1 + 1e-9) + 1e-300, axis=0)

    def passed(self) -> bool:
        ok = bool(np.all(self.verdicts))
        if self.bounds is not None:
            ok = ok and bool(np.all(self.dominated))
        return ok

    def rows(self):
        """(point, n, gap, bound) rows for CSV emission."""
        out = []
        for col, t in enumerate(self.points):
            for row, n in enumerate(self.schedule):
                bound = self.bounds[row, col] if self.bounds is not None else ""
                out.append((float(t), int(n), float(self.gaps[row, col]), bound))
        return out

    def summary(self) -> dict:
        s = {
            "points": [float(t) for t in self.points],
            "schedule": list(self.schedule),
            "final_gaps": [float(g) for g in self.final_gaps],
            "rates": [float(r) for r in self.rates],
            "verdicts": [bool(v) for v in self.verdicts],
            "passed": self.passed(),
            "thresholds": self.thresholds,
        }
        if self.bounds is not None:
            s["dominated"] = [bool(v) for v in self.dominated]
        s.update(self.extras)
        return s


def convergence_report(mart: SplineMartingale, predicted, points,
                       thresholds: dict | None = None) -> ConvergenceReport:
    """Gaps g_n(t) - predicted(t) across the schedule.

    Points must avoid the exceptional null sets (interval boundaries,
    atom locations); they carry the trajectories and the final verdict
    against thresholds["pointwise"].
    """
    thresholds = {"pointwise": 1e-6, **(thresholds or {})}
    points = np.asarray(points, dtype=float)
    pred_fn = predicted.fn if isinstance(predicted, PredictedLimit) else predicted
    pvals = pred_fn(points)
    gaps = np.zeros((len(mart.schedule), len(points)))
    for row, g in enumerate(mart.gs):
        gaps[row] = np.linalg.norm(g.eval(points) - pvals, axis=1)
    extras = {}
    if isinstance(predicted, PredictedLimit):
        extras["pairing_defect"] = predicted.max_pairing_defect
        extras["tail_certificate"] = predicted.max_tail_certificate
    return ConvergenceReport(points, mart.schedule, gaps, pvals,
                             thresholds, extras=extras)


def singular_decay_experiment(program: KnotProgram, nu_s: MeasureSpec,
                              points, schedule, margin: float = 0.05,
                              thresholds: dict | None = None) -> ConvergenceReport:
    """Trajectories of ‖P_n nu_s(t)‖ for a purely singular measure at
    points a declared margin away from its support, each dominated by
    the geometric majorant

        C_hat * sum_{i,j} q_hat^|i-j| * |nu_s|(supp N_i) * N_j(t) / h_ij

    with (C_hat, q_hat) fitted on the same space."""
    if not nu_s.is_singular:
        raise ValueError("measure has a density part; decay holds only for "
                         "the singular part")
    points = np.asarray(points, dtype=float)
    for t in points:
        dist = nu_s.distance_to_singular(float(t))
        if dist < margin:
            raise ValueError(
                f"point {t} is {dist:.4f} from the singular support, "
                f"inside the declared margin {margin}")
    schedule = tuple(int(n) for n in schedule)
    thresholds = {"decay_factor": 10.0, **(thresholds or {})}
    gaps = np.zeros((len(schedule), len(points)))
    bounds = np.zeros_like(gaps)
    for row, n in enumerate(schedule):
        space = SplineSpace.from_grid(realize(program, n))
        P = project_measure(space, nu_s)
        gaps[row] = np.linalg.norm(P.eval(points), axis=1)
        bounds[row] = _majorant(space, nu_s, points)
    extras = {"margin": margin}
    d = 1 if nu_s.d == 1 else nu_s.d
    return ConvergenceReport(points, schedule, gaps,
                             np.zeros((len(points), d)), thresholds,
                             bounds=bounds, extras=extras)


def _majorant(space: SplineSpace, nu: MeasureSpec, points) -> np.ndarray:
    fit = fit_decay(space)
    q, C = max(fit.q_hat, 1e-300), fit.C_hat
    knots, k, dim = space.knots, space.k, space.dim
    theta = np.array([nu.tv_interval(knots[i], knots[i + k])
                      for i in range(dim)])
    idx = np.arange(dim)
    firsts, V = eval_basis_many(space, points)
    out = np.zeros(len(points))
    for p in range(len(points)):
        for r in range(k):
            j = firsts[p] + r
            if V[p, r] == 0.0:
                continue
            h = knots[np.maximum(idx, j) + k] - knots[np.minimum(idx, j)]
            out[p] += V[p, r] * float(np.sum(q ** np.abs(idx - j) * theta / h))
    return C * out
