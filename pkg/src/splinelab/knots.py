"""Knot sequence programs, realized grids, and accumulation geometry.

A knot program is a deterministic rule emitting interior knots
t_1, t_2, ... in (0, 1) together with a declared description of the
sequence's accumulation set.  Realizing a program at depth n produces
the grid of the first n knots augmented with k copies of each boundary
point; prefixes nest, so the spline spaces built on successive grids
are nested as well.

The accumulation set splits [0, 1] into the open intervals U_j free of
accumulation points.  For each U_j, the boundary points that no knot
subsequence inside U_j approaches form the set B_j, and V_j = U_j ∪ B_j
is the region on which local limit bases exist.  All of this is derived
analytically from the program family, never inferred from finite data;
`estimate_accumulation` exists only as an empirical cross-check.
"""

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "KnotProgram",
    "Grid",
    "Decomposition",
    "realize",
    "mesh_width",
    "grid_interval",
    "anchor_index",
    "hull_length",
    "decompose",
    "estimate_accumulation",
]


class KnotProgramError(ValueError):
    """Invalid program parameters or a prefix violating multiplicity."""


def _max_interior_multiplicity(k: int) -> int:
    # Order 1 splines are indicator bases: a repeated breakpoint is
    # meaningless, so distinct knots (multiplicity 1) are allowed there.
    return max(k - 1, 1)


def _van_der_corput(i: int) -> float:
    """Base-2 radical inverse of i >= 1; enumerates the dyadic rationals."""
    v, denom = 0.0, 1.0
    while i:
        denom *= 2.0
        v += (i & 1) / denom
        i >>= 1
    return v


@dataclass(frozen=True)
class AccumulationSet:
    """Finite accumulation points (with approach sides) plus closed
    intervals of accumulation.  `sides[p]` lists the sides ("left",
    "right") from which knots approach the point p."""

    points: tuple[float, ...] = ()
    intervals: tuple[tuple[float, float], ...] = ()
    sides: dict[float, frozenset[str]] = field(default_factory=dict)

    def approached_from(self, a: float, side: str) -> bool:
        """True when knots approach the point a from the given side."""
        if side in self.sides.get(a, frozenset()):
            return True
        for lo, hi in self.intervals:
            # knots dense in (lo, hi) approach lo from the right and hi
            # from the left; interior points from both sides
            if lo < a < hi:
                return True
            if a == lo and side == "right":
                return True
            if a == hi and side == "left":
                return True
        return False

    def merged_with(self, other: "AccumulationSet") -> "AccumulationSet":
        sides: dict[float, frozenset[str]] = dict(self.sides)
        for p, s in other.sides.items():
            sides[p] = sides.get(p, frozenset()) | s
        points = tuple(sorted(set(self.points) | set(other.points)))
        intervals = _merge_intervals(self.intervals + other.intervals)
        points = tuple(p for p in points if not any(lo <= p <= hi for lo, hi in intervals))
        return AccumulationSet(points, intervals, sides)


def _merge_intervals(intervals):
    if not intervals:
        return ()
    ivs = sorted(intervals)
    out = [list(ivs[0])]
    for lo, hi in ivs[1:]:
        if lo <= out[-1][1]:
            out[-1][1] = max(out[-1][1], hi)
        else:
            out.append([lo, hi])
    return tuple((lo, hi) for lo, hi in out)


@dataclass(frozen=True)
class KnotProgram:
    """A deterministic interior-knot sequence with declared accumulation
    structure.  Construct through the family classmethods."""

    family: str
    k: int
    params: tuple = ()
    accumulation: AccumulationSet = AccumulationSet()

    # -- families ----------------------------------------------------

    @classmethod
    def explicit(cls, values, k: int) -> "KnotProgram":
        values = tuple(float(v) for v in values)
        if any(not 0.0 < v < 1.0 for v in values):
            raise KnotProgramError("explicit knots must lie in (0, 1)")
        return cls("explicit-list", _check_order(k), values)

    @classmethod
    def uniform_dense(cls, k: int) -> "KnotProgram":
        acc = AccumulationSet(intervals=((0.0, 1.0),))
        return cls("uniform-dense", _check_order(k), (), acc)

    @classmethod
    def dyadic_dense(cls, k: int) -> "KnotProgram":
        acc = AccumulationSet(intervals=((0.0, 1.0),))
        return cls("dyadic-dense", _check_order(k), (), acc)

    @classmethod
    def geometric(cls, target: float, ratio: float = 0.5, side: str = "left",
                  k: int = 2) -> "KnotProgram":
        if not 0.0 < target < 1.0:
            raise KnotProgramError("target must lie in (0, 1)")
        if not 0.0 < ratio < 1.0:
            raise KnotProgramError("ratio must lie in (0, 1)")
        if side not in ("left", "right", "both"):
            raise KnotProgramError(f"unknown side {side!r}")
        sides = frozenset(("left", "right") if side == "both" else (side,))
        acc = AccumulationSet(points=(target,), sides={target: sides})
        return cls("geometric-to-point", _check_order(k), (target, ratio, side), acc)

    @classmethod
    def subinterval_dense(cls, a: float, b: float, k: int) -> "KnotProgram":
        if not 0.0 <= a < b <= 1.0:
            raise KnotProgramError("need 0 <= a < b <= 1")
        acc = AccumulationSet(intervals=((a, b),))
        return cls("dense-in-subinterval", _check_order(k), (a, b), acc)

    @classmethod
    def concatenate(cls, programs) -> "KnotProgram":
        programs = tuple(programs)
        if not programs:
            raise KnotProgramError("empty concatenation")
        k = programs[0].k
        if any(p.k != k for p in programs):
            raise KnotProgramError("all concatenated programs must share the order k")
        acc = programs[0].accumulation
        for p in programs[1:]:
            acc = acc.merged_with(p.accumulation)
        return cls("concatenation", k, programs, acc)

    # -- sequence ----------------------------------------------------

    def interior_knots(self, n: int) -> np.ndarray:
        """First n interior knots in generation order (not sorted)."""
        if n < 0:
            raise KnotProgramError("n must be >= 0")
        fam = self.family
        if fam == "explicit-list":
            if n > len(self.params):
                raise KnotProgramError(
                    f"explicit list holds {len(self.params)} knots, requested {n}")
            return np.asarray(self.params[:n], dtype=float)
        if fam == "uniform-dense":
            return np.array([_van_der_corput(i) for i in range(1, n + 1)])
        if fam == "dyadic-dense":
            out, level = [], 1
            while len(out) < n:
                step = 0.5 ** level
                out.extend(j * step for j in range(1, 2 ** level, 2))
                level += 1
            return np.array(out[:n])
        if fam == "geometric-to-point":
            target, ratio, side = self.params
            i = np.arange(1, n + 1, dtype=float)
            if side == "left":
                return target * (1.0 - ratio ** i)
            if side == "right":
                return target + (1.0 - target) * ratio ** i
            # alternate left, right, left, ...
            j = (i + 1) // 2
            left = target * (1.0 - ratio ** j)
            right = target + (1.0 - target) * ratio ** j
            return np.where(i % 2 == 1, left, right)
        if fam == "dense-in-subinterval":
            a, b = self.params
            return a + (b - a) * np.array([_van_der_corput(i) for i in range(1, n + 1)])
        if fam == "concatenation":
            return self._roundrobin(n)
        raise KnotProgramError(f"unknown family {self.family!r}")

    def _roundrobin(self, n: int) -> np.ndarray:
        parts = self.params
        lengths = [len(p.params) if p.family == "explicit-list" else None for p in parts]
        taken = [0] * len(parts)
        out: list[float] = []
        while len(out) < n:
            progressed = False
            for idx, p in enumerate(parts):
                if len(out) >= n:
                    break
                if lengths[idx] is not None and taken[idx] >= lengths[idx]:
                    continue
                taken[idx] += 1
                out.append(float(p.interior_knots(taken[idx])[-1]))
                progressed = True
            if not progressed:
                raise KnotProgramError(
                    f"concatenation exhausted after {len(out)} knots, requested {n}")
        return np.array(out)

    def record(self) -> dict:
        """JSON-serializable description (round-trips through the CLI)."""
        fam = self.family
        rec: dict = {"family": fam}
        if fam == "explicit-list":
            rec["values"] = list(self.params)
        elif fam == "geometric-to-point":
            rec["target"], rec["ratio"], rec["side"] = self.params
        elif fam == "dense-in-subinterval":
            rec["a"], rec["b"] = self.params
        elif fam == "concatenation":
            rec["programs"] = [p.record() for p in self.params]
        return rec


def _check_order(k) -> int:
    k = int(k)
    if k < 1:
        raise KnotProgramError("order k must be >= 1")
    return k


@dataclass(frozen=True)
class Grid:
    """Augmented grid: the first n interior knots, sorted, with k copies
    of 0 and 1.  Immutable after construction."""

    knots: np.ndarray
    k: int
    n_interior: int

    def __post_init__(self):
        self.knots.setflags(write=False)

    @property
    def dim(self) -> int:
        """Dimension of the spline space on this grid."""
        return len(self.knots) - self.k


def realize(program: KnotProgram, n: int) -> Grid:
    """Grid of the first n interior knots plus k-fold boundary padding.

    Rejects prefixes in which an interior value occurs more often than
    the order allows.
    """
    k = program.k
    interior = program.interior_knots(n)
    if interior.size:
        values, counts = np.unique(interior, return_counts=True)
        mmax = _max_interior_multiplicity(k)
        if counts.max() > mmax:
            bad = values[np.argmax(counts)]
            raise KnotProgramError(
                f"multiplicity {counts.max()} of knot {bad} exceeds {mmax} for order {k}")
    knots = np.concatenate([np.zeros(k), np.sort(interior), np.ones(k)])
    return Grid(knots, k, int(n))


def mesh_width(grid: Grid) -> float:
    """Maximal gap between adjacent grid points."""
    return float(np.max(np.diff(grid.knots)))


def span_containing(knots: np.ndarray, t: float) -> tuple[float, float]:
    """Smallest positive-length interval of adjacent grid points containing t.

    At a grid point shared by two positive spans the left one is chosen;
    downstream bounds only use the span's length, so any fixed rule works.
    """
    m = len(knots)
    lo = int(np.searchsorted(knots, t, side="left"))
    hi = int(np.searchsorted(knots, t, side="right"))
    if lo < hi:  # t is a grid point; occurrences are indices lo..hi-1
        if lo >= 1 and knots[lo - 1] < knots[lo]:
            return float(knots[lo - 1]), float(knots[lo])
        if hi < m and knots[hi] > knots[hi - 1]:
            return float(knots[hi - 1]), float(knots[hi])
        raise ValueError(f"no positive-length span contains t={t}")
    if hi == 0 or hi == m:
        raise ValueError(f"t={t} outside the grid")
    return float(knots[hi - 1]), float(knots[hi])


def grid_interval(grid: Grid, t: float) -> tuple[float, float]:
    """The interval I_n(t): see `span_containing`."""
    return span_containing(grid.knots, t)


def anchor_index_on(knots: np.ndarray, k: int, t: float) -> int:
    """Largest basis index whose support contains the span of t."""
    a, b = span_containing(knots, t)
    dim = len(knots) - k
    i = min(int(np.searchsorted(knots, a, side="right")) - 1, dim - 1)
    while i > 0 and knots[i + k] < b:
        i -= 1
    return i


def anchor_index(grid: Grid, t: float) -> int:
    return anchor_index_on(grid.knots, grid.k, t)


def hull_length(grid: Grid, i: int, j: int) -> float:
    """Length of the convex hull of supp N_i ∪ supp N_j."""
    knots, k = grid.knots, grid.k
    lo, hi = min(i, j), max(i, j)
    if lo < 0 or hi + k >= len(knots):
        raise IndexError("basis index out of range")
    return float(knots[hi + k] - knots[lo])


@dataclass(frozen=True)
class Decomposition:
    """Open intervals U_j (sorted by left endpoint), their unreachable
    boundary subsets B_j, the resulting V_j, and a descriptor of the
    complement of V (the accumulation points belonging to no V_j)."""

    U_intervals: tuple[tuple[float, float], ...]
    B_points: tuple[frozenset[float], ...]
    v_complement_points: tuple[float, ...]
    v_complement_intervals: tuple[tuple[float, float], ...]

    @property
    def V_intervals(self) -> tuple[tuple[float, float, bool, bool], ...]:
        """(lo, hi, lo_closed, hi_closed) per V_j = U_j ∪ B_j."""
        out = []
        for (lo, hi), B in zip(self.U_intervals, self.B_points):
            out.append((lo, hi, lo in B, hi in B))
        return tuple(out)

    def region_of(self, t: float) -> int | None:
        """Index j0 with t ∈ U_{j0}, or None when t is in the complement."""
        for j, (lo, hi) in enumerate(self.U_intervals):
            if lo < t < hi:
                return j
        return None

    def exceptional_points(self) -> tuple[float, ...]:
        """Boundary points of the U_j plus isolated complement points;
        a Lebesgue-null set that sample-point schedules must avoid."""
        pts = set(self.v_complement_points)
        for lo, hi in self.U_intervals:
            pts.update((lo, hi))
        return tuple(sorted(pts))


def decompose(program: KnotProgram) -> Decomposition:
    """Split [0, 1] into accumulation-free intervals with side metadata.

    U_j are the connected components of [0, 1] minus the accumulation
    set; a boundary point belongs to B_j exactly when no knots inside
    U_j approach it, which is read off the family's declared sides.
    """
    acc = program.accumulation
    if acc is None:
        raise KnotProgramError("program lacks a declared accumulation set")
    blocks = _merge_intervals(
        tuple((p, p) for p in acc.points) + acc.intervals)
    # complement of the blocks inside [0, 1]
    U: list[tuple[float, float]] = []
    cursor = 0.0
    for lo, hi in blocks:
        if lo > cursor:
            U.append((cursor, lo))
        cursor = max(cursor, hi)
    if cursor < 1.0:
        U.append((cursor, 1.0))
    U = [(lo, hi) for lo, hi in U if hi > lo]

    B: list[frozenset[float]] = []
    claimed: set[float] = set()
    for lo, hi in U:
        b = set()
        if not acc.approached_from(lo, "right"):
            b.add(lo)
        if not acc.approached_from(hi, "left"):
            b.add(hi)
        B.append(frozenset(b))
        claimed |= b

    comp_points = tuple(sorted(
        p for p in acc.points
        if p not in claimed and not any(lo < p < hi for lo, hi in acc.intervals)))
    comp_intervals = acc.intervals
    return Decomposition(tuple(U), tuple(B), comp_points, comp_intervals)


def estimate_accumulation(program: KnotProgram, n: int, eps: float) -> np.ndarray:
    """Empirical accumulation estimate: knot values with at least
    max(k, 8) sequence members within eps, thinned to eps/2 separation.

    Converges in Hausdorff distance to the declared accumulation set as
    n grows and eps shrinks; used only to cross-check declarations.
    """
    if n < 1 or eps <= 0:
        raise KnotProgramError("need n >= 1 and eps > 0")
    knots = np.sort(program.interior_knots(n))
    counts = (np.searchsorted(knots, knots + eps, side="right")
              - np.searchsorted(knots, knots - eps, side="left"))
    threshold = max(program.k, 8)
    candidates = knots[counts >= threshold]
    out: list[float] = []
    for x in candidates:
        if not out or x - out[-1] > eps / 2:
            out.append(float(x))
    return np.array(out)
