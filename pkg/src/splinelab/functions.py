"""Test functions and finite measures on [0, 1].

FunctionSpec wraps a vectorized evaluation rule together with the
metadata quadrature needs: declared breakpoints (kinks and jumps) and,
for piecewise polynomials, the polynomial degree.  MeasureSpec carries a
finite vector measure already split into density, atoms, and a
self-similar Cantor part.
"""

import math
from dataclasses import dataclass

import numpy as np

__all__ = ["FunctionSpec", "MeasureSpec", "devil_staircase", "cantor_cells",
           "make_function", "make_measure", "FUNCTION_REGISTRY"]


@dataclass(frozen=True)
class FunctionSpec:
    """Bounded evaluable function t ∈ [0,1] ↦ R^d."""

    name: str
    fn: object  # vectorized callable ts (m,) -> (m,) or (m, d)
    d: int = 1
    breakpoints: tuple[float, ...] = ()
    poly_degree: int | None = None
    kind: str = "closed-form"

    def __call__(self, ts) -> np.ndarray:
        ts = np.atleast_1d(np.asarray(ts, dtype=float))
        out = np.asarray(self.fn(ts), dtype=float)
        if out.ndim == 1:
            out = out[:, None]
        if out.shape != (len(ts), self.d):
            raise ValueError(
                f"{self.name}: evaluation returned shape {out.shape}, "
                f"expected ({len(ts)}, {self.d})")
        return out

    def norm_values(self, ts) -> np.ndarray:
        return np.linalg.norm(self(ts), axis=1)

    @classmethod
    def from_spline(cls, s) -> "FunctionSpec":
        lo, hi = s.space.domain
        interior = [float(v) for v in s.space.breakpoints() if lo < v < hi]
        return cls(name="spline", fn=s.eval, d=s.d,
                   breakpoints=tuple(interior),
                   poly_degree=s.space.k - 1, kind="spline")

    def with_dimension(self, d: int, weights=None) -> "FunctionSpec":
        """Replicate a scalar function into R^d (optionally scaled
        per component); used by the vector-valued coherence checks."""
        if self.d != 1:
            raise ValueError("with_dimension needs a scalar base function")
        w = np.ones(d) if weights is None else np.asarray(weights, dtype=float)
        base = self.fn
        return FunctionSpec(
            name=f"{self.name}-d{d}",
            fn=lambda ts: np.asarray(base(ts), dtype=float).reshape(-1, 1) * w,
            d=d, breakpoints=self.breakpoints,
            poly_degree=self.poly_degree, kind=self.kind)


def devil_staircase(ts) -> np.ndarray:
    """Cantor function (devil's staircase), vectorized."""
    t = np.clip(np.atleast_1d(np.asarray(ts, dtype=float)), 0.0, 1.0)
    out = np.zeros_like(t)
    active = np.ones_like(t, dtype=bool)
    bit = 0.5
    for _ in range(54):
        t = t * 3.0
        digit = np.minimum(np.floor(t), 2.0)
        t = t - digit
        out += bit * (active & (digit >= 1))
        active &= digit != 1
        bit *= 0.5
        if not active.any():
            break
    return out


def cantor_cells(level: int) -> tuple[np.ndarray, float]:
    """Left endpoints and common width of the level-L Cantor cells."""
    if level < 1:
        raise ValueError("cantor level must be >= 1")
    lefts = np.array([0.0])
    width = 1.0
    for _ in range(level):
        width /= 3.0
        lefts = np.concatenate([lefts, lefts + 2.0 * width])
    return np.sort(lefts), width


@dataclass(frozen=True)
class MeasureSpec:
    """Finite vector measure: density part + atoms + Cantor family.

    The parts are the Lebesgue decomposition of the measure; nothing is
    decomposed at runtime.  Weights are vectors in R^d.
    """

    d: int = 1
    density: FunctionSpec | None = None
    atoms: tuple[tuple[float, np.ndarray], ...] = ()
    cantor_level: int | None = None
    cantor_weight: np.ndarray | None = None

    def __post_init__(self):
        atoms = []
        for loc, w in self.atoms:
            loc = float(loc)
            if not 0.0 <= loc <= 1.0:
                raise ValueError(f"atom location {loc} outside [0, 1]")
            w = np.asarray(w, dtype=float).reshape(-1)
            if w.shape != (self.d,):
                raise ValueError("atom weight dimension mismatch")
            atoms.append((loc, w))
        object.__setattr__(self, "atoms", tuple(atoms))
        if self.cantor_level is not None:
            if self.cantor_level < 1:
                raise ValueError("cantor level must be >= 1")
            w = np.asarray(self.cantor_weight, dtype=float).reshape(-1)
            if w.shape != (self.d,):
                raise ValueError("cantor weight dimension mismatch")
            object.__setattr__(self, "cantor_weight", w)
        if self.density is not None and self.density.d != self.d:
            raise ValueError("density dimension mismatch")

    @property
    def is_singular(self) -> bool:
        return self.density is None

    def singular_support_points(self) -> np.ndarray:
        """Atom locations plus Cantor cell endpoints (level resolution)."""
        pts = [np.array([loc for loc, _ in self.atoms])]
        if self.cantor_level is not None:
            lefts, width = cantor_cells(self.cantor_level)
            pts.append(lefts)
            pts.append(lefts + width)
        return np.unique(np.concatenate(pts))

    def distance_to_singular(self, t: float) -> float:
        dist = math.inf
        for loc, _ in self.atoms:
            dist = min(dist, abs(t - loc))
        if self.cantor_level is not None:
            lefts, width = cantor_cells(self.cantor_level)
            inside = (t >= lefts) & (t <= lefts + width)
            if inside.any():
                return 0.0
            gaps = np.minimum(np.abs(t - lefts), np.abs(t - (lefts + width)))
            dist = min(dist, float(gaps.min()))
        return dist

    def tv_interval(self, lo: float, hi: float) -> float:
        """Total-variation mass of the singular parts in [lo, hi].
        (The density part is handled by quadrature where needed.)"""
        mass = 0.0
        for loc, w in self.atoms:
            if lo <= loc <= hi:
                mass += float(np.linalg.norm(w))
        if self.cantor_level is not None:
            lefts, width = cantor_cells(self.cantor_level)
            overlap = np.clip(np.minimum(hi, lefts + width) - np.maximum(lo, lefts),
                              0.0, None)
            frac = float(np.sum(overlap)) / width * 2.0 ** (-self.cantor_level)
            mass += frac * float(np.linalg.norm(self.cantor_weight))
        return mass


# ---------------------------------------------------------------------------
# Named registry used by the CLI.

def _spec_sin2pi(params, d=1):
    return FunctionSpec("sin2pi", lambda t: np.sin(2 * np.pi * t))


def _spec_cos2pi(params, d=1):
    return FunctionSpec("cos2pi", lambda t: np.cos(2 * np.pi * t))


def _spec_constant(params, d=1):
    c = float(params.get("value", 1.0))
    return FunctionSpec("constant", lambda t: np.full_like(t, c), poly_degree=0)


def _spec_poly(params, d=1):
    coeffs = tuple(float(c) for c in params.get("coeffs", (0.0, 1.0)))
    return FunctionSpec(
        "poly", lambda t: np.polynomial.polynomial.polyval(t, coeffs),
        poly_degree=len(coeffs) - 1)


def _spec_step(params, d=1):
    loc = float(params.get("location", 0.5))
    return FunctionSpec("step", lambda t: (t >= loc).astype(float),
                        breakpoints=(loc,), poly_degree=0)


def _spec_indicator(params, d=1):
    a, b = float(params.get("a", 0.25)), float(params.get("b", 0.75))
    return FunctionSpec("indicator", lambda t: ((t >= a) & (t < b)).astype(float),
                        breakpoints=(a, b), poly_degree=0)


def _spec_bump(params, d=1):
    center = float(params.get("center", 0.5))
    width = float(params.get("width", 0.1))
    lo, hi = center - width / 2, center + width / 2
    return FunctionSpec(
        "bump", lambda t: ((t >= lo) & (t < hi)).astype(float) / width,
        breakpoints=(lo, hi), poly_degree=0)


def _spec_abs_centered(params, d=1):
    return FunctionSpec("abs-centered", lambda t: np.abs(t - 0.5),
                        breakpoints=(0.5,), poly_degree=1)


def _spec_gauss(params, d=1):
    c = float(params.get("center", 0.5))
    s = float(params.get("scale", 0.15))
    return FunctionSpec("gauss", lambda t: np.exp(-0.5 * ((t - c) / s) ** 2))


def _spec_devil(params, d=1):
    return FunctionSpec("cantor-devil-staircase", devil_staircase)


FUNCTION_REGISTRY = {
    "sin2pi": (_spec_sin2pi, {}),
    "cos2pi": (_spec_cos2pi, {}),
    "constant": (_spec_constant, {"value": "float (default 1.0)"}),
    "poly": (_spec_poly, {"coeffs": "power-basis coefficients, low to high"}),
    "step": (_spec_step, {"location": "float (default 0.5)"}),
    "indicator": (_spec_indicator, {"a": "float", "b": "float"}),
    "bump": (_spec_bump, {"center": "float", "width": "float"}),
    "abs-centered": (_spec_abs_centered, {}),
    "gauss": (_spec_gauss, {"center": "float", "scale": "float"}),
    "cantor-devil-staircase": (_spec_devil, {}),
}


def make_function(name: str, params: dict | None = None, d: int = 1,
                  weights=None) -> FunctionSpec:
    """Instantiate a registered function; d > 1 replicates it to R^d."""
    if name not in FUNCTION_REGISTRY:
        raise KeyError(f"unknown function {name!r}; see FUNCTION_REGISTRY")
    builder, _ = FUNCTION_REGISTRY[name]
    spec = builder(params or {})
    if d > 1:
        spec = spec.with_dimension(d, weights)
    return spec


def make_measure(record: dict) -> MeasureSpec:
    """Build a MeasureSpec from a plain config record."""
    d = int(record.get("dimension", 1))
    density = None
    if "density" in record and record["density"] is not None:
        dd = record["density"]
        density = make_function(dd["name"], dd.get("params"), d=d,
                                weights=dd.get("weights"))
    atoms = tuple(
        (float(a["location"]), np.asarray(a["weight"], dtype=float).reshape(-1))
        for a in record.get("atoms", ()))
    cantor = record.get("cantor")
    level = weight = None
    if cantor:
        level = int(cantor["level"])
        weight = np.asarray(cantor["weight"], dtype=float).reshape(-1)
    return MeasureSpec(d=d, density=density, atoms=atoms,
                       cantor_level=level, cantor_weight=weight)
