"""Command-line experiment harness.

Usage:
    splinelab run CONFIG.json [--out DIR] [--seed N]
    splinelab list [--format=json|text]

A config file drives one experiment; the runner writes results.csv (one
schema per experiment, versioned in a header comment), summary.json with
the verdicts and fitted constants, and two-column plot data under
plotdata/.  Exit code 0 means all verdicts passed, 2 means a verdict
failed or a numerical stage failed, 1 means the config was unusable.
Identical config and seed produce byte-identical results.csv.
"""

import argparse
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .bspline import SplineSpace
from .convergence import (LimitBudgetExceeded, MartingaleConsistencyError,
                          StabilizationError, build_limit_basis,
                          convergence_report, make_martingale,
                          predicted_limit, singular_decay_experiment)
from .functions import FUNCTION_REGISTRY, FunctionSpec, make_function, make_measure
from .gram import GramFactorizationError, fit_decay
from .knots import KnotProgram, decompose, mesh_width, realize
from .projection import (check_maximal_inequality, check_self_adjoint,
                         jackson_check, project_function, project_measure,
                         shadrin_probe)

EXPERIMENTS = ("gram-decay", "project", "jackson", "maximal", "tower-check",
               "shadrin-probe", "singular-decay", "converge", "limit-construct")

KNOT_FAMILIES = {
    "explicit-list": {"values": "list of floats in (0,1)"},
    "uniform-dense": {},
    "dyadic-dense": {},
    "geometric-to-point": {"target": "float in (0,1)",
                           "ratio": "float in (0,1), default 0.5",
                           "side": "left | right | both"},
    "dense-in-subinterval": {"a": "float", "b": "float"},
    "concatenation": {"programs": "list of knot records"},
}

DEFAULT_TOLERANCES = {
    "gram-decay": {"q_spread": 0.1},
    "project": {"mass_defect": 1e-9},
    "jackson": {"ratio_spread": 10.0},
    "maximal": {"trend_slope": 0.05},
    "tower-check": {"defect": 1e-9},
    "shadrin-probe": {"trend_factor": 1.5},
    "singular-decay": {"decay_factor": 10.0, "margin": 0.05},
    "converge": {"pointwise": 1e-6},
    "limit-construct": {"biorthogonality": 1e-8},
}


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    experiment: str
    order: int
    knots: KnotProgram
    n_schedule: tuple[int, ...]
    tolerances: dict
    seed: int = 0
    function: dict | None = None
    measure: dict | None = None
    points: dict | list | None = None
    quad_depth: int = 2
    out: str | None = None
    raw: dict = field(default_factory=dict)

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
        exp = data.get("experiment")
        if exp not in EXPERIMENTS:
            raise ConfigError(f"experiment must be one of {EXPERIMENTS}, got {exp!r}")
        order = data.get("order", data.get("k"))
        if not isinstance(order, int) or order < 1:
            raise ConfigError("order must be a positive integer")
        knot_rec = data.get("knots")
        if not isinstance(knot_rec, dict):
            raise ConfigError("missing knot program record 'knots'")
        program = parse_knot_record(knot_rec, order)
        sched = data.get("n_schedule")
        if (not isinstance(sched, list) or not sched
                or any(not isinstance(n, int) or n < 0 for n in sched)
                or any(b <= a for a, b in zip(sched, sched[1:]))):
            raise ConfigError("n_schedule must be a strictly increasing list "
                              "of non-negative integers")
        tol = dict(DEFAULT_TOLERANCES.get(exp, {}))
        user_tol = data.get("tolerances", {})
        if not isinstance(user_tol, dict) or any(
                not isinstance(v, (int, float)) or v <= 0 for v in user_tol.values()):
            raise ConfigError("tolerances must be a mapping to positive numbers")
        tol.update(user_tol)
        seed = data.get("seed", 0)
        if not isinstance(seed, int):
            raise ConfigError("seed must be an integer")
        return cls(experiment=exp, order=order, knots=program,
                   n_schedule=tuple(sched), tolerances=tol, seed=seed,
                   function=data.get("function"), measure=data.get("measure"),
                   points=data.get("points"),
                   quad_depth=int(data.get("quad_depth", 2)),
                   out=data.get("out"), raw=data)


def parse_knot_record(rec: dict, k: int) -> KnotProgram:
    fam = rec.get("family")
    if fam == "explicit-list":
        return KnotProgram.explicit(rec["values"], k=k)
    if fam == "uniform-dense":
        return KnotProgram.uniform_dense(k)
    if fam == "dyadic-dense":
        return KnotProgram.dyadic_dense(k)
    if fam == "geometric-to-point":
        return KnotProgram.geometric(rec["target"], rec.get("ratio", 0.5),
                                     rec.get("side", "left"), k=k)
    if fam == "dense-in-subinterval":
        return KnotProgram.subinterval_dense(rec["a"], rec["b"], k)
    if fam == "concatenation":
        return KnotProgram.concatenate(
            [parse_knot_record(r, k) for r in rec["programs"]])
    raise ConfigError(f"unknown knot family {fam!r}")


def _resolve_function(cfg: ExperimentConfig, default: str = "sin2pi") -> FunctionSpec:
    rec = cfg.function or {"name": default}
    return make_function(rec.get("name", default), rec.get("params"),
                         d=int(rec.get("dimension", 1)),
                         weights=rec.get("weights"))


def _resolve_points(cfg: ExperimentConfig, rng) -> np.ndarray:
    rec = cfg.points
    if isinstance(rec, list):
        return np.asarray(rec, dtype=float)
    rec = rec or {}
    count = int(rec.get("count", 20))
    lo = float(rec.get("lo", 0.0))
    hi = float(rec.get("hi", 1.0))
    margin = float(rec.get("margin", 0.05))
    return np.sort(rng.uniform(lo + margin, hi - margin, count))


def _fmt(x) -> str:
    if isinstance(x, float):
        return repr(x)
    return str(x)


class ResultsWriter:
    """Collects fixed-schema CSV rows; all writes go through one place."""

    def __init__(self, experiment: str, columns: tuple[str, ...]):
        self.experiment = experiment
        self.columns = columns
        self.rows: list[tuple] = []

    def add(self, *row):
        if len(row) != len(self.columns):
            raise ValueError("row arity mismatch")
        self.rows.append(row)

    def write(self, path: Path):
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(f"# splinelab results schema v1; experiment={self.experiment}; "
                     f"columns={','.join(self.columns)}\n")
            fh.write(",".join(self.columns) + "\n")
            for row in self.rows:
                fh.write(",".join(_fmt(v) for v in row) + "\n")


def _write_plotdata(outdir: Path, name: str, xs, ys):
    pdir = outdir / "plotdata"
    pdir.mkdir(parents=True, exist_ok=True)
    with open(pdir / f"{name}.csv", "w", encoding="utf-8", newline="\n") as fh:
        for x, y in zip(xs, ys):
            fh.write(f"{_fmt(float(x))},{_fmt(float(y))}\n")


# ---------------------------------------------------------------------------
# Experiment runners; each returns (results_writer, summary_dict, passed)


def _run_gram_decay(cfg: ExperimentConfig, rng, outdir: Path):
    res = ResultsWriter(cfg.experiment,
                        ("k", "n", "grid_family", "q_hat", "C_hat", "max_residual"))
    qs = []
    for n in cfg.n_schedule:
        space = SplineSpace.from_grid(realize(cfg.knots, n))
        fit = fit_decay(space)
        qs.append(fit.q_hat)
        res.add(cfg.order, n, cfg.knots.family, fit.q_hat, fit.C_hat,
                fit.max_residual)
    spread = max(qs) - min(qs) if qs else 0.0
    passed = all(q < 1.0 for q in qs) and spread <= cfg.tolerances["q_spread"]
    _write_plotdata(outdir, "q_hat_vs_n", cfg.n_schedule, qs)
    return res, {"q_hat": qs, "q_spread": spread}, passed


def _run_project(cfg: ExperimentConfig, rng, outdir: Path):
    res = ResultsWriter(cfg.experiment, ("n", "mesh", "sup_error", "mass_defect"))
    summary: dict = {"splines": []}
    passed = True
    errs = []
    nu = make_measure(cfg.measure) if cfg.measure else None
    f = _resolve_function(cfg) if cfg.measure is None else None
    lattice = np.linspace(0.0, 1.0, 401)
    for n in cfg.n_schedule:
        space = SplineSpace.from_grid(realize(cfg.knots, n))
        if f is not None:
            s = project_function(space, f, cfg.quad_depth)
            err = float(np.max(np.linalg.norm(f(lattice) - s.eval(lattice), axis=1)))
            mass_defect = 0.0
        else:
            s = project_measure(space, nu, cfg.quad_depth)
            err = float("nan")
            expected = nu.tv_interval(0.0, 1.0) if nu.density is None else None
            got = s.integral()
            if expected is not None:
                mass_defect = abs(float(np.linalg.norm(got)) - expected)
                passed = passed and mass_defect <= cfg.tolerances["mass_defect"]
            else:
                mass_defect = 0.0
        errs.append(err)
        res.add(n, mesh_width(space.grid), err, mass_defect)
        summary["splines"].append({
            "order": space.k,
            "knots": [float(v) for v in space.knots],
            "coeffs": [[float(c) for c in row] for row in s.coeffs],
        })
    _write_plotdata(outdir, "sup_error_vs_n", cfg.n_schedule, errs)
    return res, summary, passed


def _run_jackson(cfg: ExperimentConfig, rng, outdir: Path):
    f = _resolve_function(cfg)
    spaces = [SplineSpace.from_grid(realize(cfg.knots, n)) for n in cfg.n_schedule]
    records = jackson_check(spaces, f, cfg.quad_depth)
    res = ResultsWriter(cfg.experiment, ("n", "mesh", "sup_error", "omega", "ratio"))
    ratios = []
    for rec in records:
        res.add(rec.n, rec.mesh, rec.sup_error, rec.omega,
                rec.ratio if rec.ratio is not None else "exact")
        if rec.ratio is not None:
            ratios.append(rec.ratio)
    if ratios:
        spread = max(ratios) / min(ratios)
        passed = spread <= cfg.tolerances["ratio_spread"]
    else:
        spread, passed = 1.0, True
    _write_plotdata(outdir, "ratio_vs_n",
                    [r.n for r in records if r.ratio is not None], ratios)
    return res, {"ratios": ratios, "ratio_spread": spread}, passed


def _run_maximal(cfg: ExperimentConfig, rng, outdir: Path):
    f = _resolve_function(cfg)
    spaces = [SplineSpace.from_grid(realize(cfg.knots, n)) for n in cfg.n_schedule]
    points = _resolve_points(cfg, rng)
    report = check_maximal_inequality(spaces, f, points, quad_depth=cfg.quad_depth)
    res = ResultsWriter(cfg.experiment, ("n", "point", "ratio"))
    for row, n in enumerate(cfg.n_schedule):
        for col, t in enumerate(points):
            res.add(n, float(t), report.ratios[row, col])
    passed = report.trend_slope <= cfg.tolerances["trend_slope"]
    _write_plotdata(outdir, "max_ratio_vs_n", cfg.n_schedule, report.per_n_max)
    return res, {"constant": report.constant,
                 "trend_slope": report.trend_slope}, passed


def _run_tower(cfg: ExperimentConfig, rng, outdir: Path):
    source = make_measure(cfg.measure) if cfg.measure else _resolve_function(cfg)
    mart = make_martingale(cfg.knots, source, cfg.n_schedule,
                           quad_depth=max(cfg.quad_depth, 3))
    res = ResultsWriter(cfg.experiment, ("m", "n", "defect"))
    for (m, n), defect in sorted(mart.consistency_defects.items()):
        res.add(m, n, defect)
    worst = mart.max_consistency_defect
    passed = worst <= cfg.tolerances["defect"]
    return res, {"max_defect": worst, "l1_norms": mart.l1_norms}, passed


def _run_shadrin(cfg: ExperimentConfig, rng, outdir: Path):
    width = float(cfg.raw.get("bump_width", 1e-3))
    res = ResultsWriter(cfg.experiment, ("n", "bump_width", "ratio"))
    ratios = []
    for n in cfg.n_schedule:
        space = SplineSpace.from_grid(realize(cfg.knots, n))
        r = shadrin_probe(space, width)
        ratios.append(r)
        res.add(n, width, r)
    half = max(1, len(ratios) // 2)
    passed = max(ratios[half:], default=ratios[-1]) <= \
        cfg.tolerances["trend_factor"] * max(ratios[:half])
    _write_plotdata(outdir, "l1_ratio_vs_n", cfg.n_schedule, ratios)
    return res, {"ratios": ratios}, passed


def _run_singular(cfg: ExperimentConfig, rng, outdir: Path):
    if not cfg.measure:
        raise ConfigError("singular-decay needs a measure record")
    nu = make_measure(cfg.measure)
    points = _resolve_points(cfg, rng)
    margin = cfg.tolerances["margin"]
    points = np.array([t for t in points
                       if nu.distance_to_singular(float(t)) >= margin])
    if len(points) == 0:
        raise ConfigError("no sample points clear the singular-support margin")
    report = singular_decay_experiment(cfg.knots, nu, points, cfg.n_schedule,
                                       margin=margin,
                                       thresholds=cfg.tolerances)
    res = ResultsWriter(cfg.experiment, ("point", "n", "gap", "bound"))
    for row in report.rows():
        res.add(*row)
    _write_plotdata(outdir, "max_gap_vs_n", cfg.n_schedule,
                    report.gaps.max(axis=1))
    return res, report.summary(), report.passed()


def _run_converge(cfg: ExperimentConfig, rng, outdir: Path):
    source = make_measure(cfg.measure) if cfg.measure else _resolve_function(cfg)
    mart = make_martingale(cfg.knots, source, cfg.n_schedule,
                           quad_depth=max(cfg.quad_depth, 3))
    decomp = decompose(cfg.knots)
    bases = {}
    for j, (lo, hi) in enumerate(decomp.U_intervals):
        if hi > lo:
            bases[j] = build_limit_basis(cfg.knots, j)
    if isinstance(source, FunctionSpec):
        g_abs = source
    else:
        g_abs = source.density
    pred = predicted_limit(mart, decomp, bases, g_abs)
    points = _resolve_points(cfg, rng)
    exceptional = list(decomp.exceptional_points())
    if cfg.measure:
        exceptional.extend(float(a["location"]) for a in cfg.measure.get("atoms", ()))
    points = np.array([t for t in points
                       if all(abs(t - e) > 1e-6 for e in exceptional)])
    report = convergence_report(mart, pred, points, cfg.tolerances)
    res = ResultsWriter(cfg.experiment, ("point", "n", "gap", "bound"))
    for row in report.rows():
        res.add(*row)
    _write_plotdata(outdir, "max_gap_vs_n", cfg.n_schedule, report.gaps.max(axis=1))
    return res, report.summary(), report.passed()


def _run_limit_construct(cfg: ExperimentConfig, rng, outdir: Path):
    decomp = decompose(cfg.knots)
    res = ResultsWriter(cfg.experiment,
                        ("j0", "family_size", "tracked", "n_used",
                         "stabilized", "bio_defect", "q_hat"))
    summary: dict = {"intervals": []}
    passed = True
    for j, (lo, hi) in enumerate(decomp.U_intervals):
        if hi <= lo:
            continue
        basis = build_limit_basis(cfg.knots, j)
        bio = basis.biorthogonality_defect()
        ok = basis.stabilized and bio <= cfg.tolerances["biorthogonality"]
        passed = passed and ok
        res.add(j, basis.family.size, len(basis.tracked), basis.n_used,
                basis.stabilized, bio, basis.decay.q_hat)
        summary["intervals"].append({
            "j0": j, "interval": [lo, hi], "stabilized": basis.stabilized,
            "bio_defect": bio, "n_used": basis.n_used,
        })
    return res, summary, passed


RUNNERS = {
    "gram-decay": _run_gram_decay,
    "project": _run_project,
    "jackson": _run_jackson,
    "maximal": _run_maximal,
    "tower-check": _run_tower,
    "shadrin-probe": _run_shadrin,
    "singular-decay": _run_singular,
    "converge": _run_converge,
    "limit-construct": _run_limit_construct,
}


NUMERICAL_FAILURES = (GramFactorizationError, LimitBudgetExceeded,
                      MartingaleConsistencyError, StabilizationError,
                      FloatingPointError, np.linalg.LinAlgError)


def run(config: ExperimentConfig, outdir: Path) -> int:
    """Execute one experiment; returns the process exit code."""
    outdir.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(config.seed)
    runner = RUNNERS[config.experiment]
    try:
        results, summary, passed = runner(config, rng, outdir)
    except ConfigError as exc:
        print(f"invalid config: {exc}", file=sys.stderr)
        return 1
    except NUMERICAL_FAILURES as exc:
        summary = {
            "experiment": config.experiment,
            "error": f"{type(exc).__name__}: {exc}",
            "passed": False,
        }
        _dump_summary(outdir / "summary.json", summary)
        return 2
    results.write(outdir / "results.csv")
    payload = {
        "experiment": config.experiment,
        "order": config.order,
        "knots": config.knots.record(),
        "n_schedule": list(config.n_schedule),
        "seed": config.seed,
        "tolerances": config.tolerances,
        "passed": bool(passed),
        "version": __version__,
    }
    payload.update(summary)
    _dump_summary(outdir / "summary.json", payload)
    return 0 if passed else 2


def _dump_summary(path: Path, payload: dict):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True, default=_json_default)
        fh.write("\n")


def _json_default(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, np.bool_):
        return bool(obj)
    raise TypeError(f"not JSON-serializable: {type(obj)}")


def list_registry(fmt: str = "text") -> str:
    catalog = {
        "experiments": list(EXPERIMENTS),
        "knot_families": KNOT_FAMILIES,
        "functions": {name: schema for name, (_, schema) in FUNCTION_REGISTRY.items()},
        "measures": {
            "density": "named function record (optional)",
            "atoms": "list of {location, weight[]}",
            "cantor": "{level >= 1, weight[]}",
        },
    }
    if fmt == "json":
        return json.dumps(catalog, indent=2, sort_keys=True)
    lines = ["experiments:"]
    lines += [f"  {e}" for e in EXPERIMENTS]
    lines.append("knot families:")
    for name, schema in KNOT_FAMILIES.items():
        params = ", ".join(f"{k}: {v}" for k, v in schema.items()) or "-"
        lines.append(f"  {name}  ({params})")
    lines.append("functions:")
    for name, (_, schema) in FUNCTION_REGISTRY.items():
        params = ", ".join(f"{k}: {v}" for k, v in schema.items()) or "-"
        lines.append(f"  {name}  ({params})")
    lines.append("measures:")
    lines.append("  density: named function record (optional)")
    lines.append("  atoms: list of {location, weight[]}")
    lines.append("  cantor: {level >= 1, weight[]}")
    return "\n".join(lines)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="splinelab",
                                     description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    p_run = sub.add_parser("run", help="run one experiment config")
    p_run.add_argument("config", type=str)
    p_run.add_argument("--out", type=str, default=None)
    p_run.add_argument("--seed", type=int, default=None)
    p_list = sub.add_parser("list", help="show the experiment registry")
    p_list.add_argument("--format", choices=("text", "json"), default="text")
    args = parser.parse_args(argv)

    if args.command == "list":
        print(list_registry(args.format))
        return 0

    path = Path(args.config)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        print(f"error: cannot read {path}: {exc}", file=sys.stderr)
        return 1
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        print(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}", file=sys.stderr)
        return 1
    try:
        config = ExperimentConfig.from_dict(data)
    except (ConfigError, KeyError, TypeError, ValueError) as exc:
        print(f"{path}: invalid config: {exc}", file=sys.stderr)
        return 1
    if args.seed is not None:
        config.seed = args.seed
    outdir = Path(args.out) if args.out else \
        Path(config.out) if config.out else path.parent / "out"
    return run(config, outdir)


if __name__ == "__main__":
    sys.exit(main())
