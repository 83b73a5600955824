"""Rejection-rate experiments, data ingestion and CSV reporting.

A plan file is plain ``key=value`` text, one directive per line, ``#`` starting
a comment line. Example::

    scenario=fisher-bingham
    n=100,200
    d=3
    sigma=0,1
    trials=100
    methods=dKSDu,dKSDv,MMD
    seed=7

Recognized keys are listed in :data:`PLAN_KEYS`. ``null`` and ``alternative``
take model specs and override the scenario's model family.
"""

import csv
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .baselines import (circle_angles, kuiper_test, mmd_two_sample_test, rayleigh_test,
                        select_mmd_kappa)
from .errors import FormatError, NormError, ValidationError
from .gof import (DEFAULT_GRID, DEFAULT_LAMBDA, DEFAULT_SPLIT, TestConfig, split_indices,
                  test_dksd_u, test_dksd_v)
from .models import FisherBingham, Uniform, VonMisesFisher, parse_model_spec
from .rng import make_rng, trial_seed
from .samplers import sample_model

log = logging.getLogger(__name__)

SCENARIOS = ("uniform-circle", "vmf", "fisher-bingham")
METHODS = ("dKSDu", "dKSDv", "MMD", "Rayleigh", "Kuiper")
HEADER = ("scenario", "method", "n", "d", "param", "rejection_rate", "trials",
          "mean_runtime_s", "seed")

# Random streams within one trial; the dKSD tests draw from TEST_STREAM.
DATA_STREAM = 0
MMD_STREAM = 2

NORM_TOL = 1e-6


@dataclass(frozen=True)
class ExperimentPlan:
    scenario: str
    n: tuple = (100,)
    d: tuple = (2,)
    params: tuple = (0.0,)
    trials: int = 200
    methods: tuple = ("dKSDu", "dKSDv")
    alpha: float = 0.01
    bootstrap: int = 1000
    kappa: object = "auto"
    grid: tuple = DEFAULT_GRID
    split: float = DEFAULT_SPLIT
    lam: float = DEFAULT_LAMBDA
    seed: int = 0
    wild_a: float = None
    mu: str = "e1"
    null: str = None
    alternative: str = None
    record_timing: bool = True

    def __post_init__(self):
        if self.scenario not in SCENARIOS:
            raise ValidationError(f"unknown scenario {self.scenario!r}; expected one of {SCENARIOS}")
        if self.trials < 1:
            raise ValidationError("trials must be >= 1")
        if not self.n or not self.d or not self.params:
            raise ValidationError("sweeps must be nonempty")
        bad = [m for m in self.methods if m not in METHODS]
        if bad or not self.methods:
            raise ValidationError(f"unknown methods {bad}; expected a subset of {METHODS}")
        if self.mu not in ("e1", "diag"):
            raise ValidationError("mu must be 'e1' or 'diag'")
        if self.scenario == "uniform-circle" and tuple(self.d) != (2,):
            raise ValidationError("the uniform-circle scenario lives in d = 2")
        if {"Rayleigh", "Kuiper"} & set(self.methods):
            for d in self.d:
                if d != 2 or not isinstance(self.null_model(d), Uniform):
                    raise ValidationError("Rayleigh/Kuiper need d = 2 and a uniform null")
        self.test_config(0)  # validates alpha, B, kappa policy

    def test_config(self, seed):
        return TestConfig(alpha=self.alpha, bootstrap=self.bootstrap, kappa=self.kappa,
                          grid=self.grid, split=self.split, lam=self.lam, seed=seed,
                          wild_a=self.wild_a)

    def null_model(self, d):
        if self.null is not None:
            return parse_model_spec(self.null)
        if self.scenario == "uniform-circle":
            return Uniform(2)
        if self.scenario == "vmf":
            return VonMisesFisher(np.eye(d)[0], 1.0)
        return FisherBingham(fb_null_matrix(d))

    def alternative_model(self, d, param):
        if self.alternative is not None:
            return parse_model_spec(self.alternative)
        if self.scenario == "uniform-circle":
            return Uniform(2) if param == 0 else VonMisesFisher(np.eye(2)[0], param)
        if self.scenario == "vmf":
            mu = np.eye(d)[0] if self.mu == "e1" else np.full(d, 1.0 / math.sqrt(d))
            return VonMisesFisher(mu / np.linalg.norm(mu), 1.0 + param)
        return FisherBingham(fb_null_matrix(d) + param * np.ones((d, d)))

    def grid_points(self):
        """(d, param, n) in output order."""
        return [(d, p, n) for d in self.d for p in self.params for n in self.n]


def fb_null_matrix(d):
    """2 on the diagonal, 1 elsewhere."""
    return np.ones((d, d)) + np.eye(d)


@dataclass
class ResultRow:
    scenario: str
    method: str
    n: int
    d: int
    param: float
    rejection_rate: float
    trials: int
    mean_runtime_seconds: float
    seed: int
    rejections: int = field(default=0, repr=False)


# --- plan files ---------------------------------------------------------------

PLAN_KEYS = {
    "scenario": str, "n": "ints", "d": "ints", "sigma": "floats", "concentration": "floats",
    "trials": int, "methods": "strs", "alpha": float, "bootstrap": int, "kappa": "kappa",
    "grid": "floats", "split": float, "lambda": float, "seed": int, "wild_a": float,
    "mu": str, "null": str, "alternative": str, "record_timing": "bool",
}


def _convert(kind, value, row):
    try:
        if kind == "ints":
            return tuple(int(v) for v in value.split(","))
        if kind == "floats":
            return tuple(float(v) for v in value.split(","))
        if kind == "strs":
            return tuple(v.strip() for v in value.split(",") if v.strip())
        if kind == "kappa":
            return "auto" if value == "auto" else float(value)
        if kind == "bool":
            if value.lower() not in ("true", "false", "1", "0", "yes", "no"):
                raise ValueError(value)
            return value.lower() in ("true", "1", "yes")
        return kind(value)
    except ValueError:
        raise FormatError(f"bad value {value!r}", row) from None


def parse_plan(text):
    """Parse plan-file text into an :class:`ExperimentPlan`."""
    raw = {}
    for row, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise FormatError(f"expected key=value, got {line!r}", row)
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in PLAN_KEYS:
            raise FormatError(f"unknown key {key!r}", row)
        if key in raw:
            raise FormatError(f"duplicate key {key!r}", row)
        raw[key] = _convert(PLAN_KEYS[key], value, row)
    if "scenario" not in raw:
        raise FormatError("plan has no scenario")
    kwargs = dict(raw)
    params = kwargs.pop("sigma", None)
    conc = kwargs.pop("concentration", None)
    if params is not None and conc is not None:
        raise FormatError("give either sigma or concentration, not both")
    if params is not None or conc is not None:
        kwargs["params"] = params if params is not None else conc
    if "lambda" in kwargs:
        kwargs["lam"] = kwargs.pop("lambda")
    if kwargs["scenario"] == "uniform-circle":
        kwargs.setdefault("d", (2,))
    return ExperimentPlan(**kwargs)


def load_plan(path):
    with open(path, encoding="utf-8") as fh:
        return parse_plan(fh.read())


# --- running ------------------------------------------------------------------


def _run_trial(plan, d, param, n, trial):
    """One trial at one grid point; returns per-method (reject, seconds) and total seconds."""
    t_start = time.perf_counter()
    null = plan.null_model(d)
    alt = plan.alternative_model(d, param)
    ts = trial_seed(plan.seed, trial)
    x = sample_model(alt, n, make_rng(ts, DATA_STREAM))[0]
    out = {}
    config = plan.test_config(ts)
    for method in plan.methods:
        t0 = time.perf_counter()
        if method == "dKSDu":
            reject = test_dksd_u(x, null, config).reject
        elif method == "dKSDv":
            reject = test_dksd_v(x, null, config).reject
        elif method == "MMD":
            reject = _mmd_trial(x, null, plan, make_rng(ts, MMD_STREAM))
        elif method == "Rayleigh":
            reject = rayleigh_test(circle_angles(x), plan.alpha).reject
        else:
            reject = kuiper_test(circle_angles(x), plan.alpha).reject
        out[method] = (bool(reject), time.perf_counter() - t0)
    return out, time.perf_counter() - t_start


def _mmd_trial(x, null, plan, rng):
    # the cost of sampling from the null is part of the MMD test
    n = x.shape[0]
    y = sample_model(null, n, rng)[0]
    if plan.kappa == "auto":
        sel, rest = split_indices(n, plan.split, rng)
        kappa = select_mmd_kappa(x[sel], y[sel], plan.grid, plan.lam)
        x, y = x[rest], y[rest]
    else:
        kappa = plan.kappa
    return mmd_two_sample_test(x, y, kappa, plan.alpha, plan.bootstrap, rng).reject


def _run_chunk(args):
    plan, d, param, n, trials = args
    results = []
    for trial in trials:
        try:
            results.append(_run_trial(plan, d, param, n, trial))
        except Exception as exc:
            raise RuntimeError(
                f"{plan.scenario} d={d} param={param} n={n} trial={trial}: {exc}") from exc
    return results


def run_experiment(plan, workers=1, stats=None):
    """Tally rejection rates for every grid point and method of ``plan``.

    Rows come out in grid order (d, param, n) then method order, and are
    deterministic given the plan. If ``stats`` is a dict it receives
    ``wall_seconds`` and ``trial_seconds`` (sum of per-trial times).
    """
    t_wall = time.perf_counter()
    points = plan.grid_points()
    jobs = []
    chunk = max(1, plan.trials // max(1, 4 * workers))
    for d, param, n in points:
        for start in range(0, plan.trials, chunk):
            jobs.append((plan, d, param, n, range(start, min(plan.trials, start + chunk))))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            chunks = list(pool.map(_run_chunk, jobs))
    else:
        chunks = [_run_chunk(job) for job in jobs]

    per_point = {}
    for job, res in zip(jobs, chunks):
        per_point.setdefault(job[1:4], []).extend(res)

    rows = []
    trial_seconds = 0.0
    for d, param, n in points:
        results = per_point[(d, param, n)]
        trial_seconds += sum(total for _, total in results)
        for method in plan.methods:
            rejections = sum(r[method][0] for r, _ in results)
            seconds = sum(r[method][1] for r, _ in results) / len(results)
            rows.append(ResultRow(plan.scenario, method, n, d, param, rejections / plan.trials,
                                  plan.trials, seconds if plan.record_timing else 0.0,
                                  plan.seed, rejections))
            log.info("%s %s n=%d d=%d param=%g: %d/%d", plan.scenario, method, n, d, param,
                     rejections, plan.trials)
    if stats is not None:
        stats["wall_seconds"] = time.perf_counter() - t_wall
        stats["trial_seconds"] = trial_seconds
    return rows


# --- I/O --------------------------------------------------------------------------


def _g6(v):
    return f"{v:.6g}"


def emit_results(rows, path):
    """Write result rows as CSV with 6 significant digits."""
    if not rows:
        raise ValueError("no rows to write")
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(HEADER)
        for r in rows:
            w.writerow([r.scenario, r.method, r.n, r.d, _g6(r.param), _g6(r.rejection_rate),
                        r.trials, _g6(r.mean_runtime_seconds), r.seed])


def read_results(path):
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


def ingest_csv(path):
    """Read unit vectors, one per line; ``#`` lines are headers/comments.

    Rows within 1e-6 of unit norm are renormalized, others raise ``NormError``.
    """
    vectors = []
    d = None
    with open(path, encoding="utf-8") as fh:
        for row, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            try:
                v = np.array([float(tok) for tok in line.split(",")])
            except ValueError:
                raise FormatError(f"not a list of reals: {line!r}", row) from None
            if d is None:
                d = v.size
                if d < 2:
                    raise FormatError("vectors need at least two components", row)
            elif v.size != d:
                raise FormatError(f"expected {d} components, got {v.size}", row)
            if not np.all(np.isfinite(v)):
                raise FormatError("non-finite component", row)
            norm = float(np.linalg.norm(v))
            if abs(norm - 1.0) > NORM_TOL:
                raise NormError(row, abs(norm - 1.0))
            vectors.append(v / norm)
    if not vectors:
        raise FormatError("no data rows")
    return np.array(vectors)


def write_samples(x, path, header=None):
    with open(path, "w", encoding="utf-8") as fh:
        if header:
            fh.write(f"# {header}\n")
        for row in np.asarray(x):
            fh.write(",".join(repr(float(v)) for v in row) + "\n")

