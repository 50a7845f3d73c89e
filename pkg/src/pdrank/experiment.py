"""Monte Carlo experiment runner and result emission.

A spec names a generator, a method list, a sweep axis with grid values, and
a trial count.  Every (grid point, trial) pair regenerates data with seed
``base_seed + trial_index`` -- the same seeds across grid points, so sweeps
are paired -- runs each method, and records Kendall tau against the ground
truth, label accuracy, and solver wall time (generation and I/O excluded).
Trial failures are recorded with a flag instead of aborting the sweep.

Results serialize to a long-format CSV and a JSON document embedding the
spec and its hash, so any run can be reproduced exactly.
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .baselines import borda, bt_fit
from .data import ComparisonDataset, scores_to_ranking
from .metrics import kendall_tau, label_accuracy
from .pdhg import PdhgConfig
from .reweight import PDRankConfig, confidence_report, pd_rank
from .simulate import BTGenConfig, ToggleNoiseConfig, generate_bt, generate_toggle

SCHEMA_VERSION = 1
GENERATORS = ("toggle", "bt")
METHODS = ("pdrank", "borda", "bt")
SWEEP_AXES = ("standard_trials", "delta", "num_items", "eps_in")
CSV_FIELDS = ("grid_value", "method", "trial", "seed", "kendall_tau",
              "label_accuracy", "wall_time_s", "outer_iters", "inner_iters",
              "flags")


@dataclass(frozen=True)
class ExperimentSpec:
    """One sweep: generator setting, methods, trials, and a grid axis."""

    generator: str = "toggle"
    num_items: int = 16
    standard_trials: float = 1.0
    delta: float = 0.1
    score_low: float = 1.0
    score_high: float = 5.0
    methods: tuple[str, ...] = ("pdrank", "borda", "bt")
    trials: int = 100
    seed: int = 0
    sweep: str = "standard_trials"
    grid: tuple[float, ...] = (1.0,)
    gamma: float = 0.01
    epsilon: float = 1e-3
    eps_in: float = 0.01
    max_outer_iters: int = 30
    workers: int = 1
    include_confidence: bool = False

    def __post_init__(self):
        if self.generator not in GENERATORS:
            raise ValueError(f"unknown generator {self.generator!r}")
        bad = [m for m in self.methods if m not in METHODS]
        if bad or not self.methods:
            raise ValueError(f"methods must be a nonempty subset of {METHODS}")
        if self.trials < 1:
            raise ValueError("trial count must be at least 1")
        if self.sweep not in SWEEP_AXES:
            raise ValueError(f"unknown sweep axis {self.sweep!r}")
        if not self.grid:
            raise ValueError("grid must be nonempty")
        if self.sweep == "delta" and self.generator != "toggle":
            raise ValueError("delta sweep requires the toggle generator")
        object.__setattr__(self, "methods", tuple(self.methods))
        object.__setattr__(self, "grid", tuple(float(g) for g in self.grid))

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentSpec":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown experiment spec keys: {sorted(unknown)}")
        d = dict(d)
        for key in ("methods", "grid"):
            if key in d:
                d[key] = tuple(d[key])
        return cls(**d)


@dataclass(frozen=True)
class TrialRecord:
    grid_value: float
    method: str
    trial: int
    seed: int
    kendall_tau: float
    label_accuracy: float
    wall_time_s: float
    outer_iters: int
    inner_iters: int
    flags: str = ""
    confidence: list | None = None

    def __post_init__(self):
        if not math.isnan(self.kendall_tau) and not -1.0 <= self.kendall_tau <= 1.0:
            raise ValueError("kendall tau out of [-1, 1]")
        if not math.isnan(self.label_accuracy) and not 0.0 <= self.label_accuracy <= 1.0:
            raise ValueError("label accuracy out of [0, 1]")
        if self.wall_time_s < 0:
            raise ValueError("wall time must be nonnegative")


@dataclass(frozen=True)
class AggregateRecord:
    grid_value: float
    method: str
    n_trials: int
    n_failed: int
    mean_tau: float
    std_tau: float
    mean_accuracy: float
    std_accuracy: float
    mean_time_s: float
    std_time_s: float


@dataclass(frozen=True)
class ExperimentResult:
    spec: ExperimentSpec
    records: tuple[TrialRecord, ...]
    aggregates: tuple[AggregateRecord, ...] = field(default_factory=tuple)


def spec_hash(spec: ExperimentSpec) -> str:
    payload = json.dumps(spec.to_dict(), sort_keys=True).encode("utf-8")
    return hashlib.sha256(payload).hexdigest()


def _generator_config(spec: ExperimentSpec, grid_value: float, seed: int):
    m = spec.num_items
    trials = spec.standard_trials
    delta = spec.delta
    if spec.sweep == "standard_trials":
        trials = grid_value
    elif spec.sweep == "delta":
        delta = grid_value
    elif spec.sweep == "num_items":
        m = int(grid_value)
    if spec.generator == "toggle":
        return ToggleNoiseConfig(num_items=m, delta=delta,
                                 standard_trials=trials, seed=seed)
    return BTGenConfig(num_items=m, score_low=spec.score_low,
                       score_high=spec.score_high, standard_trials=trials,
                       seed=seed)


def _run_method(method: str, dataset: ComparisonDataset, spec: ExperimentSpec,
                eps_in: float):
    """Returns (scores, outer_iters, inner_iters, flags, confidence_or_None)."""
    if method == "pdrank":
        cfg = PDRankConfig(epsilon=spec.epsilon, gamma=spec.gamma,
                           max_outer_iters=spec.max_outer_iters,
                           inner=PdhgConfig(eps_in=eps_in),
                           keep_history=False)
        res = pd_rank(dataset, cfg)
        return res.scores, res.outer_iters, res.inner_iters, "", res
    if method == "borda":
        scores, _ = borda(dataset)
        return scores, 0, 0, "", None
    if method == "bt":
        fit, _ = bt_fit(dataset)
        flags = "bt_regularized" if fit.regularized else ""
        return fit.strengths, 0, fit.iterations, flags, None
    raise ValueError(f"unknown method {method!r}")


def _run_cell(spec: ExperimentSpec, grid_value: float, trial: int) -> list[TrialRecord]:
    seed = spec.seed + trial
    eps_in = grid_value if spec.sweep == "eps_in" else spec.eps_in
    gen_cfg = _generator_config(spec, grid_value, seed)
    if spec.generator == "toggle":
        dataset, truth = generate_toggle(gen_cfg)
    else:
        dataset, truth = generate_bt(gen_cfg)
    records = []
    for method in spec.methods:
        try:
            t0 = time.perf_counter()
            scores, outer, inner, flags, pd_res = _run_method(
                method, dataset, spec, eps_in)
            elapsed = time.perf_counter() - t0
            tau = kendall_tau(truth.true_ranking, scores_to_ranking(scores))
            acc = label_accuracy(scores, dataset, truth.true_scores)
            confidence = None
            if spec.include_confidence and pd_res is not None:
                confidence = confidence_report(pd_res, dataset, truth.true_scores)
            records.append(TrialRecord(grid_value=grid_value, method=method,
                                       trial=trial, seed=seed, kendall_tau=tau,
                                       label_accuracy=acc, wall_time_s=elapsed,
                                       outer_iters=outer, inner_iters=inner,
                                       flags=flags, confidence=confidence))
        except Exception as exc:  # record, do not abort the sweep
            records.append(TrialRecord(grid_value=grid_value, method=method,
                                       trial=trial, seed=seed,
                                       kendall_tau=float("nan"),
                                       label_accuracy=float("nan"),
                                       wall_time_s=0.0, outer_iters=0,
                                       inner_iters=0,
                                       flags=f"error:{type(exc).__name__}"))
    return records


def run_experiment(spec: ExperimentSpec) -> ExperimentResult:
    """Run every (grid point, trial, method) cell and aggregate."""
    cells = [(g, t) for g in spec.grid for t in range(spec.trials)]
    if spec.workers > 1:
        with ThreadPoolExecutor(max_workers=spec.workers) as pool:
            batches = list(pool.map(lambda c: _run_cell(spec, *c), cells))
    else:
        batches = [_run_cell(spec, g, t) for g, t in cells]
    records = [rec for batch in batches for rec in batch]
    records.sort(key=lambda r: (spec.grid.index(r.grid_value),
                                spec.methods.index(r.method), r.trial))
    aggregates = []
    for g in spec.grid:
        for method in spec.methods:
            cell = [r for r in records
                    if r.grid_value == g and r.method == method]
            ok = [r for r in cell if not math.isnan(r.kendall_tau)]
            if ok:
                taus = np.array([r.kendall_tau for r in ok])
                accs = np.array([r.label_accuracy for r in ok])
                times = np.array([r.wall_time_s for r in ok])
                agg = AggregateRecord(
                    grid_value=g, method=method, n_trials=len(cell),
                    n_failed=len(cell) - len(ok),
                    mean_tau=float(taus.mean()), std_tau=float(taus.std()),
                    mean_accuracy=float(accs.mean()), std_accuracy=float(accs.std()),
                    mean_time_s=float(times.mean()), std_time_s=float(times.std()))
            else:
                nan = float("nan")
                agg = AggregateRecord(grid_value=g, method=method,
                                      n_trials=len(cell), n_failed=len(cell),
                                      mean_tau=nan, std_tau=nan,
                                      mean_accuracy=nan, std_accuracy=nan,
                                      mean_time_s=nan, std_time_s=nan)
            aggregates.append(agg)
    return ExperimentResult(spec=spec, records=tuple(records),
                            aggregates=tuple(aggregates))


def emit(result: ExperimentResult, out_dir,
         basename: str = "results") -> dict[str, Path]:
    """Write <basename>.csv (long format) and <basename>.json; returns paths."""
    out_dir = Path(out_dir)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        csv_path = out_dir / f"{basename}.csv"
        json_path = out_dir / f"{basename}.json"
        with open(csv_path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(CSV_FIELDS)
            for r in result.records:
                writer.writerow([repr(r.grid_value), r.method, r.trial, r.seed,
                                 repr(r.kendall_tau), repr(r.label_accuracy),
                                 repr(r.wall_time_s), r.outer_iters,
                                 r.inner_iters, r.flags])
        doc = {
            "schema_version": SCHEMA_VERSION,
            "spec": result.spec.to_dict(),
            "spec_hash": spec_hash(result.spec),
            "records": [_record_dict(r) for r in result.records],
            "aggregates": [asdict(a) for a in result.aggregates],
        }
        with open(json_path, "w", encoding="utf-8") as fh:
            json.dump(doc, fh, indent=2, sort_keys=True)
            fh.write("\n")
    except OSError as exc:
        raise OSError(f"cannot write results under {out_dir}: {exc}") from exc
    return {"csv": csv_path, "json": json_path}


def _record_dict(r: TrialRecord) -> dict:
    d = asdict(r)
    if d.get("confidence") is None:
        d.pop("confidence", None)
    return d


def read_result_csv(path) -> list[dict]:
    """Re-parse an emitted CSV into typed row dicts (round-trip helper)."""
    rows = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != CSV_FIELDS:
            raise ValueError(f"{path}: unexpected result columns {reader.fieldnames}")
        for row in reader:
            rows.append({
                "grid_value": float(row["grid_value"]),
                "method": row["method"],
                "trial": int(row["trial"]),
                "seed": int(row["seed"]),
                "kendall_tau": float(row["kendall_tau"]),
                "label_accuracy": float(row["label_accuracy"]),
                "wall_time_s": float(row["wall_time_s"]),
                "outer_iters": int(row["outer_iters"]),
                "inner_iters": int(row["inner_iters"]),
                "flags": row["flags"],
            })
    return rows
