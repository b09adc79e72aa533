"""Experiment harness: single runs, (solver x ell x trial) sweeps and
timing benchmarks, written out as CSV rows."""
from __future__ import annotations

import csv
import logging
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from typing import Iterable, Optional, Sequence

import numpy as np

from .baselines import SKETCHERS, make_sketcher
from .datagen import Dataset, SyntheticSpec, gen_synthetic
from .linalg import InvalidInput
from .ridge import GramAccumulator, coef_error, pred_error, solve_exact

log = logging.getLogger(__name__)

__all__ = [
    "ExperimentRecord",
    "SweepConfig",
    "derive_seed",
    "run_one",
    "run_sweep",
    "run_bench",
    "write_records",
    "RECORD_COLUMNS",
    "BENCH_COLUMNS",
]


@dataclass
class ExperimentRecord:
    dataset_id: str
    solver: str
    ell: int
    gamma: float
    seed: Optional[int]
    trial: object  # int, or "mean" for aggregate rows
    coef_error: float = float("nan")
    pred_error: float = float("nan")
    train_time_s: float = float("nan")
    query_time_s: float = float("nan")
    n: int = 0
    d: int = 0
    sim_time_s: float = float("nan")
    error: str = ""


RECORD_COLUMNS = [f.name for f in fields(ExperimentRecord)]


@dataclass
class SweepConfig:
    solvers: Sequence[str]
    ells: Sequence[int]
    gamma: float
    trials: int = 10
    base_seed: int = 0
    dataset_id: str = "dataset"

    def __post_init__(self):
        if any(int(e) < 2 for e in self.ells):
            raise InvalidInput("ell values must be >= 2")
        if self.trials < 1:
            raise InvalidInput("trials must be >= 1")
        bad = [s for s in self.solvers if s not in SKETCHERS]
        if bad:
            raise InvalidInput(f"unknown solvers {bad}; choose from {', '.join(SKETCHERS)}")


def derive_seed(base_seed: int, trial: int, solver: str) -> int:
    """Independent 63-bit seed per (trial, solver) pair."""
    tag = SKETCHERS.index(solver)
    ss = np.random.SeedSequence([int(base_seed), int(trial), tag])
    return int(ss.generate_state(1, dtype=np.uint64)[0] >> np.uint64(1))


def worker_count() -> int:
    try:
        return max(1, int(os.environ.get("FDRIDGE_THREADS", "1")))
    except ValueError:
        return 1


def reference_solution(data: Dataset, gamma: float) -> np.ndarray:
    acc = GramAccumulator(data.d).push_batch(data.A_train, data.b_train)
    return solve_exact(acc, gamma).x


def _train_and_query(data: Dataset, solver: str, ell: int, gamma: float, seed: Optional[int]):
    sk = make_sketcher(solver, ell, data.d, seed)
    t0 = time.perf_counter()
    sk.push_batch(data.A_train, data.b_train)
    sk.flush()
    t1 = time.perf_counter()
    sol = sk.solve(gamma)
    t2 = time.perf_counter()
    return sol, t1 - t0, t2 - t1


def run_one(data: Dataset, solver: str, ell: int, gamma: float, seed: Optional[int] = None,
            trial: object = 0, dataset_id: str = "dataset",
            x_ref: Optional[np.ndarray] = None) -> ExperimentRecord:
    """Train one sketcher on the training rows, query it, and score it
    against the exact ridge solution."""
    if solver not in SKETCHERS:
        raise InvalidInput(f"unknown solver {solver!r}; choose from {', '.join(SKETCHERS)}")
    sol, t_train, t_query = _train_and_query(data, solver, ell, gamma, seed)
    if x_ref is None:
        x_ref = sol.x if solver == "rr" else reference_solution(data, gamma)
    rec = ExperimentRecord(dataset_id, solver, int(ell), float(gamma), seed, trial, n=data.n, d=data.d)
    rec.coef_error = coef_error(sol.x, x_ref)
    if data.A_test.shape[0]:
        rec.pred_error = pred_error(data.A_test, data.b_test, sol.x)
    rec.train_time_s = t_train
    rec.query_time_s = t_query
    rec.sim_time_s = t_train + t_query * data.n / ell
    return rec


def _mean_row(rows: list[ExperimentRecord]) -> ExperimentRecord:
    ok = [r for r in rows if not r.error]
    first = rows[0]
    out = ExperimentRecord(first.dataset_id, first.solver, first.ell, first.gamma, None, "mean",
                           n=first.n, d=first.d)
    if not ok:
        out.error = "all trials failed"
        return out
    for name in ("coef_error", "pred_error", "train_time_s", "query_time_s", "sim_time_s"):
        setattr(out, name, float(np.mean([getattr(r, name) for r in ok])))
    if len(ok) < len(rows):
        out.error = f"{len(rows) - len(ok)} failed trials excluded"
    return out


def run_sweep(data: Dataset, config: SweepConfig,
              workers: Optional[int] = None) -> list[ExperimentRecord]:
    """Full factorial sweep followed by one mean row per (solver, ell).

    Failures are recorded in the row's ``error`` column and the sweep
    continues.  ``workers > 1`` runs cells concurrently, which skews the
    timing columns; the default (from ``FDRIDGE_THREADS``) is serial.
    """
    x_ref = reference_solution(data, config.gamma)
    cells = [(s, int(e), t) for s in config.solvers for e in config.ells for t in range(config.trials)]

    def one(cell):
        solver, ell, trial = cell
        seed = derive_seed(config.base_seed, trial, solver)
        try:
            return run_one(data, solver, ell, config.gamma, seed, trial, config.dataset_id, x_ref)
        except Exception as exc:  # recorded per row, sweep continues
            log.warning("cell %s failed: %s", cell, exc)
            rec = ExperimentRecord(config.dataset_id, solver, ell, config.gamma, seed, trial,
                                   n=data.n, d=data.d)
            rec.error = f"{type(exc).__name__}: {exc}"
            return rec

    workers = worker_count() if workers is None else workers
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(one, cells))
    else:
        records = [one(c) for c in cells]
    means = []
    for s in config.solvers:
        for e in config.ells:
            group = [r for r in records if r.solver == s and r.ell == int(e)]
            means.append(_mean_row(group))
    return records + means


def write_records(path, records: Iterable, columns: Sequence[str] = RECORD_COLUMNS) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.DictWriter(fh, fieldnames=list(columns), quoting=csv.QUOTE_MINIMAL)
        w.writeheader()
        for r in records:
            row = asdict(r) if hasattr(r, "__dataclass_fields__") else dict(r)
            w.writerow({k: ("" if row.get(k) is None else row.get(k)) for k in columns})


# --- timing benchmark -------------------------------------------------------

BENCH_COLUMNS = ["solver", "vary", "n", "d", "ell", "train_time_s", "query_time_s", "repeats"]


def _time_query(sk, gamma: float, min_total: float = 0.05) -> float:
    """Per-call solve time, looping fast queries until ``min_total`` seconds."""
    reps, total = 0, 0.0
    while total < min_total:
        t0 = time.perf_counter()
        sk.solve(gamma)
        total += time.perf_counter() - t0
        reps += 1
    return total / reps


def bench_cell(solver: str, n: int, d: int, ell: int, gamma: float = 1.0,
               repeats: int = 3, seed: int = 0, data: Optional[Dataset] = None) -> dict:
    """Median train and query time of one (solver, n, d, ell) cell.

    One warm-up pass runs first and is not measured.
    """
    if data is None:
        data = gen_synthetic(SyntheticSpec(n=n, d=d, rank_fraction=0.5, seed=seed, n_test=0))
    A, b = data.A_train, data.b_train
    train, query = [], []
    for i in range(repeats + 1):
        sk = make_sketcher(solver, ell, d, derive_seed(seed, i, solver))
        t0 = time.perf_counter()
        sk.push_batch(A, b)
        sk.flush()
        t1 = time.perf_counter()
        tq = _time_query(sk, gamma)
        if i == 0:
            continue
        train.append(t1 - t0)
        query.append(tq)
    return {"solver": solver, "n": n, "d": d, "ell": ell,
            "train_time_s": float(np.median(train)), "query_time_s": float(np.median(query)),
            "repeats": repeats}


def run_bench(solvers: Sequence[str], vary: str, values: Sequence[int], n: int, d: int, ell: int,
              gamma: float = 1.0, repeats: int = 3, seed: int = 0) -> list[dict]:
    """Time each solver while one of ``n``, ``d`` or ``ell`` varies.

    Cells run one at a time so they do not contend for cores.
    """
    if vary not in ("n", "d", "ell"):
        raise InvalidInput(f"vary must be one of n, d, ell; got {vary!r}")
    rows = []
    for v in values:
        dims = {"n": n, "d": d, "ell": ell}
        dims[vary] = int(v)
        data = gen_synthetic(SyntheticSpec(n=dims["n"], d=dims["d"], rank_fraction=0.5,
                                           seed=seed, n_test=0))
        for s in solvers:
            row = bench_cell(s, dims["n"], dims["d"], dims["ell"], gamma, repeats, seed, data)
            row["vary"] = vary
            rows.append(row)
    return rows
