"""Seeded convergence sweeps.

Trial ``t`` at grid point ``i`` always uses the stream ``derive_seed(seed, i, t)``,
so results do not depend on how trials are distributed over workers.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import estimators as est
from .oracle import OracleSpec
from .qae import NOISELESS, NoiseModel, derive_seed


@dataclass(frozen=True)
class Trial:
    method: str
    oracle: OracleSpec
    param: tuple
    noise: NoiseModel
    shots_per_round: int | None
    seed: object


def run_trial(trial: Trial) -> est.EstimateReport:
    m, p = trial.method, trial.param
    if m == "classical":
        return est.classical_mc(trial.oracle, int(p[0]), trial.seed)
    if m == "canonical":
        return est.canonical_qae(trial.oracle, int(p[0]), int(p[1]), trial.seed)
    if m == "mle":
        schedule = est.build_exp_schedule(int(p[0]), trial.shots_per_round or est.DEFAULT_SHOTS_PER_ROUND)
        return est.mle_qae(trial.oracle, schedule, trial.noise, trial.seed)
    if m == "kp":
        return est.kp_estimate(trial.oracle, p[0], p[1], trial.noise, trial.seed, trial.shots_per_round)
    raise ValueError(f"method {m!r} cannot be swept")


@dataclass(frozen=True)
class SweepRow:
    method: str
    param: str
    total_calls: float
    max_serial_depth: int
    rmse: float
    mean_abs_err: float

    def as_dict(self) -> dict:
        return dict(self.__dict__)


def format_param(method: str, param: tuple) -> str:
    if method == "kp":
        return f"epsilon={param[0]!r};beta={param[1]!r}"
    return ";".join(repr(v) for v in param)


def sweep(
    method: str,
    oracle: OracleSpec,
    params: list[tuple],
    trials: int,
    seed: int,
    noise: NoiseModel = NOISELESS,
    shots_per_round: int | None = None,
    jobs: int = 1,
) -> tuple[list[SweepRow], list[list[est.EstimateReport]]]:
    """Run ``trials`` seeded repetitions per grid point; returns rows and raw reports."""
    if trials < 1:
        raise ValueError(f"trials must be >= 1, got {trials}")
    work = [
        Trial(method, oracle, tuple(p), noise, shots_per_round, derive_seed(seed, i, t))
        for i, p in enumerate(params)
        for t in range(trials)
    ]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            reports = list(pool.map(run_trial, work, chunksize=max(1, len(work) // (4 * jobs))))
    else:
        reports = [run_trial(w) for w in work]

    truth = oracle.value
    rows, grouped = [], []
    for i, p in enumerate(params):
        group = reports[i * trials:(i + 1) * trials]
        errs = np.array([r.value - truth for r in group])
        rows.append(
            SweepRow(
                method=method,
                param=format_param(method, tuple(p)),
                total_calls=float(np.mean([r.total_oracle_calls for r in group])),
                max_serial_depth=max(r.max_serial_depth for r in group),
                rmse=float(math.sqrt(np.mean(errs**2))),
                mean_abs_err=float(np.mean(np.abs(errs))),
            )
        )
        grouped.append(group)
    return rows, grouped


def loglog_slope(x, y) -> float:
    """Least-squares slope of ``log y`` against ``log x``."""
    return float(np.polyfit(np.log(np.asarray(x, float)), np.log(np.asarray(y, float)), 1)[0])
