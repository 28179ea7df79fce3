"""Classical and quantum amplitude estimators with call/depth accounting.

Every estimator is a pure function of (oracle, parameters, seed). Per-entry random
streams are derived from the seed and the entry index, so evaluating schedule
entries in any order or in parallel gives the same record.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .oracle import OracleSpec
from .qae import (
    NOISELESS,
    NoiseModel,
    ScheduleEntry,
    derive_seed,
    dp_da,
    dp_dtheta,
    generator,
    p_one,
    qpe_distribution,
    qpe_estimate_map,
    sample_shots,
)

Z99 = 2.5758293035489004  # two-sided 99% normal quantile
GRID_POINTS = 10_000
GOLDEN_TOL = 1e-12
P_CLAMP = 1e-12
DEFAULT_SHOTS_PER_ROUND = 100
MAX_CANONICAL_BITS = 14

_INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


def robust_ceil(x: float) -> int:
    """Ceiling that ignores floating-point fuzz around integers (``1000**(1/3)``)."""
    r = round(x)
    if abs(x - r) <= 1e-9 * max(1.0, abs(x)):
        return int(r)
    return math.ceil(x)


@dataclass(frozen=True)
class Schedule:
    entries: tuple[ScheduleEntry, ...]

    def __post_init__(self):
        if not self.entries:
            raise ValueError("schedule must contain at least one entry")

    @classmethod
    def of(cls, pairs: Iterable[tuple[int, int]]) -> Schedule:
        return cls(tuple(ScheduleEntry(int(d), int(n)) for d, n in pairs))

    @property
    def total_calls(self) -> int:
        return sum(e.calls for e in self.entries)

    @property
    def max_depth(self) -> int:
        return max(e.depth for e in self.entries)

    @property
    def max_serial_calls(self) -> int:
        return 2 * self.max_depth + 1

    @property
    def depths(self) -> list[int]:
        return [e.depth for e in self.entries]


@dataclass(frozen=True)
class RecordEntry:
    depth: int
    shots: int
    hits: int

    def __post_init__(self):
        if not 0 <= self.hits <= self.shots:
            raise ValueError(f"hits must lie in [0, shots], got {self.hits}/{self.shots}")


@dataclass(frozen=True)
class MeasurementRecord:
    entries: tuple[RecordEntry, ...]

    @property
    def total_calls(self) -> int:
        return sum(e.shots * (2 * e.depth + 1) for e in self.entries)

    @property
    def max_depth(self) -> int:
        return max(e.depth for e in self.entries)

    def pooled(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(depths, shots, hits) summed per distinct depth; sufficient for the likelihood."""
        acc: dict[int, list[int]] = {}
        for e in self.entries:
            slot = acc.setdefault(e.depth, [0, 0])
            slot[0] += e.shots
            slot[1] += e.hits
        depths = np.array(sorted(acc), dtype=np.int64)
        shots = np.array([acc[d][0] for d in depths], dtype=float)
        hits = np.array([acc[d][1] for d in depths], dtype=float)
        return depths, shots, hits

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["depth", "shots", "hits"])
        for e in self.entries:
            writer.writerow([e.depth, e.shots, e.hits])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> MeasurementRecord:
        rows = csv.DictReader(io.StringIO(text))
        if rows.fieldnames != ["depth", "shots", "hits"]:
            raise ValueError(f"expected header depth,shots,hits, got {rows.fieldnames}")
        return cls(tuple(RecordEntry(int(r["depth"]), int(r["shots"]), int(r["hits"])) for r in rows))


@dataclass(frozen=True)
class EstimateReport:
    """Amplitude estimate with a nominal 99% interval and oracle-call accounting.

    ``max_serial_depth`` counts oracle calls in the deepest circuit (``2 m + 1``).
    Values in price units are ``a_hat * value_scale``.
    """

    a_hat: float
    theta_hat: float
    ci_low: float
    ci_high: float
    total_oracle_calls: int
    max_serial_depth: int
    method: str
    value_scale: float = 1.0

    @property
    def value(self) -> float:
        return self.a_hat * self.value_scale

    @property
    def value_ci(self) -> tuple[float, float]:
        return self.ci_low * self.value_scale, self.ci_high * self.value_scale

    @property
    def half_width(self) -> float:
        return 0.5 * (self.ci_high - self.ci_low)


def _clamp01(x: float) -> float:
    return min(max(float(x), 0.0), 1.0)


def _amp_to_theta(a: float) -> float:
    return math.asin(math.sqrt(_clamp01(a)))


# ---------------------------------------------------------------- schedules


def build_exp_schedule(max_depth_exponent: int, shots_per_round: int = DEFAULT_SHOTS_PER_ROUND) -> Schedule:
    """Depths 0, 1, 2, 4, ..., 2**(K-1), each run ``shots_per_round`` times."""
    if max_depth_exponent < 0:
        raise ValueError(f"max_depth_exponent must be >= 0, got {max_depth_exponent}")
    depths = [0] + [1 << j for j in range(max_depth_exponent)]
    return Schedule.of((d, shots_per_round) for d in depths)


def exp_exponent_for_accuracy(epsilon: float) -> int:
    """Exponent K whose exponential schedule reaches Grover depth of order ``1/epsilon``."""
    if not 0 < epsilon < 1:
        raise ValueError(f"epsilon must lie in (0, 1), got {epsilon}")
    return max(0, robust_ceil(math.log2(1.0 / epsilon)))


def kp_depth_cap(epsilon: float, beta: float) -> int:
    """Largest Grover depth used for target accuracy ``epsilon`` at interpolation ``beta``."""
    _check_kp(epsilon, beta)
    if beta == 1:
        return 0
    return robust_ceil((1.0 / epsilon) ** (1.0 - beta))


def kp_call_target(epsilon: float, beta: float) -> int:
    _check_kp(epsilon, beta)
    return robust_ceil((1.0 / epsilon) ** (1.0 + beta))


def _check_kp(epsilon: float, beta: float) -> None:
    if not 0.0 <= beta <= 1.0:
        raise ValueError(f"beta must lie in [0, 1], got {beta}")
    if not 0.0 < epsilon < 0.5:
        raise ValueError(f"epsilon must lie in (0, 0.5), got {epsilon}")


def _kp_ramp(cap: int) -> list[int]:
    ramp = [0]
    d = 1
    while d < cap:
        ramp.append(d)
        d *= 2
    if cap > 0:
        ramp.append(cap)
    return ramp


def build_kp_schedule(
    epsilon: float, beta: float, shots_per_round: int = DEFAULT_SHOTS_PER_ROUND
) -> Schedule:
    """Exponential ramp capped at ``kp_depth_cap``, then repeats at the cap.

    Ramp rounds below the cap are kept only while they stay under
    ``kp_call_target``, so at least one round always runs at the cap. Cap rounds
    repeat until the call count reaches the target.
    """
    cap = kp_depth_cap(epsilon, beta)
    target = kp_call_target(epsilon, beta)
    if shots_per_round < 1:
        raise ValueError(f"shots_per_round must be >= 1, got {shots_per_round}")
    pairs, total = [], 0
    for depth in _kp_ramp(cap)[:-1]:
        cost = shots_per_round * (2 * depth + 1)
        if total + cost >= target:
            break
        pairs.append((depth, shots_per_round))
        total += cost
    while total < target:
        pairs.append((cap, shots_per_round))
        total += shots_per_round * (2 * cap + 1)
    return Schedule.of(pairs)


KP_MIN_SHOTS_PER_ROUND = 20


def kp_shots_per_round(epsilon: float, beta: float) -> int:
    """Round size giving one ramp pass about half of the call budget.

    Clamped to [20, 100]: fewer shots per round make the likelihood alias between
    neighbouring peaks, more push the ramp past the budget before it reaches the cap.
    """
    ramp_calls = sum(2 * d + 1 for d in _kp_ramp(kp_depth_cap(epsilon, beta)))
    target = kp_call_target(epsilon, beta)
    return int(min(DEFAULT_SHOTS_PER_ROUND, max(KP_MIN_SHOTS_PER_ROUND, target // (2 * ramp_calls))))


# ------------------------------------------------------------ measurement


def _entry_hits(args) -> int:
    theta, entry, noise, seed, index = args
    return sample_shots(theta, entry.depth, entry.shots, noise, derive_seed(seed, index))


def run_schedule(
    oracle: OracleSpec,
    schedule: Schedule,
    noise: NoiseModel = NOISELESS,
    rng_seed=0,
    executor=None,
) -> MeasurementRecord:
    """Sample every schedule entry; entry ``i`` draws from the stream keyed by ``i``.

    ``executor`` may be any object with a ``map`` method (e.g. a process pool).
    """
    theta = oracle.theta
    jobs = [(theta, e, noise, rng_seed, i) for i, e in enumerate(schedule.entries)]
    mapper = map if executor is None else executor.map
    hits = list(mapper(_entry_hits, jobs))
    return MeasurementRecord(
        tuple(RecordEntry(e.depth, e.shots, h) for e, h in zip(schedule.entries, hits))
    )


# ------------------------------------------------------------ likelihood


def log_likelihood(theta, record: MeasurementRecord, noise: NoiseModel = NOISELESS):
    """Binomial log-likelihood of ``record``; ``theta`` may be an array."""
    depths, shots, hits = record.pooled()
    th = np.atleast_1d(np.asarray(theta, dtype=float))
    p = p_one(th[None, :], depths[:, None], noise)
    p = np.clip(p, P_CLAMP, 1.0 - P_CLAMP)
    ll = hits[:, None] * np.log(p) + (shots - hits)[:, None] * np.log1p(-p)
    out = ll.sum(axis=0)
    return out if np.ndim(theta) else float(out[0])


def _golden_max(f, lo: float, hi: float, tol: float = GOLDEN_TOL) -> float:
    c = hi - _INV_PHI * (hi - lo)
    d = lo + _INV_PHI * (hi - lo)
    fc, fd = f(c), f(d)
    while hi - lo > tol:
        if fc >= fd:
            hi, d, fd = d, c, fc
            c = hi - _INV_PHI * (hi - lo)
            fc = f(c)
        else:
            lo, c, fc = c, d, fd
            d = lo + _INV_PHI * (hi - lo)
            fd = f(d)
    return 0.5 * (lo + hi)


def mle_fit(record: MeasurementRecord, noise: NoiseModel = NOISELESS) -> float:
    """Maximum-likelihood angle in [0, pi/2] for ``record``.

    A dense grid locates the global peak, golden-section search refines it. Records
    made only of depth-0 rounds are solved in closed form (the likelihood is then
    monotone in ``p`` and peaks at the pooled hit rate).
    """
    if not record.entries:
        raise ValueError("record must not be empty")
    depths, shots, hits = record.pooled()
    if depths.max() == 0:
        lam = noise.survival(1)
        if lam == 0.0:
            return 0.0
        rate = hits.sum() / shots.sum()
        return _amp_to_theta((rate - 0.5 * (1.0 - lam)) / lam)

    grid = np.linspace(0.0, 0.5 * math.pi, GRID_POINTS)
    values = log_likelihood(grid, record, noise)
    i = int(np.argmax(values))
    lo, hi = grid[max(i - 1, 0)], grid[min(i + 1, GRID_POINTS - 1)]
    best = _golden_max(lambda t: log_likelihood(t, record, noise), lo, hi)
    # degenerate records peak on the boundary; prefer it on ties
    for edge in (0.0, 0.5 * math.pi):
        if lo <= edge <= hi and log_likelihood(edge, record, noise) >= log_likelihood(best, record, noise):
            best = edge
    return float(best)


def observed_information(theta: float, record: MeasurementRecord, noise: NoiseModel = NOISELESS) -> float:
    """Negative second derivative of the log-likelihood in ``theta``."""
    depths, shots, hits = record.pooled()
    calls = 2 * depths + 1
    lam = noise.survival(calls)
    p = np.clip(p_one(theta, depths, noise), P_CLAMP, 1.0 - P_CLAMP)
    d1 = lam * calls * np.sin(2.0 * calls * theta)
    d2 = 2.0 * lam * calls**2 * np.cos(2.0 * calls * theta)
    misses = shots - hits
    second = d2 * (hits / p - misses / (1.0 - p)) - d1**2 * (hits / p**2 + misses / (1.0 - p) ** 2)
    return float(-second.sum())


def expected_information(theta: float, schedule: Schedule | MeasurementRecord, noise: NoiseModel = NOISELESS) -> float:
    """Fisher information about ``theta`` carried by the schedule."""
    depths = np.array([e.depth for e in schedule.entries])
    shots = np.array([e.shots for e in schedule.entries], dtype=float)
    p = np.clip(p_one(theta, depths, noise), P_CLAMP, 1.0 - P_CLAMP)
    d1 = dp_dtheta(theta, depths, noise)
    return float(np.sum(shots * d1**2 / (p * (1.0 - p))))


def fisher_bound(schedule: Schedule, theta: float, noise: NoiseModel = NOISELESS) -> float:
    """Cramer-Rao lower bound on the standard deviation of an unbiased amplitude estimate."""
    depths = np.array([e.depth for e in schedule.entries])
    shots = np.array([e.shots for e in schedule.entries], dtype=float)
    p = np.asarray(p_one(theta, depths, noise), dtype=float)
    slope = np.asarray(dp_da(theta, depths, noise), dtype=float)
    var = p * (1.0 - p)
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(slope == 0.0, 0.0, shots * slope**2 / var)
    info = float(np.sum(terms))
    if info == 0.0:
        return math.inf
    return 1.0 / math.sqrt(info)


# ------------------------------------------------------------ estimators


def _mle_report(theta: float, record: MeasurementRecord, noise: NoiseModel, method: str, value_scale: float) -> EstimateReport:
    a_hat = math.sin(theta) ** 2
    info = observed_information(theta, record, noise)
    if not (info > 0 and math.isfinite(info)):
        info = expected_information(theta, record, noise)
    if info > 0 and math.isfinite(info):
        half = Z99 * abs(math.sin(2.0 * theta)) / math.sqrt(info)
        lo, hi = _clamp01(a_hat - half), _clamp01(a_hat + half)
    else:
        lo, hi = 0.0, 1.0
    return EstimateReport(
        a_hat=a_hat,
        theta_hat=theta,
        ci_low=min(lo, a_hat),
        ci_high=max(hi, a_hat),
        total_oracle_calls=record.total_calls,
        max_serial_depth=2 * record.max_depth + 1,
        method=method,
        value_scale=value_scale,
    )


def classical_fit(record: MeasurementRecord) -> float:
    """Sample mean of a depth-0 record."""
    depths, shots, hits = record.pooled()
    if depths.max() != 0:
        raise ValueError("classical_fit needs a record made only of depth-0 rounds")
    return float(hits.sum() / shots.sum())


def classical_mc(oracle: OracleSpec, n_samples: int, rng_seed=0) -> EstimateReport:
    """Empirical mean of ``n_samples`` direct oracle samples with a normal 99% interval."""
    if n_samples < 1:
        raise ValueError(f"n_samples must be >= 1, got {n_samples}")
    record = run_schedule(oracle, Schedule.of([(0, n_samples)]), NOISELESS, rng_seed)
    a_hat = classical_fit(record)
    half = Z99 * math.sqrt(a_hat * (1.0 - a_hat)) / math.sqrt(n_samples)
    return EstimateReport(
        a_hat=a_hat,
        theta_hat=_amp_to_theta(a_hat),
        ci_low=_clamp01(a_hat - half),
        ci_high=_clamp01(a_hat + half),
        total_oracle_calls=n_samples,
        max_serial_depth=1,
        method="classical",
        value_scale=oracle.value_scale,
    )


def brassard_half_width(a: float, m_bits: int) -> float:
    size = 1 << m_bits
    return 2.0 * math.pi * math.sqrt(a * (1.0 - a)) / size + math.pi**2 / size**2


def canonical_qae(oracle: OracleSpec, m_bits: int, shots: int = 1, rng_seed=0) -> EstimateReport:
    """Phase-estimation amplitude estimation; the median of ``shots`` decoded outcomes."""
    if int(m_bits) != m_bits or not 1 <= m_bits <= MAX_CANONICAL_BITS:
        raise ValueError(f"m_bits must be an integer in [1, {MAX_CANONICAL_BITS}], got {m_bits}")
    if shots < 1:
        raise ValueError(f"shots must be >= 1, got {shots}")
    m_bits = int(m_bits)
    dist = qpe_distribution(oracle.theta, m_bits)
    outcomes = generator(derive_seed(rng_seed, 0)).choice(dist.size, size=shots, p=dist / dist.sum())
    a_hat = float(np.median(qpe_estimate_map(outcomes, m_bits)))
    b = brassard_half_width(a_hat, m_bits)
    serial = 2 * ((1 << m_bits) - 1) + 1
    return EstimateReport(
        a_hat=a_hat,
        theta_hat=_amp_to_theta(a_hat),
        ci_low=_clamp01(a_hat - b),
        ci_high=_clamp01(a_hat + b),
        total_oracle_calls=shots * serial,
        max_serial_depth=serial,
        method="canonical",
        value_scale=oracle.value_scale,
    )


def mle_qae(
    oracle: OracleSpec,
    schedule: Schedule,
    noise: NoiseModel = NOISELESS,
    rng_seed=0,
    executor=None,
) -> EstimateReport:
    """QFT-free amplitude estimation: run the schedule, fit by maximum likelihood."""
    record = run_schedule(oracle, schedule, noise, rng_seed, executor)
    return _mle_report(mle_fit(record, noise), record, noise, "mle", oracle.value_scale)


def kp_estimate(
    oracle: OracleSpec,
    epsilon: float,
    beta: float,
    noise: NoiseModel = NOISELESS,
    rng_seed=0,
    shots_per_round: int | None = None,
) -> EstimateReport:
    """Depth-limited estimation interpolating between classical sampling and full QAE.

    Without an explicit ``shots_per_round`` the round size comes from
    :func:`kp_shots_per_round`.
    """
    if shots_per_round is None:
        shots_per_round = kp_shots_per_round(epsilon, beta)
    schedule = build_kp_schedule(epsilon, beta, shots_per_round)
    report = mle_qae(oracle, schedule, noise, rng_seed)
    return _retag(report, "kp")


def _retag(report: EstimateReport, method: str) -> EstimateReport:
    return EstimateReport(**{**report.__dict__, "method": method})


def parallel_split_estimate(
    bucket_oracles: Sequence[OracleSpec],
    weights: Sequence[float],
    epsilon: float,
    rng_seed=0,
    noise: NoiseModel = NOISELESS,
    shots_per_round: int = DEFAULT_SHOTS_PER_ROUND,
) -> EstimateReport:
    """Estimate each stratum separately at accuracy ``sqrt(p) * epsilon`` and average.

    Bucket ``i`` runs :func:`mle_qae` on an exponential schedule sized for its
    accuracy with the stream keyed by ``i``. The combined value is
    ``sum_i w_i a_i s_i``; the report normalizes it by the largest bucket scale.
    """
    p = len(bucket_oracles)
    if p < 1:
        raise ValueError("need at least one bucket")
    if len(weights) != p:
        raise ValueError(f"got {len(weights)} weights for {p} buckets")
    w = np.asarray(weights, dtype=float)
    if np.any(w < 0) or abs(w.sum() - 1.0) > 1e-9:
        raise ValueError("weights must be non-negative and sum to 1")

    bucket_eps = min(math.sqrt(p) * epsilon, 0.5)
    schedule = build_exp_schedule(exp_exponent_for_accuracy(bucket_eps), shots_per_round)
    reports = [
        mle_qae(o, schedule, noise, derive_seed(rng_seed, i)) for i, o in enumerate(bucket_oracles)
    ]
    scales = np.array([r.value_scale for r in reports])
    values = np.array([r.value for r in reports])
    sigmas = np.array([r.half_width * r.value_scale / Z99 for r in reports])
    scale = float(scales.max())
    value = float(w @ values)
    half = Z99 * math.sqrt(float(np.sum((w * sigmas) ** 2)))
    a_hat = _clamp01(value / scale)
    return EstimateReport(
        a_hat=a_hat,
        theta_hat=_amp_to_theta(a_hat),
        ci_low=_clamp01((value - half) / scale),
        ci_high=_clamp01((value + half) / scale),
        total_oracle_calls=sum(r.total_oracle_calls for r in reports),
        max_serial_depth=max(r.max_serial_depth for r in reports),
        method="parallel_split",
        value_scale=scale,
    )
