"""Pricing oracles: discretized lognormal markets, bounded payoffs and their amplitudes.

A pricing problem is reduced to a single amplitude ``a`` in [0, 1] together with a
``value_scale`` so that the quantity of interest is ``V = a * value_scale``.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import norm

DEFAULT_TRUNC_SIGMAS = 8.0
MIN_GRID_BITS = 2
MAX_GRID_BITS = 24


class OracleError(ValueError):
    """Invalid market or payoff parameters."""


@dataclass(frozen=True)
class MarketModel:
    """Terminal-price distribution on a grid of ``2**grid_bits`` log-uniform prices."""

    spot: float
    rate: float
    vol: float
    maturity: float
    grid_bits: int
    trunc_sigmas: float
    prices: np.ndarray = field(repr=False, compare=False)
    probabilities: np.ndarray = field(repr=False, compare=False)

    @property
    def size(self) -> int:
        return 1 << self.grid_bits

    def mean_price(self) -> float:
        return float(self.probabilities @ self.prices)


def discretize_lognormal(
    spot: float,
    rate: float,
    vol: float,
    maturity: float,
    grid_bits: int,
    trunc_sigmas: float = DEFAULT_TRUNC_SIGMAS,
) -> MarketModel:
    """Discretize the risk-neutral terminal price of a geometric Brownian motion.

    Log-prices are spaced uniformly over ``mean +/- trunc_sigmas * stdev`` and each
    point is weighted by the Gaussian density of the log-price there; weights are
    renormalized to sum to one.
    """
    if not (vol > 0 and math.isfinite(vol)):
        raise OracleError(f"vol must be positive, got {vol}")
    if not (maturity > 0 and math.isfinite(maturity)):
        raise OracleError(f"maturity must be positive, got {maturity}")
    if not spot > 0:
        raise OracleError(f"spot must be positive, got {spot}")
    if not trunc_sigmas > 0:
        raise OracleError(f"trunc_sigmas must be positive, got {trunc_sigmas}")
    if int(grid_bits) != grid_bits or not MIN_GRID_BITS <= grid_bits <= MAX_GRID_BITS:
        raise OracleError(
            f"grid_bits must be an integer in [{MIN_GRID_BITS}, {MAX_GRID_BITS}], got {grid_bits}"
        )
    grid_bits = int(grid_bits)

    stdev = vol * math.sqrt(maturity)
    mean = math.log(spot) + (rate - 0.5 * vol * vol) * maturity
    z = np.linspace(-trunc_sigmas, trunc_sigmas, 1 << grid_bits)
    prices = np.exp(mean + stdev * z)
    weights = norm.pdf(z)
    probabilities = weights / weights.sum()
    prices.setflags(write=False)
    probabilities.setflags(write=False)
    return MarketModel(
        spot=float(spot),
        rate=float(rate),
        vol=float(vol),
        maturity=float(maturity),
        grid_bits=grid_bits,
        trunc_sigmas=float(trunc_sigmas),
        prices=prices,
        probabilities=probabilities,
    )


@dataclass(frozen=True)
class EuropeanCall:
    strike: float

    def values(self, prices: np.ndarray) -> np.ndarray:
        return np.maximum(prices - self.strike, 0.0)


@dataclass(frozen=True)
class BoundedTable:
    """Arbitrary non-negative payoff given point by point on the grid."""

    table: tuple[float, ...]

    def values(self, prices: np.ndarray) -> np.ndarray:
        out = np.asarray(self.table, dtype=float)
        if out.shape != prices.shape:
            raise OracleError(
                f"payoff table has {out.size} entries but the grid has {prices.size} points"
            )
        return out


@dataclass(frozen=True)
class Payoff:
    kind: EuropeanCall | BoundedTable
    cap: float

    def normalized(self, prices: np.ndarray) -> np.ndarray:
        return np.minimum(self.kind.values(prices), self.cap) / self.cap


def european_call(strike: float, model: MarketModel, cap: float | None = None) -> Payoff:
    """Call payoff; the cap defaults to the largest in-grid payoff (at least one price unit)."""
    if strike < 0:
        raise OracleError(f"strike must be non-negative, got {strike}")
    if cap is None:
        cap = max(float(model.prices[-1]) - strike, 1.0)
    if not cap > 0:
        raise OracleError(f"cap must be positive, got {cap}")
    return Payoff(EuropeanCall(float(strike)), float(cap))


def bounded_table(values, cap: float | None = None) -> Payoff:
    table = tuple(float(v) for v in values)
    if any(v < 0 or not math.isfinite(v) for v in table):
        raise OracleError("payoff table entries must be finite and non-negative")
    if cap is None:
        cap = max(max(table, default=0.0), 1.0)
    if not cap > 0:
        raise OracleError(f"cap must be positive, got {cap}")
    return Payoff(BoundedTable(table), float(cap))


@dataclass(frozen=True)
class DirectAmplitude:
    a: float


@dataclass(frozen=True)
class Market:
    model: MarketModel
    payoff: Payoff


@dataclass(frozen=True)
class OracleSpec:
    source: DirectAmplitude | Market
    amplitude: float
    value_scale: float

    @classmethod
    def direct(cls, a: float, value_scale: float = 1.0) -> OracleSpec:
        if not 0.0 <= a <= 1.0:
            raise OracleError(f"amplitude must lie in [0, 1], got {a}")
        if not value_scale > 0:
            raise OracleError(f"value_scale must be positive, got {value_scale}")
        return cls(DirectAmplitude(float(a)), float(a), float(value_scale))

    @classmethod
    def market(cls, model: MarketModel, payoff: Payoff) -> OracleSpec:
        source = Market(model, payoff)
        return cls(source, _market_amplitude(source), payoff.cap)

    @property
    def theta(self) -> float:
        return math.asin(math.sqrt(self.amplitude))

    @property
    def value(self) -> float:
        return self.amplitude * self.value_scale


def _market_amplitude(source: Market) -> float:
    f_hat = source.payoff.normalized(source.model.prices)
    a = float(source.model.probabilities @ f_hat)
    return min(max(a, 0.0), 1.0)


def amplitude_of(oracle: OracleSpec) -> float:
    if isinstance(oracle.source, DirectAmplitude):
        return oracle.source.a
    return _market_amplitude(oracle.source)


def black_scholes_call(spot: float, strike: float, rate: float, vol: float, maturity: float) -> float:
    if not vol > 0:
        raise OracleError(f"vol must be positive, got {vol}")
    if not maturity > 0:
        raise OracleError(f"maturity must be positive, got {maturity}")
    if strike < 0:
        raise OracleError(f"strike must be non-negative, got {strike}")
    if not spot > 0:
        raise OracleError(f"spot must be positive, got {spot}")
    discount = math.exp(-rate * maturity)
    if strike == 0:
        return float(spot)
    sd = vol * math.sqrt(maturity)
    d1 = (math.log(spot / strike) + (rate + 0.5 * vol * vol) * maturity) / sd
    d2 = d1 - sd
    return float(spot * norm.cdf(d1) - strike * discount * norm.cdf(d2))


def split_market_oracle(oracle: OracleSpec, parts: int) -> tuple[list[OracleSpec], list[float]]:
    """Split a market oracle into ``parts`` strata of equal probability mass.

    Strata are consecutive quantile slices of the terminal distribution; a grid
    point straddling a quantile boundary contributes fractionally to both sides.
    Each stratum is normalized by its own largest payoff, so stratum amplitudes
    are larger and their value scales smaller than the parent's. The weighted
    sum of stratum values reproduces the parent value exactly.
    """
    if not isinstance(oracle.source, Market):
        raise OracleError("only market oracles can be split")
    if parts < 1:
        raise OracleError(f"parts must be >= 1, got {parts}")
    model, payoff = oracle.source.model, oracle.source.payoff
    probs = np.asarray(model.probabilities)
    payoffs = np.minimum(payoff.kind.values(model.prices), payoff.cap)
    upper = np.cumsum(probs)
    upper[-1] = 1.0
    lower = upper - probs

    buckets: list[OracleSpec] = []
    for j in range(parts):
        lo, hi = j / parts, (j + 1) / parts
        mass = np.clip(np.minimum(upper, hi) - np.maximum(lower, lo), 0.0, None)
        inside = mass > 0
        cond = mass / mass.sum()
        cap = float(payoffs[inside].max()) if inside.any() else 0.0
        if cap <= 0.0:
            buckets.append(OracleSpec.direct(0.0))
            continue
        a = float(cond @ payoffs) / cap
        buckets.append(OracleSpec.direct(min(max(a, 0.0), 1.0), value_scale=cap))
    return buckets, [1.0 / parts] * parts


def grid_csv(oracle: OracleSpec) -> str:
    """CSV dump of the grid with columns ``price,probability,payoff_normalized``."""
    if not isinstance(oracle.source, Market):
        raise OracleError("grid dump requires a market oracle")
    model, payoff = oracle.source.model, oracle.source.payoff
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["price", "probability", "payoff_normalized"])
    for row in zip(model.prices, model.probabilities, payoff.normalized(model.prices)):
        writer.writerow([repr(float(v)) for v in row])
    return buf.getvalue()
