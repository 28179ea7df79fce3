"""Flat ``key=value`` run configuration with dotted section prefixes.

Example::

    seed = 7
    oracle.spot = 100
    oracle.strike = 100
    estimator.method = mle
    estimator.K = 9
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

from .estimators import DEFAULT_SHOTS_PER_ROUND
from .oracle import DEFAULT_TRUNC_SIGMAS, OracleSpec, discretize_lognormal, european_call

METHODS = ("classical", "canonical", "mle", "kp", "parallel")

_FLOAT = float


def _int(text: str) -> int:
    return int(text, 0)


def _floats(text: str) -> tuple[float, ...]:
    return tuple(float(t) for t in text.split(",") if t.strip())


def _method(text: str) -> str:
    if text not in METHODS:
        raise ValueError(f"unknown method {text!r}; expected one of {', '.join(METHODS)}")
    return text


def _fmt(text: str) -> str:
    if text not in ("csv", "json"):
        raise ValueError(f"format must be csv or json, got {text!r}")
    return text


KEYS = {
    "seed": _int,
    "oracle.amplitude": _FLOAT,
    "oracle.spot": _FLOAT,
    "oracle.rate": _FLOAT,
    "oracle.vol": _FLOAT,
    "oracle.maturity": _FLOAT,
    "oracle.grid_bits": _int,
    "oracle.trunc_sigmas": _FLOAT,
    "oracle.strike": _FLOAT,
    "oracle.cap": _FLOAT,
    "estimator.method": _method,
    "estimator.n_samples": _int,
    "estimator.m_bits": _int,
    "estimator.shots": _int,
    "estimator.K": _int,
    "estimator.shots_per_round": _int,
    "estimator.epsilon": _FLOAT,
    "estimator.beta": _FLOAT,
    "estimator.noise": _FLOAT,
    "estimator.buckets": _int,
    "hardware.gates_per_sample": _int,
    "hardware.gate_error": _FLOAT,
    "hardware.clock_ratio": _FLOAT,
    "sweep.values": _floats,
    "sweep.betas": _floats,
    "sweep.trials": _int,
    "output.path": str,
    "output.format": _fmt,
}

MARKET_KEYS = ("spot", "rate", "vol", "maturity", "grid_bits", "trunc_sigmas", "strike", "cap")


class ConfigError(ValueError):
    """Malformed or inconsistent configuration."""


@dataclass
class RunConfig:
    values: dict = field(default_factory=dict)

    def get(self, key: str, default=None):
        return self.values.get(key, default)

    def section(self, name: str) -> dict:
        prefix = name + "."
        return {k[len(prefix):]: v for k, v in self.values.items() if k.startswith(prefix)}

    @property
    def seed(self) -> int | None:
        return self.values.get("seed")

    def require_seed(self) -> int:
        if self.seed is None:
            raise ConfigError("seed is required for sampling commands (config 'seed' or --seed)")
        return self.seed

    def oracle(self) -> OracleSpec:
        sec = self.section("oracle")
        market = [k for k in MARKET_KEYS if k in sec]
        if "amplitude" in sec and market:
            raise ConfigError("oracle section mixes oracle.amplitude with market keys " + ", ".join(market))
        if "amplitude" in sec:
            return OracleSpec.direct(sec["amplitude"])
        if not market:
            raise ConfigError("oracle section missing: give oracle.amplitude or market keys")
        missing = [k for k in ("spot", "vol", "maturity", "strike") if k not in sec]
        if missing:
            raise ConfigError("market oracle missing key(s): " + ", ".join("oracle." + k for k in missing))
        model = discretize_lognormal(
            sec["spot"],
            sec.get("rate", 0.0),
            sec["vol"],
            sec["maturity"],
            sec.get("grid_bits", 12),
            sec.get("trunc_sigmas", DEFAULT_TRUNC_SIGMAS),
        )
        return OracleSpec.market(model, european_call(sec["strike"], model, sec.get("cap")))

    @property
    def method(self) -> str:
        return self.values.get("estimator.method", "mle")

    @property
    def shots_per_round(self) -> int:
        return self.values.get("estimator.shots_per_round", DEFAULT_SHOTS_PER_ROUND)


def parse_config(text: str) -> RunConfig:
    values = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key=value, got {raw.strip()!r}")
        key, _, val = (s.strip() for s in line.partition("="))
        if key not in KEYS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in values:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        try:
            values[key] = KEYS[key](val)
        except ValueError as exc:
            raise ConfigError(f"line {lineno}: bad value for {key!r}: {exc}") from None
    return RunConfig(values)


def load_config(path: str | Path) -> RunConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return parse_config(text)
