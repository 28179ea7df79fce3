"""Back-of-the-envelope resource model for depth-limited quantum Monte Carlo.

Covers the per-algorithm qubit/depth/call formulas, the accuracy-vs-depth tradeoff
table, clock-speed erosion of the speedup, and classification of hardware
(gate count, gate error, clock ratio) into speedup regimes.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

DEFAULT_FIDELITY = 0.99

# Printed (epsilon=1e-5, beta=2/3) allowed-error cell reads 1e-5; the formula gives 0.01/93.
KNOWN_DISCREPANCIES = {
    (1e-5, 2 / 3, "allowed_error"): "printed 1e-5 but 0.01/93 = 1.08e-4; formula value emitted",
}


class ResourceError(ValueError):
    pass


def _error_budget(fidelity_target: float) -> float:
    if not 0.0 < fidelity_target < 1.0:
        raise ResourceError(f"fidelity_target must lie in (0, 1), got {fidelity_target}")
    # 1 - 0.99 is 0.010000000000000009 in binary floating point
    return round(1.0 - fidelity_target, 12)


def _check(epsilon: float, beta: float | None = None) -> None:
    if not 0.0 < epsilon <= 1.0:
        raise ResourceError(f"epsilon must lie in (0, 1], got {epsilon}")
    if beta is not None and not 0.0 <= beta <= 1.0:
        raise ResourceError(f"beta must lie in [0, 1], got {beta}")


def classical_samples(epsilon: float) -> float:
    _check(epsilon)
    return 1.0 / epsilon**2


def speedup(epsilon: float, beta: float) -> float:
    _check(epsilon, beta)
    return (1.0 / epsilon) ** (1.0 - beta)


def total_calls(epsilon: float, beta: float) -> float:
    _check(epsilon, beta)
    return (1.0 / epsilon) ** (1.0 + beta)


def serial_samples(epsilon: float, beta: float) -> int:
    """Oracle calls in the deepest circuit: one preparation plus two per Grover iterate.

    The Grover depth is the speedup rounded to the nearest integer.
    """
    return 2 * round(speedup(epsilon, beta)) + 1


def allowed_sample_error(epsilon: float, beta: float, fidelity_target: float = DEFAULT_FIDELITY) -> float:
    return _error_budget(fidelity_target) / serial_samples(epsilon, beta)


def net_speedup(epsilon: float, beta: float, clock_ratio: float) -> float:
    if not clock_ratio >= 1.0:
        raise ResourceError(f"clock_ratio must be >= 1, got {clock_ratio}")
    return speedup(epsilon, beta) / clock_ratio


@dataclass(frozen=True)
class TradeoffPoint:
    epsilon: float
    beta: float
    fidelity_target: float = DEFAULT_FIDELITY

    def __post_init__(self):
        if not 0.0 < self.epsilon < 1.0:
            raise ResourceError(f"epsilon must lie in (0, 1), got {self.epsilon}")
        _check(self.epsilon, self.beta)

    def row(self) -> dict:
        return {
            "epsilon": self.epsilon,
            "beta": self.beta,
            "classical_samples": classical_samples(self.epsilon),
            "serial_samples": serial_samples(self.epsilon, self.beta),
            "allowed_error": allowed_sample_error(self.epsilon, self.beta, self.fidelity_target),
            "speedup": speedup(self.epsilon, self.beta),
        }


def display_round(x: float) -> float:
    """Round the way the published tradeoff table does.

    Values in [1, 100) are shown as integers, everything else with one
    significant figure.
    """
    if x == 0 or not math.isfinite(x):
        return x
    if 1.0 <= abs(x) < 100.0:
        return float(round(x))
    exponent = math.floor(math.log10(abs(x)))
    mantissa = round(x / 10.0**exponent)
    return float(f"{mantissa}e{exponent}")


@dataclass(frozen=True)
class HardwareProfile:
    gates_per_sample: int
    gate_error: float
    clock_ratio: float = 1.0

    def __post_init__(self):
        if self.gates_per_sample < 1:
            raise ResourceError(f"gates_per_sample must be >= 1, got {self.gates_per_sample}")
        if not 0.0 <= self.gate_error <= 1.0:
            raise ResourceError(f"gate_error must lie in [0, 1], got {self.gate_error}")
        if not self.clock_ratio >= 1.0:
            raise ResourceError(f"clock_ratio must be >= 1, got {self.clock_ratio}")

    @property
    def sample_error(self) -> float:
        return self.gates_per_sample * self.gate_error


class RegimeTag(str, enum.Enum):
    INFEASIBLE = "Infeasible"
    SLOWDOWN = "Slowdown"
    PARTIAL_SPEEDUP = "PartialSpeedup"
    FULL_SPEEDUP = "FullSpeedup"


@dataclass(frozen=True)
class Regime:
    tag: RegimeTag
    net_speedup: float
    max_serial_samples: float
    grover_depth: int = 0


def classify_hardware(
    profile: HardwareProfile, epsilon: float, fidelity_target: float = DEFAULT_FIDELITY
) -> Regime:
    """Place a hardware profile in the regime map for target accuracy ``epsilon``.

    The error budget per oracle call is ``G * g``; a circuit may contain at most
    ``(1 - fidelity) / (G * g)`` calls, which caps the Grover depth. The depth is
    also capped at ``ceil(1/epsilon)``, where the full quantum speedup is reached.
    """
    _check(epsilon)
    budget = profile.sample_error
    max_serial = math.inf if budget == 0 else _error_budget(fidelity_target) / budget
    if max_serial < 3:
        return Regime(RegimeTag.INFEASIBLE, 0.0, max_serial, 0)
    full_depth = math.ceil(1.0 / epsilon - 1e-9)
    depth = full_depth if math.isinf(max_serial) else min(math.floor((max_serial - 1) / 2), full_depth)
    net = depth / profile.clock_ratio
    if net <= 1.0:
        tag = RegimeTag.SLOWDOWN
    elif depth >= full_depth:
        tag = RegimeTag.FULL_SPEEDUP
    else:
        tag = RegimeTag.PARTIAL_SPEEDUP
    return Regime(tag, net, max_serial, depth)


ALGORITHMS = ("AE", "QFTFreeAE", "ParallelCounting", "KP")


@dataclass(frozen=True)
class AlgorithmResourceRow:
    algorithm: str
    qubits: float
    depth: float
    calls: float


def algorithm_resources(algorithm: str, n: int, d: float, epsilon: float, beta: float = 0.0) -> AlgorithmResourceRow:
    """Qubits, circuit depth and oracle calls for one amplitude-estimation algorithm.

    ``n`` and ``d`` are the qubit count and circuit depth of a single oracle call.
    Logarithms are base 2.
    """
    _check(epsilon, beta)
    inv = 1.0 / epsilon
    log_inv = math.log2(inv)
    if algorithm == "AE":
        loglog = math.log2(log_inv) if log_inv > 1 else 0.0
        row = (n + log_inv, d * inv + loglog, inv)
    elif algorithm == "QFTFreeAE":
        row = (n, d * inv, inv)
    elif algorithm == "ParallelCounting":
        row = (n, d * inv ** (1.0 - beta) * log_inv, inv ** (1.0 + beta) * log_inv)
    elif algorithm == "KP":
        row = (n, d * inv ** (1.0 - beta), inv ** (1.0 + beta))
    else:
        raise ResourceError(f"unknown algorithm {algorithm!r}; expected one of {ALGORITHMS}")
    return AlgorithmResourceRow(algorithm, *(max(float(v), 1.0) for v in row))
