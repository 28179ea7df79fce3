"""Amplitude estimation in the two-dimensional Grover-rotation subspace.

The oracle enters only through ``theta = arcsin(sqrt(a))``; a circuit that applies
the Grover iterate ``depth`` times measures the good state with probability
``sin^2((2 depth + 1) theta)``. Depolarizing noise acts once per oracle call.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

MAX_QPE_BITS = 20


@dataclass(frozen=True)
class NoiseModel:
    depol_rate: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.depol_rate <= 1.0:
            raise ValueError(f"depol_rate must lie in [0, 1], got {self.depol_rate}")

    def survival(self, calls):
        """Probability that no depolarizing event happens during ``calls`` oracle calls."""
        return (1.0 - self.depol_rate) ** calls


NOISELESS = NoiseModel(0.0)


@dataclass(frozen=True)
class ScheduleEntry:
    depth: int
    shots: int

    def __post_init__(self):
        if self.depth < 0:
            raise ValueError(f"depth must be >= 0, got {self.depth}")
        if self.shots < 1:
            raise ValueError(f"shots must be >= 1, got {self.shots}")

    @property
    def calls_per_shot(self) -> int:
        return 2 * self.depth + 1

    @property
    def calls(self) -> int:
        return self.shots * self.calls_per_shot


def theta_from_amplitude(a: float) -> float:
    return math.asin(math.sqrt(min(max(a, 0.0), 1.0)))


def p_one(theta, depth, noise: NoiseModel = NOISELESS):
    """Probability of measuring the good state after ``depth`` Grover iterates."""
    calls = 2 * np.asarray(depth) + 1
    lam = noise.survival(calls)
    out = lam * np.sin(calls * np.asarray(theta)) ** 2 + 0.5 * (1.0 - lam)
    return out if np.ndim(out) else float(out)


def dp_dtheta(theta, depth, noise: NoiseModel = NOISELESS):
    calls = 2 * np.asarray(depth) + 1
    lam = noise.survival(calls)
    out = lam * calls * np.sin(2.0 * calls * np.asarray(theta))
    return out if np.ndim(out) else float(out)


def dp_da(theta, depth, noise: NoiseModel = NOISELESS):
    """Derivative of :func:`p_one` with respect to the amplitude ``a = sin^2(theta)``.

    Uses ``sin(2 c theta) / sin(2 theta)``, replaced by its limit ``c`` at the
    endpoints where the chain-rule factor vanishes.
    """
    theta = np.asarray(theta, dtype=float)
    calls = 2 * np.asarray(depth) + 1
    lam = noise.survival(calls)
    s2 = np.sin(2.0 * theta)
    tiny = np.abs(s2) < 1e-12
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(tiny, 0.0, np.sin(2.0 * calls * theta) / np.where(tiny, 1.0, s2))
    # both endpoint limits equal ``calls`` because ``calls`` is odd
    ratio = np.where(tiny, calls, ratio)
    out = lam * calls * ratio
    return out if np.ndim(out) else float(out)


def _seed_sequence(rng_seed) -> np.random.SeedSequence:
    if isinstance(rng_seed, np.random.SeedSequence):
        return rng_seed
    return np.random.SeedSequence(int(rng_seed))


def derive_seed(rng_seed, *key: int) -> np.random.SeedSequence:
    """Independent child stream addressed by ``key`` (e.g. an entry index).

    Derivation depends only on the root seed and the key, never on evaluation order.
    """
    root = _seed_sequence(rng_seed)
    return np.random.SeedSequence(root.entropy, spawn_key=tuple(root.spawn_key) + tuple(key))


def generator(rng_seed) -> np.random.Generator:
    """Counter-based (Philox) generator for ``rng_seed``."""
    return np.random.Generator(np.random.Philox(_seed_sequence(rng_seed)))


def sample_shots(theta: float, depth: int, shots: int, noise: NoiseModel, rng_seed) -> int:
    """Number of good outcomes in ``shots`` runs of the depth-``depth`` circuit."""
    if shots < 1:
        raise ValueError(f"shots must be >= 1, got {shots}")
    p = min(max(p_one(theta, depth, noise), 0.0), 1.0)
    return int(generator(rng_seed).binomial(shots, p))


def qpe_distribution(theta: float, m_bits: int) -> np.ndarray:
    """Outcome distribution of phase estimation on the Grover iterate with ``m_bits`` bits.

    The initial state is an equal superposition of the two Grover eigenvectors with
    eigenphases ``+/- 2 theta``; their register outcomes do not interfere, so the
    distribution is the average of the two single-eigenvector distributions.
    """
    if int(m_bits) != m_bits or not 1 <= m_bits <= MAX_QPE_BITS:
        raise ValueError(f"m_bits must be an integer in [1, {MAX_QPE_BITS}], got {m_bits}")
    size = 1 << int(m_bits)
    k = np.arange(size)
    out = np.zeros(size)
    for frac in (theta / math.pi, -theta / math.pi):
        kick = np.exp(2j * math.pi * frac * k)
        out += np.abs(np.fft.fft(kick) / size) ** 2
    return 0.5 * out


def qpe_estimate_map(y, m_bits: int):
    """Decode a phase-estimation outcome into an amplitude estimate."""
    out = np.sin(np.pi * np.asarray(y) / (1 << int(m_bits))) ** 2
    return out if np.ndim(out) else float(out)
