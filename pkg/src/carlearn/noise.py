"""Exploration signal generators.

Two excitation kinds are supported, both deterministic functions of absolute
time once seeded, so successive learning windows sample one continuous
signal and reruns of a config reproduce it bit for bit:

    sum-of-sinusoids   u_i(t) = amplitude * sum_j sin(w_ij t + phi_ij)
    alternating-pulse  u_i(t) = +/- amplitude, sign flipping every `period`
                       seconds, per-channel phase offset

Frequencies, phases, and offsets are drawn once from the seed, per channel,
so channels are decorrelated (a shared pulse across channels would make the
excitation rank one and the data equations singular).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidArgumentError

KINDS = ("sum-of-sinusoids", "alternating-pulse")


@dataclass(frozen=True)
class NoiseConfig:
    """Excitation descriptor.

    amplitude: per-component amplitude (sinusoids) or pulse height.
    period: sign-hold duration of the pulse train, seconds.
    n_components: number of sinusoids summed per channel.
    freq_range: sinusoid frequency band, rad/s.
    """

    kind: str = "sum-of-sinusoids"
    amplitude: float = 0.1
    seed: int = 0
    period: float = 3.0
    n_components: int = 5
    freq_range: tuple[float, float] = (0.5, 5.0)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InvalidArgumentError(
                f"unknown excitation kind {self.kind!r}, expected one of {KINDS}")
        if self.amplitude < 0:
            raise InvalidArgumentError("amplitude must be non-negative")
        if self.kind == "alternating-pulse" and self.period <= 0:
            raise InvalidArgumentError("pulse period must be positive")
        if self.kind == "sum-of-sinusoids":
            if self.n_components < 1:
                raise InvalidArgumentError("need at least one sinusoid")
            lo, hi = self.freq_range
            if not (0 < lo <= hi):
                raise InvalidArgumentError("frequency range must satisfy 0 < lo <= hi")


class NoiseSignal:
    """Seeded realization of a NoiseConfig for k channels."""

    def __init__(self, config: NoiseConfig, k: int):
        self.config = config
        self.k = k
        rng = np.random.default_rng(config.seed)
        if config.kind == "sum-of-sinusoids":
            lo, hi = config.freq_range
            self._freqs = rng.uniform(lo, hi, size=(k, config.n_components))
            self._phases = rng.uniform(0.0, 2.0 * np.pi, size=(k, config.n_components))
        else:
            self._offsets = rng.uniform(0.0, 2.0 * config.period, size=k)

    def sample(self, times: np.ndarray) -> np.ndarray:
        """Evaluate the signal at the given times; returns (len(times), k)."""
        times = np.asarray(times, dtype=float)
        cfg = self.config
        if cfg.amplitude == 0.0:
            return np.zeros((times.size, self.k))
        if cfg.kind == "sum-of-sinusoids":
            # (m, k, n_components) phase matrix, summed over components
            arg = (times[:, None, None] * self._freqs[None, :, :]
                   + self._phases[None, :, :])
            return cfg.amplitude * np.sin(arg).sum(axis=2)
        cells = np.floor((times[:, None] + self._offsets[None, :]) / cfg.period)
        signs = 1.0 - 2.0 * (cells.astype(np.int64) % 2)
        return cfg.amplitude * signs

    def table(self, t0: float, steps: int, dt: float) -> np.ndarray:
        """Zero-order-hold table over a uniform grid, (steps + 1, k)."""
        times = t0 + dt * np.arange(steps + 1)
        return self.sample(times)
