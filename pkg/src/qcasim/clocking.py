"""Four-zone adiabatic clock.

Each zone cycles Switch -> Hold -> Release -> Relax in equal quarter-cycle
phases; zone k lags zone k-1 by one quarter. The clock modulates each
cell's tunneling energy (gamma, in units of the adjacent-pair kink energy).
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

N_ZONES = 4


class Phase(enum.IntEnum):
    SWITCH = 0
    HOLD = 1
    RELEASE = 2
    RELAX = 3


@dataclass(frozen=True)
class ClockConfig:
    gamma_high: float = 1.0
    gamma_low: float = 0.01
    samples_per_cycle: int = 128
    cycles: int = 1

    def __post_init__(self) -> None:
        if not self.gamma_high > self.gamma_low > 0:
            raise ValueError("need gamma_high > gamma_low > 0")
        if self.samples_per_cycle < 8 or self.samples_per_cycle % 4:
            raise ValueError("samples_per_cycle must be >= 8 and divisible by 4")
        if self.cycles < 0:
            raise ValueError("cycles must be nonnegative")

    @property
    def quarter(self) -> int:
        return self.samples_per_cycle // 4

    @property
    def total_samples(self) -> int:
        return self.cycles * self.samples_per_cycle

    def with_cycles(self, cycles: int) -> "ClockConfig":
        return ClockConfig(self.gamma_high, self.gamma_low, self.samples_per_cycle, cycles)


def _check(zone: int, sample_index: int) -> None:
    if zone not in range(N_ZONES):
        raise ValueError(f"zone out of range: {zone}")
    if sample_index < 0:
        raise ValueError("sample_index must be nonnegative")


def _position(zone: int, sample_index: int, config: ClockConfig) -> tuple[Phase, float]:
    q = config.quarter
    s = sample_index % config.samples_per_cycle
    phase = Phase((s // q - zone) % N_ZONES)
    return phase, (s % q) / q


def phase_of(zone: int, sample_index: int, config: ClockConfig) -> Phase:
    _check(zone, sample_index)
    return _position(zone, sample_index, config)[0]


def gamma_at(zone: int, sample_index: int, config: ClockConfig) -> float:
    _check(zone, sample_index)
    phase, frac = _position(zone, sample_index, config)
    lo, span = config.gamma_low, config.gamma_high - config.gamma_low
    if phase is Phase.SWITCH:
        return lo + span * 0.5 * (1.0 + math.cos(math.pi * frac))
    if phase is Phase.HOLD:
        return lo
    if phase is Phase.RELEASE:
        return lo + span * 0.5 * (1.0 - math.cos(math.pi * frac))
    return config.gamma_high


def gamma_table(config: ClockConfig) -> np.ndarray:
    """gamma for every (sample within one cycle, zone); shape (samples_per_cycle, 4)."""
    return np.array(
        [[gamma_at(z, s, config) for z in range(N_ZONES)]
         for s in range(config.samples_per_cycle)],
        dtype=np.float64,
    )
