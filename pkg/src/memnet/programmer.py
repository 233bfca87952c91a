"""Predict-write-verify programming of a single device through an array port."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .device import DeviceParams, MemristorState, Pulse, predict_many


@dataclass(frozen=True)
class ProgramPolicy:
    r_tolerance: float = 0.001
    max_steps: int = 5

    def __post_init__(self):
        if not self.r_tolerance > 0:
            raise ValueError("r_tolerance must be positive")
        if self.max_steps < 1:
            raise ValueError("max_steps must be >= 1")


@dataclass
class ProgramResult:
    final_R: float
    steps_used: int
    converged: bool
    pulses_applied: list[Pulse] = field(default_factory=list)


def default_pulse_options(width: float = 1e-5) -> tuple[Pulse, ...]:
    """+-0.9 .. +-1.2 V in 0.1 V steps, positive amplitudes first."""
    amps = (0.9, 1.0, 1.1, 1.2)
    return tuple(Pulse(a, width) for a in amps) + tuple(Pulse(-a, width) for a in amps)


def width_ladder(lo: float = 1e-7, hi: float = 1e-3, mantissas=(1, 2, 5)) -> list[float]:
    """1-2-5 series of pulse widths within [lo, hi] seconds."""
    e_lo, e_hi = math.floor(math.log10(lo)), math.ceil(math.log10(hi))
    ws = [float(f"{m}e{e}") for e in range(e_lo, e_hi + 1) for m in mantissas]
    return [w for w in ws if lo * (1 - 1e-9) <= w <= hi * (1 + 1e-9)]


def ladder_options(widths, amps=(0.9, 1.0, 1.1, 1.2)) -> tuple[Pulse, ...]:
    return tuple(Pulse(s * a, w) for s in (1, -1) for a in amps for w in widths)


def relative_error(R_expected: float, R_real: float) -> float:
    return abs((R_expected - R_real) / R_expected)


def select_pulse(state: MemristorState, params: DeviceParams, options, R_expected: float) -> Pulse:
    if not options:
        raise ValueError("pulse option set is empty")
    outcomes = predict_many(state.R, params, options)
    # argmin returns the first minimum, i.e. the earliest option on ties
    return options[int(np.argmin(np.abs(outcomes - R_expected)))]


def program(port, row: int, col: int, R_expected: float, options, policy: ProgramPolicy,
            params: DeviceParams) -> ProgramResult:
    """Verify first, then pulse until within tolerance or out of steps.

    Pulses are chosen from the last *read* value, never from hidden device
    state, so the loop behaves the same on hardware ports.
    """
    if not R_expected > 0:
        raise ValueError("R_expected must be positive")
    pulses = []
    while True:
        R_real = port.read_resistance(row, col)
        if relative_error(R_expected, R_real) <= policy.r_tolerance:
            return ProgramResult(R_real, len(pulses), True, pulses)
        if len(pulses) >= policy.max_steps:
            return ProgramResult(R_real, len(pulses), False, pulses)
        pulse = select_pulse(MemristorState(R_real), params, options, R_expected)
        port.apply_pulse(row, col, pulse.amplitude, pulse.width)
        pulses.append(pulse)
