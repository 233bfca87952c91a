"""Empirical bipolar memristor model driven by rectangular voltage pulses.

The switching rate is

    dR/dt = A_p (exp(|v|/t_p) - 1) (r_p(v) - R)^2    for v > 0 and R < r_p(v)
    dR/dt = A_n (exp(|v|/t_n) - 1) (R - r_n(v))^2    for v <= 0 and R >= r_n(v)

and zero elsewhere, with the linear operating-range boundaries
r_p(v) = a_0p + a_1p v and r_n(v) = a_0n + a_1n v.
"""
from __future__ import annotations

import functools
import math
from dataclasses import dataclass

import numpy as np

from . import _kernels


@dataclass(frozen=True)
class DeviceParams:
    A_p: float
    A_n: float
    t_p: float
    t_n: float
    a_0p: float
    a_1p: float
    a_0n: float
    a_1n: float
    integration_step: float = 1e-7
    R_floor: float = 1.0

    def __post_init__(self):
        if not self.A_p > 0 or not self.A_n < 0:
            raise ValueError("need A_p > 0 and A_n < 0")
        if not self.t_p > 0 or not self.t_n > 0:
            raise ValueError("need t_p > 0 and t_n > 0")
        if not self.integration_step > 0:
            raise ValueError("integration_step must be positive")
        if not self.R_floor > 0:
            raise ValueError("R_floor must be positive")


# TiOx device fit used for the MNIST selector/selectorless study
TABLE_I = DeviceParams(
    A_p=0.21389, A_n=-0.81302, t_p=1.6591, t_n=1.5148,
    a_0p=37087.0, a_1p=-20193.0, a_0n=43430.0, a_1n=34333.0,
)


@dataclass
class MemristorState:
    R: float

    def __post_init__(self):
        if not math.isfinite(self.R) or self.R <= 0:
            raise ValueError(f"resistance must be finite and positive, got {self.R}")


@dataclass(frozen=True)
class Pulse:
    amplitude: float
    width: float = 1e-5

    def __post_init__(self):
        if not math.isfinite(self.amplitude):
            raise ValueError("pulse amplitude must be finite")
        if not self.width > 0:
            raise ValueError("pulse width must be positive")


@dataclass(frozen=True)
class ReadNoise:
    kind: str = "none"
    sigma_rel: float = 0.0

    def __post_init__(self):
        if self.kind not in ("none", "gaussian-relative"):
            raise ValueError(f"unknown read noise kind {self.kind!r}")
        if self.sigma_rel < 0:
            raise ValueError("sigma_rel must be >= 0")


NO_NOISE = ReadNoise()


def operating_range(params: DeviceParams, v: float) -> float:
    if v > 0:
        return params.a_0p + params.a_1p * v
    return params.a_0n + params.a_1n * v


def _voltage_gain(params: DeviceParams, v: float) -> float:
    if v > 0:
        return params.A_p * math.expm1(abs(v) / params.t_p)
    return params.A_n * math.expm1(abs(v) / params.t_n)


def switching_rate(params: DeviceParams, R: float, v: float) -> float:
    """dR/dt in ohms per second; zero outside both branch conditions."""
    r = operating_range(params, v)
    if v > 0:
        if R < r:
            return _voltage_gain(params, v) * (r - R) ** 2
        return 0.0
    if R >= r:
        return _voltage_gain(params, v) * (R - r) ** 2
    return 0.0


def pulse_coefficients(params: DeviceParams, amplitude: float) -> tuple[float, float, bool]:
    """(gain, boundary, positive-branch) triple consumed by the integrators."""
    return _voltage_gain(params, amplitude), operating_range(params, amplitude), amplitude > 0


def predict_pulse_outcome(state: MemristorState, params: DeviceParams, pulse: Pulse) -> float:
    gain, bound, positive = pulse_coefficients(params, pulse.amplitude)
    return float(_kernels.integrate(float(state.R), gain, bound, positive, pulse.width,
                                    params.integration_step, params.R_floor))


def apply_pulse(state: MemristorState, params: DeviceParams, pulse: Pulse) -> MemristorState:
    return MemristorState(predict_pulse_outcome(state, params, pulse))


def apply_pulse_many(Rs: np.ndarray, params: DeviceParams, pulse: Pulse) -> np.ndarray:
    """Vectorised apply_pulse over an array of resistances (same pulse for all)."""
    gain, bound, positive = pulse_coefficients(params, pulse.amplitude)
    flat = np.ascontiguousarray(Rs, dtype=np.float64).reshape(-1)
    out = _kernels.integrate_many(flat, gain, bound, positive, pulse.width,
                                  params.integration_step, params.R_floor)
    return out.reshape(np.shape(Rs))


@functools.lru_cache(maxsize=64)
def _option_arrays(params: DeviceParams, pulses: tuple) -> tuple:
    """Options grouped into chains of equal amplitude, plus per-option step counts."""
    chains, opt_chain = {}, []
    for p in pulses:
        opt_chain.append(chains.setdefault(pulse_coefficients(params, p.amplitude), len(chains)))
    coeffs = list(chains)
    steps = [_kernels.step_count(p.width, params.integration_step) for p in pulses]
    opt_n = np.array([n for n, _ in steps], dtype=np.int64)
    return (np.array([c[0] for c in coeffs]), np.array([c[1] for c in coeffs]),
            np.array([c[2] for c in coeffs]), np.array(opt_chain, dtype=np.int64), opt_n,
            np.array([r for _, r in steps]), np.argsort(opt_n, kind="stable"))


def predict_many(R: float, params: DeviceParams, pulses) -> np.ndarray:
    """Predicted outcome of each pulse in ``pulses`` applied to a device at ``R``."""
    return _kernels.predict_chains(float(R), *_option_arrays(params, tuple(pulses)),
                                   params.integration_step, params.R_floor)


def read(state: MemristorState, noise: ReadNoise, rng: np.random.Generator,
         R_floor: float = 1.0) -> float:
    """Read back a resistance. Always consumes exactly one draw from ``rng``."""
    eps = rng.standard_normal()
    if noise.kind == "none":
        return float(state.R)
    return max(float(state.R) * (1.0 + noise.sigma_rel * eps), R_floor)


def pulse_train(params: DeviceParams, R_start: float, pulse: Pulse, count: int) -> list[float]:
    state = MemristorState(R_start)
    out = []
    for _ in range(count):
        state = apply_pulse(state, params, pulse)
        out.append(state.R)
    return out
