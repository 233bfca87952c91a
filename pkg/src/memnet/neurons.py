"""Neuron core: membrane updates, winner-take-all arbitration and fire history."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class LIFConfig:
    threshold: float = 0.01
    leak_factor: float = 1.0
    reset_mode: str = "reset-to-zero-after-arbitration"

    def __post_init__(self):
        if not self.threshold > 0:
            raise ValueError("threshold must be positive")
        if not 0.0 <= self.leak_factor <= 1.0:
            raise ValueError("leak_factor must lie in [0, 1]")
        if self.reset_mode != "reset-to-zero-after-arbitration":
            raise ValueError(f"unsupported reset_mode {self.reset_mode!r}")


@dataclass(frozen=True)
class IzhikevichConfig:
    a: float = 0.02
    b: float = 0.2
    c: float = -65.0
    d: float = 8.0
    dt: float = 1.0
    input_gain: float = 1.0
    v_peak: float = 30.0
    v_rest: float = -70.0

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be positive")


@dataclass
class LayerState:
    membranes: np.ndarray
    fired: np.ndarray
    fire_history: list = field(default_factory=list)
    recovery: np.ndarray | None = None  # Izhikevich u; unused by LIF
    peak: np.ndarray | None = None  # pre-reset v of the last Izhikevich step

    @classmethod
    def fresh(cls, size: int) -> "LayerState":
        return cls(np.zeros(size), np.zeros(size, dtype=np.int8))

    @classmethod
    def izhikevich_rest(cls, size: int, cfg: IzhikevichConfig) -> "LayerState":
        v = np.full(size, cfg.v_rest)
        return cls(v, np.zeros(size, dtype=np.int8), recovery=cfg.b * v)

    @property
    def size(self) -> int:
        return self.membranes.shape[0]


def synaptic_drive(G: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Column sums of ``x[i] * G[i, j]``, added row by row.

    Every column is summed in the same order, so columns with equal weights
    give bit-equal membranes (ties stay ties) on any BLAS or thread count.
    """
    return np.add.reduce(x[:, None] * G, axis=0)


def lif_step(state: LayerState, conductances, spikes, cfg: LIFConfig) -> LayerState:
    """Integrate one timestep of input spikes through the synaptic conductances.

    No threshold is applied here; call :func:`wta_arbitrate` afterwards.
    """
    G = np.asarray(conductances, dtype=np.float64)
    x = np.asarray(spikes, dtype=np.float64)
    if G.ndim != 2 or x.shape != (G.shape[0],) or G.shape[1] != state.size:
        raise ValueError(
            f"dimension mismatch: conductances {G.shape}, spikes {x.shape}, layer {state.size}")
    state.membranes = cfg.leak_factor * state.membranes + synaptic_drive(G, x)
    return state


def wta_arbitrate(state: LayerState, threshold: float, reset: bool = True) -> int | None:
    """Fire the single highest supra-threshold neuron (ties go to the lowest index)."""
    m = state.membranes
    winner = int(np.argmax(m))
    if not m[winner] > threshold:
        winner = None
    state.fired = np.zeros(state.size, dtype=np.int8)
    if winner is not None:
        state.fired[winner] = 1
    state.fire_history.append(winner)
    if reset:
        state.membranes = np.zeros(state.size)
    return winner


def izhikevich_step(state: LayerState, input_currents, cfg: IzhikevichConfig) -> LayerState:
    """One Euler step of v' = 0.04v^2 + 5v + 140 - u + I, u' = a(bv - u)."""
    I = cfg.input_gain * np.asarray(input_currents, dtype=np.float64)
    if I.shape != (state.size,):
        raise ValueError(f"expected {state.size} input currents, got shape {I.shape}")
    v = state.membranes
    u = state.recovery if state.recovery is not None else cfg.b * v
    v_new = v + cfg.dt * (0.04 * v * v + 5.0 * v + 140.0 - u + I)
    u_new = u + cfg.dt * cfg.a * (cfg.b * v - u)
    spiking = v_new >= cfg.v_peak
    state.fired = spiking.astype(np.int8)
    state.peak = np.where(spiking, v_new, -np.inf)
    state.membranes = np.where(spiking, cfg.c, v_new)
    state.recovery = np.where(spiking, u_new + cfg.d, u_new)
    return state
