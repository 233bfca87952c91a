"""Plasticity core: weight changes from fire history, and their mapping to resistances.

Any callable ``rule(spikes, fired, target) -> WeightDelta`` can be plugged
into the engine; the delta rule and pair-based STDP ship here.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple, Protocol

import numpy as np

from .device import DeviceParams, operating_range


class Entry(NamedTuple):
    row: int
    col: int
    dG: float


@dataclass
class WeightDelta:
    """Sparse conductance update keyed by (pre, post) synapse indices."""
    entries: list[Entry] = field(default_factory=list)

    def __len__(self):
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def dense(self, shape) -> np.ndarray:
        out = np.zeros(shape)
        for e in self.entries:
            out[e.row, e.col] += e.dG
        return out


class LearningRule(Protocol):
    def __call__(self, spikes, fired, target) -> WeightDelta: ...


@dataclass(frozen=True)
class DeltaRuleConfig:
    learning_rate: float = 3.5e-6

    def __post_init__(self):
        if not self.learning_rate > 0:
            raise ValueError("learning_rate must be positive")


@dataclass(frozen=True)
class STDPConfig:
    A_plus: float = 1e-6
    A_minus: float = 1e-6
    tau_plus: float = 20.0
    tau_minus: float = 20.0

    def __post_init__(self):
        if min(self.A_plus, self.A_minus, self.tau_plus, self.tau_minus) <= 0:
            raise ValueError("STDP amplitudes and time constants must be positive")


def delta_rule(spikes, fired, target, cfg: DeltaRuleConfig) -> WeightDelta:
    """dG(i, j) = learning_rate * (target[j] - fired[j]) * spikes[i]; zeros omitted."""
    x = np.asarray(spikes)
    err = np.asarray(target, dtype=np.float64) - np.asarray(fired, dtype=np.float64)
    if x.ndim != 1 or err.ndim != 1 or np.shape(fired) != np.shape(target):
        raise ValueError("spikes, fired and target must be 1-D with matching output sizes")
    entries = []
    for i in np.flatnonzero(x):
        for j in np.flatnonzero(err):
            entries.append(Entry(int(i), int(j), cfg.learning_rate * float(err[j]) * float(x[i])))
    return WeightDelta(entries)


class DeltaRule:
    def __init__(self, cfg: DeltaRuleConfig):
        self.cfg = cfg

    def __call__(self, spikes, fired, target) -> WeightDelta:
        return delta_rule(spikes, fired, target, self.cfg)


def stdp_window(dt: float, cfg: STDPConfig) -> float:
    if dt >= 0:
        return cfg.A_plus * math.exp(-dt / cfg.tau_plus)
    return -cfg.A_minus * math.exp(dt / cfg.tau_minus)


def stdp_update(pre_times, post_times, cfg: STDPConfig) -> WeightDelta:
    """Pair every pre/post neuron that has spiked; ``None`` (or negative) means never."""
    pre = [(i, t) for i, t in enumerate(pre_times) if t is not None and t >= 0]
    post = [(j, t) for j, t in enumerate(post_times) if t is not None and t >= 0]
    return WeightDelta([Entry(i, j, stdp_window(tj - ti, cfg)) for i, ti in pre for j, tj in post])


class STDPRule:
    """Unsupervised pair-based STDP; keeps last-spike times across presentations."""

    def __init__(self, cfg: STDPConfig, n_in: int, n_out: int):
        self.cfg = cfg
        self.t = 0
        self.pre_times = [None] * n_in
        self.post_times = [None] * n_out

    def __call__(self, spikes, fired, target=None) -> WeightDelta:
        now = self.t
        self.t += 1
        for i in np.flatnonzero(spikes):
            self.pre_times[i] = now
        for j in np.flatnonzero(fired):
            self.post_times[j] = now
        delta = stdp_update(self.pre_times, self.post_times, self.cfg)
        # only pairs touched by a spike at this step, so each pairing is counted once
        return WeightDelta([e for e in delta
                            if self.pre_times[e.row] == now or self.post_times[e.col] == now])


def reachable_window(params: DeviceParams, amplitudes) -> tuple[float, float]:
    """[r_n(most negative amplitude), r_p(most positive amplitude)] for a pulse option set."""
    neg = [a for a in amplitudes if a <= 0]
    pos = [a for a in amplitudes if a > 0]
    lo = operating_range(params, min(neg)) if neg else params.R_floor
    hi = operating_range(params, max(pos)) if pos else math.inf
    return max(lo, params.R_floor), hi


def target_resistance(R_current: float, dG: float, window: tuple[float, float]) -> tuple[float, bool]:
    """Expected resistance after adding ``dG`` to the device conductance.

    Returns ``(R_expected, saturated)``; targets outside ``window`` are clamped
    and flagged as saturated.
    """
    lo, hi = window
    g = 1.0 / R_current + dG
    if g <= 0:
        return hi, True
    R = 1.0 / g
    if R < lo:
        return lo, True
    if R > hi:
        return hi, True
    return R, False
