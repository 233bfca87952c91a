"""Virtual memristor crossbar with selector-based or V/2 selectorless writes."""
from __future__ import annotations

import enum

import numpy as np

from .device import (DeviceParams, MemristorState, NO_NOISE, Pulse, ReadNoise,
                     apply_pulse_many)


class BiasScheme(enum.Enum):
    SELECTOR = "selector"
    SELECTORLESS = "selectorless"

    @classmethod
    def parse(cls, value) -> "BiasScheme":
        if isinstance(value, cls):
            return value
        aliases = {"selector-based": "selector", "selectorless-half-voltage": "selectorless"}
        return cls(aliases.get(value, value))


class Crossbar:
    """rows x cols array of device resistances.

    ``R`` holds the state of every device; it is only mutated by
    :meth:`write_selected`. Reads never touch it.
    """

    def __init__(self, R, params: DeviceParams, scheme=BiasScheme.SELECTOR):
        R = np.array(R, dtype=np.float64)
        if R.ndim != 2 or 0 in R.shape:
            raise ValueError(f"crossbar needs a non-empty 2-D state matrix, got shape {R.shape}")
        if not np.all(np.isfinite(R)) or np.any(R < params.R_floor):
            raise ValueError("device resistances must be finite and >= R_floor")
        self.R = R
        self.params = params
        self.scheme = BiasScheme.parse(scheme)

    @classmethod
    def initialize(cls, rows: int, cols: int, params: DeviceParams, scheme=BiasScheme.SELECTOR,
                   R_init_mean: float = 11000.0, R_init_jitter_rel: float = 0.0,
                   rng: np.random.Generator | None = None) -> "Crossbar":
        if rows < 1 or cols < 1:
            raise ValueError(f"crossbar dimensions must be >= 1, got {rows}x{cols}")
        if R_init_mean < params.R_floor:
            raise ValueError("R_init_mean is below R_floor")
        if R_init_jitter_rel < 0:
            raise ValueError("R_init_jitter_rel must be >= 0")
        if R_init_jitter_rel == 0:
            R = np.full((rows, cols), float(R_init_mean))
        else:
            if rng is None:
                raise ValueError("a seeded rng is required when jitter > 0")
            # row-major draw order
            u = rng.uniform(-1.0, 1.0, size=rows * cols).reshape(rows, cols)
            R = R_init_mean * (1.0 + R_init_jitter_rel * u)
            R = np.maximum(R, params.R_floor)
        return cls(R, params, scheme)

    @property
    def rows(self) -> int:
        return self.R.shape[0]

    @property
    def cols(self) -> int:
        return self.R.shape[1]

    def device(self, row: int, col: int) -> MemristorState:
        self._check(row, col)
        return MemristorState(float(self.R[row, col]))

    def _check(self, row, col):
        if not (0 <= row < self.rows and 0 <= col < self.cols):
            raise IndexError(f"device ({row}, {col}) outside {self.rows}x{self.cols} array")

    def write_selected(self, row: int, col: int, pulse: Pulse) -> "Crossbar":
        self._check(row, col)
        target = apply_pulse_many(self.R[row:row + 1, col], self.params, pulse)[0]
        if self.scheme is BiasScheme.SELECTORLESS:
            half = Pulse(pulse.amplitude / 2.0, pulse.width)
            line = np.arange(self.cols) != col
            self.R[row, line] = apply_pulse_many(self.R[row, line], self.params, half)
            line = np.arange(self.rows) != row
            self.R[line, col] = apply_pulse_many(self.R[line, col], self.params, half)
        self.R[row, col] = target
        return self

    def read_resistances(self, noise: ReadNoise = NO_NOISE,
                         rng: np.random.Generator | None = None) -> np.ndarray:
        """Row-major read of every device; one rng draw per device."""
        if rng is None:
            if noise.kind != "none":
                raise ValueError("noisy reads need an rng")
            return self.R.copy()
        eps = rng.standard_normal(self.R.shape)
        if noise.kind == "none":
            return self.R.copy()
        return np.maximum(self.R * (1.0 + noise.sigma_rel * eps), self.params.R_floor)

    def read_conductances(self, noise: ReadNoise = NO_NOISE,
                          rng: np.random.Generator | None = None) -> np.ndarray:
        return 1.0 / self.read_resistances(noise, rng)

    def dot_product(self, input_voltages) -> np.ndarray:
        """Column currents for voltages applied to the rows (ideal, non-disturbing read)."""
        x = np.asarray(input_voltages, dtype=np.float64)
        if x.shape != (self.rows,):
            raise ValueError(f"expected {self.rows} input voltages, got shape {x.shape}")
        return x @ (1.0 / self.R)

    def copy(self) -> "Crossbar":
        return Crossbar(self.R.copy(), self.params, self.scheme)
