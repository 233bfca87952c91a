"""Deterministic memristor crossbar emulator for spiking-network training."""
from .crossbar import BiasScheme, Crossbar
from .device import TABLE_I, DeviceParams, MemristorState, Pulse, ReadNoise, apply_pulse, operating_range
from .engine import Dataset, RunLog, run_training
from .instrument import mock_server, remote_port, virtual_port
from .programmer import ProgramPolicy, ProgramResult, program

__all__ = [
    "BiasScheme", "Crossbar", "TABLE_I", "DeviceParams", "MemristorState", "Pulse", "ReadNoise",
    "apply_pulse", "operating_range", "Dataset", "RunLog", "run_training", "mock_server",
    "remote_port", "virtual_port", "ProgramPolicy", "ProgramResult", "program",
]
