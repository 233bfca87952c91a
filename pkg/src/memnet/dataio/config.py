"""JSON run configuration: schema, defaults and the typed RunConfig."""
from __future__ import annotations

import copy
import hashlib
import json
from dataclasses import dataclass

import jsonschema

from ..crossbar import BiasScheme
from ..device import DeviceParams, Pulse, ReadNoise
from ..errors import ConfigSyntaxError, SchemaError
from ..neurons import IzhikevichConfig, LIFConfig
from ..plasticity import DeltaRuleConfig, STDPConfig
from ..programmer import ProgramPolicy, default_pulse_options

DEFAULTS = {
    "network": {"layers": [484, 10]},
    "neuron": {
        "model": "lif",
        "threshold": 0.01,
        "leak_factor": 1.0,
        "izhikevich": {"a": 0.02, "b": 0.2, "c": -65.0, "d": 8.0, "dt": 1.0,
                       "input_gain": 1.0, "steps_per_presentation": 10},
    },
    "rule": {
        "name": "delta",
        "learning_rate": 3.5e-6,
        "stdp": {"A_plus": 1e-6, "A_minus": 1e-6, "tau_plus": 20.0, "tau_minus": 20.0},
    },
    "device": {
        "A_p": 0.21389, "A_n": -0.81302, "t_p": 1.6591, "t_n": 1.5148,
        "a_0p": 37087.0, "a_1p": -20193.0, "a_0n": 43430.0, "a_1n": 34333.0,
        "integration_step": 1e-7, "R_floor": 1.0,
        "read_noise": {"kind": "none", "sigma_rel": 0.0},
    },
    "array": {"rows": 100, "cols": 100, "scheme": "selector",
              "R_init_mean": 11000.0, "R_init_jitter_rel": 0.0},
    "pulses": [{"amplitude": p.amplitude, "width": p.width} for p in default_pulse_options()],
    "policy": {"r_tolerance": 0.001, "max_steps": 5},
    "run": {"epochs": 20, "minibatch": 100, "seed": 0, "mode": "memristor",
            "test_samples": 500, "eval_every": 0, "watch": ["384-6", "10-6"]},
}

_num = {"type": "number"}
_pos = {"type": "number", "exclusiveMinimum": 0}
_count = {"type": "integer", "minimum": 1}


def _obj(props, **extra):
    return {"type": "object", "properties": props, "additionalProperties": False, **extra}


SCHEMA = _obj({
    "network": _obj({"layers": {"type": "array", "items": _count, "minItems": 2, "maxItems": 2}}),
    "neuron": _obj({
        "model": {"enum": ["lif", "izhikevich"]},
        "threshold": _pos,
        "leak_factor": {"type": "number", "minimum": 0, "maximum": 1},
        "izhikevich": _obj({"a": _num, "b": _num, "c": _num, "d": _num, "dt": _pos,
                            "input_gain": _num, "steps_per_presentation": _count}),
    }),
    "rule": _obj({
        "name": {"enum": ["delta", "stdp"]},
        "learning_rate": _pos,
        "stdp": _obj({"A_plus": _pos, "A_minus": _pos, "tau_plus": _pos, "tau_minus": _pos}),
    }),
    "device": _obj({
        "A_p": _pos, "A_n": {"type": "number", "exclusiveMaximum": 0},
        "t_p": _pos, "t_n": _pos,
        "a_0p": _num, "a_1p": _num, "a_0n": _num, "a_1n": _num,
        "integration_step": _pos, "R_floor": _pos,
        "read_noise": _obj({"kind": {"enum": ["none", "gaussian-relative"]},
                            "sigma_rel": {"type": "number", "minimum": 0}}),
    }),
    "array": _obj({
        "rows": _count, "cols": _count,
        "scheme": {"enum": ["selector", "selectorless", "selector-based", "selectorless-half-voltage"]},
        "R_init_mean": _pos,
        "R_init_jitter_rel": {"type": "number", "minimum": 0, "exclusiveMaximum": 1},
    }),
    "pulses": {"type": "array", "minItems": 1,
               "items": _obj({"amplitude": _num, "width": _pos}, required=["amplitude", "width"])},
    "policy": _obj({"r_tolerance": _pos, "max_steps": _count}),
    "run": _obj({
        "epochs": {"type": "integer", "minimum": 0},
        "minibatch": _count,
        "seed": {"type": "integer", "minimum": 0},
        "mode": {"enum": ["memristor", "baseline"]},
        "test_samples": _count,
        "eval_every": {"type": "integer", "minimum": 0},
        "watch": {"type": "array", "items": {"type": "string", "pattern": r"^\d+-\d+$"}},
    }),
})


@dataclass(frozen=True)
class NeuronConfig:
    model: str
    lif: LIFConfig
    izhikevich: IzhikevichConfig
    steps_per_presentation: int


@dataclass(frozen=True)
class RuleConfig:
    name: str
    delta: DeltaRuleConfig
    stdp: STDPConfig


@dataclass(frozen=True)
class ArrayConfig:
    rows: int
    cols: int
    scheme: BiasScheme
    R_init_mean: float
    R_init_jitter_rel: float


@dataclass(frozen=True)
class RunSettings:
    epochs: int
    minibatch: int
    seed: int
    mode: str
    test_samples: int
    eval_every: int
    watch: tuple[tuple[int, int], ...]


@dataclass(frozen=True)
class RunConfig:
    layers: tuple[int, int]
    neuron: NeuronConfig
    rule: RuleConfig
    device: DeviceParams
    read_noise: ReadNoise
    array: ArrayConfig
    pulses: tuple[Pulse, ...]
    policy: ProgramPolicy
    run: RunSettings
    raw: dict

    @property
    def digest(self) -> str:
        blob = json.dumps(self.raw, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()

    def to_json(self) -> str:
        return json.dumps(self.raw, indent=2, sort_keys=True) + "\n"

    def with_overrides(self, **run_overrides) -> "RunConfig":
        """Copy with dotted-path overrides, e.g. ``{"run.seed": 3, "array.scheme": "selectorless"}``."""
        raw = copy.deepcopy(self.raw)
        for key, value in run_overrides.items():
            node = raw
            *parents, leaf = key.split(".")
            for p in parents:
                node = node[p]
            node[leaf] = value
        return from_dict(raw)


def _merge(defaults, given):
    if isinstance(defaults, dict) and isinstance(given, dict):
        out = {k: copy.deepcopy(v) for k, v in defaults.items()}
        for k, v in given.items():
            out[k] = _merge(defaults[k], v) if k in defaults else v
        return out
    return copy.deepcopy(given)


def _path(err) -> str:
    return ".".join(str(p) for p in err.absolute_path)


def parse_watch(items) -> tuple[tuple[int, int], ...]:
    out = []
    for item in items:
        pre, post = item.split("-")
        out.append((int(pre), int(post)))
    return tuple(out)


def from_dict(data: dict) -> RunConfig:
    if not isinstance(data, dict):
        raise SchemaError("", "top level must be an object")
    errors = sorted(jsonschema.Draft202012Validator(SCHEMA).iter_errors(data),
                    key=lambda e: [str(p) for p in e.absolute_path])
    if errors:
        raise SchemaError(_path(errors[0]), errors[0].message)
    raw = _merge(DEFAULTS, data)

    n_in, n_out = raw["network"]["layers"]
    arr = raw["array"]
    if n_in * n_out > arr["rows"] * arr["cols"]:
        raise SchemaError("network.layers", f"{n_in * n_out} synapses do not fit a "
                          f"{arr['rows']}x{arr['cols']} array")
    watch = parse_watch(raw["run"]["watch"])
    for pre, post in watch:
        if pre >= n_in or post >= n_out:
            raise SchemaError("run.watch", f"synapse {pre}-{post} outside the network")

    dev = {k: v for k, v in raw["device"].items() if k != "read_noise"}
    izh = dict(raw["neuron"]["izhikevich"])
    steps = izh.pop("steps_per_presentation")
    try:
        return RunConfig(
            layers=(n_in, n_out),
            neuron=NeuronConfig(raw["neuron"]["model"],
                                LIFConfig(raw["neuron"]["threshold"], raw["neuron"]["leak_factor"]),
                                IzhikevichConfig(**izh), steps),
            rule=RuleConfig(raw["rule"]["name"], DeltaRuleConfig(raw["rule"]["learning_rate"]),
                            STDPConfig(**raw["rule"]["stdp"])),
            device=DeviceParams(**dev),
            read_noise=ReadNoise(**raw["device"]["read_noise"]),
            array=ArrayConfig(arr["rows"], arr["cols"], BiasScheme.parse(arr["scheme"]),
                              arr["R_init_mean"], arr["R_init_jitter_rel"]),
            pulses=tuple(Pulse(p["amplitude"], p["width"]) for p in raw["pulses"]),
            policy=ProgramPolicy(**raw["policy"]),
            run=RunSettings(raw["run"]["epochs"], raw["run"]["minibatch"], raw["run"]["seed"],
                            raw["run"]["mode"], raw["run"]["test_samples"],
                            raw["run"]["eval_every"], watch),
            raw=raw,
        )
    except ValueError as e:
        raise SchemaError("", str(e)) from e


def parse_config(text: str) -> RunConfig:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigSyntaxError(e.msg, e.lineno, e.colno) from e
    return from_dict(data)


def default_config(overrides: dict | None = None) -> RunConfig:
    cfg = from_dict({})
    return cfg.with_overrides(**overrides) if overrides else cfg
