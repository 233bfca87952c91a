"""Command-line entry point: ``memnet {train,test,program,characterize,analyze}``.

Exit codes: 0 success, 1 usage error, 2 bad input data, 3 runtime failure.
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from .crossbar import Crossbar
from .dataio.artifacts import render_analysis, write_artifacts
from .dataio.config import default_config, parse_config
from .dataio.mnist import load_mnist_dir
from .dataio.tables import parse_connectivity, parse_snapshot, parse_stimuli
from .device import Pulse, pulse_train
from .engine import Dataset, build_network, evaluate, run_training, seed_streams
from .errors import DataError
from .instrument import PortError, VirtualPort, remote_port
from .plasticity import reachable_window
from .programmer import program

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_RUNTIME = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _read(path) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise DataError(f"cannot read {path}: {e.strerror or e}") from None


def _float_list(text):
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _load_config(args):
    cfg = parse_config(_read(args.config)) if getattr(args, "config", None) else default_config()
    overrides = {}
    if getattr(args, "seed", None) is not None:
        overrides["run.seed"] = args.seed
    if getattr(args, "mode", None):
        overrides["run.mode"] = args.mode
    if getattr(args, "scheme", None):
        overrides["array.scheme"] = args.scheme
    if getattr(args, "epochs", None) is not None:
        overrides["run.epochs"] = args.epochs
    if getattr(args, "watch", None):
        overrides["run.watch"] = [w.strip() for w in args.watch.split(",") if w.strip()]
    return cfg.with_overrides(**overrides) if overrides else cfg


def _load_data(args, cfg) -> Dataset:
    if args.mnist:
        return Dataset.from_mnist(load_mnist_dir(args.mnist))
    stim = parse_stimuli(_read(args.stimuli), width=cfg.layers[0], n_labels=cfg.layers[1])
    return Dataset.from_stimuli(stim, cfg.run.test_samples)


def _load_connectivity(args, cfg):
    if not args.connectivity:
        return None
    n_in, n_out = cfg.layers
    return parse_connectivity(_read(args.connectivity), n_in, n_out, cfg.array.rows, cfg.array.cols)


def _open_port(spec: str | None):
    if spec in (None, "virtual"):
        return None
    if not spec.startswith("remote:"):
        raise UsageError(f"--port must be 'virtual' or 'remote:HOST:PORT', got {spec!r}")
    return remote_port(spec)


def cmd_train(args) -> int:
    cfg = _load_config(args)
    data = _load_data(args, cfg)
    conn = _load_connectivity(args, cfg)
    out = Path(args.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        print(f"error: cannot create {out}: {e.strerror or e}", file=sys.stderr)
        return EXIT_RUNTIME
    port = _open_port(args.port)
    try:
        runlog = run_training(cfg, data, conn, port)
    finally:
        if port is not None:
            port.close()
    write_artifacts(runlog, out)
    train = runlog.train_accuracy
    print(f"train={'nan' if train is None else f'{train:.4f}'} test={runlog.test_accuracy:.4f}")
    return EXIT_OK


def cmd_test(args) -> int:
    cfg = _load_config(args)
    data = _load_data(args, cfg)
    conn = _load_connectivity(args, cfg)
    port = _open_port(args.port)
    if args.snapshot:
        if port is not None:
            raise UsageError("--snapshot only applies to the virtual array")
        R = parse_snapshot(_read(args.snapshot))
        if R.shape != (cfg.array.rows, cfg.array.cols):
            raise DataError(f"snapshot shape {R.shape} != array {cfg.array.rows}x{cfg.array.cols}")
        streams = seed_streams(cfg.run.seed)
        port = VirtualPort(Crossbar(R, cfg.device, cfg.array.scheme), cfg.read_noise, streams["noise"])
    try:
        net = build_network(cfg, conn, port)
        acc = evaluate(net, data.test_x[:cfg.run.test_samples], data.test_y[:cfg.run.test_samples])
    finally:
        if port is not None:
            port.close()
    print(f"test={acc:.4f}")
    return EXIT_OK


def cmd_program(args) -> int:
    cfg = _load_config(args)
    port = _open_port(args.port)
    if port is None:
        cb = Crossbar.initialize(cfg.array.rows, cfg.array.cols, cfg.device, cfg.array.scheme,
                                 cfg.array.R_init_mean, cfg.array.R_init_jitter_rel,
                                 seed_streams(cfg.run.seed)["init"])
        if args.r_start is not None:
            cb.R[args.row, args.col] = args.r_start
        port = VirtualPort(cb, cfg.read_noise, seed_streams(cfg.run.seed)["noise"])
    try:
        res = program(port, args.row, args.col, args.target, cfg.pulses, cfg.policy, cfg.device)
    finally:
        port.close()
    print("step,amplitude,width")
    for i, p in enumerate(res.pulses_applied, start=1):
        print(f"{i},{p.amplitude!r},{p.width!r}")
    lo, hi = reachable_window(cfg.device, [p.amplitude for p in cfg.pulses])
    print(f"final_R={res.final_R!r} steps={res.steps_used} converged={str(res.converged).lower()} "
          f"window=[{lo!r},{hi!r}]")
    return EXIT_OK


def characterize_table(params, amplitudes, count, R_start, width) -> str:
    cols = [[R_start] + pulse_train(params, R_start, Pulse(a, width), count) for a in amplitudes]
    lines = ["pulse," + ",".join(f"R@{a!r}V" for a in amplitudes)]
    for k in range(count + 1):
        lines.append(f"{k}," + ",".join(repr(c[k]) for c in cols))
    return "\n".join(lines) + "\n"


def cmd_characterize(args) -> int:
    cfg = _load_config(args)
    text = characterize_table(cfg.device, args.amplitudes, args.pulses, args.r_start, args.width)
    if args.out:
        try:
            Path(args.out).write_text(text)
        except OSError as e:
            print(f"error: cannot write {args.out}: {e.strerror or e}", file=sys.stderr)
            return EXIT_RUNTIME
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_analyze(args) -> int:
    for p in render_analysis(args.run, args.out):
        print(p)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="memnet", description="Memristive neuromorphic array emulator.")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, config_required):
        sp.add_argument("--config", required=config_required, help="JSON run configuration")
        sp.add_argument("--seed", type=int)
        sp.add_argument("--mode", choices=["memristor", "baseline"])
        sp.add_argument("--scheme", choices=["selector", "selectorless"])
        sp.add_argument("--port", default="virtual", help="virtual | remote:HOST:PORT")

    def data_source(sp):
        sp.add_argument("--connectivity", help="pre,post,row,col CSV (default: dense packing)")
        src = sp.add_mutually_exclusive_group(required=True)
        src.add_argument("--stimuli", help="stimuli CSV (t,label,spikes...)")
        src.add_argument("--mnist", help="directory with train-/t10k- IDX files")

    sp = sub.add_parser("train", help="train and evaluate, writing run artifacts")
    common(sp, True)
    data_source(sp)
    sp.add_argument("--out", required=True, help="artifact directory")
    sp.add_argument("--epochs", type=int)
    sp.add_argument("--watch", help='synapses to trace, e.g. "384-6,10-6"')
    sp.set_defaults(func=cmd_train)

    sp = sub.add_parser("test", help="evaluate the network on the held-out samples")
    common(sp, True)
    data_source(sp)
    sp.add_argument("--snapshot", help="resistance snapshot CSV to load into the virtual array")
    sp.set_defaults(func=cmd_test)

    sp = sub.add_parser("program", help="predict-write-verify one device")
    common(sp, False)
    sp.add_argument("--row", type=int, required=True)
    sp.add_argument("--col", type=int, required=True)
    sp.add_argument("--target", type=float, required=True, help="expected resistance (ohm)")
    sp.add_argument("--r-start", type=float, help="initial resistance of the device (virtual only)")
    sp.set_defaults(func=cmd_program)

    sp = sub.add_parser("characterize", help="pulse-train sweep of the device model")
    sp.add_argument("--config")
    sp.add_argument("--amplitudes", type=_float_list, required=True, help="e.g. -1.2,0,1.2")
    sp.add_argument("--pulses", type=int, default=100)
    sp.add_argument("--r-start", type=float, default=11000.0)
    sp.add_argument("--width", type=float, default=1e-5)
    sp.add_argument("--out", help="CSV path (default: stdout)")
    sp.set_defaults(func=cmd_characterize)

    sp = sub.add_parser("analyze", help="render SVG figures from a run directory")
    sp.add_argument("--run", required=True, help="directory written by 'train'")
    sp.add_argument("--out", help="figure directory (default: RUN/analysis)")
    sp.set_defaults(func=cmd_analyze)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except UsageError as e:
        parser.print_usage(sys.stderr)
        print(f"memnet: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except DataError as e:
        print(f"memnet: data error: {e}", file=sys.stderr)
        return EXIT_DATA
    except (PortError, OSError, RuntimeError, ValueError) as e:
        print(f"memnet: runtime error: {e}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
