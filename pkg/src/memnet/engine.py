"""Training/inference orchestration for the single-layer WTA network.

Per presentation: read the array, integrate the input spikes, arbitrate,
compute a weight change, and either program the mapped devices through the
port (memristor mode) or add the change to a float matrix (baseline mode).
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .crossbar import Crossbar
from .dataio.config import RunConfig
from .dataio.mnist import preprocess, preprocess_all
from .dataio.tables import ConnectivityMatrix, StimuliSet, dense_connectivity
from .errors import DataError
from .instrument import DeviceArrayPort, VirtualPort
from .neurons import LayerState, izhikevich_step, lif_step, synaptic_drive, wta_arbitrate
from .plasticity import DeltaRule, STDPRule, reachable_window, target_resistance
from .programmer import program

log = logging.getLogger(__name__)


@dataclass
class Dataset:
    train_x: np.ndarray
    train_y: np.ndarray
    test_x: np.ndarray
    test_y: np.ndarray

    @classmethod
    def from_mnist(cls, splits: dict) -> "Dataset":
        (tr_img, tr_lab), (te_img, te_lab) = splits["train"], splits["test"]
        return cls(preprocess_all(tr_img), np.asarray(tr_lab, dtype=np.int64),
                   preprocess_all(te_img), np.asarray(te_lab, dtype=np.int64))

    @classmethod
    def from_stimuli(cls, stim: StimuliSet, test_samples: int) -> "Dataset":
        """Labelled timesteps; the last ``test_samples`` of them are held out."""
        keep = [i for i, lab in enumerate(stim.labels) if lab is not None]
        if not keep:
            raise DataError("stimuli file has no labelled timesteps")
        x = stim.spikes[keep]
        y = np.array([stim.labels[i] for i in keep], dtype=np.int64)
        n_test = min(test_samples, len(keep) - 1) if len(keep) > 1 else 0
        split = len(keep) - n_test
        if n_test == 0:
            return cls(x, y, x, y)
        return cls(x[:split], y[:split], x[split:], y[split:])


@dataclass
class RunLog:
    seed: int
    config_digest: str
    accuracy: list = field(default_factory=list)       # (epoch, train_acc, test_acc)
    weight_trace: list = field(default_factory=list)   # (epoch, "pre-post", conductance)
    fire_history: list = field(default_factory=list)   # (step, epoch, label, winner)
    programs: list = field(default_factory=list)       # (step, row, col, R_expected, final_R, steps, converged)
    snapshot_pre: np.ndarray | None = None
    snapshot_post: np.ndarray | None = None
    weights_post: np.ndarray | None = None             # (n_in, n_out) conductances after training
    stats: dict = field(default_factory=lambda: {"programmed": 0, "not_converged": 0,
                                                 "saturated": 0, "pulses": 0})

    @property
    def train_accuracy(self) -> float | None:
        accs = [a for _, a, _ in self.accuracy if a is not None]
        return accs[-1] if accs else None

    @property
    def test_accuracy(self) -> float | None:
        accs = [t for _, _, t in self.accuracy if t is not None]
        return accs[-1] if accs else None


def seed_streams(seed: int) -> dict[str, np.random.Generator]:
    """Independent generators for array init, sample order and read noise."""
    init, order, noise = np.random.SeedSequence(seed).spawn(3)
    return {"init": np.random.default_rng(init), "order": np.random.default_rng(order),
            "noise": np.random.default_rng(noise)}


def presentation_order(rng: np.random.Generator, n_train: int, epochs: int, minibatch: int) -> list[np.ndarray]:
    """Sequential, wrapping minibatches over one seed-shuffled permutation."""
    perm = rng.permutation(n_train)
    total = epochs * minibatch
    idx = perm[np.arange(total) % n_train]
    return [idx[e * minibatch:(e + 1) * minibatch] for e in range(epochs)]


def initial_crossbar(cfg: RunConfig, rng: np.random.Generator) -> Crossbar:
    a = cfg.array
    return Crossbar.initialize(a.rows, a.cols, cfg.device, a.scheme, a.R_init_mean,
                               a.R_init_jitter_rel, rng)


class Network:
    """Synapse view over either a device port (memristor mode) or a float matrix (baseline)."""

    def __init__(self, cfg: RunConfig, conn: ConnectivityMatrix, port: DeviceArrayPort | None = None,
                 weights: np.ndarray | None = None):
        self.cfg = cfg
        self.n_in, self.n_out = cfg.layers
        self.conn = conn
        self.dev_rows, self.dev_cols = conn.index_arrays(self.n_in, self.n_out)
        self.mapped = self.dev_rows >= 0
        self.port = port
        self.weights = weights
        if (port is None) == (weights is None):
            raise ValueError("a network needs exactly one of port or weights")
        if port is not None:
            conn.validate(self.n_in, self.n_out, port.info.rows, port.info.cols)

    @property
    def baseline(self) -> bool:
        return self.weights is not None

    def resistances(self) -> np.ndarray:
        """Full device grid as read now (memristor) or 1/G of the float weights (baseline)."""
        if self.port is not None:
            return self.port.read_all()
        R = np.full((self.cfg.array.rows, self.cfg.array.cols), np.nan)
        with np.errstate(divide="ignore"):
            R[self.dev_rows[self.mapped], self.dev_cols[self.mapped]] = 1.0 / self.weights[self.mapped]
        return R

    def conductances(self, R: np.ndarray | None = None) -> np.ndarray:
        if self.weights is not None:
            return self.weights
        if R is None:
            R = self.port.read_all()
        G = np.zeros((self.n_in, self.n_out))
        G[self.mapped] = 1.0 / R[self.dev_rows[self.mapped], self.dev_cols[self.mapped]]
        return G


def _as_spikes(sample) -> np.ndarray:
    x = np.asarray(sample)
    return preprocess(x) if x.ndim == 2 else x


def infer(cfg: RunConfig, G: np.ndarray, spikes, history: list | None = None) -> int | None:
    """WTA winner for one presentation on fixed conductances."""
    n_out = G.shape[1]
    if cfg.neuron.model == "lif":
        state = LayerState.fresh(n_out)
        lif_step(state, G, spikes, cfg.neuron.lif)
        winner = wta_arbitrate(state, cfg.neuron.lif.threshold)
    else:
        izh = cfg.neuron.izhikevich
        state = LayerState.izhikevich_rest(n_out, izh)
        current = synaptic_drive(G, np.asarray(spikes, dtype=np.float64))
        counts = np.zeros(n_out)
        for _ in range(cfg.neuron.steps_per_presentation):
            izhikevich_step(state, current, izh)
            counts += state.fired
        tally = LayerState(counts, np.zeros(n_out, dtype=np.int8))
        winner = wta_arbitrate(tally, 0.5)
    if history is not None:
        history.append(winner)
    return winner


def run_inference(net: Network, sample) -> int | None:
    return infer(net.cfg, net.conductances(), _as_spikes(sample))


def evaluate(net: Network, xs, ys, G: np.ndarray | None = None) -> float:
    """Fraction of samples whose WTA winner equals the label (no fire = wrong)."""
    xs = np.asarray(xs)
    if len(xs) == 0:
        raise DataError("cannot evaluate on an empty test set")
    if G is None:
        G = net.conductances()
    correct = 0
    if net.cfg.neuron.model == "lif":
        # fresh state per sample, so membranes are just the synaptic drive
        m = np.stack([synaptic_drive(G, x) for x in xs.astype(np.float64)])
        winners = np.argmax(m, axis=1)
        fired = m[np.arange(len(xs)), winners] > net.cfg.neuron.lif.threshold
        correct = int(np.sum(fired & (winners == np.asarray(ys))))
    else:
        for x, y in zip(xs, ys):
            correct += infer(net.cfg, G, x) == y
    return correct / len(xs)


def make_rule(cfg: RunConfig):
    if cfg.rule.name == "delta":
        return DeltaRule(cfg.rule.delta)
    return STDPRule(cfg.rule.stdp, *cfg.layers)


def build_network(cfg: RunConfig, conn: ConnectivityMatrix | None = None,
                  port: DeviceArrayPort | None = None,
                  streams: dict | None = None) -> Network:
    streams = streams if streams is not None else seed_streams(cfg.run.seed)
    n_in, n_out = cfg.layers
    conn = conn if conn is not None else dense_connectivity(n_in, n_out, cfg.array.cols)
    if cfg.run.mode == "baseline":
        cb = initial_crossbar(cfg, streams["init"])
        rows, cols = conn.index_arrays(n_in, n_out)
        weights = np.zeros((n_in, n_out))
        weights[rows >= 0] = 1.0 / cb.R[rows[rows >= 0], cols[rows >= 0]]
        return Network(cfg, conn, weights=weights)
    if port is None:
        port = VirtualPort(initial_crossbar(cfg, streams["init"]), cfg.read_noise, streams["noise"])
    return Network(cfg, conn, port=port)


def run_training(cfg: RunConfig, data: Dataset, conn: ConnectivityMatrix | None = None,
                 port: DeviceArrayPort | None = None, rule=None) -> RunLog:
    """Train for ``cfg.run.epochs`` minibatches, then score the held-out slice.

    ``port`` replaces the virtual array (e.g. a remote instrument); ``rule``
    replaces the configured learning rule with any
    ``(spikes, fired, target) -> WeightDelta`` callable.
    """
    streams = seed_streams(cfg.run.seed)
    net = build_network(cfg, conn, port, streams)
    rule = rule if rule is not None else make_rule(cfg)
    runlog = RunLog(cfg.run.seed, cfg.digest)
    n_out = net.n_out
    window = reachable_window(cfg.device, [p.amplitude for p in cfg.pulses])
    test_x = data.test_x[:cfg.run.test_samples]
    test_y = data.test_y[:cfg.run.test_samples]
    if len(data.train_x) == 0 and cfg.run.epochs > 0:
        raise DataError("training set is empty")
    if data.train_x.shape[1] != net.n_in:
        raise DataError(f"input width {data.train_x.shape[1]} != network input size {net.n_in}")

    runlog.snapshot_pre = net.resistances()
    batches = presentation_order(streams["order"], len(data.train_x), cfg.run.epochs,
                                 cfg.run.minibatch) if cfg.run.epochs else []
    step = 0
    for epoch, batch in enumerate(batches, start=1):
        correct = 0
        for k in batch:
            x, label = data.train_x[k], int(data.train_y[k])
            R = None if net.baseline else net.port.read_all()
            G = net.conductances(R)
            winner = infer(cfg, G, x)
            runlog.fire_history.append((step, epoch, label, winner))
            correct += winner == label
            fired = np.zeros(n_out, dtype=np.int8)
            if winner is not None:
                fired[winner] = 1
            target = np.zeros(n_out, dtype=np.int8)
            target[label] = 1
            delta = rule(x, fired, target)
            if net.baseline:
                for e in delta:
                    net.weights[e.row, e.col] += e.dG
            else:
                _program_delta(net, delta, R, window, step, runlog)
            step += 1

        test_acc = None
        if epoch == len(batches) or (cfg.run.eval_every and epoch % cfg.run.eval_every == 0):
            test_acc = evaluate(net, test_x, test_y)
        runlog.accuracy.append((epoch, correct / len(batch), test_acc))
        G = net.conductances()
        for pre, post in cfg.run.watch:
            runlog.weight_trace.append((epoch, f"{pre}-{post}", float(G[pre, post])))
        log.info("epoch %d train=%.4f%s", epoch, correct / len(batch),
                 "" if test_acc is None else f" test={test_acc:.4f}")

    if not batches:
        runlog.accuracy.append((0, None, evaluate(net, test_x, test_y)))
    runlog.snapshot_post = net.resistances()
    runlog.weights_post = net.conductances().copy()
    return runlog


def _program_delta(net: Network, delta, R: np.ndarray, window, step: int, runlog: RunLog) -> None:
    cfg = net.cfg
    jobs = []
    for e in delta:
        if not net.mapped[e.row, e.col]:
            continue
        jobs.append((int(net.dev_rows[e.row, e.col]), int(net.dev_cols[e.row, e.col]), e.dG))
    # ascending device order keeps selectorless disturb reproducible
    for row, col, dG in sorted(jobs):
        R_exp, saturated = target_resistance(float(R[row, col]), dG, window)
        res = program(net.port, row, col, R_exp, cfg.pulses, cfg.policy, cfg.device)
        runlog.programs.append((step, row, col, R_exp, res.final_R, res.steps_used, res.converged))
        runlog.stats["programmed"] += 1
        runlog.stats["pulses"] += res.steps_used
        runlog.stats["saturated"] += saturated
        runlog.stats["not_converged"] += not res.converged
