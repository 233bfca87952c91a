"""End-to-end acceptance checks.

Each test records one PASS/FAIL line in ``conftest.ACCEPTANCE``; the terminal
summary prints them after the run. Desk-scale training runs are shared
through module-scoped fixtures.
"""
import time

import numpy as np
import pytest

import oracles
from conftest import ACCEPTANCE, MNIST_DIR
from memnet.cli import main
from memnet.crossbar import Crossbar
from memnet.dataio.artifacts import write_artifacts
from memnet.dataio.config import default_config
from memnet.dataio.mnist import load_mnist_dir
from memnet.device import TABLE_I, Pulse, operating_range, pulse_train
from memnet.engine import Dataset, initial_crossbar, presentation_order, run_training, seed_streams
from memnet.instrument import VirtualPort, mock_server, remote_port
from memnet.programmer import ProgramPolicy, ladder_options, program, width_ladder

DESK = {"run.epochs": 20, "run.minibatch": 100, "run.test_samples": 500}
ARTIFACTS = ("accuracy.csv", "weights_trace.csv", "fire_history.csv", "resistance_snapshot_pre.csv",
             "resistance_snapshot_post.csv", "resistance_heatmap.svg")


def record(n, name, ok, detail):
    ACCEPTANCE.append((n, name, bool(ok), detail))
    assert ok, detail


@pytest.fixture(scope="module")
def data():
    return Dataset.from_mnist(load_mnist_dir(MNIST_DIR))


@pytest.fixture(scope="module")
def desk_runs(data):
    runs, times = {}, {}
    for name, extra in [("baseline", {"run.mode": "baseline"}), ("selector", {}),
                        ("selectorless", {"array.scheme": "selectorless"})]:
        t = time.perf_counter()
        runs[name] = run_training(default_config({**DESK, **extra}), data)
        times[name] = time.perf_counter() - t
    return runs, times


def test_1_device_fixed_points():
    pulse_train(TABLE_I, 11000, Pulse(-1.2), 2)  # compile outside the timed region
    t = time.perf_counter()
    lo = pulse_train(TABLE_I, 11000, Pulse(-1.2, 1e-5), 500)[-1]
    hi = pulse_train(TABLE_I, 11000, Pulse(1.2, 1e-5), 500)[-1]
    dt = time.perf_counter() - t
    e_lo, e_hi = abs(lo - 2230.4) / 2230.4, abs(hi - 12855.4) / 12855.4
    record(1, "device fixed points", e_lo <= 1e-3 and e_hi <= 1e-3 and dt < 1,
           f"R(-1.2V)={lo:.1f} err={e_lo:.2%}, R(+1.2V)={hi:.1f} err={e_hi:.2%}, {dt:.2f}s")


def test_2_half_select_drift():
    t = time.perf_counter()
    cb = Crossbar(np.full((3, 3), 11000.0), TABLE_I, "selectorless")
    off_line = np.ix_([1, 2], [1, 2])
    untouched = True
    for k in range(2000):
        cb.write_selected(0, 0, Pulse(-1.2 if k % 2 == 0 else 1.2, 1e-5))
        untouched &= bool(np.all(cb.R[off_line] == 11000.0))
    dt = time.perf_counter() - t
    half = np.array([cb.R[0, 1], cb.R[0, 2], cb.R[1, 0], cb.R[2, 0]])
    err = np.max(np.abs(half - 24971.2) / 24971.2)
    record(2, "half-select drift", err <= 0.02 and untouched and dt < 5,
           f"half-selected R={np.round(half, 1).tolist()} max err={err:.2%}, "
           f"off-line untouched={untouched}, {dt:.2f}s")


def _program_all(targets, starts, options):
    policy = ProgramPolicy()
    return [program(VirtualPort(Crossbar([[R0]], TABLE_I)), 0, 0, float(T), options, policy, TABLE_I)
            for T, R0 in zip(targets, starts)]


def test_3_predict_write_verify():
    fine = ladder_options(width_ladder(1e-7, 5e-3))
    long = ladder_options(width_ladder(1e-7, 1e-1))
    _program_all([5000], [11000], long)  # compile
    rng = np.random.default_rng(2024)
    t = time.perf_counter()
    res = _program_all(rng.uniform(2300, 12800, 1000), rng.uniform(2300, 12800, 1000), fine)
    rate = np.mean([r.converged for r in res])
    # the set the options can actually reach: r_n of the strongest negative
    # pulse up to r_p of the weakest positive one (r_p falls as v rises)
    lo = operating_range(TABLE_I, min(p.amplitude for p in long))
    hi = max(operating_range(TABLE_I, p.amplitude) for p in long if p.amplitude > 0)
    low_t, high_t = rng.uniform(100, 2200, 20), rng.uniform(19000, 40000, 20)
    far = _program_all(np.r_[low_t, high_t], rng.uniform(2300, 12800, 40), long)
    dt = time.perf_counter() - t
    bound = np.r_[np.full(20, lo), np.full(20, hi)]
    final = np.array([r.final_R for r in far])
    edge = np.abs(final - bound) / bound
    ok_far = not any(r.converged for r in far) and np.all(edge <= 1e-3)
    record(3, "predict-write-verify", rate >= 0.99 and ok_far and dt < 10,
           f"reachable converged {rate:.1%}; unreachable window=[{lo:.1f},{hi:.1f}] "
           f"max boundary err={edge.max():.2e}; {dt:.2f}s")


@pytest.mark.slow
def test_4_desk_scale_ordering(desk_runs):
    runs, times = desk_runs
    b, s, l = (runs[k].test_accuracy for k in ("baseline", "selector", "selectorless"))
    total = sum(times.values())
    ok = b >= 0.70 and abs(s - b) <= 0.06 and s - l >= 0.10 and total < 300
    record(4, "desk-scale ordering", ok,
           f"baseline={b:.3f} selector={s:.3f} selectorless={l:.3f}, {total:.0f}s")


def test_5_baseline_oracle(data):
    cfg = default_config({"run.mode": "baseline", "run.epochs": 2, "run.minibatch": 100,
                          "run.test_samples": 10})
    log = run_training(cfg, data)
    # dense reference: same shuffle, row-by-row synaptic sum, outer-product update
    G = np.full((484, 10), 1.0 / 11000.0)
    lr, th = cfg.rule.delta.learning_rate, cfg.neuron.lif.threshold
    order = presentation_order(seed_streams(cfg.run.seed)["order"], len(data.train_x), 2, 100)
    for k in np.concatenate(order):
        x = data.train_x[k].astype(np.float64)
        drive = np.zeros(10)
        for i in np.flatnonzero(x):
            drive = drive + G[i]
        w = int(np.argmax(drive))
        f = np.zeros(10)
        if drive[w] > th:
            f[w] = 1.0
        t = np.zeros(10)
        t[int(data.train_y[k])] = 1.0
        G = G + lr * np.outer(x, t - f)
    diff = float(np.max(np.abs(log.weights_post - G)))
    record(5, "baseline oracle equivalence", diff <= 1e-12, f"200 samples, max |dW|={diff:.1e}")


def test_6_dot_product_oracle():
    rng = np.random.default_rng(6)
    worst = 0.0
    for _ in range(100):
        R = rng.uniform(2230.4, 24971.2, (8, 5))
        v = rng.uniform(-0.3, 0.3, 8)
        got = Crossbar(R, TABLE_I).dot_product(v)
        ref = np.array(oracles.matvec(1.0 / R, v))
        worst = max(worst, float(np.max(np.abs(got - ref) / np.abs(ref))))
    record(6, "dot-product oracle", worst <= 1e-12, f"100 instances 8x5, max rel err={worst:.1e}")


@pytest.mark.slow
def test_7_port_transparency(desk_runs, data, tmp_path):
    runs, _ = desk_runs
    cfg = default_config(DESK)
    streams = seed_streams(cfg.run.seed)
    cb = initial_crossbar(cfg, streams["init"])
    t = time.perf_counter()
    with mock_server(cb, cfg.read_noise, streams["noise"]) as srv, \
            remote_port("remote:%s:%d" % srv.address) as port:
        remote = run_training(cfg, data, port=port)
    dt = time.perf_counter() - t
    write_artifacts(runs["selector"], tmp_path / "virtual")
    write_artifacts(remote, tmp_path / "remote")
    differ = [n for n in ARTIFACTS
              if (tmp_path / "virtual" / n).read_bytes() != (tmp_path / "remote" / n).read_bytes()]
    record(7, "port transparency", not differ,
           f"{len(ARTIFACTS)} artifacts compared, differing={differ}, remote run {dt:.0f}s")


def test_8_cli_determinism(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text('{"run": {"epochs": 10, "minibatch": 20, "test_samples": 100},'
                   ' "array": {"R_init_jitter_rel": 0.02},'
                   ' "device": {"read_noise": {"kind": "gaussian-relative", "sigma_rel": 0.005}}}')
    for name in ("a", "b"):
        assert main(["train", "--config", str(cfg), "--mnist", str(MNIST_DIR), "--seed", "7",
                     "--out", str(tmp_path / name)]) == 0
    capsys.readouterr()
    csvs = sorted(p.name for p in (tmp_path / "a").glob("*.csv"))
    differ = [n for n in csvs if (tmp_path / "a" / n).read_bytes() != (tmp_path / "b" / n).read_bytes()]
    record(8, "determinism", csvs and not differ, f"{len(csvs)} CSV artifacts, differing={differ}")


@pytest.mark.slow
def test_9_weight_traces(desk_runs):
    runs, _ = desk_runs
    stim = [g for _, s, g in runs["selector"].weight_trace if s == "384-6"]
    quiet = [g for _, s, g in runs["selectorless"].weight_trace if s == "10-6"]
    g0 = 1.0 / 11000.0
    tol = ProgramPolicy().r_tolerance
    # ripple: a drop larger than one programming tolerance counts as a decrease
    dips = [(b - a) / a for a, b in zip([g0] + stim, stim)]
    worst_dip = min(dips)
    seq = [g0] + quiet
    rises = sum(b >= a for a, b in zip(seq, seq[1:]))
    ok = worst_dip >= -tol and rises == 0
    record(9, "weight-trace shape", ok,
           f"selector 384-6 worst epoch change={worst_dip:+.2%} (ripple limit {tol:.1%}); "
           f"selectorless 10-6 {quiet[0]:.3e}->{quiet[-1]:.3e}, {rises}/{len(quiet)} epochs not decreasing")
