import xml.etree.ElementTree as ET

import numpy as np
import pytest

from memnet.dataio.artifacts import read_accuracy, read_weight_trace, render_analysis, write_artifacts
from memnet.dataio.config import default_config
from memnet.dataio.mnist import load_mnist_dir
from memnet.engine import Dataset, run_training
from memnet.errors import DataError
from memnet.plotting import heatmap_figure

SVG = "{http://www.w3.org/2000/svg}"


def _group(path, gid):
    root = ET.parse(path).getroot()
    for g in root.iter(f"{SVG}g"):
        if g.get("id") == gid:
            return g
    raise AssertionError(f"no element {gid} in {path}")


def _fills(group):
    out = set()
    for el in group.iter():
        style = el.get("style", "")
        for part in style.split(";"):
            if part.strip().startswith("fill:") and "none" not in part:
                out.add(part.split(":")[1].strip())
    return out


def test_uniform_heatmap_is_single_colour(tmp_path):
    p = tmp_path / "h.svg"
    assert heatmap_figure(np.full((100, 100), 11000.0), p) == (11000.0, 11000.0)
    assert len(_fills(_group(p, "resistance-grid"))) == 1


def test_heatmap_scale_tracks_grid(tmp_path):
    R = np.linspace(2230.4, 12855.4, 100).reshape(10, 10)
    p = tmp_path / "h.svg"
    lo, hi = heatmap_figure(R, p)
    assert (lo, hi) == (R.min(), R.max())
    note = "".join(_group(p, "colour-scale").itertext())
    assert f"min={float(R.min())!r}" in note and f"max={float(R.max())!r}" in note
    assert len(_fills(_group(p, "resistance-grid"))) > 10


def test_heatmap_is_reproducible(tmp_path):
    R = np.random.default_rng(0).uniform(2000, 13000, (20, 20))
    heatmap_figure(R, tmp_path / "a.svg")
    heatmap_figure(R, tmp_path / "b.svg")
    assert (tmp_path / "a.svg").read_bytes() == (tmp_path / "b.svg").read_bytes()


@pytest.fixture(scope="module")
def run_dir(tmp_path_factory):
    from conftest import MNIST_DIR
    data = Dataset.from_mnist(load_mnist_dir(MNIST_DIR))
    cfg = default_config({"run.epochs": 4, "run.minibatch": 5, "run.test_samples": 20, "run.eval_every": 2})
    out = tmp_path_factory.mktemp("run")
    write_artifacts(run_training(cfg, data), out)
    return out


def test_artifact_set(run_dir):
    names = {p.name for p in run_dir.iterdir()}
    assert {"accuracy.csv", "weights_trace.csv", "fire_history.csv", "resistance_snapshot_pre.csv",
            "resistance_snapshot_post.csv", "resistance_heatmap.svg", "run.json"} <= names
    acc = read_accuracy(run_dir / "accuracy.csv")
    assert [e for e, _, _ in acc] == [1, 2, 3, 4] and acc[0][2] is None and acc[1][2] is not None
    assert len(read_weight_trace(run_dir / "weights_trace.csv")) == 8
    assert len((run_dir / "fire_history.csv").read_text().splitlines()) == 21


def test_render_analysis(run_dir, tmp_path):
    paths = render_analysis(run_dir, tmp_path / "figs")
    assert sorted(p.name for p in paths) == ["accuracy.svg", "heatmap_post.svg", "heatmap_pre.svg",
                                             "weights_trace.svg"]
    for p in paths:
        ET.parse(p)
    assert len(_fills(_group(tmp_path / "figs" / "heatmap_pre.svg", "resistance-grid"))) == 1


def test_render_analysis_missing(tmp_path):
    with pytest.raises(DataError, match="accuracy.csv.*weights_trace.csv"):
        render_analysis(tmp_path)


def test_corrupt_logs(tmp_path):
    (tmp_path / "a.csv").write_text("epoch,train_acc,test_acc\n1,x,\n")
    with pytest.raises(DataError):
        read_accuracy(tmp_path / "a.csv")
    (tmp_path / "w.csv").write_text("nope\n")
    with pytest.raises(DataError):
        read_weight_trace(tmp_path / "w.csv")
