import gzip
import json
import os
import struct

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from memnet.crossbar import BiasScheme
from memnet.dataio.config import default_config, from_dict, parse_config
from memnet.dataio.mnist import (
    IMAGE_MAGIC, LABEL_MAGIC, load_mnist, load_mnist_dir, preprocess, preprocess_all, read_idx, write_idx,
)
from memnet.dataio.tables import (
    ConnectivityMatrix, StimuliSet, dense_connectivity, parse_connectivity, parse_snapshot,
    parse_stimuli, write_connectivity, write_snapshot, write_stimuli,
)
from memnet.errors import ConfigSyntaxError, DataError, SchemaError

TABLE_I_JSON = {
    "neuron": {"threshold": 0.01},
    "rule": {"learning_rate": 3.5e-6},
    "device": {"A_p": 0.21389, "A_n": -0.81302, "t_p": 1.6591, "t_n": 1.5148,
               "a_0p": 37087, "a_1p": -20193, "a_0n": 43430, "a_1n": 34333},
    "array": {"rows": 100, "cols": 100},
    "policy": {"r_tolerance": 0.001, "max_steps": 5},
}


# config

def test_config_echoes_table_values():
    cfg = parse_config(json.dumps(TABLE_I_JSON))
    assert cfg.device.A_p == 0.21389 and cfg.device.a_1n == 34333
    assert cfg.policy.max_steps == 5 and cfg.policy.r_tolerance == 0.001
    assert cfg.neuron.lif.threshold == 0.01 and cfg.rule.delta.learning_rate == 3.5e-6
    assert (cfg.array.rows, cfg.array.cols) == (100, 100)
    assert cfg.layers == (484, 10)


def test_config_empty_is_syntax_error():
    with pytest.raises(ConfigSyntaxError):
        parse_config("")


def test_config_syntax_error_location():
    with pytest.raises(ConfigSyntaxError) as e:
        parse_config('{\n  "run": {"seed": }\n}')
    assert e.value.line == 2


def test_config_negative_threshold():
    with pytest.raises(SchemaError) as e:
        parse_config('{"neuron": {"threshold": -1}}')
    assert e.value.path == "neuron.threshold"


@pytest.mark.parametrize("bad, path", [
    ({"run": {"mode": "analog"}}, "run.mode"),
    ({"array": {"scheme": "diagonal"}}, "array.scheme"),
    ({"policy": {"max_steps": 0}}, "policy.max_steps"),
    ({"bogus": 1}, ""),
    ({"run": {"watch": ["999-1"]}}, "run.watch"),
    ({"network": {"layers": [484, 30]}}, "network.layers"),
])
def test_config_schema_violations(bad, path):
    with pytest.raises(SchemaError) as e:
        from_dict(bad)
    assert e.value.path == path


def test_config_overrides_and_digest():
    cfg = default_config()
    other = cfg.with_overrides(**{"run.seed": 9, "array.scheme": "selectorless"})
    assert other.run.seed == 9 and other.array.scheme is BiasScheme.SELECTORLESS
    assert cfg.digest != other.digest
    assert parse_config(cfg.to_json()).digest == cfg.digest


# connectivity

def test_dense_connectivity_round_trip():
    conn = dense_connectivity(484, 10, 100)
    assert len(conn) == 4840
    assert conn.device_of()[(384, 6)] == (38, 46)
    again = parse_connectivity(write_connectivity(conn), 484, 10, 100, 100)
    assert again == conn


def test_connectivity_errors():
    dup = "pre,post,row,col\n0,0,1,1\n0,1,1,1\n"
    with pytest.raises(DataError, match="more than one"):
        parse_connectivity(dup)
    with pytest.raises(DataError, match="overflows"):
        parse_connectivity("pre,post,row,col\n0,0,100,0\n", 2, 2, 100, 100)
    with pytest.raises(DataError, match="header"):
        parse_connectivity("a,b,c,d\n")
    with pytest.raises(DataError, match="line 2"):
        parse_connectivity("pre,post,row,col\n0,x,0,0\n")
    with pytest.raises(DataError, match="duplicate"):
        ConnectivityMatrix(((0, 0, 0, 0), (0, 0, 0, 1))).validate(1, 1, 2, 2)


# stimuli

def test_stimuli_parse():
    stim = parse_stimuli("t,label,s0,s1,s2,s3\n0,1,1,0,0,1\n1,,0,0,0,0\n2,0,1,1,1,1\n")
    assert stim.spikes.shape == (3, 4) and stim.labels == (1, None, 0)


def test_stimuli_errors():
    with pytest.raises(DataError, match="non-binary"):
        parse_stimuli("0,1,2,0\n")
    with pytest.raises(DataError, match="width"):
        parse_stimuli("0,1,1,0\n1,1,1\n")
    with pytest.raises(DataError, match="out of range"):
        parse_stimuli("0,12,1,0\n", n_labels=10)


@settings(max_examples=50, deadline=None)
@given(st.data())
def test_stimuli_round_trip(data):
    t = data.draw(st.integers(1, 6))
    w = data.draw(st.integers(1, 8))
    bits = np.array(data.draw(st.lists(st.integers(0, 1), min_size=t * w, max_size=t * w)),
                    dtype=np.int8).reshape(t, w)
    labels = tuple(data.draw(st.lists(st.one_of(st.none(), st.integers(0, 9)), min_size=t, max_size=t)))
    back = parse_stimuli(write_stimuli(StimuliSet(bits, labels)))
    assert np.array_equal(back.spikes, bits) and back.labels == labels


# snapshot

def test_snapshot_uniform():
    text = write_snapshot(np.full((100, 100), 11000.0))
    values = text.replace("\n", ",").strip(",").split(",")
    assert len(values) == 10000 and set(values) == {"11000.0"}


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(1.0, 1e6), min_size=6, max_size=6))
def test_snapshot_round_trip_exact(vals):
    R = np.array(vals).reshape(2, 3)
    assert np.array_equal(parse_snapshot(write_snapshot(R)), R)


def test_snapshot_errors():
    with pytest.raises(DataError):
        parse_snapshot("1,2\n3\n")
    with pytest.raises(DataError):
        parse_snapshot("")


# IDX / MNIST

def test_idx_round_trip(tmp_path):
    imgs = np.random.default_rng(0).integers(0, 256, (5, 28, 28), dtype=np.uint8)
    labels = np.arange(5, dtype=np.uint8)
    write_idx(tmp_path / "i.gz", imgs)
    write_idx(tmp_path / "l", labels)
    a, b = load_mnist(tmp_path / "i.gz", tmp_path / "l")
    assert np.array_equal(a, imgs) and np.array_equal(b, labels)


def test_idx_truncated(tmp_path):
    p = tmp_path / "t"
    p.write_bytes(struct.pack(">IIII", IMAGE_MAGIC, 2, 28, 28) + bytes(100))
    with pytest.raises(DataError, match="expected 1568 bytes, got 100"):
        read_idx(p, IMAGE_MAGIC)


def test_idx_bad_magic(tmp_path):
    p = tmp_path / "m"
    p.write_bytes(struct.pack(">II", 0x1234, 1) + b"\0")
    with pytest.raises(DataError, match="magic"):
        read_idx(p, LABEL_MAGIC)


def test_idx_count_mismatch(tmp_path):
    write_idx(tmp_path / "i", np.zeros((10000, 28, 28), dtype=np.uint8))
    write_idx(tmp_path / "l", np.zeros(10001, dtype=np.uint8))
    with pytest.raises(DataError, match="10000 images vs 10001 labels"):
        load_mnist(tmp_path / "i", tmp_path / "l")


def test_bundled_subset(mnist_dir):
    splits = load_mnist_dir(mnist_dir)
    assert splits["train"][0].shape == (4500, 28, 28) and splits["test"][0].shape == (500, 28, 28)
    assert set(np.unique(splits["train"][1])) == set(range(10))


@pytest.mark.skipif("MNIST_DIR" not in os.environ, reason="set MNIST_DIR to the official IDX files")
def test_official_train_count():
    assert load_mnist_dir(os.environ["MNIST_DIR"])["train"][0].shape[0] == 60000


def test_missing_mnist_dir(tmp_path):
    with pytest.raises(DataError):
        load_mnist_dir(tmp_path / "nope")
    with pytest.raises(DataError, match="missing"):
        load_mnist_dir(tmp_path)


def test_preprocess():
    assert np.array_equal(preprocess(np.zeros((28, 28), np.uint8)), np.zeros(484))
    assert np.array_equal(preprocess(np.full((28, 28), 255, np.uint8)), np.ones(484))
    img = np.zeros((28, 28), np.uint8)
    img[3, 3], img[3, 4] = 127, 128
    out = preprocess(img)
    assert out[0] == 0 and out[1] == 1 and out.sum() == 1
    img = np.zeros((28, 28), np.uint8)
    img[2, :] = img[25, :] = img[:, 2] = img[:, 25] = 255   # outside the crop
    assert preprocess(img).sum() == 0
    with pytest.raises(ValueError):
        preprocess(np.zeros((22, 22)))


def test_preprocess_all_matches_single():
    imgs = np.random.default_rng(1).integers(0, 256, (4, 28, 28), dtype=np.uint8)
    assert np.array_equal(preprocess_all(imgs), np.stack([preprocess(i) for i in imgs]))


def test_gzip_writer_is_reproducible(tmp_path):
    a = np.arange(10, dtype=np.uint8)
    write_idx(tmp_path / "a.gz", a)
    first = (tmp_path / "a.gz").read_bytes()
    write_idx(tmp_path / "a.gz", a)
    assert (tmp_path / "a.gz").read_bytes() == first
    assert gzip.decompress(first)[:4] == struct.pack(">I", 0x801)
