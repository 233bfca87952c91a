"""Build the desk-scale MNIST fixture (IDX, gzipped) from the 5000-digit subset
shipped with mlxtend (``mlxtend/data/data/mnist_5k.csv.gz``).

    python scripts/make_mnist_subset.py SOURCE OUTDIR

SOURCE is either that CSV.gz or an mlxtend wheel. The subset is class-sorted,
so it is shuffled with a fixed seed before the 4500/500 train/test split.
"""
import gzip
import io
import sys
import zipfile
from pathlib import Path

import numpy as np

from memnet.dataio.mnist import write_idx

MEMBER = "mlxtend/data/data/mnist_5k.csv.gz"


def load_csv(source: Path) -> np.ndarray:
    if source.suffix == ".whl":
        blob = zipfile.ZipFile(source).read(MEMBER)
    else:
        blob = source.read_bytes()
    text = gzip.decompress(blob).decode()
    return np.loadtxt(io.StringIO(text), delimiter=",", dtype=np.float64).astype(np.uint8)


def main(source, outdir, n_test=500, seed=0):
    data = load_csv(Path(source))
    images, labels = data[:, :-1].reshape(-1, 28, 28), data[:, -1]
    perm = np.random.default_rng(seed).permutation(len(labels))
    images, labels = images[perm], labels[perm]
    out = Path(outdir)
    out.mkdir(parents=True, exist_ok=True)
    split = len(labels) - n_test
    write_idx(out / "train-images-idx3-ubyte.gz", images[:split])
    write_idx(out / "train-labels-idx1-ubyte.gz", labels[:split])
    write_idx(out / "t10k-images-idx3-ubyte.gz", images[split:])
    write_idx(out / "t10k-labels-idx1-ubyte.gz", labels[split:])
    print(f"wrote {split} training and {n_test} test digits to {out}")


if __name__ == "__main__":
    main(*sys.argv[1:3])
