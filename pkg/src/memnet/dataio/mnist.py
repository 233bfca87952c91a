"""IDX (MNIST) reader/writer and the crop-and-binarise input encoding."""
from __future__ import annotations

import gzip
import os
import struct
from pathlib import Path

import numpy as np

from ..errors import DataError

IMAGE_MAGIC = 0x00000803
LABEL_MAGIC = 0x00000801

CROP = slice(3, 25)  # centre 22x22 of a 28x28 digit
BINARY_THRESHOLD = 127  # pixel > 127 -> 1


def _open(path):
    path = os.fspath(path)
    return gzip.open(path, "rb") if path.endswith(".gz") else open(path, "rb")


def read_idx(path, expected_magic: int) -> np.ndarray:
    try:
        with _open(path) as f:
            data = f.read()
    except (OSError, EOFError) as e:
        raise DataError(f"cannot read {path}: {e}") from e
    if len(data) < 8:
        raise DataError(f"{path}: file too short for an IDX header")
    magic, = struct.unpack(">I", data[:4])
    if magic != expected_magic:
        raise DataError(f"{path}: bad magic 0x{magic:08x}, expected 0x{expected_magic:08x}")
    ndim = magic & 0xFF
    header = 4 + 4 * ndim
    if len(data) < header:
        raise DataError(f"{path}: truncated header")
    dims = struct.unpack(f">{ndim}I", data[4:header])
    expected = int(np.prod(dims))
    actual = len(data) - header
    if actual != expected:
        raise DataError(f"{path}: truncated payload, expected {expected} bytes, got {actual}")
    return np.frombuffer(data, dtype=np.uint8, offset=header).reshape(dims)


def write_idx(path, array: np.ndarray) -> None:
    a = np.ascontiguousarray(array, dtype=np.uint8)
    head = struct.pack(">I", 0x00000800 | a.ndim) + struct.pack(f">{a.ndim}I", *a.shape)
    opener = gzip.GzipFile(path, "wb", mtime=0) if os.fspath(path).endswith(".gz") else open(path, "wb")
    with opener as f:
        f.write(head + a.tobytes())


def load_mnist(image_path, label_path) -> tuple[np.ndarray, np.ndarray]:
    images = read_idx(image_path, IMAGE_MAGIC)
    labels = read_idx(label_path, LABEL_MAGIC)
    if images.ndim != 3:
        raise DataError(f"{image_path}: expected 3-D image data, got {images.ndim}-D")
    if labels.ndim != 1:
        raise DataError(f"{label_path}: expected 1-D label data")
    if images.shape[0] != labels.shape[0]:
        raise DataError(f"count mismatch: {images.shape[0]} images vs {labels.shape[0]} labels")
    return images, labels


def _find(directory: Path, stem: str) -> Path:
    for name in (stem, stem + ".gz", stem.replace("-idx", ".idx")):
        p = directory / name
        if p.exists():
            return p
    raise DataError(f"missing {directory / stem}[.gz]")


def load_mnist_dir(directory) -> dict[str, tuple[np.ndarray, np.ndarray]]:
    """Standard ``train-*`` / ``t10k-*`` IDX files from one directory."""
    d = Path(directory)
    if not d.is_dir():
        raise DataError(f"MNIST directory {d} does not exist")
    return {
        "train": load_mnist(_find(d, "train-images-idx3-ubyte"), _find(d, "train-labels-idx1-ubyte")),
        "test": load_mnist(_find(d, "t10k-images-idx3-ubyte"), _find(d, "t10k-labels-idx1-ubyte")),
    }


def preprocess(image) -> np.ndarray:
    img = np.asarray(image)
    if img.shape != (28, 28):
        raise ValueError(f"expected a 28x28 image, got shape {img.shape}")
    return (img[CROP, CROP] > BINARY_THRESHOLD).astype(np.int8).reshape(-1)


def preprocess_all(images) -> np.ndarray:
    imgs = np.asarray(images)
    if imgs.ndim != 3 or imgs.shape[1:] != (28, 28):
        raise ValueError(f"expected N x 28 x 28 images, got shape {imgs.shape}")
    return (imgs[:, CROP, CROP] > BINARY_THRESHOLD).astype(np.int8).reshape(len(imgs), -1)
