"""Datasets: synthetic Gaussian mixtures, IDX (MNIST-style) files and CSV files.

Every loader returns a :class:`Dataset` whose inputs are centred with the
training-set feature means and scaled so the mean over training rows of
``x.x / D`` equals 1.
"""

from __future__ import annotations

import gzip
import io
import os
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..errors import ConfigurationError, ParseError

IDX_IMAGES_MAGIC = 0x00000803
IDX_LABELS_MAGIC = 0x00000801

_IDX_TYPES = {
    0x08: np.dtype(">u1"),
    0x09: np.dtype(">i1"),
    0x0B: np.dtype(">i2"),
    0x0C: np.dtype(">i4"),
    0x0D: np.dtype(">f4"),
    0x0E: np.dtype(">f8"),
}


@dataclass
class Dataset:
    x_train: np.ndarray
    y_train: np.ndarray
    x_test: np.ndarray
    y_test: np.ndarray
    n_classes: int
    name: str = "dataset"

    @property
    def input_dim(self):
        return self.x_train.shape[1]

    @property
    def nu0(self):
        """Mean squared input norm per dimension over the training set."""
        return float(np.mean(np.sum(self.x_train.astype(np.float64) ** 2, axis=1)) / self.input_dim)

    def astype(self, dtype):
        return Dataset(
            self.x_train.astype(dtype), self.y_train, self.x_test.astype(dtype), self.y_test,
            self.n_classes, self.name,
        )


@dataclass(frozen=True)
class SyntheticSpec:
    """Gaussian-mixture classification task.

    Each class owns ``clusters_per_class`` centres drawn on a sphere of radius
    ``separation`` (in units of the per-coordinate noise); samples add isotropic
    unit noise. With more than one cluster per class the task is not linearly
    separable.
    """

    dim: int = 64
    n_classes: int = 2
    clusters_per_class: int = 1
    n_train: int = 2000
    n_test: int = 500
    separation: float = 3.0
    seed: int = 0
    name: str = "synthetic"


def make_synthetic(spec):
    rng = np.random.default_rng(spec.seed)
    k = spec.n_classes * spec.clusters_per_class
    centres = rng.standard_normal((k, spec.dim))
    centres *= spec.separation / np.linalg.norm(centres, axis=1, keepdims=True)

    def draw(n):
        cluster = rng.integers(0, k, size=n)
        x = centres[cluster] + rng.standard_normal((n, spec.dim))
        return x, (cluster % spec.n_classes).astype(np.int64)

    x_train, y_train = draw(spec.n_train)
    x_test, y_test = draw(spec.n_test)
    return normalise(Dataset(x_train, y_train, x_test, y_test, spec.n_classes, spec.name))


def normalise(data, center=True):
    x_train = data.x_train.astype(np.float64)
    x_test = data.x_test.astype(np.float64)
    if center:
        mean = x_train.mean(axis=0)
        x_train = x_train - mean
        x_test = x_test - mean
    nu0 = np.mean(np.sum(x_train ** 2, axis=1)) / x_train.shape[1]
    if nu0 <= 0:
        raise ConfigurationError(f"dataset {data.name!r} has all-zero inputs")
    scale = 1.0 / np.sqrt(nu0)
    return Dataset(x_train * scale, data.y_train, x_test * scale, data.y_test, data.n_classes, data.name)


def _open_bytes(path):
    path = Path(path)
    raw = path.read_bytes()
    if raw[:2] == b"\x1f\x8b":
        raw = gzip.decompress(raw)
    return raw


def parse_idx(raw, expected_magic=None):
    """Decode an IDX byte string into an array."""
    if len(raw) < 4:
        raise ParseError(f"IDX header needs 4 bytes, file has {len(raw)}", len(raw))
    zero, type_code, ndim = struct.unpack(">HBB", raw[:4])
    magic = (type_code << 8) | ndim
    if zero != 0 or type_code not in _IDX_TYPES or ndim == 0:
        raise ParseError(f"bad IDX magic number 0x{struct.unpack('>I', raw[:4])[0]:08x}", 0)
    if expected_magic is not None and magic != expected_magic:
        raise ParseError(f"expected IDX magic 0x{expected_magic:08x}, got 0x{magic:08x}", 0)
    header_end = 4 + 4 * ndim
    if len(raw) < header_end:
        raise ParseError(f"IDX dimension header truncated (need {header_end} bytes)", len(raw))
    shape = struct.unpack(f">{ndim}I", raw[4:header_end])
    dtype = _IDX_TYPES[type_code]
    n_bytes = int(np.prod(shape, dtype=np.int64)) * dtype.itemsize
    if len(raw) - header_end < n_bytes:
        raise ParseError(
            f"IDX payload truncated: need {n_bytes} bytes for shape {shape}, have {len(raw) - header_end}",
            len(raw),
        )
    if len(raw) - header_end > n_bytes:
        raise ParseError(f"{len(raw) - header_end - n_bytes} trailing bytes after IDX payload",
                         header_end + n_bytes)
    data = np.frombuffer(raw, dtype=dtype, count=n_bytes // dtype.itemsize, offset=header_end)
    return data.reshape(shape).astype(dtype.newbyteorder("="))


def load_idx_pair(images_path, labels_path):
    """Load an image file (magic 0x803) and its label file (magic 0x801)."""
    images = parse_idx(_open_bytes(images_path), IDX_IMAGES_MAGIC)
    labels = parse_idx(_open_bytes(labels_path), IDX_LABELS_MAGIC)
    if len(images) != len(labels):
        raise ConfigurationError(f"{len(images)} images but {len(labels)} labels")
    return images.reshape(len(images), -1).astype(np.float64), labels.astype(np.int64)


def load_csv(path):
    """Numeric feature columns followed by an integer label column.

    A first row that does not parse as numbers is treated as a header.
    """
    raw = Path(path).read_bytes()
    rows, labels = [], []
    offset = 0
    width = None
    for lineno, line in enumerate(io.BytesIO(raw)):
        start = offset
        offset += len(line)
        text = line.decode("utf-8").strip()
        if not text:
            continue
        fields = text.split(",")
        try:
            values = [float(f) for f in fields]
        except ValueError:
            if lineno == 0:
                continue
            raise ParseError(f"non-numeric field on line {lineno + 1}", start) from None
        if width is None:
            width = len(values)
        elif len(values) != width:
            raise ParseError(f"line {lineno + 1} has {len(values)} fields, expected {width}", start)
        if width < 2 or values[-1] != int(values[-1]):
            raise ParseError(f"line {lineno + 1} lacks an integer label column", start)
        rows.append(values[:-1])
        labels.append(int(values[-1]))
    if not rows:
        raise ParseError("CSV contains no data rows", len(raw))
    return np.asarray(rows, dtype=np.float64), np.asarray(labels, dtype=np.int64)


_MNIST_FILES = (
    ("train-images-idx3-ubyte", "train-labels-idx1-ubyte"),
    ("t10k-images-idx3-ubyte", "t10k-labels-idx1-ubyte"),
)


def _find(directory, stem):
    for name in (stem, stem + ".gz"):
        candidate = Path(directory) / name
        if candidate.exists():
            return candidate
    raise ConfigurationError(f"{stem}[.gz] not found in {directory}")


def _split(x, y, test_fraction, seed):
    rng = np.random.default_rng(seed)
    order = rng.permutation(len(x))
    n_test = max(1, int(round(test_fraction * len(x))))
    test, train = order[:n_test], order[n_test:]
    return x[train], y[train], x[test], y[test]


def load_dataset(source, test_fraction=0.2, seed=0, name=None):
    """Load and normalise a dataset.

    ``source`` may be a :class:`SyntheticSpec`, a directory holding the four
    MNIST-style IDX files, a single CSV path (split by ``test_fraction``), or a
    ``(train_csv, test_csv)`` pair.
    """
    if isinstance(source, SyntheticSpec):
        return make_synthetic(source)
    if isinstance(source, (tuple, list)):
        x_train, y_train = load_csv(source[0])
        x_test, y_test = load_csv(source[1])
        label = name or Path(source[0]).stem
    else:
        path = Path(os.fspath(source))
        label = name or path.name
        if path.is_dir():
            (tri, trl), (tei, tel) = _MNIST_FILES
            x_train, y_train = load_idx_pair(_find(path, tri), _find(path, trl))
            x_test, y_test = load_idx_pair(_find(path, tei), _find(path, tel))
        elif path.suffix.lower() == ".csv":
            x_train, y_train, x_test, y_test = _split(*load_csv(path), test_fraction, seed)
        else:
            raise ConfigurationError(f"cannot infer dataset format of {path}")
    if x_train.shape[1] != x_test.shape[1]:
        raise ConfigurationError(
            f"train and test inputs differ in dimension ({x_train.shape[1]} vs {x_test.shape[1]})"
        )
    n_classes = int(max(y_train.max(), y_test.max())) + 1
    return normalise(Dataset(x_train, y_train, x_test, y_test, n_classes, label))
