"""CIFAR-10 binary-format loading, augmentation, and a synthetic stand-in.

The on-disk format is the standard binary one: records of 3073 bytes
(1 label byte, then 3 x 1024 row-major channel planes), five training
files and one test file.  ``save_cifar_batches`` writes the same format,
which the tests use to exercise the loader, and ``make_synthetic``
builds a small class-structured corpus for pipeline tests when the real
dataset is not on disk.
"""

from __future__ import annotations

import pathlib
from dataclasses import dataclass

import numpy as np

RECORD_BYTES = 1 + 3 * 32 * 32
TRAIN_FILES = tuple(f"data_batch_{i}.bin" for i in range(1, 6))
TEST_FILE = "test_batch.bin"
NUM_CLASSES = 10

# Channel means/stds used for input normalization.
MEAN = np.array([0.4914, 0.4822, 0.4465], dtype=np.float32)
STD = np.array([0.2023, 0.1994, 0.2010], dtype=np.float32)


class CifarFormatError(RuntimeError):
    pass


@dataclass
class DataSplit:
    images: np.ndarray  # float32 [N, 3, 32, 32] in [0, 1]
    labels: np.ndarray  # int64 [N]

    def __len__(self) -> int:
        return len(self.labels)


def _read_batch_file(path: pathlib.Path) -> tuple[np.ndarray, np.ndarray]:
    if not path.is_file():
        raise CifarFormatError(f"missing batch file: {path}")
    raw = np.fromfile(path, dtype=np.uint8)
    if raw.size == 0 or raw.size % RECORD_BYTES:
        offset = (raw.size // RECORD_BYTES) * RECORD_BYTES
        raise CifarFormatError(
            f"truncated batch file {path}: {raw.size} bytes, record boundary "
            f"at byte {offset}")
    records = raw.reshape(-1, RECORD_BYTES)
    labels = records[:, 0].astype(np.int64)
    if labels.max(initial=0) >= NUM_CLASSES:
        bad = int(np.argmax(labels >= NUM_CLASSES))
        raise CifarFormatError(
            f"label {labels[bad]} out of range in {path}, record {bad}")
    images = records[:, 1:].reshape(-1, 3, 32, 32).astype(np.float32) / 255.0
    return images, labels


def load_cifar10(path) -> tuple[DataSplit, DataSplit]:
    """Load the six binary batch files under ``path``."""
    root = pathlib.Path(path)
    train_parts = [_read_batch_file(root / name) for name in TRAIN_FILES]
    train = DataSplit(np.concatenate([p[0] for p in train_parts]),
                      np.concatenate([p[1] for p in train_parts]))
    test = DataSplit(*_read_batch_file(root / TEST_FILE))
    return train, test


def class_histogram(labels: np.ndarray) -> np.ndarray:
    return np.bincount(labels, minlength=NUM_CLASSES)


def balanced_subset(split: DataSplit, size: int) -> DataSplit:
    """First ceil(size/10) samples of each class, deterministically."""
    if size >= len(split):
        return split
    per_class = -(-size // NUM_CLASSES)
    picked = []
    for c in range(NUM_CLASSES):
        picked.extend(np.flatnonzero(split.labels == c)[:per_class])
    idx = np.sort(np.array(picked))[:size]
    return DataSplit(split.images[idx], split.labels[idx])


def normalize(images: np.ndarray) -> np.ndarray:
    return (images - MEAN[:, None, None]) / STD[:, None, None]


def augment(images: np.ndarray, rng: np.random.Generator | None = None,
            offsets: np.ndarray | None = None,
            flips: np.ndarray | None = None) -> np.ndarray:
    """Training augmentation: pad 4, random 32x32 crop, random h-flip, normalize.

    Crop offsets and flip decisions come from ``rng`` unless given
    explicitly (offset (4, 4) with no flip reproduces the input).
    """
    n = images.shape[0]
    padded = np.pad(images, ((0, 0), (0, 0), (4, 4), (4, 4)))
    if offsets is None:
        offsets = rng.integers(0, 9, size=(n, 2))
    if flips is None:
        flips = rng.random(n) < 0.5
    out = np.empty_like(images)
    for i in range(n):
        oy, ox = offsets[i]
        crop = padded[i, :, oy:oy + 32, ox:ox + 32]
        out[i] = crop[:, :, ::-1] if flips[i] else crop
    return normalize(out)


def save_cifar_batches(images: np.ndarray, labels: np.ndarray, path,
                       files=TRAIN_FILES) -> None:
    """Write uint8 images [N,3,32,32] and labels in the binary batch format."""
    root = pathlib.Path(path)
    root.mkdir(parents=True, exist_ok=True)
    per_file = -(-len(labels) // len(files))
    for i, name in enumerate(files):
        sl = slice(i * per_file, (i + 1) * per_file)
        recs = np.concatenate(
            [labels[sl, None].astype(np.uint8),
             images[sl].reshape(len(labels[sl]), -1)], axis=1)
        recs.tofile(root / name)


def make_synthetic(n_train: int = 640, n_test: int = 256, seed: int = 7,
                   noise: float = 0.25) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Class-structured fake images (uint8) in CIFAR shapes.

    Each class gets a fixed smooth spatial pattern; samples are the
    pattern plus noise, so small models can actually learn the labels.
    Classes are exactly balanced (sizes divisible by 10 give equal
    histograms) and channel levels sit at the CIFAR normalization means.
    """
    rng = np.random.default_rng(seed)
    freqs = rng.uniform(0.5, 3.0, size=(NUM_CLASSES, 3, 2))
    phases = rng.uniform(0, 2 * np.pi, size=(NUM_CLASSES, 3))
    yy, xx = np.meshgrid(np.linspace(0, 1, 32), np.linspace(0, 1, 32), indexing="ij")
    patterns = np.stack([
        np.stack([np.sin(2 * np.pi * (freqs[c, ch, 0] * yy + freqs[c, ch, 1] * xx)
                         + phases[c, ch]) for ch in range(3)])
        for c in range(NUM_CLASSES)
    ])  # [10, 3, 32, 32] in [-1, 1]
    patterns -= patterns.mean(axis=(-2, -1), keepdims=True)

    def draw(n):
        labels = rng.permutation(np.arange(n) % NUM_CLASSES).astype(np.int64)
        base = MEAN[:, None, None] + 0.25 * patterns[labels]
        imgs = base + noise * rng.standard_normal(base.shape)
        return (np.clip(imgs, 0, 1) * 255).astype(np.uint8), labels

    tr_x, tr_y = draw(n_train)
    te_x, te_y = draw(n_test)
    return tr_x, tr_y, te_x, te_y


def write_synthetic_dataset(path, n_train: int = 640, n_test: int = 256,
                            seed: int = 7) -> None:
    """Materialize a synthetic corpus in the binary batch layout."""
    tr_x, tr_y, te_x, te_y = make_synthetic(n_train, n_test, seed)
    save_cifar_batches(tr_x, tr_y, path, TRAIN_FILES)
    save_cifar_batches(te_x, te_y, path, (TEST_FILE,))
