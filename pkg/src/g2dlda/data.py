"""Matrix-valued datasets, class statistics, PGM ingestion and noise injection.

All random draws go through ``numpy.random.Generator`` seeded with PCG64
(``np.random.default_rng(seed)``); PCG64 streams are platform independent, so
noisy images reproduce bit-for-bit given the same seed.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np

PGM_MAXVAL = 255


class DatasetError(ValueError):
    """Raised for unreadable, inconsistent or too-small datasets."""


@dataclass(frozen=True, eq=False)
class MatrixSample:
    values: np.ndarray
    label: int


@dataclass(frozen=True, eq=False)
class Dataset:
    """N samples of shape (d1, d2) with labels 1..c.

    ``names`` optionally records where each sample came from (relative file
    path for loaded data); it is used by noise policies that need to single
    out particular images.
    """

    X: np.ndarray
    labels: np.ndarray
    class_names: tuple = ()
    names: tuple = ()

    def __post_init__(self):
        X = np.asarray(self.X, dtype=np.float64)
        labels = np.asarray(self.labels, dtype=np.int64)
        if X.ndim != 3:
            raise DatasetError(f"expected an (N, d1, d2) array, got shape {X.shape}")
        if X.shape[0] == 0 or X.shape[1] < 1 or X.shape[2] < 1:
            raise DatasetError(f"empty dataset or empty samples: shape {X.shape}")
        if labels.shape != (X.shape[0],):
            raise DatasetError("labels must be a 1-D array with one entry per sample")
        if not np.all(np.isfinite(X)):
            raise DatasetError("non-finite sample values")
        present = np.unique(labels)
        if present[0] != 1 or not np.array_equal(present, np.arange(1, present[-1] + 1)):
            raise DatasetError(f"labels must cover 1..c without gaps, got {present.tolist()}")
        if self.names and len(self.names) != X.shape[0]:
            raise DatasetError("names must have one entry per sample")
        X.setflags(write=False)
        labels.setflags(write=False)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "class_names", tuple(self.class_names))
        object.__setattr__(self, "names", tuple(self.names))

    @classmethod
    def from_samples(cls, samples, class_names=()):
        X = np.stack([np.asarray(s.values, dtype=np.float64) for s in samples])
        return cls(X, np.array([s.label for s in samples]), class_names)

    @property
    def samples(self):
        return [MatrixSample(x, int(y)) for x, y in zip(self.X, self.labels)]

    @property
    def shape(self):
        return self.X.shape[1:]

    @property
    def n_samples(self):
        return self.X.shape[0]

    @property
    def n_classes(self):
        return int(self.labels.max())

    @property
    def class_counts(self):
        return np.bincount(self.labels, minlength=self.n_classes + 1)[1:]

    def subset(self, index):
        index = np.asarray(index)
        names = tuple(self.names[i] for i in index) if self.names else ()
        return Dataset(self.X[index], self.labels[index], self.class_names, names)

    def with_values(self, X):
        return Dataset(X, self.labels, self.class_names, self.names)


@dataclass(frozen=True, eq=False)
class ClassStats:
    """Means and centered pieces of a dataset.

    ``Z`` holds the within-class deviations X_ij - mean_i stacked in dataset
    order (``labels`` says which class each belongs to); ``V`` holds the class
    offsets mean_i - global_mean.
    """

    global_mean: np.ndarray
    class_means: np.ndarray
    V: np.ndarray
    Z: np.ndarray
    labels: np.ndarray
    class_counts: np.ndarray
    tau: float = field(default=1e-12, repr=False)

    @property
    def d1(self):
        return self.global_mean.shape[0]

    @property
    def d2(self):
        return self.global_mean.shape[1]

    @property
    def n_samples(self):
        return self.Z.shape[0]

    @property
    def n_classes(self):
        return self.V.shape[0]

    @property
    def Z_by_class(self):
        return [self.Z[self.labels == i + 1] for i in range(self.n_classes)]

    @cached_property
    def z_cols(self):
        """Every column Z_ijk as a row of an (N*d2, d1) array."""
        return np.ascontiguousarray(self.Z.transpose(0, 2, 1).reshape(-1, self.d1))

    @cached_property
    def v_cols(self):
        return np.ascontiguousarray(self.V.transpose(0, 2, 1).reshape(-1, self.d1))

    @cached_property
    def v_counts(self):
        return np.repeat(self.class_counts.astype(np.float64), self.d2)

    @cached_property
    def z_cols_active(self):
        # all-zero columns (e.g. singleton classes) contribute nothing for any w
        keep = np.linalg.norm(self.z_cols, axis=1) > self.tau
        return np.ascontiguousarray(self.z_cols[keep])

    @cached_property
    def _v_active(self):
        return np.linalg.norm(self.v_cols, axis=1) > self.tau

    @cached_property
    def v_cols_active(self):
        return np.ascontiguousarray(self.v_cols[self._v_active])

    @cached_property
    def v_counts_active(self):
        return np.ascontiguousarray(self.v_counts[self._v_active])

    def project(self, B):
        """Statistics of the data mapped through B^T (rows of the result = columns of B)."""
        B = np.asarray(B, dtype=np.float64)
        left = lambda A: np.einsum("ab,...ac->...bc", B, A)
        return ClassStats(
            left(self.global_mean),
            left(self.class_means),
            left(self.V),
            left(self.Z),
            self.labels,
            self.class_counts,
            self.tau,
        )


def class_statistics(d: Dataset) -> ClassStats:
    counts = d.class_counts
    global_mean = d.X.mean(axis=0)
    class_means = np.stack([d.X[d.labels == i + 1].mean(axis=0) for i in range(d.n_classes)])
    V = class_means - global_mean
    Z = d.X - class_means[d.labels - 1]
    return ClassStats(global_mean, class_means, V, Z, d.labels, counts)


# --- PGM ------------------------------------------------------------------


def _pgm_tokens(buf, count):
    """Pull ``count`` whitespace-separated header tokens, skipping # comments."""
    tokens, pos = [], 2
    while len(tokens) < count:
        while pos < len(buf) and buf[pos : pos + 1].isspace():
            pos += 1
        if buf[pos : pos + 1] == b"#":
            while pos < len(buf) and buf[pos : pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < len(buf) and not buf[pos : pos + 1].isspace():
            pos += 1
        if start == pos:
            raise ValueError("truncated header")
        tokens.append(int(buf[start:pos]))
    # exactly one whitespace byte separates the header from the raster
    return tokens, pos + 1


def read_pgm(path) -> np.ndarray:
    """Read a binary (P5) 8-bit PGM as a uint8 array of shape (rows, cols)."""
    path = Path(path)
    try:
        buf = path.read_bytes()
    except OSError as exc:
        raise DatasetError(f"{path}: cannot read file ({exc.strerror})") from exc
    if buf[:2] != b"P5":
        raise DatasetError(f"{path}: not a binary PGM (P5) file")
    try:
        (width, height, maxval), offset = _pgm_tokens(buf, 3)
    except ValueError as exc:
        raise DatasetError(f"{path}: malformed PGM header") from exc
    if maxval != PGM_MAXVAL:
        raise DatasetError(f"{path}: only maxval {PGM_MAXVAL} is supported, got {maxval}")
    raster = buf[offset : offset + width * height]
    if len(raster) != width * height:
        raise DatasetError(f"{path}: truncated raster")
    return np.frombuffer(raster, dtype=np.uint8).reshape(height, width).copy()


def write_pgm(path, img):
    img = np.asarray(img)
    if img.ndim != 2:
        raise ValueError("PGM images are 2-D")
    if img.dtype != np.uint8:
        img = np.clip(np.rint(img), 0, PGM_MAXVAL).astype(np.uint8)
    header = f"P5\n{img.shape[1]} {img.shape[0]}\n{PGM_MAXVAL}\n".encode("ascii")
    Path(path).write_bytes(header + img.tobytes())


def to_pgm_levels(img, pixel_scale="unit"):
    """Map intensities back to 0..255 integers."""
    img = np.asarray(img, dtype=np.float64)
    if pixel_scale == "unit":
        img = img * PGM_MAXVAL
    return np.clip(np.rint(img), 0, PGM_MAXVAL).astype(np.uint8)


def intensity_range(pixel_scale="unit"):
    if pixel_scale == "unit":
        return 0.0, 1.0
    if pixel_scale == "raw":
        return 0.0, float(PGM_MAXVAL)
    raise ValueError(f"pixel_scale must be 'unit' or 'raw', got {pixel_scale!r}")


def load_dataset(root_path, pixel_scale="unit") -> Dataset:
    """Load ``<root>/<class>/<image>.pgm``; classes are numbered 1..c by sorted directory name."""
    root = Path(root_path)
    lo, hi = intensity_range(pixel_scale)
    if not root.is_dir():
        raise DatasetError(f"{root}: dataset directory does not exist")
    class_dirs = sorted(p for p in root.iterdir() if p.is_dir())
    if len(class_dirs) < 2:
        raise DatasetError(f"{root}: fewer than 2 classes")
    images, labels, names = [], [], []
    shape = None
    for label, cdir in enumerate(class_dirs, start=1):
        files = sorted(f for f in cdir.iterdir() if f.is_file() and f.suffix.lower() == ".pgm")
        if not files:
            raise DatasetError(f"{cdir}: class directory contains no .pgm images")
        for f in files:
            img = read_pgm(f)
            if shape is None:
                shape = img.shape
            elif img.shape != shape:
                raise DatasetError(f"{f}: dimension mismatch, {img.shape} vs {shape}")
            images.append(img)
            labels.append(label)
            names.append(f.relative_to(root).as_posix())
    X = np.stack(images).astype(np.float64)
    if pixel_scale == "unit":
        X /= PGM_MAXVAL
    return Dataset(X, np.array(labels), tuple(d.name for d in class_dirs), tuple(names))


def save_dataset(d: Dataset, root_path, pixel_scale="unit"):
    """Write a dataset as PGM class directories; returns the written paths."""
    root = Path(root_path)
    class_names = d.class_names or tuple(f"class{i:03d}" for i in range(1, d.n_classes + 1))
    written = []
    for i, (x, y) in enumerate(zip(d.X, d.labels)):
        name = d.names[i] if d.names else f"{class_names[y - 1]}/{i:05d}.pgm"
        path = root / name
        path.parent.mkdir(parents=True, exist_ok=True)
        write_pgm(path, to_pgm_levels(x, pixel_scale))
        written.append(path)
    return written


# --- noise ----------------------------------------------------------------

NOISE_KINDS = ("salt_pepper", "gaussian_rect", "black_block")


@dataclass(frozen=True)
class NoiseSpec:
    """One corruption setting; fields that ``kind`` does not use are ignored."""

    kind: str
    density: float = 0.0
    variance: float = 0.0
    coverage: float = 0.5
    seed: int = 0

    def __post_init__(self):
        if self.kind not in NOISE_KINDS:
            raise ValueError(f"unknown noise kind {self.kind!r}; expected one of {NOISE_KINDS}")
        if not 0.0 <= self.density <= 1.0:
            raise ValueError(f"density must lie in [0, 1], got {self.density}")
        if not 0.0 <= self.coverage <= 1.0:
            raise ValueError(f"coverage must lie in [0, 1], got {self.coverage}")
        if self.variance < 0.0:
            raise ValueError(f"variance must be nonnegative, got {self.variance}")

    def apply(self, img, lo=0.0, hi=1.0):
        if self.kind == "salt_pepper":
            return inject_salt_pepper(img, self.density, self.seed, lo, hi)
        if self.kind == "gaussian_rect":
            return inject_gaussian_rect(img, self.variance, self.coverage, self.seed, lo, hi)
        return inject_black_block(img, self.coverage, self.seed, lo, hi)


def inject_salt_pepper(img, density, seed, lo=0.0, hi=1.0):
    """Replace each pixel with probability ``density`` by ``lo`` or ``hi`` (fair coin)."""
    if not 0.0 <= density <= 1.0:
        raise ValueError(f"density must lie in [0, 1], got {density}")
    img = np.asarray(img, dtype=np.float64)
    rng = np.random.default_rng(seed)
    hit = rng.random(img.shape) < density
    salt = rng.random(img.shape) < 0.5
    out = img.copy()
    out[hit & salt] = hi
    out[hit & ~salt] = lo
    return out


def random_rectangle(shape, coverage, rng):
    """Sample (top, left, height, width) of a rectangle covering ``coverage`` of ``shape``.

    Aspect ratio height/width is log-uniform in [1/4, 4]; the placement is
    uniform over positions that keep the rectangle inside the image.
    """
    if not 0.0 < coverage <= 1.0:
        raise ValueError(f"coverage must lie in (0, 1], got {coverage}")
    rows, cols = shape
    area = max(1, int(round(coverage * rows * cols)))
    aspect = np.exp(rng.uniform(np.log(0.25), np.log(4.0)))
    h = int(np.clip(round(np.sqrt(area * aspect)), 1, rows))
    w = int(np.clip(round(area / h), 1, cols))
    h = int(np.clip(round(area / w), 1, rows))
    top = int(rng.integers(0, rows - h + 1))
    left = int(rng.integers(0, cols - w + 1))
    return top, left, h, w


def inject_gaussian_rect(img, variance, coverage, seed, lo=0.0, hi=1.0):
    """Add N(0, variance) noise inside a random rectangle, then clamp to [lo, hi]."""
    if variance < 0.0:
        raise ValueError(f"variance must be nonnegative, got {variance}")
    img = np.asarray(img, dtype=np.float64)
    rng = np.random.default_rng(seed)
    top, left, h, w = random_rectangle(img.shape, coverage, rng)
    out = img.copy()
    noise = rng.normal(0.0, np.sqrt(variance), size=(h, w))
    block = out[top : top + h, left : left + w]
    out[top : top + h, left : left + w] = np.clip(block + noise, lo, hi)
    return out


def inject_black_block(img, coverage, seed, lo=0.0, hi=1.0):
    """Set a random rectangle covering ``coverage`` of the image to ``lo``."""
    img = np.asarray(img, dtype=np.float64)
    rng = np.random.default_rng(seed)
    top, left, h, w = random_rectangle(img.shape, coverage, rng)
    out = img.copy()
    out[top : top + h, left : left + w] = lo
    return out


def pgm_files(path):
    """A single .pgm file or every .pgm under a directory, sorted."""
    path = Path(path)
    if path.is_dir():
        return sorted(p for p in path.rglob("*.pgm") if p.is_file())
    return [path]
