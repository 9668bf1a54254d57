"""Seeded synthetic matrix datasets written as PGM class directories.

Pixel model (unit intensities, clipped to [0, 1], quantized to 1/255)::

    class mean   0.5 + AMP * separation * G_i          G_i ~ N(0, I)
    sample       mean_i + AMP * spread * E              E   ~ N(0, I)
    outlier      mean_i + AMP * spread * outlier_scale * E

Quantizing in memory means a dataset written to disk and loaded back with
``pixel_scale="unit"`` is bit-identical to :func:`generate`'s output.
"""
from __future__ import annotations

import csv
from dataclasses import asdict, dataclass, fields, replace
from importlib import resources
from pathlib import Path

import numpy as np

from .data import PGM_MAXVAL, Dataset, save_dataset
from .kvconfig import ConfigError, parse_kv, read_kv

AMP = 0.05
MANIFEST = "manifest.csv"
PARAMS_FILE = "synth.cfg"


@dataclass(frozen=True)
class SynthSpec:
    classes: int = 2
    per_class: int = 5
    rows: int = 8
    cols: int = 8
    separation: float = 3.0
    spread: float = 0.5
    outliers: float = 0.0
    outlier_scale: float = 10.0
    seed: int = 0

    def __post_init__(self):
        if self.classes < 2:
            raise ConfigError("synthetic data needs at least 2 classes")
        if self.per_class < 2:
            raise ConfigError("synthetic data needs at least 2 samples per class")
        if self.rows < 1 or self.cols < 1:
            raise ConfigError("image dimensions must be positive")
        if self.separation < 0 or self.spread < 0 or self.outlier_scale < 0:
            raise ConfigError("separation, spread and outlier_scale must be nonnegative")
        if not 0.0 <= self.outliers <= 1.0:
            raise ConfigError("outliers must be a fraction in [0, 1]")

    @property
    def outliers_per_class(self):
        return int(round(self.outliers * self.per_class))

    @classmethod
    def from_mapping(cls, kv):
        types = {f.name: f.type for f in fields(cls)}
        unknown = set(kv) - set(types)
        if unknown:
            raise ConfigError(f"unknown synthetic parameters: {sorted(unknown)}")
        conv = {k: (int if types[k] in ("int", int) else float)(v) for k, v in kv.items()}
        return cls(**conv)

    @classmethod
    def from_file(cls, path):
        return cls.from_mapping(read_kv(path))

    def to_text(self):
        return "".join(f"{k}={v}\n" for k, v in asdict(self).items())


def bundled_fixture(name="outliers10"):
    """Generator parameters shipped with the package."""
    text = resources.files("g2dlda.fixtures").joinpath(f"{name}.cfg").read_text()
    return SynthSpec.from_mapping(parse_kv(text, name))


def generate(spec: SynthSpec, seed=None):
    """Return ``(dataset, outlier_mask)``; ``seed`` overrides ``spec.seed``."""
    rng = np.random.default_rng(spec.seed if seed is None else seed)
    c, n = spec.classes, spec.per_class
    shape = (spec.rows, spec.cols)
    means = 0.5 + AMP * spec.separation * rng.standard_normal((c, *shape))
    X = np.empty((c * n, *shape))
    flags = np.zeros(c * n, dtype=bool)
    k = spec.outliers_per_class
    for i in range(c):
        scale = np.full(n, AMP * spec.spread)
        picked = rng.choice(n, size=k, replace=False) if k else np.array([], dtype=int)
        scale[picked] *= spec.outlier_scale
        noise = rng.standard_normal((n, *shape)) * scale[:, None, None]
        X[i * n : (i + 1) * n] = means[i] + noise
        flags[i * n + picked] = True
    X = np.rint(np.clip(X, 0.0, 1.0) * PGM_MAXVAL) / PGM_MAXVAL
    labels = np.repeat(np.arange(1, c + 1), n)
    class_names = tuple(f"class{i:03d}" for i in range(1, c + 1))
    names = tuple(f"{class_names[i // n]}/s{i % n:04d}.pgm" for i in range(c * n))
    return Dataset(X, labels, class_names, names), flags


def make_synthetic(spec: SynthSpec, out_dir, seed=None):
    """Write the dataset, a ``manifest.csv`` flagging outliers and the parameters used."""
    if seed is not None:
        spec = replace(spec, seed=int(seed))
    dataset, flags = generate(spec)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    save_dataset(dataset, out)
    with open(out / MANIFEST, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["file", "label", "outlier"])
        for name, label, flag in zip(dataset.names, dataset.labels, flags):
            writer.writerow([name, int(label), int(flag)])
    (out / PARAMS_FILE).write_text(spec.to_text(), encoding="utf-8")
    return dataset, flags
