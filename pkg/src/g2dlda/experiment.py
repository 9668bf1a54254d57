"""Noise-contaminated recognition experiments and their CSV reports.

A run splits the data per class, corrupts the training images at every
configured noise level, fits each method once at the largest requested
dimension, and scores 1-NN accuracy for every dimension by truncating the
projection (directions are found greedily, so prefixes are nested models).

Outputs written to the run directory:

``results.csv``  one row per (method, noise level, dim)
``summary.csv``  best accuracy and its dimension per (method, noise level)
``errors.csv``   methods that failed at a noise level, with the message
``table.txt``    the summary pivoted as "acc% (dim)" cells, one column per level
"""
from __future__ import annotations

import csv
import fnmatch
import io
import logging
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .baselines import fit_2dlda
from .classify import accuracy_sweep
from .data import NOISE_KINDS, Dataset, NoiseSpec, intensity_range, load_dataset
from .kvconfig import ConfigError, as_bool, parse_range, read_kv, split_list
from .solver import SolverConfig, fit
from .synth import SynthSpec, generate

log = logging.getLogger(__name__)

RESULTS_HEADER = ["method", "p", "sigma", "noise_kind", "noise_level", "dim", "accuracy"]
SUMMARY_HEADER = ["method", "noise_level", "best_accuracy", "best_dim"]
ERRORS_HEADER = ["method", "noise_kind", "noise_level", "error"]


def _fmt(x):
    return format(float(x), "g")


@dataclass(frozen=True)
class MethodSpec:
    name: str
    p: float = 2.0
    sigma: float = 0.0
    ridge: float = 0.0

    def __post_init__(self):
        if self.name not in ("g2dlda", "eigen2dlda"):
            raise ConfigError(f"unknown method {self.name!r}")

    @property
    def label(self):
        if self.name == "g2dlda":
            return f"g2dlda(p={_fmt(self.p)},sigma={_fmt(self.sigma)})"
        return f"eigen2dlda(ridge={_fmt(self.ridge)})"


_METHOD_RE = re.compile(r"\s*(\w+)\s*(?:\(([^)]*)\))?\s*(?:,|$)")


def parse_methods(text):
    """``"g2dlda(p=1,sigma=0.01|0.1), eigen2dlda(ridge=0)"`` -> list of MethodSpec.

    A ``|``-separated value expands into one method per alternative.
    """
    methods, pos = [], 0
    text = text.strip()
    while pos < len(text):
        m = _METHOD_RE.match(text, pos)
        if not m or m.end() == pos:
            raise ConfigError(f"cannot parse methods near {text[pos:]!r}")
        pos = m.end()
        name, args = m.group(1), m.group(2) or ""
        grid = [{}]
        for item in split_list(args):
            key, _, value = item.partition("=")
            key = key.strip()
            if key not in ("p", "sigma", "ridge"):
                raise ConfigError(f"unknown method parameter {key!r} in {m.group(0).strip()!r}")
            grid = [dict(g, **{key: float(v)}) for g in grid for v in value.split("|")]
        methods.extend(MethodSpec(name, **g) for g in grid)
    if not methods:
        raise ConfigError("no methods configured")
    return methods


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything a run needs; see :func:`load_config` for the file keys."""

    dataset: str | None = None
    synthetic: SynthSpec | None = None
    pixel_scale: str = "unit"
    train_per_class: int = 6
    noise_kind: str = "salt_pepper"
    noise_levels: tuple = (0.0,)
    noise_coverage: float = 0.5
    noise_test: bool = False
    noise_skip: tuple = ()
    methods: tuple = (MethodSpec("g2dlda", 1.0, 0.01),)
    dims: tuple = (1,)
    seed: int = 0
    epsilon: float = 1e-4
    itmax: int = 50
    delta_mag: float = 1e-6
    tau: float = 1e-12
    jobs: int = 1

    def __post_init__(self):
        if (self.dataset is None) == (self.synthetic is None):
            raise ConfigError("exactly one of 'dataset' and 'synthetic' must be given")
        if self.noise_kind not in NOISE_KINDS:
            raise ConfigError(f"noise_kind must be one of {NOISE_KINDS}")
        if not self.dims or min(self.dims) < 1:
            raise ConfigError("dims must be a nonempty range of positive integers")
        if self.train_per_class < 1:
            raise ConfigError("train_per_class must be positive")
        intensity_range(self.pixel_scale)

    def solver_config(self, method: MethodSpec, r1: int) -> SolverConfig:
        return SolverConfig(
            p=method.p, sigma=method.sigma, epsilon=self.epsilon, itmax=self.itmax,
            tau=self.tau, delta_mag=self.delta_mag, seed=self.seed, r1=r1,
        )


def load_config(path, seed=None) -> ExperimentConfig:
    """Read an experiment file.

    Keys: ``dataset`` (directory) or ``synthetic`` (generator parameter file),
    ``pixel_scale``, ``train_per_class``, ``noise_kind``, ``noise_levels``,
    ``noise_coverage``, ``noise_test``, ``noise_skip`` (glob patterns of image
    names never corrupted), ``methods``, ``dims``, ``seed``, ``synth_seed``,
    ``epsilon``, ``itmax``, ``delta_mag``, ``tau``, ``jobs``.  Relative paths
    resolve against the config file's directory.
    """
    path = Path(path)
    kv = read_kv(path)
    base = path.parent
    known = {
        "dataset", "synthetic", "synth_seed", "pixel_scale", "train_per_class", "noise_kind",
        "noise_levels", "noise_coverage", "noise_test", "noise_skip", "methods", "dims",
        "seed", "epsilon", "itmax", "delta_mag", "tau", "jobs",
    }
    unknown = set(kv) - known
    if unknown:
        raise ConfigError(f"{path}: unknown keys {sorted(unknown)}")
    args = {}
    try:
        if "dataset" in kv:
            args["dataset"] = str(base / kv["dataset"])
        if "synthetic" in kv:
            spec = SynthSpec.from_file(base / kv["synthetic"])
            if "synth_seed" in kv:
                spec = replace(spec, seed=int(kv["synth_seed"]))
            args["synthetic"] = spec
        for key, conv in (
            ("pixel_scale", str), ("train_per_class", int), ("noise_kind", str),
            ("noise_coverage", float), ("epsilon", float), ("itmax", int),
            ("delta_mag", float), ("tau", float), ("jobs", int), ("seed", int),
        ):
            if key in kv:
                args[key] = conv(kv[key])
        if "noise_levels" in kv:
            args["noise_levels"] = tuple(float(v) for v in split_list(kv["noise_levels"]))
        if "noise_test" in kv:
            args["noise_test"] = as_bool(kv["noise_test"])
        if "noise_skip" in kv:
            args["noise_skip"] = tuple(split_list(kv["noise_skip"]))
        if "methods" in kv:
            args["methods"] = tuple(parse_methods(kv["methods"]))
        if "dims" in kv:
            args["dims"] = tuple(parse_range(kv["dims"]))
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    if seed is not None:
        args["seed"] = int(seed)
    return ExperimentConfig(**args)


def _derived_seed(*parts):
    state = np.random.SeedSequence([int(p) for p in parts]).generate_state(2, np.uint32)
    return int(state[0]) << 32 | int(state[1])


def split_per_class(d: Dataset, train_per_class: int, seed: int):
    """Random per-class split; returns sorted (train_idx, test_idx)."""
    rng = np.random.default_rng([seed, 0])
    train, test = [], []
    for label in range(1, d.n_classes + 1):
        idx = np.flatnonzero(d.labels == label)
        if train_per_class >= len(idx):
            raise ConfigError(
                f"train_per_class={train_per_class} leaves no test image in class {label} "
                f"({len(idx)} images)"
            )
        perm = rng.permutation(idx)
        train.extend(perm[:train_per_class])
        test.extend(perm[train_per_class:])
    return np.sort(train), np.sort(test)


def noise_spec(kind, level, coverage, seed):
    if kind == "salt_pepper":
        return NoiseSpec(kind, density=level, seed=seed)
    if kind == "gaussian_rect":
        return NoiseSpec(kind, variance=level, coverage=coverage, seed=seed)
    return NoiseSpec(kind, coverage=level, seed=seed)


def corrupt(d: Dataset, cfg: ExperimentConfig, level: float, stream: int):
    """Apply the configured noise at ``level`` to every image not matched by ``noise_skip``."""
    if level == 0:
        return d
    lo, hi = intensity_range(cfg.pixel_scale)
    X = d.X.copy()
    for i in range(d.n_samples):
        name = d.names[i] if d.names else ""
        if any(fnmatch.fnmatch(name, pat) for pat in cfg.noise_skip):
            continue
        spec = noise_spec(cfg.noise_kind, level, cfg.noise_coverage, _derived_seed(cfg.seed, stream, i))
        X[i] = spec.apply(X[i], lo, hi)
    return d.with_values(X)


@dataclass
class ExperimentResult:
    rows: list = field(default_factory=list)
    summary: list = field(default_factory=list)
    errors: list = field(default_factory=list)
    levels: tuple = ()
    methods: tuple = ()

    def results_csv(self):
        return _csv_text(RESULTS_HEADER, self.rows)

    def summary_csv(self):
        return _csv_text(SUMMARY_HEADER, self.summary)

    def errors_csv(self):
        return _csv_text(ERRORS_HEADER, self.errors)

    def table(self):
        """Summary pivoted into the "accuracy% (dim)" layout, one column per noise level."""
        cells = {(r[0], r[1]): f"{100 * float(r[2]):.2f} ({r[3]})" for r in self.summary}
        for e in self.errors:
            cells[(e[0], e[2])] = "error"
        header = ["Method"] + [_fmt(level) for level in self.levels]
        body = [[m] + [cells.get((m, _fmt(lv)), "-") for lv in self.levels] for m in self.methods]
        widths = [max(len(row[i]) for row in [header] + body) for i in range(len(header))]
        lines = [" | ".join(c.ljust(w) for c, w in zip(row, widths)).rstrip() for row in [header] + body]
        return "\n".join(lines) + "\n"

    def write(self, out_dir):
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        paths = {}
        for name, text in (
            ("results.csv", self.results_csv()),
            ("summary.csv", self.summary_csv()),
            ("errors.csv", self.errors_csv()),
            ("table.txt", self.table()),
        ):
            paths[name] = out / name
            paths[name].write_text(text, encoding="utf-8", newline="")
        return paths


def _csv_text(header, rows):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def load_experiment_data(cfg: ExperimentConfig) -> Dataset:
    if cfg.dataset is not None:
        return load_dataset(cfg.dataset, cfg.pixel_scale)
    dataset, _ = generate(cfg.synthetic)
    if cfg.pixel_scale == "raw":
        dataset = dataset.with_values(np.rint(dataset.X * 255.0))
    return dataset


def _evaluate(cfg, method, train, test, max_dim):
    if method.name == "g2dlda":
        model = fit(train, cfg.solver_config(method, max_dim))
    else:
        model = fit_2dlda(train, max_dim, method.ridge)
    return accuracy_sweep(model, train, test, max_dim)


def run_experiment(cfg: ExperimentConfig, out_dir=None, dataset: Dataset | None = None):
    """Run every (noise level, method) cell; failures become rows of ``errors.csv``."""
    data = load_experiment_data(cfg) if dataset is None else dataset
    d1 = data.shape[0]
    max_dim = max(cfg.dims)
    if max_dim > d1:
        raise ConfigError(f"dims up to {max_dim} exceed d1={d1}")
    train_idx, test_idx = split_per_class(data, cfg.train_per_class, cfg.seed)
    clean_train, clean_test = data.subset(train_idx), data.subset(test_idx)

    result = ExperimentResult(
        levels=tuple(cfg.noise_levels), methods=tuple(m.label for m in cfg.methods)
    )
    for li, level in enumerate(cfg.noise_levels):
        train = corrupt(clean_train, cfg, level, stream=2 * li + 1)
        test = corrupt(clean_test, cfg, level, stream=2 * li + 2) if cfg.noise_test else clean_test

        def cell(method):
            try:
                return _evaluate(cfg, method, train, test, max_dim), None
            except (ArithmeticError, np.linalg.LinAlgError, RuntimeError, ValueError) as exc:
                log.warning("%s at %s=%s failed: %s", method.label, cfg.noise_kind, level, exc)
                return None, f"{type(exc).__name__}: {exc}"

        if cfg.jobs > 1:
            with ThreadPoolExecutor(cfg.jobs) as pool:
                outcomes = list(pool.map(cell, cfg.methods))
        else:
            outcomes = [cell(m) for m in cfg.methods]

        for method, (acc, err) in zip(cfg.methods, outcomes):
            if err is not None:
                result.errors.append([method.label, cfg.noise_kind, _fmt(level), err])
                continue
            p = _fmt(method.p) if method.name == "g2dlda" else "2"
            sigma = _fmt(method.sigma) if method.name == "g2dlda" else ""
            for dim in cfg.dims:
                result.rows.append(
                    [method.label, p, sigma, cfg.noise_kind, _fmt(level), dim, f"{acc[dim - 1]:.6f}"]
                )
            in_range = np.array([acc[dim - 1] for dim in cfg.dims])
            best = int(np.argmax(in_range))
            result.summary.append(
                [method.label, _fmt(level), f"{in_range[best]:.6f}", cfg.dims[best]]
            )
    if out_dir is not None:
        result.write(out_dir)
    return result
