"""Command-line entry point: ``g2dlda {fit,project,classify,noise,synth,experiment}``."""
from __future__ import annotations

import argparse
import csv
import logging
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import _kernels
from .baselines import fit_2dlda
from .classify import predict_sweep, project
from .data import (
    NOISE_KINDS,
    intensity_range,
    load_dataset,
    pgm_files,
    read_pgm,
    to_pgm_levels,
    write_pgm,
)
from .experiment import load_config, noise_spec, run_experiment
from .kvconfig import ConfigError, read_kv
from .modelio import load_model, save_model
from .solver import SolverConfig, SolverError, fit
from .synth import SynthSpec, make_synthetic

log = logging.getLogger("g2dlda")

FIT_KEYS = {
    "dataset", "pixel_scale", "method", "p", "sigma", "ridge", "r1",
    "epsilon", "itmax", "delta_mag", "tau",
}


def _common(parser):
    parser.add_argument("--config", type=Path, help="key=value configuration file")
    parser.add_argument("--seed", type=int, help="RNG seed (unsigned 64-bit)")
    parser.add_argument("--out", type=Path, help="output file or directory")
    parser.add_argument("-v", "--verbose", action="store_true")


def _load_image(path, pixel_scale):
    img = read_pgm(path).astype(np.float64)
    return img / 255.0 if pixel_scale == "unit" else img


def cmd_fit(args):
    kv = read_kv(args.config) if args.config else {}
    unknown = set(kv) - FIT_KEYS
    if unknown:
        raise ConfigError(f"unknown fit keys {sorted(unknown)}")
    base = args.config.parent if args.config else Path(".")
    for key in ("dataset", "method", "p", "sigma", "ridge", "r1", "pixel_scale"):
        value = getattr(args, key)
        if value is not None:
            kv[key] = str(value)
    if "dataset" not in kv:
        raise ConfigError("fit needs a dataset (positional argument or 'dataset' key)")
    dataset_path = Path(kv["dataset"])
    if args.dataset is None:
        dataset_path = base / dataset_path
    if args.out is None:
        raise ConfigError("fit needs --out for the model file")
    data = load_dataset(dataset_path, kv.get("pixel_scale", "unit"))
    r1 = int(kv.get("r1", 1))
    if kv.get("method", "g2dlda") == "eigen2dlda":
        model = fit_2dlda(data, r1, float(kv.get("ridge", 0.0)))
    else:
        cfg = SolverConfig(
            p=float(kv.get("p", 1.0)),
            sigma=float(kv.get("sigma", 0.01)),
            epsilon=float(kv.get("epsilon", 1e-4)),
            itmax=int(kv.get("itmax", 50)),
            delta_mag=float(kv.get("delta_mag", 1e-6)),
            tau=float(kv.get("tau", 1e-12)),
            seed=args.seed or 0,
            r1=r1,
        )
        model = fit(data, cfg)
        for s, tr in enumerate(model.traces, 1):
            log.info("direction %d: %s, %d iterations, %d perturbations",
                     s, tr.termination, tr.iterations, tr.perturbations)
    save_model(model, args.out)
    print(f"wrote {args.out} (d1={model.d1}, r1={model.r1})")


def cmd_project(args):
    model = load_model(args.model)
    out = open(args.out, "w", newline="", encoding="utf-8") if args.out else sys.stdout
    try:
        writer = csv.writer(out, lineterminator="\n")
        header_written = False
        for src in args.inputs:
            for f in pgm_files(src):
                C = project(_load_image(f, args.pixel_scale), model, args.dims)
                if not header_written:
                    writer.writerow(["file", "row"] + [f"c{k}" for k in range(C.shape[1])])
                    header_written = True
                for r, row in enumerate(C):
                    writer.writerow([f.as_posix(), r + 1] + [repr(float(v)) for v in row])
    finally:
        if out is not sys.stdout:
            out.close()


def cmd_classify(args):
    model = load_model(args.model)
    train = load_dataset(args.train, args.pixel_scale)
    test = load_dataset(args.test, args.pixel_scale)
    if train.class_names != test.class_names:
        raise ConfigError("train and test directories must contain the same class names")
    dims = args.dims or model.r1
    pred = predict_sweep(model, train, test, dims)[-1]
    acc = float(np.mean(pred == test.labels))
    if args.out:
        with open(args.out, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["file", "true", "predicted"])
            for name, y, yhat in zip(test.names, test.labels, pred):
                writer.writerow([name, train.class_names[y - 1], train.class_names[yhat - 1]])
    print(f"accuracy={acc:.6f} dims={dims} n_test={test.n_samples}")


def cmd_noise(args):
    if args.out is None:
        raise ConfigError("noise needs --out")
    lo, hi = intensity_range("unit")
    src = Path(args.input)
    files = pgm_files(src)
    for i, f in enumerate(files):
        seed = (args.seed or 0) + i
        spec = noise_spec(args.kind, args.level, args.coverage, seed)
        noisy = spec.apply(read_pgm(f) / 255.0, lo, hi)
        dest = args.out / f.relative_to(src) if src.is_dir() else args.out
        dest.parent.mkdir(parents=True, exist_ok=True)
        write_pgm(dest, to_pgm_levels(noisy, "unit"))
    print(f"wrote {len(files)} image(s) to {args.out}")


def cmd_synth(args):
    if args.out is None:
        raise ConfigError("synth needs --out")
    spec = SynthSpec.from_file(args.config) if args.config else SynthSpec()
    data, flags = make_synthetic(spec, args.out, seed=args.seed)
    print(f"wrote {data.n_samples} images in {data.n_classes} classes "
          f"({int(flags.sum())} outliers) to {args.out}")


def cmd_experiment(args):
    if args.config is None:
        raise ConfigError("experiment needs --config")
    cfg = load_config(args.config, seed=args.seed)
    if args.jobs:
        cfg = replace(cfg, jobs=args.jobs)
    out = args.out or Path("results")
    result = run_experiment(cfg, out)
    sys.stdout.write(result.table())
    print(f"reports written to {out}")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="g2dlda",
        description="Lp-norm regularized 2D discriminant analysis experiments.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fit", help="fit a projection model and write it as a .g2dl file")
    _common(p)
    p.add_argument("dataset", nargs="?", help="dataset root (overrides the config)")
    p.add_argument("--method", choices=["g2dlda", "eigen2dlda"])
    p.add_argument("--p", type=float)
    p.add_argument("--sigma", type=float)
    p.add_argument("--ridge", type=float)
    p.add_argument("--r1", type=int)
    p.add_argument("--pixel-scale", dest="pixel_scale", choices=["unit", "raw"])
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("project", help="project PGM images through a model (CSV output)")
    _common(p)
    p.add_argument("--model", type=Path, required=True)
    p.add_argument("--dims", type=int)
    p.add_argument("--pixel-scale", dest="pixel_scale", choices=["unit", "raw"], default="unit")
    p.add_argument("inputs", nargs="+", help="PGM files or directories")
    p.set_defaults(func=cmd_project)

    p = sub.add_parser("classify", help="1-NN accuracy of a model on a train/test pair")
    _common(p)
    p.add_argument("--model", type=Path, required=True)
    p.add_argument("--train", type=Path, required=True)
    p.add_argument("--test", type=Path, required=True)
    p.add_argument("--dims", type=int)
    p.add_argument("--pixel-scale", dest="pixel_scale", choices=["unit", "raw"], default="unit")
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("noise", help="corrupt a PGM file or directory tree")
    _common(p)
    p.add_argument("--kind", choices=NOISE_KINDS, required=True)
    p.add_argument("--level", type=float, required=True,
                   help="density (salt_pepper), variance (gaussian_rect) or coverage (black_block)")
    p.add_argument("--coverage", type=float, default=0.5, help="rectangle coverage for gaussian_rect")
    p.add_argument("input", help="PGM file or directory")
    p.set_defaults(func=cmd_noise)

    p = sub.add_parser("synth", help="write a seeded synthetic dataset")
    _common(p)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("experiment", help="run a noise/method/dimension sweep")
    _common(p)
    p.add_argument("--jobs", type=int, help="evaluate methods on this many threads")
    p.set_defaults(func=cmd_experiment)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    log.debug("kernel backend: %s", _kernels.BACKEND)
    if args.seed is not None and not 0 <= args.seed < 2**64:
        print("error: --seed must be an unsigned 64-bit integer", file=sys.stderr)
        return 2
    try:
        args.func(args)
    except (ConfigError, SolverError, ValueError, np.linalg.LinAlgError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
