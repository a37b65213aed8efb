"""Command-line entry point.

Exit codes: 0 success, 1 configuration error, 2 data error, 3 numerical
failure.
"""

from __future__ import annotations

import argparse
import csv
import logging
import sys
from pathlib import Path

from . import embedding
from .config import ExperimentConfig, dump_config, load_config
from .errors import ConfigError, GEUError
from .experiment import estimate, load_dataset, run_boundary, run_compare, run_size_curve, split_method


def _config(args) -> ExperimentConfig:
    cfg = load_config(args.config) if args.config else ExperimentConfig()
    if args.seed is not None:
        cfg.seed = args.seed
    if args.threads is not None:
        cfg.threads = args.threads
    for name in ("dataset", "model_path"):
        value = getattr(args, name, None)
        if value:
            setattr(cfg, name, value)
    return cfg.validate()


def _require_dataset(cfg):
    if not cfg.dataset:
        raise ConfigError("this command needs a dataset (config key 'dataset' or --dataset)")


def cmd_compare(cfg, out):
    _require_dataset(cfg)
    report = run_compare(cfg)
    report.write(out, "report", title=Path(cfg.dataset).stem)
    (out / "config.txt").write_text(dump_config(cfg))
    print(report.markdown(Path(cfg.dataset).stem))


def cmd_size_curve(cfg, out):
    _require_dataset(cfg)
    report = run_size_curve(cfg)
    report.write(out, "size_curve", title=Path(cfg.dataset).stem)
    (out / "config.txt").write_text(dump_config(cfg))
    print(report.markdown(Path(cfg.dataset).stem))


def cmd_boundary(cfg, out):
    grids = run_boundary(cfg, out)
    for name in grids:
        print(out / f"grid_{name}.csv")


def cmd_estimate(cfg, out):
    _require_dataset(cfg)
    ds = load_dataset(cfg)
    u = estimate(cfg.uncertainty_mode, ds.features, ds.labels, cfg.sigma_scale)
    path = out / "uncertainty.csv"
    u.to_csv(path)
    print(path)


def cmd_fit(cfg, out):
    _require_dataset(cfg)
    ds = load_dataset(cfg)
    base, mode = split_method(cfg.fit_method)
    u = None
    ridge_factor = None
    if mode in ("U", "S"):
        u = estimate(mode, ds.features, ds.labels, cfg.sigma_scale)
    elif mode == "ridge":
        ridge_factor = cfg.rlda_ridges[0]
    model = embedding.fit(ds.features, ds.labels, base, u, cfg.fit_d, k1=cfg.k1, k2=cfg.k2,
                          ridge_factor=ridge_factor)
    path = Path(cfg.model_path) if cfg.model_path else out / "model.txt"
    path.parent.mkdir(parents=True, exist_ok=True)
    model.save(path)
    print(path)


def cmd_project(cfg, out):
    _require_dataset(cfg)
    if not cfg.model_path:
        raise ConfigError("project needs a model (config key 'model_path' or --model)")
    model = embedding.load_model(cfg.model_path)
    ds = load_dataset(cfg)
    y = embedding.project(model, ds.features)
    path = out / "projected.csv"
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow([f"y{j}" for j in range(y.shape[1])] + ["label"])
        for row, lab in zip(y, ds.labels):
            name = ds.class_names[int(lab)] if ds.class_names else int(lab)
            w.writerow([repr(float(v)) for v in row] + [name])
    print(path)


COMMANDS = {
    "compare": (cmd_compare, "cross-validated method comparison over noise levels"),
    "size-curve": (cmd_size_curve, "accuracy against training-set size"),
    "boundary": (cmd_boundary, "2-D decision grids for MFA, GEU-MFA and augmented MFA"),
    "estimate-uncertainty": (cmd_estimate, "write per-sample variances as CSV"),
    "fit": (cmd_fit, "fit one model and save it"),
    "project": (cmd_project, "apply a saved model to a dataset"),
}


def build_parser():
    parser = argparse.ArgumentParser(prog="geu", description=__doc__.splitlines()[0])
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="key = value configuration file")
    common.add_argument("--seed", type=int, help="override the master seed")
    common.add_argument("--out", metavar="DIR", default=".", help="output directory")
    common.add_argument("--threads", type=int, help="worker threads for independent cells")
    common.add_argument("--dataset", metavar="PATH", help="override the dataset path")
    common.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (_, help_text) in COMMANDS.items():
        p = sub.add_parser(name, parents=[common], help=help_text)
        if name == "project":
            p.add_argument("--model", dest="model_path", metavar="PATH", help="saved model file")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = _config(args)
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        COMMANDS[args.command][0](cfg, out)
    except GEUError as exc:
        print(f"geu: error: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"geu: error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
