"""Cross-validated comparison of LDA/MFA and their uncertainty-aware variants.

Every random draw is seeded from the master seed and the key of the cell it
belongs to, so reports do not depend on thread count or execution order.
"""

from __future__ import annotations

import csv
import hashlib
import io
import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import embedding, uncertainty
from .classify import KnnModel, accuracy, knn_predict, knn_predict_many
from .config import ExperimentConfig
from .data import (
    Dataset,
    add_noise,
    decision_grid,
    kfold,
    load_csv,
    stratified_subsample,
    synthetic_two_class,
    zscore_fit_apply,
)
from .errors import GEUError, NotTwoDimensional, SizeTooLarge, SizeTooSmall

log = logging.getLogger(__name__)

# stream tags for seed derivation
_FOLDS, _NOISE, _INNER, _TEST, _SUBSAMPLE, _AUGMENT = range(6)


def derive_seed(*keys) -> int:
    return int(np.random.SeedSequence([int(k) for k in keys]).generate_state(1)[0])


def split_method(name: str):
    """``"GEU-MFA-S"`` -> ``("MFA", "S")``; ``"RLDA"`` -> ``("LDA", "ridge")``."""
    if name == "RLDA":
        return "LDA", "ridge"
    if name in ("LDA", "MFA"):
        return name, None
    if name.startswith("GEU-"):
        _, base, mode = name.split("-")
        return base, mode
    raise ValueError(f"unknown method {name!r}")


def load_dataset(cfg: ExperimentConfig) -> Dataset:
    delim = "\t" if cfg.delimiter in ("\\t", "tab") else cfg.delimiter
    return load_csv(cfg.dataset, cfg.label_column, delim, cfg.header, cfg.drop_columns)


def fold_hash(folds) -> str:
    return hashlib.sha256(np.asarray(folds, dtype=np.int64).tobytes()).hexdigest()[:12]


# --- single-method training ---------------------------------------------

def estimate(mode, features, labels, sigma_scale):
    if mode == "U":
        return uncertainty.estimate_unsupervised(features, sigma_scale)
    return uncertainty.estimate_supervised(features, labels, sigma_scale)


class MethodFitter:
    """Fits one named method on one training set, reusing its graphs."""

    def __init__(self, name: str, cfg: ExperimentConfig, train: Dataset):
        self.name = name
        self.base, self.mode = split_method(name)
        self.cfg = cfg
        self.train = train
        self.graphs = embedding.build_graphs(train.features, train.labels, self.base,
                                             cfg.k1, cfg.k2)

    @property
    def params(self):
        if self.mode in ("U", "S"):
            return list(self.cfg.sigmas)
        if self.mode == "ridge":
            return list(self.cfg.rlda_ridges)
        return [0.0]

    def fit(self, param, d=None):
        x, y, cfg = self.train.features, self.train.labels, self.cfg
        kw = dict(k1=cfg.k1, k2=cfg.k2, graph_pair=self.graphs)
        if self.mode in ("U", "S"):
            u = estimate(self.mode, x, y, param)
            return embedding.fit(x, y, self.base, u, d, **kw)
        if self.mode == "ridge":
            return embedding.fit(x, y, self.base, None, d, ridge_factor=param, **kw)
        return embedding.fit(x, y, self.base, None, d, **kw)


@dataclass(frozen=True)
class FoldResult:
    accuracy: float
    param: float
    d: int
    k: int
    status: str = "ok"


def select_hyperparameters(name, cfg: ExperimentConfig, train: Dataset, seed: int):
    """Inner cross-validation over (param, d, k); returns the best triple.

    Ties prefer the smaller d, then the smaller param, then the smaller k.
    """
    counts = np.unique(train.labels, return_counts=True)[1]
    stratified = counts.min() >= cfg.inner_folds
    inner = kfold(train.labels, cfg.inner_folds, seed, stratified=stratified)
    scores = {}
    for fold in range(cfg.inner_folds):
        tr_idx, va_idx = inner.train_test(fold)
        tr, va = train.subset(tr_idx), train.subset(va_idx)
        try:
            fitter = MethodFitter(name, cfg, tr)
        except GEUError as exc:
            log.debug("%s inner fold %d: %s", name, fold, exc)
            continue
        ks = [k for k in cfg.ks if k <= tr.n_samples]
        for param in fitter.params:
            try:
                model = fitter.fit(param)
            except GEUError as exc:
                log.debug("%s param %g: %s", name, param, exc)
                continue
            for d in cfg.dims:
                if d > model.d:
                    continue
                m = model.truncated(d)
                preds = knn_predict_many(embedding.project(m, tr.features), tr.labels,
                                         embedding.project(m, va.features), ks)
                for k, p in preds.items():
                    scores.setdefault((d, param, k), [0.0] * cfg.inner_folds)[fold] = \
                        accuracy(p, va.labels)
    if not scores:
        raise GEUError(f"{name}: no hyperparameter setting could be fitted")
    return max(scores, key=lambda key: (np.mean(scores[key]), -key[0], -key[1], -key[2]))


def train_and_score(name, cfg: ExperimentConfig, train: Dataset, test: Dataset, seed: int) -> FoldResult:
    d, param, k = select_hyperparameters(name, cfg, train, seed)
    model = MethodFitter(name, cfg, train).fit(param, d)
    knn = KnnModel(embedding.project(model, train.features), train.labels, k)
    acc = accuracy(knn_predict(knn, embedding.project(model, test.features)), test.labels)
    return FoldResult(acc, param, d, k)


def prepare_fold(cfg, ds: Dataset, train_idx, test_idx, noise_level, noise_seed):
    train, test = ds.subset(train_idx), ds.subset(test_idx)
    train = add_noise(train, noise_level, noise_seed)
    if cfg.noise_on_test:
        test = add_noise(test, noise_level, derive_seed(noise_seed, 1))
    if cfg.standardize:
        (train, test), _ = zscore_fit_apply(train, [test])
    return train, test


# --- reports ------------------------------------------------------------

@dataclass
class CellSummary:
    method: str
    key: float  # noise level or training size
    raw: list = field(default_factory=list)  # (repeat, fold, fold_hash, FoldResult)
    seconds: float = 0.0

    def repeat_means(self):
        by_rep = {}
        for rep, _, _, res in self.raw:
            if res.status == "ok":
                by_rep.setdefault(rep, []).append(res.accuracy)
        return {r: float(np.mean(v)) for r, v in sorted(by_rep.items())}

    @property
    def ok(self):
        return [res.accuracy for *_, res in self.raw if res.status == "ok"]

    @property
    def mean(self) -> float:
        return float(np.mean(self.ok)) if self.ok else float("nan")

    @property
    def variance(self) -> float:
        reps = list(self.repeat_means().values())
        return float(np.var(reps)) if reps else float("nan")

    @property
    def status(self) -> str:
        failed = sum(res.status != "ok" for *_, res in self.raw)
        return "ok" if not failed else ("failed" if failed == len(self.raw) else "partial")


@dataclass
class ExperimentReport:
    key_name: str  # "noise" or "train_size"
    cells: dict  # (method, key) -> CellSummary
    methods: list
    keys: list

    def cell(self, method, key) -> CellSummary:
        return self.cells[(method, key)]

    def summary_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["method", self.key_name, "mean_accuracy", "variance", "n_entries", "status"])
        for m in self.methods:
            for key in self.keys:
                c = self.cells[(m, key)]
                w.writerow([m, key, f"{c.mean:.6f}", f"{c.variance:.8f}", len(c.raw), c.status])
        return buf.getvalue()

    def raw_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["method", self.key_name, "repeat", "fold", "fold_hash", "accuracy",
                    "param", "d", "k", "status"])
        for m in self.methods:
            for key in self.keys:
                for rep, fold, fh, res in self.cells[(m, key)].raw:
                    w.writerow([m, key, rep, fold, fh, repr(res.accuracy), repr(res.param),
                                res.d, res.k, res.status])
        return buf.getvalue()

    def markdown(self, title="") -> str:
        label = "noise" if self.key_name == "noise" else "train size"
        lines = [f"## {title}".rstrip(), ""] if title else []
        lines.append(f"| {label} | " + " | ".join(self.methods) + " |")
        lines.append("|---|" + "---|" * len(self.methods))
        for key in self.keys:
            shown = f"{key * 100:g}%" if self.key_name == "noise" else f"{key}"
            vals = []
            for m in self.methods:
                c = self.cells[(m, key)]
                vals.append("failed" if c.status == "failed" else f"{c.mean:.3f} ± {c.variance:.4f}")
            lines.append(f"| {shown} | " + " | ".join(vals) + " |")
        return "\n".join(lines) + "\n"

    def check_consistency(self):
        """Summary statistics must be recomputable from the raw entries."""
        for c in self.cells.values():
            ok = [res.accuracy for *_, res in c.raw if res.status == "ok"]
            if ok and not np.isclose(np.mean(ok), c.mean, rtol=0, atol=1e-12):
                raise AssertionError(f"mean of {c.method}@{c.key} not reproducible")
            reps = {}
            for rep, _, _, res in c.raw:
                if res.status == "ok":
                    reps.setdefault(rep, []).append(res.accuracy)
            if reps:
                var = np.var([np.mean(v) for v in reps.values()])
                if not np.isclose(var, c.variance, rtol=0, atol=1e-12):
                    raise AssertionError(f"variance of {c.method}@{c.key} not reproducible")

    def write(self, out_dir, prefix="report", title=""):
        """Write ``<prefix>.csv``, ``<prefix>_raw.csv``, ``<prefix>.md`` and timings.

        Only the timings file depends on wall-clock time.
        """
        self.check_consistency()
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / f"{prefix}.csv").write_text(self.summary_csv())
        (out / f"{prefix}_raw.csv").write_text(self.raw_csv())
        (out / f"{prefix}.md").write_text(self.markdown(title))
        secs = {}
        for c in self.cells.values():
            secs[c.method] = secs.get(c.method, 0.0) + c.seconds
        (out / f"{prefix}_timings.csv").write_text(
            "method,seconds\n" + "".join(f"{m},{secs[m]:.3f}\n" for m in self.methods))
        return out


def _run_cells(tasks, threads):
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(lambda t: t(), tasks))
    return [t() for t in tasks]


def _failed(exc):
    log.warning("cell failed: %s", exc)
    msg = str(exc).replace(",", ";").replace("\n", " ")
    return FoldResult(float("nan"), float("nan"), 0, 0, f"failed: {type(exc).__name__}: {msg}")


# --- protocols ----------------------------------------------------------

def run_compare(cfg: ExperimentConfig, ds: Dataset | None = None) -> ExperimentReport:
    """Repeated K-fold comparison of ``cfg.methods`` at every noise level.

    Within one repeat all methods and noise levels share the fold split.
    Only the training folds receive noise unless ``noise_on_test`` is set.
    """
    ds = ds if ds is not None else load_dataset(cfg)
    cfg.validate(ds.n_features)
    splits = [kfold(ds.labels, cfg.folds, derive_seed(cfg.seed, _FOLDS, r)) for r in range(cfg.repeats)]
    hashes = [fold_hash(s.fold_assignments) for s in splits]

    def cell_task(method, ni, level, rep):
        def run():
            t0 = time.perf_counter()
            rows = []
            for f in range(cfg.folds):
                tr_idx, te_idx = splits[rep].train_test(f)
                try:
                    train, test = prepare_fold(cfg, ds, tr_idx, te_idx, level,
                                               derive_seed(cfg.seed, _NOISE, rep, ni, f))
                    res = train_and_score(method, cfg, train, test,
                                          derive_seed(cfg.seed, _INNER, rep, f))
                except GEUError as exc:
                    res = _failed(exc)
                rows.append((rep, f, hashes[rep], res))
            return (method, level), rows, time.perf_counter() - t0
        return run

    tasks = [cell_task(m, ni, level, r)
             for r in range(cfg.repeats)
             for ni, level in enumerate(cfg.noise_levels)
             for m in cfg.methods]
    cells = {(m, level): CellSummary(m, level) for m in cfg.methods for level in cfg.noise_levels}
    for key, rows, secs in _run_cells(tasks, cfg.threads):
        cells[key].raw.extend(rows)
        cells[key].seconds += secs
    for c in cells.values():
        c.raw.sort(key=lambda row: (row[0], row[1]))
    return ExperimentReport("noise", cells, list(cfg.methods), list(cfg.noise_levels))


def run_size_curve(cfg: ExperimentConfig, ds: Dataset | None = None, sizes=None) -> ExperimentReport:
    """Accuracy against training-set size on a fixed held-out test set.

    The test set is one stratified fold of ``cfg.folds`` (seeded by the
    master seed); each repeat draws a fresh stratified subsample of the
    remaining pool for every size.
    """
    ds = ds if ds is not None else load_dataset(cfg)
    cfg.validate(ds.n_features)
    sizes = list(sizes if sizes is not None else cfg.train_sizes)
    if not sizes:
        raise SizeTooSmall("no training sizes given")
    split = kfold(ds.labels, cfg.folds, derive_seed(cfg.seed, _TEST))
    pool_idx, test_idx = split.train_test(0)
    n_classes = np.unique(ds.labels).size
    for size in sizes:
        if size > pool_idx.size:
            raise SizeTooLarge(f"training size {size} exceeds the pool of {pool_idx.size}")
        if size < n_classes:
            raise SizeTooSmall(f"training size {size} is below one sample per class")
    level = cfg.noise_levels[0]
    h = fold_hash(split.fold_assignments)

    def cell_task(method, size, rep):
        def run():
            t0 = time.perf_counter()
            sub = pool_idx[stratified_subsample(ds.labels[pool_idx], size,
                                                derive_seed(cfg.seed, _SUBSAMPLE, rep, size))]
            try:
                train, test = prepare_fold(cfg, ds, sub, test_idx, level,
                                           derive_seed(cfg.seed, _NOISE, rep, size))
                res = train_and_score(method, cfg, train, test,
                                      derive_seed(cfg.seed, _INNER, rep, size))
            except GEUError as exc:
                res = _failed(exc)
            return (method, size), [(rep, 0, h, res)], time.perf_counter() - t0
        return run

    tasks = [cell_task(m, s, r) for r in range(cfg.repeats) for s in sizes for m in cfg.methods]
    cells = {(m, s): CellSummary(m, s) for m in cfg.methods for s in sizes}
    for key, rows, secs in _run_cells(tasks, cfg.threads):
        cells[key].raw.extend(rows)
        cells[key].seconds += secs
    for c in cells.values():
        c.raw.sort(key=lambda row: (row[0], row[1]))
    return ExperimentReport("train_size", cells, list(cfg.methods), sizes)


# --- decision boundaries --------------------------------------------------

def boundary_dataset(cfg: ExperimentConfig, seed=None) -> Dataset:
    if cfg.dataset:
        ds = load_dataset(cfg)
        if ds.n_features != 2:
            raise NotTwoDimensional(f"boundary needs 2-D data, got {ds.n_features} features")
        return ds
    seed = cfg.seed if seed is None else seed
    return synthetic_two_class(cfg.n_per_class, cfg.separation, cfg.spread, seed)


def boundary_models(cfg: ExperimentConfig, ds: Dataset, seed=None) -> dict:
    """MFA, GEU-MFA and MFA on replicate-augmented data, keyed by name."""
    if ds.n_features != 2:
        raise NotTwoDimensional(f"boundary needs 2-D data, got {ds.n_features} features")
    seed = cfg.seed if seed is None else seed
    x, y = ds.features, ds.labels
    u = estimate(cfg.uncertainty_mode, x, y, cfg.sigma_scale)
    d = cfg.boundary_d
    models = {
        "MFA": embedding.fit(x, y, "MFA", None, d, k1=cfg.k1, k2=cfg.k2),
        "GEU-MFA": embedding.fit(x, y, "MFA", u, d, k1=cfg.k1, k2=cfg.k2),
    }
    for m in cfg.replicates:
        models[f"MFA-{m}"] = embedding.fit_augmented(
            x, y, u, m, derive_seed(seed, _AUGMENT, m), d, k1=cfg.k1, k2=cfg.k2)
    return models


def padded_bounds(features, pad=0.1):
    lo, hi = features.min(axis=0), features.max(axis=0)
    span = np.where(hi > lo, hi - lo, 1.0)
    lo, hi = lo - pad * span, hi + pad * span
    return float(lo[0]), float(hi[0]), float(lo[1]), float(hi[1])


def run_boundary(cfg: ExperimentConfig, out_dir=None, ds: Dataset | None = None, seed=None) -> dict:
    """Decision grids of every boundary model; CSVs are written when ``out_dir`` is set."""
    ds = ds if ds is not None else boundary_dataset(cfg, seed)
    models = boundary_models(cfg, ds, seed)
    bounds = padded_bounds(ds.features)
    grids = {}
    for name, model in models.items():
        knn = KnnModel(embedding.project(model, ds.features), ds.labels, cfg.boundary_k)
        grids[name] = decision_grid(model, knn, bounds, cfg.resolution)
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        for name, grid in grids.items():
            grid.to_csv(out / f"grid_{name}.csv")
        with open(out / "boundary_train.csv", "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["x", "y", "label"])
            for (a, b), lab in zip(ds.features, ds.labels):
                w.writerow([repr(float(a)), repr(float(b)), int(lab)])
    return grids
