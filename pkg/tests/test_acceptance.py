"""End-to-end acceptance checks.

Each test prints one ``PASS``/``FAIL`` line with the measured numbers and
then asserts. Run just these with ``pytest tests/test_acceptance.py -v``.
"""

import dataclasses
import time

import numpy as np
import pytest
from scipy.linalg import subspace_angles

from geu import classify, embedding
from geu.config import ExperimentConfig
from geu.data import Dataset, load_csv, synthetic_two_class
from geu.eigsolve import SymmetricPencil, numeric_rank, solve_pencil
from geu.experiment import boundary_models, run_compare
from geu.graph import lda_graphs, mfa_graphs
from geu.uncertainty import estimate_supervised, from_explicit

from conftest import random_dataset


@pytest.fixture
def verdict(capsys):
    def report(number, title, ok, detail):
        with capsys.disabled():
            print(f"\n[{'PASS' if ok else 'FAIL'}] criterion {number}: {title} :: {detail}")
        assert ok, detail
    return report


def test_dirac_reduction(verdict):
    start = time.perf_counter()
    rng = np.random.default_rng(1)
    worst_rel, worst_angle = 0.0, 0.0
    for _ in range(20):
        n, dim, c = int(rng.integers(20, 101)), int(rng.integers(2, 21)), int(rng.integers(2, 4))
        x, y = random_dataset(rng, n, dim, c)
        zero = from_explicit(np.zeros((n, dim)))
        for method in ("LDA", "MFA"):
            k1 = min(3, int(np.bincount(y).min()) - 1) or 1
            plain = embedding.fit(x, y, method, k1=k1, k2=10)
            geu = embedding.fit(x, y, method, zero, k1=k1, k2=10)
            scale = np.maximum(np.abs(plain.spectrum), np.finfo(float).tiny)
            worst_rel = max(worst_rel, float(np.max(np.abs(geu.spectrum - plain.spectrum) / scale)))
            vals = plain.kept_eigenvalues
            for j in range(plain.d):
                gaps = np.abs(np.delete(plain.spectrum, np.searchsorted(plain.spectrum, vals[j])) - vals[j])
                if gaps.min() > 1e-6 * max(1.0, abs(vals[j])):
                    ang = subspace_angles(plain.projection[:, [j]], geu.projection[:, [j]])
                    worst_angle = max(worst_angle, float(ang.max()))
    elapsed = time.perf_counter() - start
    ok = worst_rel <= 1e-8 and worst_angle < 1e-6 and elapsed < 10
    verdict(1, "Dirac reduction", ok,
            f"max rel spectrum diff {worst_rel:.2e}, max angle {worst_angle:.2e}, {elapsed:.1f}s")


def test_rank_expansion(verdict):
    rng = np.random.default_rng(2)
    x, y = random_dataset(rng, 40, 10, 2)
    x = x - x.mean(axis=0)
    g = lda_graphs(y)
    penalty = embedding.scatter_from_graph(x, g.penalty_laplacian)
    u = from_explicit(rng.uniform(0.1, 1.0, x.shape))
    constraint = penalty + embedding.uncertainty_regularizer(u, g.penalty_degrees)
    ranks = (numeric_rank(penalty), numeric_rank(constraint))
    verdict(2, "rank expansion", ranks == (1, 10), f"rank(X Lp X^T)={ranks[0]}, rank(GEU b)={ranks[1]}")


def test_quadratic_form_identity(verdict):
    rng = np.random.default_rng(3)
    worst = 0.0
    for _ in range(100):
        n, dim = int(rng.integers(5, 25)), int(rng.integers(1, 8))
        x = rng.normal(size=(n, dim))
        w = rng.uniform(0, 1, (n, n)) * (rng.uniform(size=(n, n)) < 0.6)
        w = np.triu(w, 1)
        w = w + w.T
        deg = w.sum(axis=1)
        lap = np.diag(deg) - w
        covs = rng.uniform(0, 2, (n, dim))
        v = rng.normal(size=dim)
        lhs = v @ (embedding.scatter_from_graph(x, lap)
                   + embedding.uncertainty_regularizer(from_explicit(covs), deg)) @ v
        p = x @ v
        pair = 0.5 * sum(w[i, j] * (p[i] - p[j]) ** 2 for i in range(n) for j in range(n) if i != j)
        rhs = pair + sum(deg[i] * v @ (covs[i] * v) for i in range(n))
        worst = max(worst, abs(lhs - rhs) / max(abs(rhs), 1e-300))
    verdict(3, "quadratic-form identity", worst <= 1e-9, f"max rel error {worst:.2e}")


def test_augmentation_convergence(verdict):
    start = time.perf_counter()
    ds = synthetic_two_class(20, 2.0, 1.0, seed=4)
    x = ds.features - ds.features.mean(axis=0)
    u = estimate_supervised(x, ds.labels, 1.0)
    g = mfa_graphs(x, ds.labels, 5, 20)
    targets = [(g.laplacian, g.degrees), (g.penalty_laplacian, g.penalty_degrees)]

    def rel_err(m, seed):
        errs = []
        for k, (lap, deg) in enumerate(targets):
            exact = embedding.scatter_from_graph(x, lap) + embedding.uncertainty_regularizer(u, deg)
            mc = embedding.augmentation_scatter_oracle(x, u, lap, deg, m, [seed, k])
            errs.append(np.linalg.norm(mc - exact) / np.linalg.norm(exact))
        return max(errs)

    err_fixed = rel_err(10_000, 0)
    err_hi = np.mean([rel_err(10_000, s) for s in range(10)])
    err_lo = np.mean([rel_err(100, s) for s in range(10)])
    elapsed = time.perf_counter() - start
    ok = err_fixed <= 0.05 and err_hi < err_lo and elapsed < 30
    verdict(4, "augmentation convergence", ok,
            f"err(M=1e4)={err_fixed:.4f}, mean err 1e4={err_hi:.4f} vs 1e2={err_lo:.4f}, {elapsed:.1f}s")


def _wdbc_config(path, methods):
    return ExperimentConfig(dataset=str(path), header=False, label_column="1", drop_columns=["0"],
                            methods=methods, threads=4, seed=0)


def _load(cfg):
    return load_csv(cfg.dataset, cfg.label_column, cfg.delimiter, cfg.header, cfg.drop_columns)


@pytest.mark.slow
def test_table1_wdbc_mfa(verdict, wdbc_csv):
    start = time.perf_counter()
    cfg = _wdbc_config(wdbc_csv, ["MFA", "GEU-MFA-S"])
    report = run_compare(cfg, _load(cfg))
    elapsed = time.perf_counter() - start
    mfa, geu = report.cell("MFA", 0.0).mean, report.cell("GEU-MFA-S", 0.0).mean
    wins = 0
    for rep in range(cfg.repeats):
        wins += all(report.cell("GEU-MFA-S", lv).repeat_means()[rep]
                    > report.cell("MFA", lv).repeat_means()[rep] for lv in cfg.noise_levels)
    ok = abs(mfa - 0.858) <= 0.04 and abs(geu - 0.894) <= 0.04 and wins >= 8 and elapsed < 300
    verdict(5, "WDBC MFA vs GEU-MFA-S", ok,
            f"MFA {mfa:.3f} (target 0.858+-0.04), GEU-MFA-S {geu:.3f} (target 0.894+-0.04), "
            f"ordering held in {wins}/10 repeats, {elapsed:.0f}s")


@pytest.mark.slow
def test_table2_wdbc_lda(verdict, wdbc_csv):
    cfg = _wdbc_config(wdbc_csv, ["LDA", "GEU-LDA-U"])
    cfg = dataclasses.replace(cfg, noise_levels=[0.0, 0.2])
    report = run_compare(cfg, _load(cfg))
    lda, geu = report.cell("LDA", 0.0).mean, report.cell("GEU-LDA-U", 0.0).mean
    lda2, geu2 = report.cell("LDA", 0.2).mean, report.cell("GEU-LDA-U", 0.2).mean
    ok = abs(lda - 0.932) <= 0.04 and abs(geu - 0.951) <= 0.04 and geu2 > lda2
    verdict(6, "WDBC LDA vs GEU-LDA-U", ok,
            f"LDA {lda:.3f} (0.932+-0.04), GEU-LDA-U {geu:.3f} (0.951+-0.04), "
            f"noise 0.2: GEU-LDA-U {geu2:.3f} vs LDA {lda2:.3f}")


def test_synthetic_corner_case(verdict):
    cfg = ExperimentConfig(replicates=[])
    gains = []
    for seed in range(10):
        train = synthetic_two_class(cfg.n_per_class, cfg.separation, cfg.spread, seed)
        test = synthetic_two_class(500, cfg.separation, cfg.spread, 1000 + seed)
        acc = {}
        for name, model in boundary_models(cfg, train, seed).items():
            knn = classify.KnnModel(embedding.project(model, train.features), train.labels, 1)
            pred = classify.knn_predict(knn, embedding.project(model, test.features))
            acc[name] = classify.accuracy(pred, test.labels)
        gains.append(acc["GEU-MFA"] - acc["MFA"])
    gain = float(np.mean(gains))
    verdict(7, "overlapping blobs, GEU-MFA vs MFA (k=1, d=1)", gain >= 0.05,
            f"mean gain {100 * gain:.1f} points over 10 seeds")


def test_eigensolver_contract(verdict):
    start = time.perf_counter()
    rng = np.random.default_rng(8)
    worst_orth, worst_res = 0.0, 0.0
    for _ in range(100):
        dim = int(rng.integers(1, 101))
        g = rng.normal(size=(dim, dim))
        a = g + g.T
        h = rng.normal(size=(dim, dim))
        b = h @ h.T + 1e-3 * np.eye(dim)
        sol = solve_pencil(SymmetricPencil(a, b))
        bb = b + sol.ridge * np.eye(dim)
        v, lam = sol.eigenvectors, sol.eigenvalues
        worst_orth = max(worst_orth, float(np.max(np.abs(v.T @ bb @ v - np.eye(dim)))))
        res = np.linalg.norm(a @ v - bb @ v * lam, axis=0)
        bound = 1e-8 * (np.linalg.norm(a) + np.abs(lam) * np.linalg.norm(bb))
        worst_res = max(worst_res, float(np.max(res / bound)))
    elapsed = time.perf_counter() - start
    ok = worst_orth <= 1e-8 and worst_res <= 1.0 and elapsed < 10
    verdict(8, "eigensolver contract", ok,
            f"max |V^T B V - I| {worst_orth:.2e}, max residual/bound {worst_res:.2e}, {elapsed:.1f}s")


def test_compare_determinism(verdict, tmp_path):
    rng = np.random.default_rng(9)
    x, y = random_dataset(rng, 80, 6, 3)
    cfg = ExperimentConfig(sigmas=[0.1, 1.0], dims=[1, 2], ks=[1, 3], k1=3, k2=10, repeats=2, folds=3)
    outs = [run_compare(dataclasses.replace(cfg, threads=t), Dataset(x, y)).write(tmp_path / str(i))
            for i, t in enumerate((1, 1, 4))]
    names = ("report.csv", "report_raw.csv", "report.md")
    same = all((outs[0] / n).read_bytes() == (o / n).read_bytes() for o in outs[1:] for n in names)
    verdict(9, "compare determinism", same, "serial, serial and 4-thread runs byte-identical"
            if same else "report files differ between runs")
