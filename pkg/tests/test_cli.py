import numpy as np
import pytest

from geu.cli import main
from geu.config import ExperimentConfig, dump_config, parse_config
from geu.data import Dataset, save_csv
from geu.embedding import load_model
from geu.errors import ConfigError
from geu.uncertainty import load_csv as load_uncertainty

from conftest import random_dataset


@pytest.fixture
def dataset_csv(tmp_path):
    x, y = random_dataset(np.random.default_rng(8), 60, 4, 2)
    path = tmp_path / "data.csv"
    save_csv(Dataset(x, y), path)
    return path


def write_config(tmp_path, dataset, **extra):
    lines = [f"dataset = {dataset}", "label_column = label", "methods = [LDA, GEU-MFA-S]",
             "sigmas = [0.1, 1]", "dims = [1, 2]", "ks = [1, 3]", "k1 = 3", "k2 = 8",
             "noise_levels = [0, 0.1]", "folds = 3", "repeats = 2"]
    lines += [f"{k} = {v}" for k, v in extra.items()]
    path = tmp_path / "exp.cfg"
    path.write_text("\n".join(lines) + "\n")
    return path


def test_parse_config_lists_and_types():
    cfg = parse_config("methods = [MFA, GEU-MFA-S]  # mfa rows\nsigmas = 0.1, 2\nheader = no\nk1 = 7\n")
    assert cfg.methods == ["MFA", "GEU-MFA-S"]
    assert cfg.sigmas == [0.1, 2.0]
    assert cfg.header is False and cfg.k1 == 7
    assert cfg.folds == 5 and cfg.repeats == 10
    assert parse_config(dump_config(cfg)) == cfg


@pytest.mark.parametrize("text", ["sigmass = [1]", "k1 = five", "methods = [PCA]", "dims = []",
                                  "folds 5", "k1 = 3\nk1 = 4", "methods = [LDA"])
def test_parse_config_errors(text):
    with pytest.raises(ConfigError):
        parse_config(text)


def test_default_grids():
    cfg = ExperimentConfig()
    assert cfg.sigmas == [0.001, 0.1, 0.2, 0.4, 0.8, 1.0, 2.0]
    assert cfg.dims == [1, 2, 4, 8]
    assert cfg.noise_levels == [0.0, 0.1, 0.2]


def test_compare_command(tmp_path, dataset_csv, capsys):
    cfg = write_config(tmp_path, dataset_csv)
    assert main(["compare", "--config", str(cfg), "--out", str(tmp_path / "a")]) == 0
    assert "GEU-MFA-S" in capsys.readouterr().out
    assert main(["compare", "--config", str(cfg), "--out", str(tmp_path / "b"), "--threads", "3"]) == 0
    for name in ("report.csv", "report_raw.csv", "report.md"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    assert main(["compare", "--config", str(cfg), "--out", str(tmp_path / "c"), "--seed", "99"]) == 0
    assert (tmp_path / "a" / "report_raw.csv").read_bytes() != (tmp_path / "c" / "report_raw.csv").read_bytes()


def test_size_curve_command(tmp_path, dataset_csv):
    cfg = write_config(tmp_path, dataset_csv, train_sizes="[20, 40]")
    assert main(["size-curve", "--config", str(cfg), "--out", str(tmp_path)]) == 0
    assert (tmp_path / "size_curve.csv").read_text().count("\n") == 1 + 2 * 2


def test_boundary_command(tmp_path):
    cfg = tmp_path / "b.cfg"
    cfg.write_text("resolution = 20\nreplicates = [100]\n")
    assert main(["boundary", "--config", str(cfg), "--out", str(tmp_path)]) == 0
    for name in ("MFA", "GEU-MFA", "MFA-100"):
        assert (tmp_path / f"grid_{name}.csv").read_text().startswith("x,y,label\n")


def test_fit_project_estimate(tmp_path, dataset_csv):
    cfg = write_config(tmp_path, dataset_csv, fit_method="GEU-LDA-U", fit_d=3, sigma_scale=0.5)
    assert main(["estimate-uncertainty", "--config", str(cfg), "--out", str(tmp_path)]) == 0
    assert load_uncertainty(tmp_path / "uncertainty.csv").shape == (60, 4)
    assert main(["fit", "--config", str(cfg), "--out", str(tmp_path)]) == 0
    model = load_model(tmp_path / "model.txt")
    assert model.method_tag == "GEU-LDA" and model.d == 3 and model.sigma == 0.5
    assert main(["project", "--config", str(cfg), "--out", str(tmp_path),
                 "--model", str(tmp_path / "model.txt")]) == 0
    lines = (tmp_path / "projected.csv").read_text().splitlines()
    assert lines[0] == "y0,y1,y2,label" and len(lines) == 61


def test_exit_codes(tmp_path, dataset_csv):
    bad = tmp_path / "bad.cfg"
    bad.write_text("not_a_key = 1\n")
    assert main(["compare", "--config", str(bad)]) == 1
    missing = write_config(tmp_path, tmp_path / "nope.csv")
    assert main(["compare", "--config", str(missing), "--out", str(tmp_path)]) == 2
    flat = tmp_path / "flat.csv"
    flat.write_text("a,b,label\n" + "1,1,x\n1,1,x\n2,2,y\n2,2,y\n")
    cfg = write_config(tmp_path, flat, fit_method="LDA", fit_d=1)
    assert main(["fit", "--config", str(cfg), "--out", str(tmp_path)]) == 3
