import numpy as np
import pytest

from knockoff_filter.cli import main


@pytest.fixture
def dataset(tmp_path):
    rng = np.random.default_rng(0)
    n, p = 50, 10
    x = rng.standard_normal((n, p))
    beta = np.zeros(p)
    beta[:3] = 4.0
    y = x @ beta + rng.standard_normal(n)
    design = tmp_path / "x.csv"
    header = ",".join(f"f{j}" for j in range(p))
    rows = "\n".join(",".join(f"{v:.8f}" for v in row) for row in x)
    design.write_text(header + "\n" + rows + "\n")
    response = tmp_path / "y.csv"
    response.write_text("\n".join(f"{v:.8f}" for v in y) + "\n")
    return design, response


def test_filter_writes_selection_csv(dataset, tmp_path, capsys):
    design, response = dataset
    out = tmp_path / "sel.csv"
    code = main(
        [
            "filter",
            "--design", str(design),
            "--response", str(response),
            "--q", "0.4",
            "--knockoff", "equi",
            "--statistic", "lasso-signed-max",
            "--seed", "1",
            "--out", str(out),
        ]
    )
    assert code == 0
    lines = out.read_text().strip().splitlines()
    meta = [l for l in lines if l.startswith("#")]
    body = [l for l in lines if not l.startswith("#")]
    assert any(l.startswith("# threshold=") for l in meta)
    assert any(l.startswith("# q=0.4") for l in meta)
    assert body[0] == "index,w_value,selected"
    assert len(body) == 1 + 10
    stdout = capsys.readouterr().out
    assert "selected" in stdout


def test_filter_plus_flag(dataset, tmp_path):
    design, response = dataset
    out = tmp_path / "sel.csv"
    code = main(
        [
            "filter", "--design", str(design), "--response", str(response),
            "--q", "0.4", "--knockoff", "equi", "--plus", "--seed", "1",
            "--out", str(out),
        ]
    )
    assert code == 0
    assert "# plus=1" in out.read_text()


def test_filter_missing_file_exits_one(tmp_path, capsys):
    code = main(
        [
            "filter", "--design", str(tmp_path / "nope.csv"),
            "--response", str(tmp_path / "nope2.csv"), "--out", str(tmp_path / "s.csv"),
        ]
    )
    assert code == 1
    assert "FileNotFoundError" in capsys.readouterr().err


def test_filter_shape_mismatch_names_error(dataset, tmp_path, capsys):
    design, _ = dataset
    bad = tmp_path / "bad.csv"
    bad.write_text("1\n2\n")
    code = main(
        ["filter", "--design", str(design), "--response", str(bad), "--out", str(tmp_path / "s.csv")]
    )
    assert code == 1
    assert "ShapeMismatch" in capsys.readouterr().err


def test_simulate_writes_results(tmp_path, capsys):
    out = tmp_path / "results.csv"
    code = main(
        [
            "simulate", "--setting", "table1", "--n", "60", "--p", "20", "--k", "3",
            "--trials", "2", "--methods", "knockoff,bhq", "--seed", "4",
            "--grid-count", "40", "--out", str(out),
        ]
    )
    assert code == 0
    lines = out.read_text().strip().splitlines()
    body = [l for l in lines if not l.startswith("#")]
    assert body[0] == "trial,method,n_selected,false_selected,fdp,power,threshold"
    assert len(body) == 1 + 4
    err = capsys.readouterr().err
    assert "knockoff:" in err and "bhq:" in err


def test_simulate_rejects_unknown_method(tmp_path, capsys):
    code = main(
        ["simulate", "--n", "30", "--p", "10", "--k", "2", "--trials", "1",
         "--methods", "sorcery", "--out", str(tmp_path / "r.csv")]
    )
    assert code == 1
    assert "ValueError" in capsys.readouterr().err


def test_simulate_stdout_output(capsys):
    code = main(
        ["simulate", "--n", "40", "--p", "10", "--k", "2", "--trials", "1",
         "--methods", "bhq", "--grid-count", "30", "--out", "-"]
    )
    assert code == 0
    out = capsys.readouterr().out
    assert "trial,method,n_selected" in out


def test_seqtest_reports_fdr(capsys):
    code = main(
        ["seqtest", "--variant", "sstp1", "--m", "50", "--trials", "200",
         "--q", "0.2", "--nonnulls", "10", "--seed", "1"]
    )
    assert code == 0
    out = capsys.readouterr().out
    assert "fdr:" in out
    assert "variant=sstp1" in out


def test_seqtest_modified_metric_label(capsys):
    code = main(
        ["seqtest", "--variant", "fstp0", "--m", "30", "--trials", "100", "--q", "0.1"]
    )
    assert code == 0
    assert "modified-fdr:" in capsys.readouterr().out


def test_version_flag(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["--version"])
    assert exc.value.code == 0


def test_filter_augments_small_sample_datasets(tmp_path):
    # p <= n < 2p: the filter applies response/design augmentation itself
    rng = np.random.default_rng(6)
    n, p = 15, 10
    x = rng.standard_normal((n, p))
    y = x[:, 0] * 3.0 + rng.standard_normal(n)
    design = tmp_path / "x.csv"
    design.write_text(
        ",".join(f"g{j}" for j in range(p)) + "\n"
        + "\n".join(",".join(f"{v:.8f}" for v in row) for row in x) + "\n"
    )
    response = tmp_path / "y.csv"
    response.write_text("\n".join(f"{v:.8f}" for v in y) + "\n")
    out = tmp_path / "sel.csv"
    code = main(
        ["filter", "--design", str(design), "--response", str(response),
         "--q", "0.4", "--knockoff", "equi", "--seed", "2", "--out", str(out)]
    )
    assert code == 0
    body = [l for l in out.read_text().splitlines() if not l.startswith("#")]
    assert len(body) == 1 + p
