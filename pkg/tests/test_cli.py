import json
import subprocess
import sys

import numpy as np
import pytest

from oracles import components
from ripsmap.cli import main


@pytest.fixture
def square_file(tmp_path):
    path = tmp_path / "square.csv"
    path.write_text("0,0\n1,0\n1,1\n0,1\n")
    return path


def read_rows(path):
    return path.read_text().splitlines()


def dot_components(text):
    lines = [ln.strip() for ln in text.splitlines()]
    nodes = [int(ln.split()[0]) for ln in lines if "[size=" in ln]
    edges = [tuple(int(v) for v in ln.rstrip(";").split(" -- ")) for ln in lines if " -- " in ln]
    index = {v: i for i, v in enumerate(nodes)}
    return components(len(nodes), [(index[a], index[b]) for a, b in edges])


# -- generate --------------------------------------------------------------

def test_generate_two_circles(tmp_path):
    assert main(["generate", "--preset", "two-circles", "--seed", "3", "--out-dir", str(tmp_path)]) == 0
    assert len(read_rows(tmp_path / "points.csv")) == 1500
    labels = read_rows(tmp_path / "labels.csv")[1:]
    assert sum(r.endswith(",inner") for r in labels) == 500
    assert sum(r.endswith(",outer") for r in labels) == 1000
    meta = json.loads((tmp_path / "metadata.json").read_text())
    assert meta["seed"] == 3 and "version" in meta


def test_generate_two_squares(tmp_path):
    assert main(["generate", "--preset", "two-squares", "--out-dir", str(tmp_path)]) == 0
    assert len(read_rows(tmp_path / "points.csv")) == 200


def test_generate_empty_annulus(tmp_path):
    assert main(["generate", "--preset", "annulus", "--n", "0", "--out-dir", str(tmp_path)]) == 0
    assert (tmp_path / "points.csv").read_text() == ""
    assert read_rows(tmp_path / "labels.csv") == ["point_index,label"]
    assert json.loads((tmp_path / "metadata.json").read_text())["n_points"] == 0


def test_generate_is_byte_identical(tmp_path):
    for name in ("a", "b"):
        main(["generate", "--preset", "annulus", "--n", "50", "--seed", "4", "--out-dir", str(tmp_path / name)])
    for f in ("points.csv", "labels.csv", "metadata.json"):
        assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()


# -- persist ---------------------------------------------------------------

def test_persist_unit_square(tmp_path, square_file):
    out = tmp_path / "out"
    assert main(["persist", "--input", str(square_file), "--max-dim", "2", "--max-eps", "2", "--out-dir", str(out)]) == 0
    rows = read_rows(out / "diagram.csv")
    assert rows[1:] == ["0,0.0,1.0"] * 3 + ["0,0.0,inf", "1,1.0,1.4142135623730951"]
    betti = read_rows(out / "betti.csv")
    assert betti[0] == "eps,beta_0,beta_1"
    assert len(betti) == 101
    bars = read_rows(out / "barcode.csv")
    assert bars[0] == "dimension,order,birth,death" and len(bars) == 6


def test_persist_all_dims_shows_top_dimension(tmp_path, square_file):
    out = tmp_path / "out"
    main(["persist", "--input", str(square_file), "--max-dim", "2", "--max-eps", "2", "--all-dims", "--out-dir", str(out)])
    assert "2,1.4142135623730951,inf" in read_rows(out / "diagram.csv")


def test_persist_two_circles_subsampled(tmp_path):
    out = tmp_path / "out"
    code = main(["persist", "--preset", "two-circles", "--subsample", "400", "--max-dim", "2",
                 "--max-eps", "4", "--out-dir", str(out)])
    assert code == 0
    rows = [r.split(",") for r in read_rows(out / "diagram.csv")[1:]]
    h1 = [float(d) - float(b) for k, b, d in rows if k == "1"]
    assert sum(p > 1.0 for p in h1) >= 2


def test_persist_empty_input(tmp_path):
    empty = tmp_path / "empty.csv"
    empty.write_text("")
    out = tmp_path / "out"
    assert main(["persist", "--input", str(empty), "--out-dir", str(out)]) == 0
    assert read_rows(out / "diagram.csv") == ["dimension,birth,death"]
    assert read_rows(out / "barcode.csv") == ["dimension,order,birth,death"]


def test_persist_twice_byte_identical(tmp_path, square_file):
    for name in ("a", "b"):
        main(["persist", "--input", str(square_file), "--max-eps", "2", "--out-dir", str(tmp_path / name)])
    for f in ("diagram.csv", "barcode.csv", "betti.csv", "metadata.json"):
        assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()


# -- mapper ----------------------------------------------------------------

def test_mapper_two_squares_dot(tmp_path):
    assert main(["mapper", "--preset", "two-squares", "--lens", "coord:0", "--intervals", "4",
                 "--overlap", "0.3", "--clusterer", "single-linkage", "--out-dir", str(tmp_path)]) == 0
    assert len(dot_components((tmp_path / "nerve.dot").read_text())) == 2
    assert (tmp_path / "nerve.json").exists()


def test_mapper_iris_format_csv(tmp_path):
    from ripsmap.dataset import iris_like

    cloud = iris_like(0, n_per_class=200)
    table = tmp_path / "iris.csv"
    lines = ["sepal_length,sepal_width,petal_length,petal_width,species"]
    lines += [",".join(repr(float(v)) for v in row) + f",{lab}" for row, lab in zip(cloud.points, cloud.labels)]
    table.write_text("\n".join(lines) + "\n")
    spec = tmp_path / "iris.yaml"
    spec.write_text(
        "columns:\n" + "".join(f"  - name: {c}\n" for c in lines[0].split(",")[:4]) + "label_column: species\n"
    )
    out = tmp_path / "out"
    code = main(["mapper", "--input", str(table), "--encoding", str(spec), "--lens", "pca:2",
                 "--clusterer", "dbscan", "--eps", "1.0", "--min-pts", "10", "--format", "json",
                 "--out-dir", str(out)])
    assert code == 0
    tree = json.loads((out / "nerve.json").read_text())
    edges = [tuple(e) for e in tree["simplices"]["1"]]
    assert len(components(len(tree["nodes"]), edges)) == 2


def test_mapper_single_node(tmp_path):
    main(["mapper", "--preset", "two-squares", "--intervals", "1", "--overlap", "0",
          "--clusterer", "kmeans", "--k", "1", "--out-dir", str(tmp_path)])
    tree = json.loads((tmp_path / "nerve.json").read_text())
    assert len(tree["nodes"]) == 1 and tree["simplices"]["1"] == []


# -- cluster ---------------------------------------------------------------

def test_cluster_two_squares(tmp_path):
    main(["cluster", "--preset", "two-squares", "--clusterer", "kmeans", "--k", "2", "--out-dir", str(tmp_path)])
    summary = json.loads((tmp_path / "summary.json").read_text())
    assert summary["sizes"] == [100, 100] and summary["purity"] == 1.0
    assert len(read_rows(tmp_path / "assignment.csv")) == 201


def test_cluster_two_circles_purity_below_threshold(tmp_path):
    main(["cluster", "--preset", "two-circles", "--k", "2", "--out-dir", str(tmp_path)])
    assert json.loads((tmp_path / "summary.json").read_text())["purity"] < 0.95


def test_cluster_singletons(tmp_path):
    pts = tmp_path / "p.csv"
    pts.write_text("".join(f"{i},{i * i}\n" for i in range(5)))
    main(["cluster", "--input", str(pts), "--k", "5", "--out-dir", str(tmp_path / "o")])
    summary = json.loads((tmp_path / "o" / "summary.json").read_text())
    assert summary["sizes"] == [1] * 5 and summary["inertia"] == 0.0


def test_cluster_dbscan_noise(tmp_path):
    pts = tmp_path / "p.csv"
    pts.write_text("0\n1\n2\n100\n")
    main(["cluster", "--input", str(pts), "--clusterer", "dbscan", "--eps", "1.5", "--min-pts", "2",
          "--out-dir", str(tmp_path / "o")])
    assert read_rows(tmp_path / "o" / "assignment.csv")[1:] == ["0,0", "1,0", "2,0", "3,-1"]
    assert json.loads((tmp_path / "o" / "summary.json").read_text())["n_noise"] == 1


# -- exit codes ------------------------------------------------------------

def test_exit_code_bad_args(tmp_path, square_file):
    assert main(["persist", "--input", str(square_file), "--max-eps", "-1", "--out-dir", str(tmp_path)]) == 2
    with pytest.raises(SystemExit) as err:
        main(["persist", "--out-dir", str(tmp_path)])
    assert err.value.code == 2


def test_exit_code_io(tmp_path):
    assert main(["persist", "--input", str(tmp_path / "missing.csv"), "--out-dir", str(tmp_path)]) == 3
    bad = tmp_path / "bad.csv"
    bad.write_text("1,2\n3,x\n")
    assert main(["persist", "--input", str(bad), "--out-dir", str(tmp_path)]) == 3


def test_exit_code_budget(tmp_path, square_file, monkeypatch, capsys):
    monkeypatch.setenv("RIPSMAP_SIMPLEX_BUDGET", "10")
    out = tmp_path / "out"
    assert main(["persist", "--input", str(square_file), "--max-eps", "2", "--out-dir", str(out)]) == 4
    assert "subsample" in capsys.readouterr().err
    assert not (out / "diagram.csv").exists()


def test_exit_code_algorithm(tmp_path, monkeypatch, capsys):
    import ripsmap.cli
    from ripsmap.errors import AlgorithmError

    def failing(*args, **kwargs):
        raise AlgorithmError("cover element 3: no progress", cover_index=3)

    monkeypatch.setattr(ripsmap.cli, "run_mapper", failing)
    assert main(["mapper", "--preset", "two-squares", "--out-dir", str(tmp_path)]) == 5
    assert "cover element 3" in capsys.readouterr().err


def test_bad_clusterer_parameter_is_bad_args(tmp_path):
    code = main(["mapper", "--preset", "two-squares", "--clusterer", "dbscan", "--eps", "0",
                 "--out-dir", str(tmp_path)])
    assert code == 2


def test_module_entry_point(tmp_path):
    proc = subprocess.run(
        [sys.executable, "-m", "ripsmap", "generate", "--preset", "square", "--n", "3", "--out-dir", str(tmp_path)],
        capture_output=True, text=True,
    )
    assert proc.returncode == 0, proc.stderr
    assert np.loadtxt(tmp_path / "points.csv", delimiter=",").shape == (3, 2)
