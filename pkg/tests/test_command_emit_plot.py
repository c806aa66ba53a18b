import ast
import csv

from viscowave import main

CONFIG = """
[model]
epsilon = 1.0
c = 1.4142135623730951
a = 1.0

[initial]
f0 = "gaussian(0, 1)"

[rhs]
spec = "sine-gordon"
beta_F = 1.0

[grid]
x_min = -2.0
x_max = 2.0
nx = 41
T = 0.5
nt = 10
"""


def solved(tmp_path_factory):
    path = tmp_path_factory.mktemp("emit-plot")
    (path / "run.toml").write_text(CONFIG)
    code = main(
        ["solve", "--config", str(path / "run.toml"), "--out", str(path), "--silent"]
    )
    assert code == 0
    return path


def test_emit_plot(tmp_path_factory, capsys):
    path = solved(tmp_path_factory)
    plots = path / "plots"
    code = main(
        [
            "emit-plot",
            "--field",
            str(path / "field.csv"),
            "--report",
            str(path / "report.json"),
            "--out",
            str(plots),
        ]
    )
    assert code == 0
    assert "plot_heatmap.py" in capsys.readouterr().out
    for name in ("plot_heatmap.py", "plot_slices.py", "plot_contraction.py"):
        text = (plots / name).read_text()
        ast.parse(text)
        assert "import matplotlib.pyplot as plt" in text
    assert '"../field.csv"' in (plots / "plot_heatmap.py").read_text()
    assert '"contraction.csv"' in (plots / "plot_contraction.py").read_text()
    with open(plots / "contraction.csv", newline="") as f:
        rows = list(csv.DictReader(f))
    assert list(rows[0]) == ["window", "iteration", "difference", "ratio"]
    assert rows[0]["ratio"] == ""
    assert {row["window"] for row in rows} == {"0", "1"}
    ratios = [float(row["ratio"]) for row in rows if row["ratio"]]
    assert all(r <= 0.5 + 1e-6 for r in ratios)


def test_emit_plot_without_report(tmp_path_factory):
    path = solved(tmp_path_factory)
    code = main(
        [
            "emit-plot",
            "--field",
            str(path / "field.csv"),
            "--out",
            str(path),
            "--silent",
        ]
    )
    assert code == 0
    assert (path / "plot_slices.py").exists()
    assert not (path / "plot_contraction.py").exists()
    assert "np.linspace(0, t.size - 1, 5)" in (path / "plot_slices.py").read_text()


def test_emit_plot_missing_report(tmp_path_factory):
    path = solved(tmp_path_factory)
    code = main(
        [
            "emit-plot",
            "--field",
            str(path / "field.csv"),
            "--report",
            str(path / "missing.json"),
            "--out",
            str(path),
            "--silent",
        ]
    )
    assert code == 2


def test_emit_plot_requires_field(capsys):
    assert main(["emit-plot"]) == 2
    assert "--field" in capsys.readouterr().err
