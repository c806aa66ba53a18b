import json

import pytest

from viscowave import main

CONFIG = """
[model]
epsilon = 0.5
c = 1.0
a = 1.0
"""


def test_verify_identities_quick(tmp_path_factory, capsys):
    path = tmp_path_factory.mktemp("identities")
    assert main(["verify-identities", "--quick", "--out", str(path)]) == 0
    assert "15/15 identity checks passed" in capsys.readouterr().out
    report = json.loads((path / "identities.json").read_text())
    assert report["passed"] is True
    kinds = {check["kind"] for check in report["checks"]}
    assert kinds == {"mass", "moment-damped", "moment-shifted", "moment-star", "flux"}
    assert all(check["b"] == pytest.approx(2.0) for check in report["checks"])


def test_verify_identities_quick_uses_configured_model(tmp_path_factory):
    path = tmp_path_factory.mktemp("identities")
    (path / "run.toml").write_text(CONFIG)
    code = main(
        [
            "verify-identities",
            "--quick",
            "--config",
            str(path / "run.toml"),
            "--out",
            str(path),
            "--silent",
        ]
    )
    assert code == 0
    report = json.loads((path / "identities.json").read_text())
    assert {check["epsilon"] for check in report["checks"]} == {0.5}


def test_verify_identities_full_lattice(tmp_path_factory, capsys):
    path = tmp_path_factory.mktemp("identities")
    code = main(["verify-identities", "--probes", "12", "--out", str(path)])
    assert code == 0
    report = json.loads((path / "identities.json").read_text())
    assert report["passed"] is True
    checks = report["checks"]

    def of(kind):
        return [c for c in checks if c["kind"] == kind]

    assert len(of("mass")) == 81
    assert {(c["a"], c["t"]) for c in of("mass")} >= {(2.0, 3.0), (0.5, 0.1)}
    assert all(c["a"] <= c["b"] + 1e-12 for c in of("mass"))
    assert len(of("moment-star")) == 81
    assert len(of("flux")) == 9
    laplace = of("laplace")
    assert len(laplace) == 12
    assert sum("j" in c["s"] for c in laplace) >= 6
    positivity = of("nonnegative")
    assert len(positivity) == 3
    assert all(c["points"] == 200 * 50 for c in positivity)
    assert all(c["minimum"] >= -1e-12 for c in positivity)
    assert len(of("dual-path")) == 12
    assert len(of("degenerate")) == 2
    assert f"{len(checks)}/{len(checks)} identity checks passed" in (
        capsys.readouterr().out
    )


def test_verify_identities_dual_path_probes_are_seeded(tmp_path_factory):
    points = []
    for _ in range(2):
        path = tmp_path_factory.mktemp("identities")
        argv = ["verify-identities", "--probes", "3", "--seed", "7"]
        assert main([*argv, "--out", str(path), "--silent"]) == 0
        report = json.loads((path / "identities.json").read_text())
        points.append(
            [(c["x"], c["t"]) for c in report["checks"] if c["kind"] == "dual-path"]
        )
    assert points[0] == points[1]


def test_verify_identities_rejects_negative_probes(tmp_path_factory):
    path = tmp_path_factory.mktemp("identities")
    assert main(["verify-identities", "--probes", "-1", "--out", str(path)]) == 2
