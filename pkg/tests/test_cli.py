import json

import numpy as np
import pytest
import yaml

from schouten.cli import main


def write(tmp_path, name, data):
    path = tmp_path / name
    path.write_text(yaml.safe_dump(data))
    return path


def report(path):
    return json.loads(path.read_text())


def test_verify_symfunc(tmp_path):
    cfg = write(tmp_path, "v.yaml", {"manifold": {"n": 3}, "function": {"family": "ricci_det"}})
    assert main(["verify-symfunc", str(cfg), "-o", str(tmp_path / "out")]) == 0
    body = report(tmp_path / "out" / "verify_symfunc.json")
    assert body["passed"] and body["result"]["max_f_over_sigma1"] <= 4 / 3 + 1e-12
    assert body["rho"] == pytest.approx(4 / 3)


def test_verify_sigma2_n4(tmp_path):
    cfg = write(tmp_path, "v.yaml", {"manifold": {"n": 4}, "function": {"k": 2}, "verify": {"samples": 300}})
    assert main(["verify-symfunc", str(cfg), "-o", str(tmp_path / "out")]) == 0


def test_malformed_config(tmp_path, capsys):
    cfg = write(tmp_path, "bad.yaml", {"manifold": {"n": 3}, "function": {"k": 5}})
    assert main(["verify-symfunc", str(cfg), "-o", str(tmp_path / "out")]) == 1
    assert "k=5" in capsys.readouterr().err


def test_unknown_subcommand():
    with pytest.raises(SystemExit) as err:
        main(["frobnicate"])
    assert err.value.code == 2


def test_curvature_check_flat(tmp_path):
    cfg = write(tmp_path, "c.yaml", {"manifold": {"backend": "torus", "n": 3, "recipe": "flat", "resolution": 8}})
    assert main(["curvature-check", str(cfg), "-o", str(tmp_path / "out")]) == 0
    body = report(tmp_path / "out" / "curvature_check.json")
    assert body["order"] is None and body["flat_residue"] == 0.0


def test_curvature_check_sphere(tmp_path):
    cfg = write(tmp_path, "c.yaml", {"manifold": {"recipe": "round_sphere_warped"}})
    assert main(["curvature-check", str(cfg), "-o", str(tmp_path / "out")]) == 0
    body = report(tmp_path / "out" / "curvature_check.json")
    assert body["order"] > 1.8 and body["half_within_10h2"]


EXISTENCE = {"manifold": {"recipe": "perturbed", "base": "hemisphere_warped", "amplitude": 0.1, "resolution": 128}}


def test_continue_existence_and_followups(tmp_path):
    cfg = write(tmp_path, "e.yaml", EXISTENCE)
    out = tmp_path / "run"
    assert main(["continue", str(cfg), "-o", str(out)]) == 0
    body = report(out / "continue.json")
    assert body["outcome"] == "converged_t1" and body["admissibility"]["all_admissible"]
    assert body["config"]["manifold"]["amplitude"] == 0.1
    assert (out / "history.jsonl").exists() and (out / "fields.csv").exists()

    assert main(["blowup-analyze", str(out / "history.jsonl"), "-o", str(tmp_path / "ba")]) == 0
    ba = report(tmp_path / "ba" / "blowup_report.json")
    assert ba["report"]["blowup"] is False and "no blow-up" in ba["report"]["note"]

    assert main(["double", str(out / "fields.csv"), "--config", str(cfg), "-o", str(tmp_path / "dbl")]) == 0
    dbl = report(tmp_path / "dbl" / "double.json")
    assert dbl["shape"] == [255] and dbl["interface"]["first_difference"] == 0.0


def test_continue_is_reproducible(tmp_path):
    cfg = write(tmp_path, "e.yaml", {"manifold": {"recipe": "round_sphere_warped", "resolution": 64},
                                     "f": {"value": 1.2}})
    assert main(["continue", str(cfg), "-o", str(tmp_path / "a")]) == 0
    assert main(["continue", str(cfg), "-o", str(tmp_path / "b")]) == 0
    for name in ("continue.json", "history.jsonl", "fields.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    assert (tmp_path / "a" / "run.log").exists()


def test_flat_torus_fails(tmp_path):
    cfg = write(tmp_path, "t.yaml", {"manifold": {"backend": "torus", "n": 3, "recipe": "flat", "resolution": 8},
                                     "function": {"family": "ricci_det"}, "solver": {"max_steps": 300}})
    assert main(["continue", str(cfg), "-o", str(tmp_path / "out")]) in (1, 2)


def test_double_rejects_sloped_field(tmp_path):
    cfg = write(tmp_path, "s.yaml", {"manifold": {"backend": "slab", "n": 3, "recipe": "flat", "resolution": 8}})
    from schouten import io
    from schouten.manifold import GridChart

    chart = GridChart.slab(3, 8)
    io.write_field_csv(tmp_path / "f.csv", chart, {"u": 0.1 * chart.coordinates()[2]})
    assert main(["double", str(tmp_path / "f.csv"), "--config", str(cfg), "-o", str(tmp_path / "out")]) == 1
    assert report(tmp_path / "out" / "double.json")["max_violation"] == pytest.approx(0.1)


def test_blowup_analyze_synthetic(tmp_path):
    from schouten import io

    n_nodes = 513
    r = np.linspace(0, np.pi / 2, n_nodes)
    u = np.log(1e-8 + r**2)
    header = {"config": {"manifold": {"resolution": n_nodes}}, "outcome": "blowup_detected", "shape": [n_nodes]}
    io.write_history(tmp_path / "h.jsonl", header, [{"t": 0.99, "u": u.tolist()}])
    assert main(["blowup-analyze", str(tmp_path / "h.jsonl"), "-o", str(tmp_path / "out")]) == 0
    rep = report(tmp_path / "out" / "blowup_report.json")["report"]
    assert rep["blowup"] and rep["fitted_slope"] == pytest.approx(2.0, abs=0.05)
    assert (tmp_path / "out" / "profile.csv").exists()
