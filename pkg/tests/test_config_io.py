import numpy as np
import pytest
import yaml

from schouten import io
from schouten.config import OUTPUT_ENV, ConfigError, RunConfig
from schouten.manifold import GridChart


def test_defaults_resolve():
    cfg = RunConfig.from_dict({})
    assert cfg["manifold"]["backend"] == "warped"
    assert cfg.func().label.startswith("sigma_2")
    assert cfg.metric().chart.shape == (128,)


@pytest.mark.parametrize("raw, match", [
    ({"function": {"k": 7}}, "k=7"),
    ({"manifold": {"colour": 1}}, "unknown config key"),
    ({"manifold": 3}, "mapping"),
    ({"manifold": {"n": 2}}, "n must be"),
    ({"f": {"value": -1}}, "positive"),
    ({"f": {"profile": "cosine", "amplitude": 1.5}}, "positive"),
    ({"manifold": {"backend": "torus", "recipe": "hemisphere_warped"}}, "warped chart"),
    ({"manifold": {"backend": "slab", "n": 3, "recipe": "round_sphere_warped"}}, "warped chart"),
    ({"solver": {"dt_min": 1.0}}, "dt_min"),
])
def test_rejects(raw, match):
    with pytest.raises(ConfigError, match=match):
        RunConfig.from_dict(raw).metric()


def test_from_file(tmp_path):
    path = tmp_path / "c.yaml"
    path.write_text(yaml.safe_dump({"manifold": {"backend": "torus", "n": 3, "resolution": 8, "recipe": "flat"},
                                    "function": {"family": "ricci_det"}}))
    cfg = RunConfig.from_file(path)
    assert cfg.chart().shape == (8, 8, 8)
    assert cfg.func().rho == pytest.approx(4 / 3)
    path.write_text("- a\n- b\n")
    with pytest.raises(ConfigError):
        RunConfig.from_file(path)


def test_cosine_f():
    cfg = RunConfig.from_dict({"f": {"profile": "cosine", "amplitude": 0.3, "value": 2.0}})
    chart = cfg.chart()
    np.testing.assert_allclose(cfg.f_values(chart), 2.0 * (1 + 0.3 * np.cos(chart.radii)))


def test_output_dir_precedence(tmp_path, monkeypatch):
    cfg = RunConfig.from_dict({"outputs": {"directory": str(tmp_path / "cfg")}})
    assert cfg.output_dir() == tmp_path / "cfg"
    monkeypatch.setenv(OUTPUT_ENV, str(tmp_path / "env"))
    assert cfg.output_dir() == tmp_path / "env"
    assert cfg.output_dir(tmp_path / "cli") == tmp_path / "cli"


def test_json_deterministic():
    obj = {"b": np.float64(1.5), "a": [np.int64(2), np.array([1.0, 2.0])], "c": float("inf")}
    assert io.dumps(obj) == io.dumps(dict(reversed(list(obj.items()))))
    assert '"c": "inf"' in io.dumps(obj)


def test_history_roundtrip(tmp_path):
    path = io.write_history(tmp_path / "h.jsonl", {"outcome": "x"}, [{"t": 0.0}, {"t": 0.5, "u": [1.0, 2.0]}])
    header, states = io.read_history(path)
    assert header["outcome"] == "x" and states[1]["u"] == [1.0, 2.0]
    (tmp_path / "bad.jsonl").write_text('{"kind": "state"}\n')
    with pytest.raises(ValueError):
        io.read_history(tmp_path / "bad.jsonl")


def test_field_csv_roundtrip(tmp_path, rng):
    chart = GridChart.slab(3, 8)
    u = rng.normal(size=chart.shape)
    g = np.broadcast_to(np.eye(3), chart.shape + (3, 3))
    path = io.write_field_csv(tmp_path / "f.csv", chart, {"u": u, "g": g})
    header = path.read_text().splitlines()[0].split(",")
    assert header[:6] == ["i0", "i1", "i2", "x0", "x1", "x2"] and "g_12" in header
    index, values = io.read_field_csv(path, "u")
    np.testing.assert_array_equal(io.field_from_rows(chart, index, values), u)
    with pytest.raises(ValueError):
        io.read_field_csv(path, "missing")
    with pytest.raises(ValueError):
        io.field_from_rows(chart, index[:-1], values[:-1])
