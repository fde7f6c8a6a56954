import json
import xml.etree.ElementTree as ET

import numpy as np
import pytest
import yaml
from hypothesis import given, settings
from hypothesis import strategies as st

from waveray.cli import main
from waveray.config import config_from_dict, config_to_dict, emit_config, parse_config
from waveray.core import ConfigError, ScenarioConfig
from waveray.integrator import run
from waveray.output import read_trajectories, render_svg, write_frames
from waveray.scenarios import PRESET_TAGS, preset

SVG = "{http://www.w3.org/2000/svg}"


def write_yaml(tmp_path, data, name="cfg.yaml"):
    path = tmp_path / name
    path.write_text(yaml.safe_dump(data))
    return path


def small_eikonal():
    return ScenarioConfig(n_rays=5, span=2.0, smoothing=3, mode="eikonal", t_max=10.0, dt=1.0, record_every=5)


def test_minimal_preset_config(tmp_path):
    assert parse_config(write_yaml(tmp_path, {"preset": "fig1_free_diffraction"})) == preset("fig1_free_diffraction")


def test_invariant_violation_names_key(tmp_path):
    with pytest.raises(ConfigError, match="n_rays.*odd"):
        parse_config(write_yaml(tmp_path, {"preset": "fig1_free_diffraction", "n_rays": 4}))


@pytest.mark.parametrize("data, key", [
    ({"preset": "fig1_free_diffraction", "colour": 1}, "colour"),
    ({"z_max": 1.0, "profile": {"type": "gaussian", "width": 2}}, "profile.width"),
    ({"z_max": 1.0, "field": {"type": "constant_force", "f": "strong"}}, "field.f"),
    ({"z_max": 1.0, "field": {"type": "lens", "l_x": 1.0}}, "field"),
    ({"z_max": 1.0, "n_rays": 7.5}, "n_rays"),
    ({"n_rays": 7}, "t_max"),
])
def test_schema_errors(data, key):
    with pytest.raises(ConfigError, match=key):
        config_from_dict(data)


def test_exponent_literals_without_dot(tmp_path):
    path = tmp_path / "c.yaml"
    path.write_text("z_max: 1e3\nfield: {type: constant_force, f: 1e-4}\n")
    cfg = parse_config(path)
    assert cfg.z_max == 1000.0 and cfg.field.f == 1e-4


@pytest.mark.parametrize("tag", PRESET_TAGS)
def test_round_trip(tag):
    cfg = preset(tag)
    assert config_from_dict(yaml.safe_load(emit_config(cfg))) == cfg


@settings(max_examples=50, deadline=None)
@given(st.integers(2, 50).map(lambda k: 2 * k + 1), st.floats(0.5, 8.0), st.floats(1e-5, 1e-1),
       st.sampled_from(["exact", "eikonal"]), st.floats(0.01, 2.0))
def test_round_trip_explicit(n, span, eps, mode, dt):
    cfg = ScenarioConfig(epsilon=eps, n_rays=n, span=span, mode=mode, dt=dt, t_max=10.0)
    assert config_from_dict(config_to_dict(cfg)) == cfg


def test_csv_layout_and_round_trip(tmp_path):
    frames, _ = run(ScenarioConfig(n_rays=5, span=2.0, smoothing=3, t_max=1.0, dt=1.0))
    files = write_frames(frames[:1], tmp_path)
    lines = files[0].read_text().splitlines()
    assert lines[0] == "frame,time,ray_index,x,z,px,pz,amplitude,q_value,e_mech"
    assert len(lines) == 6
    write_frames(frames, tmp_path)
    data = read_trajectories(tmp_path / "trajectories.csv")
    for k, f in enumerate(frames):
        sel = data["frame"] == k
        for name in ("x", "z", "px", "pz", "amplitude", "q_value", "e_mech"):
            assert np.allclose(data[name][sel], getattr(f, name), rtol=1e-11, atol=0)


def test_write_frames_needs_frames(tmp_path):
    with pytest.raises(ValueError):
        write_frames([], tmp_path)


def test_zero_force_trajectories_are_horizontal(tmp_path):
    frames, _ = run(small_eikonal())
    path = render_svg(frames, "trajectories", tmp_path / "t.svg")
    root = ET.parse(path).getroot()
    assert root.get("width") and root.get("height")
    lines = root.findall(f"{SVG}polyline")
    assert len(lines) == 5
    for line in lines:
        ys = {p.split(",")[1] for p in line.get("points").split()}
        assert len(ys) == 1
    assert len([ln for ln in lines if "heavy" in (ln.get("class") or "")]) == 2


def test_width_plot_has_analytic_overlay(tmp_path):
    cfg = ScenarioConfig(t_max=2000.0, record_every=500)
    frames, _ = run(cfg)
    path = render_svg(frames, "width_vs_z", tmp_path / "w.svg", cfg.units, free_space=True)
    classes = [p.get("class") for p in ET.parse(path).getroot().findall(f"{SVG}polyline")]
    assert classes == ["measured", "analytic"]
    with pytest.raises(ValueError):
        render_svg(frames, "heatmap", tmp_path / "x.svg")


def test_presets_list(capsys):
    assert main(["presets", "list"]) == 0
    out = capsys.readouterr().out.strip().splitlines()
    assert len(out) == 12
    assert [line.split(":")[0] for line in out] == list(PRESET_TAGS)


def test_missing_config_exit_code(tmp_path):
    assert main(["run", str(tmp_path / "missing.cfg"), "--out", str(tmp_path / "o")]) == 2


def test_usage_error_exit_code():
    assert main(["frobnicate"]) == 2
    assert main(["validate", "nothing"]) == 2


def test_run_writes_outputs_and_manifest(tmp_path):
    cfg = write_yaml(tmp_path, config_to_dict(small_eikonal()))
    out = tmp_path / "out"
    assert main(["run", str(cfg), "--out", str(out), "--svg", "--mode", "eikonal"]) == 0
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["status"] == "ok"
    assert sorted(p.name for p in out.iterdir()) == manifest["outputs"]
    assert manifest["config"]["mode"] == "eikonal"
    for name in ("trajectories.svg", "profiles.svg", "width_vs_z.svg"):
        ET.parse(out / name)


def test_run_outputs_are_deterministic(tmp_path):
    cfg = write_yaml(tmp_path, {"n_rays": 21, "epsilon": 1e-2, "t_max": 50.0, "dt": 0.5, "record_every": 10,
                                "field": {"type": "gaussian_barrier", "v0_ratio": 0.5, "z_g": 40.0, "d": 20.0}})
    for name in ("a", "b"):
        assert main(["run", str(cfg), "--out", str(tmp_path / name)]) == 0
    for name in ("trajectories.csv", "profiles.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_caustic_exit_code(tmp_path):
    cfg = write_yaml(tmp_path, {"epsilon": 1e-3, "n_rays": 51, "dt": 0.05, "z_max": 200.0, "record_every": 10,
                                "caustic_min_spacing": 0.05,
                                "field": {"type": "lens", "l_x": 2.0, "l_z": 50.0, "z_0": 50.0}})
    out = tmp_path / "out"
    assert main(["run", str(cfg), "--out", str(out)]) == 3
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["status"] == "caustic"
    assert (out / "trajectories.csv").exists()


def test_validate_gradient_fields(capsys):
    assert main(["validate", "gradient-fields"]) == 0
    assert capsys.readouterr().out.startswith("PASS gradient-fields")
