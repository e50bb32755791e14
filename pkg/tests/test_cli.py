from __future__ import annotations

import json

import pytest

from baselines.mrf import MrfParams
from cli.settings import ConfigStore, Settings
from cli.utils import load_grid, parse_name_list, parse_seeds
from errors import ConfigError
from main import main

TINY_SETTINGS = {
    "model": {
        "feature_dim": 16,
        "embed_dim": 8,
        "hidden_chunk": 6,
        "steps": 3,
        "encoder_hidden": [8],
        "head_hidden": [8],
    },
    "training": {
        "iterations": 4,
        "learning_rate": 0.001,
        "decay_interval": 10,
        "validation_interval": 2,
        "subgraph_size": 32,
        "loss_vertex_count": 16,
        "classifier_batch": 16,
        "mrf_lambdas": [0.5, 2.0],
        "mrf_exponents": [1],
    },
}


@pytest.fixture
def settings_file(tmp_path):
    path = tmp_path / "settings.json"
    path.write_text(json.dumps(TINY_SETTINGS), encoding="utf-8")
    return path


def test_unknown_flag_is_a_usage_error(capsys) -> None:
    with pytest.raises(SystemExit) as info:
        main(["generate", "--preset", "basic", "--out", "x", "--colour"])
    assert info.value.code == 1
    assert "unrecognized arguments" in capsys.readouterr().err


def test_bad_scheme_list_is_a_usage_error() -> None:
    with pytest.raises(SystemExit) as info:
        main(["eval", "--ckpt", "a", "--data", "b", "--schemes", "roadtagger,oracle"])
    assert info.value.code == 1


def test_generate_is_byte_identical(tmp_path, settings_file) -> None:
    for name in ("first", "second"):
        assert main(["generate", "--preset", "overpass", "--seed", "5", "--out", str(tmp_path / name), "--config", str(settings_file)]) == 0
    first = sorted(p.relative_to(tmp_path / "first") for p in (tmp_path / "first").rglob("*") if p.is_file())
    second = sorted(p.relative_to(tmp_path / "second") for p in (tmp_path / "second").rglob("*") if p.is_file())
    assert first == second
    for relative in first:
        assert (tmp_path / "first" / relative).read_bytes() == (tmp_path / "second" / relative).read_bytes()


def test_train_eval_infer_round_trip(tmp_path, settings_file, capsys) -> None:
    data = tmp_path / "suite"
    ckpt = tmp_path / "model.json"
    config = ["--config", str(settings_file)]
    assert main(["generate", "--preset", "overpass", "--seed", "1", "--out", str(data), *config]) == 0
    assert main(["train", "--data", str(data), "--out", str(ckpt), *config]) == 0
    assert ckpt.exists()
    assert (tmp_path / "model.metrics.csv").read_text(encoding="utf-8").startswith("iteration,loss,")

    report = tmp_path / "report.csv"
    assert main(["eval", "--ckpt", str(ckpt), "--data", str(data), "--schemes", "roadtagger,mrf", "--report", str(report)]) == 0
    rows = report.read_text(encoding="utf-8").splitlines()
    assert [row.split(",")[0] for row in rows] == ["scheme", "roadtagger", "mrf"]
    assert (tmp_path / "report.txt").exists()
    assert "roadtagger" in capsys.readouterr().out

    world = sorted((data / "worlds").glob("*.geojson"))[0]
    features = world.with_name(world.name.replace(".geojson", ".features.json"))
    out = tmp_path / "predicted.geojson"
    assert main(["infer", "--ckpt", str(ckpt), "--network", str(world), "--features", str(features), "--out", str(out), "--scheme", "smooth"]) == 0
    document = json.loads(out.read_text(encoding="utf-8"))
    assert document["type"] == "FeatureCollection"

    grid = tmp_path / "grid.json"
    grid.write_text(json.dumps({"weights": [0.25, 1.0], "exponents": [1, 2]}), encoding="utf-8")
    capsys.readouterr()
    assert main(["baseline", "mrf-search", "--grid", str(grid), "--ckpt", str(ckpt), "--data", str(data), *config]) == 0
    selected = json.loads(capsys.readouterr().out)
    assert set(selected) == {"lane", "type"}


def test_unknown_settings_key_exits_with_data_error(tmp_path) -> None:
    path = tmp_path / "settings.json"
    path.write_text(json.dumps({"model": {"stepz": 3}}), encoding="utf-8")
    assert main(["generate", "--preset", "overpass", "--out", str(tmp_path / "out"), "--config", str(path)]) == 2


def test_missing_data_directory_exits_with_data_error(tmp_path) -> None:
    assert main(["eval", "--ckpt", str(tmp_path / "none.json"), "--data", str(tmp_path)]) == 2


def test_feature_file_missing_values_exits_with_data_error(tmp_path, settings_file) -> None:
    data = tmp_path / "data"
    config = ["--config", str(settings_file)]
    assert main(["generate", "--preset", "overpass", "--seed", "1", "--out", str(data), *config]) == 0
    for path in (data / "worlds").glob("*.features.json"):
        payload = json.loads(path.read_text(encoding="utf-8"))
        del payload["values"]
        path.write_text(json.dumps(payload), encoding="utf-8")
    assert main(["train", "--data", str(data), "--out", str(tmp_path / "model.json"), *config]) == 2


def test_gradcheck_command_passes(capsys) -> None:
    assert main(["gradcheck", "--instances", "1"]) == 0
    assert "gradcheck passed" in capsys.readouterr().out


def test_settings_store_round_trip(tmp_path) -> None:
    store = ConfigStore(tmp_path / "settings.json")
    assert store.load() == Settings()
    settings = Settings.from_dict(TINY_SETTINGS)
    store.save(settings)
    assert store.load() == settings
    with pytest.raises(ConfigError):
        Settings.from_dict({"display": {}})
    with pytest.raises(ConfigError):
        Settings.from_dict({"model": [1, 2]})


def test_parse_helpers(tmp_path) -> None:
    assert parse_seeds("0-2") == (0, 1, 2)
    assert parse_seeds("4, 7") == (4, 7)
    with pytest.raises(ValueError):
        parse_seeds("3-1")
    with pytest.raises(ValueError):
        parse_seeds("-1")
    assert parse_name_list("mrf, smooth", ("smooth", "mrf")) == ["mrf", "smooth"]
    with pytest.raises(ValueError):
        parse_name_list("mrf,mrf", ("mrf",))
    grid = tmp_path / "grid.json"
    grid.write_text('{"weights": [0.5], "exponents": [1, 2]}', encoding="utf-8")
    assert load_grid(grid) == [MrfParams(0.5, 1), MrfParams(0.5, 2)]
    grid.write_text('{"weights": [0.5], "lambda": 2}', encoding="utf-8")
    with pytest.raises(ConfigError):
        load_grid(grid)
