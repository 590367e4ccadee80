from src.config import DEFAULTS, load_config, numerics, output, simulation


def test_missing_file_falls_back_to_defaults(tmp_path):
    assert load_config(str(tmp_path / "absent.yaml")) == DEFAULTS


def test_yaml_overrides_are_merged(tmp_path):
    path = tmp_path / "config.yaml"
    path.write_text("numerics:\n  max_index: 12\nsimulation:\n  seed: 3\n", encoding="utf-8")
    cfg = load_config(str(path))
    assert cfg["numerics"]["max_index"] == 12
    assert cfg["numerics"]["fd_step"] == DEFAULTS["numerics"]["fd_step"]
    assert cfg["simulation"]["seed"] == 3
    assert DEFAULTS["numerics"]["max_index"] == 20


def test_unknown_keys_are_ignored(tmp_path):
    path = tmp_path / "config.yaml"
    path.write_text("plotting:\n  dpi: 300\nnumerics:\n  not_a_tunable: 1\n", encoding="utf-8")
    cfg = load_config(str(path))
    assert "plotting" not in cfg
    assert "not_a_tunable" not in cfg["numerics"]


def test_non_mapping_yaml_falls_back(tmp_path):
    path = tmp_path / "config.yaml"
    path.write_text("- just\n- a list\n", encoding="utf-8")
    assert load_config(str(path)) == DEFAULTS


def test_repository_config_is_loaded():
    assert numerics("max_index") == 20
    assert simulation("chunk_size") == 2000
    assert output("float_format") == "%.17g"
