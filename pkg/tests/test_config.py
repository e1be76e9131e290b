# -*- coding: utf-8 -*-

import json
from pathlib import Path

import pytest

from modules.common.errors import ConfigError
from modules.common.rng import derive_rng, derive_seed
from utils.config import DEFAULTS, load_config, read_config_file, deep_merge, build_environments, config_digest

DEFAULT_TOML = Path(__file__).resolve().parent.parent / "configs" / "default.toml"


def test_committed_defaults_match_builtin_defaults():
    assert load_config(DEFAULT_TOML) == load_config()


def test_presets():
    desk = load_config()
    paper = load_config(scale="paper")
    assert desk["samples"]["meta_per_env"] == 2000
    assert paper["samples"]["meta_per_env"] == 20000
    assert paper["samples"]["target"] == desk["samples"]["target"] == 800
    assert paper["meta"]["meta_iters"] == 130000
    assert paper["run"]["scale"] == "paper"


def test_precedence_file_over_preset_and_flags_over_file(tmp_path):
    path = tmp_path / "c.toml"
    path.write_text('[run]\nseed = 5\nscale = "paper"\n[meta]\nmeta_iters = 3\n', encoding="utf-8")
    config = load_config(path)
    assert config["run"]["scale"] == "paper"
    assert config["meta"]["meta_iters"] == 3
    assert config["samples"]["synth"] == 200000
    assert load_config(path, seed=9, scale="desk")["run"]["seed"] == 9
    assert load_config(path, scale="desk")["samples"]["synth"] == 20000


def test_yaml_and_manifest_documents(tmp_path):
    yaml_path = tmp_path / "c.yaml"
    yaml_path.write_text("meta:\n  alpha: 0.01\n", encoding="utf-8")
    assert load_config(yaml_path)["meta"]["alpha"] == 0.01

    resolved = load_config(seed=3)
    manifest = tmp_path / "manifest.json"
    manifest.write_text(json.dumps({"config": resolved}), encoding="utf-8")
    assert load_config(manifest) == resolved


@pytest.mark.parametrize("document, field_path", [
    ("[meta]\nalpha = -1.0\n", "meta.alpha"),
    ("[channel]\nnt = 0\n", "channel.nt"),
    ("[gan]\nloss_variant = \"wasserstein\"\n", "gan.loss_variant"),
    ("[estimator]\nnum_pilots = 9\n", "estimator.num_pilots"),
    ("[channel]\naod_low = 2.0\naod_high = 1.0\n", "channel.aod_low"),
])
def test_invalid_fields_are_reported_with_their_path(tmp_path, document, field_path):
    path = tmp_path / "bad.toml"
    path.write_text(document, encoding="utf-8")
    with pytest.raises(ConfigError) as excinfo:
        load_config(path)
    assert excinfo.value.field_path == field_path


def test_environment_roles_are_checked(tmp_path):
    path = tmp_path / "roles.toml"
    path.write_text(
        '[[environments]]\nname = "a"\ncenter_freq = 28.0\n'
        '[[environments]]\nname = "b"\ncenter_freq = 30.0\n',
        encoding="utf-8",
    )
    with pytest.raises(ConfigError) as excinfo:
        load_config(path)
    assert excinfo.value.field_path == "environments"


def test_unreadable_files(tmp_path):
    broken = tmp_path / "broken.toml"
    broken.write_text("[run\nseed = ", encoding="utf-8")
    with pytest.raises(ConfigError):
        read_config_file(broken)
    with pytest.raises(ConfigError):
        read_config_file(tmp_path / "config.ini")


def test_deep_merge_replaces_lists_and_keeps_base():
    base = {"a": {"b": 1, "c": [1, 2]}, "d": 0}
    merged = deep_merge(base, {"a": {"c": [3]}})
    assert merged == {"a": {"b": 1, "c": [3]}, "d": 0}
    assert base["a"]["c"] == [1, 2]


def test_environments_get_distinct_derived_seeds():
    config = load_config(seed=4)
    environments = build_environments(config)
    assert [env.name for env in environments] == [e["name"] for e in DEFAULTS["environments"]]
    assert [env.role for env in environments].count("target") == 1
    assert environments[1].channel.seed == derive_seed(4, "channel", 1)
    assert len({env.channel.seed for env in environments}) == len(environments)


def test_config_digest_is_stable():
    assert config_digest(load_config(seed=1)) == config_digest(load_config(seed=1))
    assert config_digest(load_config(seed=1)) != config_digest(load_config(seed=2))


def test_derived_streams_are_reproducible_and_independent():
    a = derive_rng(5, "meta", 0).standard_normal(4)
    b = derive_rng(5, "meta", 0).standard_normal(4)
    c = derive_rng(5, "meta", 1).standard_normal(4)
    assert (a == b).all()
    assert not (a == c).all()
