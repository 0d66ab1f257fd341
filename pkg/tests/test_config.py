"""Layered run configuration: defaults, INI file, command-line overrides."""

import pytest

from senttune.errors import ConfigError
from senttune.config import load_config


def test_defaults_need_no_file():
    cfg = load_config()
    assert cfg.get("paths", "corpus_dir") == "work/corpus"
    assert cfg.get("model", "d_model") == 64
    assert cfg.get("train", "epochs") == 10
    assert cfg.get("train", "shuffle") is True
    assert cfg.get("labeler", "backend") == "offline"
    assert cfg.get("synth", "seed") == 0


def test_file_overrides_defaults(tmp_path):
    ini = tmp_path / "run.cfg"
    ini.write_text(
        "[model]\nd_model = 32\ndropout_rate = 0.2\n"
        "[train]\nshuffle = no\nepochs = 20\n"
    )
    cfg = load_config(ini)
    assert cfg.get("model", "d_model") == 32
    assert cfg.get("model", "dropout_rate") == 0.2
    assert cfg.get("train", "shuffle") is False
    assert cfg.get("train", "epochs") == 20
    # untouched keys keep their defaults
    assert cfg.get("model", "n_heads") == 4


def test_flag_overrides_beat_file(tmp_path):
    ini = tmp_path / "run.cfg"
    ini.write_text("[train]\nepochs = 20\n")
    cfg = load_config(ini, overrides={("train", "epochs"): "30"})
    assert cfg.get("train", "epochs") == 30


def test_bool_spellings(tmp_path):
    for raw, expected in (("true", True), ("0", False), ("Yes", True), ("no", False)):
        cfg = load_config(None, overrides={("train", "allow_short"): raw})
        assert cfg.get("train", "allow_short") is expected


@pytest.mark.parametrize(
    "content,fragment",
    [
        ("[nosuch]\nx = 1\n", "unknown config section"),
        ("[model]\nwidth = 9\n", "unknown config key"),
        ("[model]\nd_model = wide\n", "cannot read"),
        ("[train]\nallow_short = maybe\n", "cannot read"),
        ("not an ini file at all", "bad config"),
    ],
)
def test_file_errors(tmp_path, content, fragment):
    ini = tmp_path / "run.cfg"
    ini.write_text(content)
    with pytest.raises(ConfigError, match=fragment):
        load_config(ini)


def test_missing_file_is_an_error(tmp_path):
    with pytest.raises(ConfigError, match="cannot read"):
        load_config(tmp_path / "absent.cfg")


def test_override_errors():
    with pytest.raises(ConfigError, match="unknown config key"):
        load_config(None, overrides={("model", "width"): "9"})
    with pytest.raises(ConfigError, match="cannot read"):
        load_config(None, overrides={("model", "seed"): "pi"})


def test_validate_checks_referenced_files(tmp_path):
    with pytest.raises(ConfigError, match="no such file"):
        load_config(None, overrides={("paths", "lexicon"): str(tmp_path / "nope.tsv")})
    present = tmp_path / "lex.tsv"
    present.write_text("good\t1\n")
    cfg = load_config(None, overrides={("paths", "lexicon"): str(present)})
    assert cfg.get("paths", "lexicon") == str(present)


def test_validate_checks_backend():
    with pytest.raises(ConfigError, match="offline or http"):
        load_config(None, overrides={("labeler", "backend"): "carrier-pigeon"})
    with pytest.raises(ConfigError, match="endpoint"):
        load_config(None, overrides={("labeler", "backend"): "http"})
    cfg = load_config(None, overrides={
        ("labeler", "backend"): "http",
        ("labeler", "endpoint"): "http://127.0.0.1:1",
    })
    assert cfg.get("labeler", "endpoint") == "http://127.0.0.1:1"


def test_model_and_train_config_builders():
    cfg = load_config()
    mcfg = cfg.model_config(vocab_size=123)
    assert mcfg.vocab_size == 123
    assert (mcfg.d_model, mcfg.n_layers, mcfg.max_len) == (64, 4, 24)
    tcfg = cfg.train_config()
    assert (tcfg.epochs, tcfg.batch_size, tcfg.n_trainable_layers) == (10, 16, 4)
    replaced = cfg.train_config(epochs=15, n_trainable_layers=1)
    assert (replaced.epochs, replaced.n_trainable_layers) == (15, 1)


def test_to_dict_is_plain_data():
    d = load_config().to_dict()
    assert d["model"]["d_model"] == 64
    assert sorted(d) == ["labeler", "model", "paths", "synth", "train"]


def test_shipped_demo_config_loads():
    from pathlib import Path

    cfg = load_config(Path(__file__).resolve().parent.parent / "configs" / "demo.cfg")
    assert cfg.get("model", "d_model") == 64
    assert cfg.get("labeler", "backend") == "offline"
