"""Run configuration: an INI file plus command-line overrides.

Precedence, lowest to highest: built-in defaults, then the config
file, then flags.  Every key has a default, so a config file only
names what it changes.  The labeler auth token is deliberately not a
config key; the HTTP backend reads it from an environment variable so
config files stay committable.
"""

import configparser
import os
from dataclasses import dataclass, field

from .errors import ConfigError
from .model import ModelConfig
from .training import TrainConfig

_BOOLEANS = {"true": True, "false": False, "1": True, "0": False,
             "yes": True, "no": False}

# section -> key -> (type tag, default)
_SCHEMA = {
    "paths": {
        "corpus_dir": ("str", "work/corpus"),
        "checkpoints_dir": ("str", "work/checkpoints"),
        "reports_dir": ("str", "work/reports"),
        "stopwords": ("str", ""),
        "lexicon": ("str", ""),
        "synth_spec": ("str", ""),
    },
    "model": {
        "max_len": ("int", 24),
        "d_model": ("int", 64),
        "n_heads": ("int", 4),
        "n_layers": ("int", 4),
        "d_ff": ("int", 128),
        "dropout_rate": ("float", 0.1),
        "seed": ("int", 0),
    },
    "train": {
        "epochs": ("int", 10),
        "batch_size": ("int", 16),
        "learning_rate": ("float", 1e-3),
        "n_trainable_layers": ("int", 4),
        "seed": ("int", 0),
        "shuffle": ("bool", True),
        "allow_short": ("bool", False),
    },
    "labeler": {
        "backend": ("str", "offline"),
        "endpoint": ("str", ""),
        "model": ("str", "default"),
        "timeout": ("float", 10.0),
        "retries": ("int", 3),
        "max_workers": ("int", 1),
    },
    "synth": {
        "seed": ("int", 0),
    },
}


def _coerce(section, key, kind, raw):
    try:
        if kind == "int":
            return int(raw)
        if kind == "float":
            return float(raw)
        if kind == "bool":
            if isinstance(raw, bool):
                return raw
            try:
                return _BOOLEANS[str(raw).strip().lower()]
            except KeyError:
                raise ValueError(raw)
        return str(raw)
    except ValueError:
        raise ConfigError(
            f"[{section}] {key}: cannot read {raw!r} as {kind}"
        ) from None


@dataclass(frozen=True)
class RunConfig:
    values: dict = field(default_factory=dict)

    def get(self, section, key):
        return self.values[section][key]

    def model_config(self, vocab_size):
        m = self.values["model"]
        return ModelConfig(
            vocab_size=vocab_size,
            max_len=m["max_len"],
            d_model=m["d_model"],
            n_heads=m["n_heads"],
            n_layers=m["n_layers"],
            d_ff=m["d_ff"],
            dropout_rate=m["dropout_rate"],
            seed=m["seed"],
        )

    def train_config(self, **replacements):
        t = {**self.values["train"], **replacements}
        return TrainConfig(
            epochs=t["epochs"],
            batch_size=t["batch_size"],
            learning_rate=t["learning_rate"],
            n_trainable_layers=t["n_trainable_layers"],
            seed=t["seed"],
            shuffle=t["shuffle"],
            allow_short=t["allow_short"],
        )

    def to_dict(self):
        return {s: dict(kv) for s, kv in sorted(self.values.items())}

    def validate(self):
        """Referenced files must exist; directories are created on use."""
        for key in ("stopwords", "lexicon", "synth_spec"):
            path = self.values["paths"][key]
            if path and not os.path.isfile(path):
                raise ConfigError(f"[paths] {key}: no such file: {path}")
        backend = self.values["labeler"]["backend"]
        if backend not in ("offline", "http"):
            raise ConfigError(
                f"[labeler] backend must be offline or http, got {backend!r}"
            )
        if backend == "http" and not self.values["labeler"]["endpoint"]:
            raise ConfigError("[labeler] backend http needs an endpoint")
        return self


def load_config(path=None, overrides=None):
    """Build a RunConfig from defaults, an optional INI file, and
    override pairs {(section, key): raw_value}."""
    values = {s: {k: d for k, (_, d) in kv.items()} for s, kv in _SCHEMA.items()}
    if path is not None:
        parser = configparser.ConfigParser(interpolation=None)
        try:
            with open(path, "r", encoding="utf-8") as fh:
                parser.read_file(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        except configparser.Error as exc:
            raise ConfigError(f"bad config {path}: {exc}") from exc
        for section in parser.sections():
            if section not in _SCHEMA:
                raise ConfigError(f"unknown config section [{section}]")
            for key, raw in parser.items(section):
                if key not in _SCHEMA[section]:
                    raise ConfigError(f"unknown config key [{section}] {key}")
                kind = _SCHEMA[section][key][0]
                values[section][key] = _coerce(section, key, kind, raw)
    for (section, key), raw in (overrides or {}).items():
        if section not in _SCHEMA or key not in _SCHEMA[section]:
            raise ConfigError(f"unknown config key [{section}] {key}")
        kind = _SCHEMA[section][key][0]
        values[section][key] = _coerce(section, key, kind, raw)
    return RunConfig(values).validate()
