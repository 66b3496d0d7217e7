"""Experiment config: JSON schema, presets and conversion to library objects."""
from __future__ import annotations

import copy
import json
import os
from importlib import resources

import jsonschema

from .train import AdamConfig, CurriculumConfig, DataConfig

_STAGE = {
    "type": "object",
    "properties": {
        "L_noise": {"type": "integer", "minimum": 0},
        "learning_rate": {"type": "number", "exclusiveMinimum": 0},
    },
    "required": ["L_noise", "learning_rate"],
    "additionalProperties": False,
}

SCHEMA = {
    "type": "object",
    "properties": {
        "task": {"const": "train"},
        "symmetry": {"enum": ["TimeReversal_T", "Z2xZ2T", "Z2xZ2"]},
        "arch": {
            "type": "object",
            "properties": {
                "N": {"enum": [4, 8]},
                "uniform": {"type": "boolean"},
                "conv_depth": {"enum": [3, 5]},
            },
            "required": ["N", "uniform", "conv_depth"],
            "additionalProperties": False,
        },
        "curriculum": {"type": "array", "items": _STAGE, "minItems": 1},
        "adam": {
            "type": "object",
            "properties": {
                "batch_size": {"type": "integer", "minimum": 1},
                "max_epochs": {"type": "integer", "minimum": 1},
                "beta1": {"type": "number", "minimum": 0, "exclusiveMaximum": 1},
                "beta2": {"type": "number", "minimum": 0, "exclusiveMaximum": 1},
                "eps": {"type": "number", "exclusiveMinimum": 0},
            },
            "required": ["batch_size", "max_epochs"],
            "additionalProperties": False,
        },
        "data": {
            "type": "object",
            "properties": {
                "train_size": {"type": "integer", "minimum": 1},
                "test_size": {"type": "integer", "minimum": 1},
                "label_source": {"enum": ["symmetric_cat", "asymmetric_product"]},
                "support_size": {"enum": [2, 3]},
            },
            "required": ["train_size", "test_size"],
            "additionalProperties": False,
        },
        "stopping": {
            "type": "object",
            "properties": {
                "accuracy_threshold": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
                "eval_every": {"type": "integer", "minimum": 1},
            },
            "additionalProperties": False,
        },
        "C": {"type": "number", "exclusiveMinimum": 0},
        "init_sigma": {"type": "number", "minimum": 0},
        "seed": {"type": "integer", "minimum": 0},
        "output_dir": {"type": "string"},
    },
    "required": ["task", "symmetry", "arch", "curriculum", "adam", "data", "seed"],
    "additionalProperties": False,
}


class ConfigError(ValueError):
    pass


def validate(cfg: dict) -> dict:
    try:
        jsonschema.validate(cfg, SCHEMA)
    except jsonschema.ValidationError as exc:
        raise ConfigError(exc.message) from exc
    stages = [s["L_noise"] for s in cfg["curriculum"]]
    if any(b <= a for a, b in zip(stages, stages[1:])):
        raise ConfigError("curriculum L_noise values must be strictly increasing")
    if any(2 * L >= cfg["arch"]["N"] for L in stages):
        raise ConfigError("every L_noise must satisfy L_noise < N/2")
    return cfg


def preset_names() -> list[str]:
    files = resources.files("qpl").joinpath("presets").iterdir()
    names = sorted(f.name[:-5] for f in files if f.name.endswith(".json"))
    return names + sorted(PRESET_ALIASES)


PRESET_ALIASES = {"tr-8q-desk": "tr-8q"}


def load_preset(name: str) -> dict:
    name = PRESET_ALIASES.get(name, name)
    path = resources.files("qpl").joinpath("presets", f"{name}.json")
    if not path.is_file():
        raise ConfigError(f"unknown preset {name!r}")
    return json.loads(path.read_text(encoding="utf-8"))


def load_config(path: str) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc


def apply_env(cfg: dict) -> dict:
    """``QPL_SEED`` overrides the config seed."""
    cfg = copy.deepcopy(cfg)
    if os.environ.get("QPL_SEED"):
        cfg["seed"] = int(os.environ["QPL_SEED"])
    return cfg


def to_objects(cfg: dict, threads: int = 1) -> tuple[CurriculumConfig, AdamConfig, DataConfig]:
    stop = cfg.get("stopping", {})
    cur = CurriculumConfig(
        stages=[s["L_noise"] for s in cfg["curriculum"]],
        learning_rates=[s["learning_rate"] for s in cfg["curriculum"]],
        accuracy_threshold=stop.get("accuracy_threshold", 1.0),
        train_size=cfg["data"]["train_size"],
        test_size=cfg["data"]["test_size"],
        eval_every=stop.get("eval_every", 10),
    )
    a = cfg["adam"]
    adam = AdamConfig(batch_size=a["batch_size"], max_epochs=a["max_epochs"],
                      beta1=a.get("beta1", 0.9), beta2=a.get("beta2", 0.999), eps=a.get("eps", 1e-8))
    d = cfg["data"]
    data = DataConfig(cfg["symmetry"], d.get("label_source", "symmetric_cat"), d.get("support_size", 2), threads)
    return cur, adam, data
