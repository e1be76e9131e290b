#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
Chargement et validation de la configuration d'une exécution

Ordre de résolution: valeurs par défaut < préréglage d'échelle (desk |
paper) < fichier de configuration (TOML, YAML ou manifest.json d'une
exécution précédente) < options de la ligne de commande. Le résultat est
validé par un schéma voluptuous.
"""

import copy
import json
import math
import logging
from dataclasses import dataclass
from pathlib import Path

import yaml
from voluptuous import Schema, Required, Optional, All, Any, In, Range, Coerce, Length, MultipleInvalid

try:
    import tomllib
except ImportError:
    import tomli as tomllib

from modules.channel.model import ChannelConfig
from modules.common.errors import ConfigError
from modules.common.rng import derive_seed
from utils.hashing import calculate_json_hash

logger = logging.getLogger(__name__)

SCALES = ("desk", "paper")

DEFAULTS = {
    "run": {"seed": 0, "scale": "desk", "log_interval": 100},
    "channel": {
        "nt": 8,
        "num_paths": 3,
        "power_gain": 784.0,
        "distance": 1.0,
        "aod_low": 0.0,
        "aod_high": 2.0 * math.pi,
    },
    "environments": [
        {"name": "f28", "center_freq": 28.0, "role": "meta"},
        {"name": "f37", "center_freq": 37.0, "role": "meta"},
        {"name": "f41", "center_freq": 41.0, "role": "meta"},
        {"name": "f60", "center_freq": 60.0, "role": "meta"},
        {"name": "f39", "center_freq": 39.0, "role": "target"},
    ],
    "samples": {"meta_per_env": 2000, "target": 800, "synth": 20000, "estimator_test": 10000},
    "gan": {
        "noise_dim": 8,
        "hidden": [256, 256, 256],
        "loss_variant": "non_saturating",
        "lr": 2e-4,
        "beta1": 0.5,
        "beta2": 0.999,
        "batch_size": 64,
        "cgan_steps": 2000,
    },
    "meta": {
        "alpha": 1e-3,
        "beta": 2.5e-4,
        "gamma": 1e-3,
        "inner_steps": 1,
        "meta_iters": 10000,
        "fine_tune_iters": 2000,
        "batch_size": 64,
        "meta_grad_mode": "first_order",
    },
    "estimator": {
        "num_pilots": 4,
        "snr_grid_db": [0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0],
        "epochs": 30,
        "batch_size": 64,
        "lr": 1e-3,
        "hidden": 256,
        "depth": 5,
    },
    "smote": {"k": 5},
    "metrics": {"bins": 50, "tv_feature": "path_gain_per_sample"},
    "flops": {"n_dataset": 200000, "dim": 16, "k": 5},
}

PRESETS = {
    "desk": {
        "samples": {"meta_per_env": 2000, "target": 800, "synth": 20000, "estimator_test": 10000},
        "gan": {"cgan_steps": 2000},
        "meta": {"meta_iters": 10000, "fine_tune_iters": 2000},
        "estimator": {"epochs": 30},
    },
    "paper": {
        "samples": {"meta_per_env": 20000, "target": 800, "synth": 200000, "estimator_test": 10000},
        "gan": {"cgan_steps": 20000},
        "meta": {"meta_iters": 130000, "fine_tune_iters": 2000},
        "estimator": {"epochs": 30},
    },
}

_positive = All(Coerce(float), Range(min=0.0, min_included=False))
_nonnegative = All(Coerce(float), Range(min=0.0))
_count = All(int, Range(min=1))

CONFIG_SCHEMA = Schema({
    Required("run"): {
        Required("seed"): All(int, Range(min=0, max=2 ** 64 - 1)),
        Required("scale"): In(SCALES),
        Required("log_interval"): _count,
    },
    Required("channel"): {
        Required("nt"): _count,
        Required("num_paths"): _count,
        Required("power_gain"): _positive,
        Required("distance"): _positive,
        Required("aod_low"): _nonnegative,
        Required("aod_high"): All(Coerce(float), Range(max=2.0 * math.pi)),
    },
    Required("environments"): All([{
        Required("name"): All(str, Length(min=1)),
        Required("center_freq"): _positive,
        Optional("distance"): _positive,
        Optional("power_gain"): _positive,
        Optional("csv"): All(str, Length(min=1)),
        Optional("role", default="meta"): In(("meta", "target")),
    }], Length(min=2)),
    Required("samples"): {
        Required("meta_per_env"): _count,
        Required("target"): _count,
        Required("synth"): _count,
        Required("estimator_test"): _count,
    },
    Required("gan"): {
        Required("noise_dim"): _count,
        Required("hidden"): All([_count], Length(min=1)),
        Required("loss_variant"): In(("minimax", "non_saturating")),
        Required("lr"): _positive,
        Required("beta1"): All(Coerce(float), Range(min=0.0, max=1.0, max_included=False)),
        Required("beta2"): All(Coerce(float), Range(min=0.0, max=1.0, max_included=False)),
        Required("batch_size"): _count,
        Required("cgan_steps"): All(int, Range(min=0)),
    },
    Required("meta"): {
        Required("alpha"): _nonnegative,
        Required("beta"): _nonnegative,
        Required("gamma"): _nonnegative,
        Required("inner_steps"): _count,
        Required("meta_iters"): All(int, Range(min=0)),
        Required("fine_tune_iters"): All(int, Range(min=0)),
        Required("batch_size"): _count,
        Required("meta_grad_mode"): In(("first_order",)),
    },
    Required("estimator"): {
        Required("num_pilots"): _count,
        Required("snr_grid_db"): All([Coerce(float)], Length(min=1)),
        Required("epochs"): All(int, Range(min=0)),
        Required("batch_size"): _count,
        Required("lr"): _positive,
        Required("hidden"): _count,
        Required("depth"): _count,
    },
    Required("smote"): {Required("k"): _count},
    Required("metrics"): {
        Required("bins"): _count,
        Required("tv_feature"): In(("path_gain_per_sample", "real_part_flattened")),
    },
    Required("flops"): {
        Required("n_dataset"): _count,
        Required("dim"): _count,
        Required("k"): _count,
    },
})


@dataclass(frozen=True)
class Environment:
    """
    Environnement configuré

    Attributes:
        index (int): Indice de condition (ordre de la configuration)
        name (str): Nom
        role (str): 'meta' ou 'target'
        channel (ChannelConfig): Paramètres physiques
        csv (str): Fichier CSV de canaux mesurés, None pour les canaux de référence
    """

    index: int
    name: str
    role: str
    channel: ChannelConfig
    csv: str = None


def deep_merge(base, override):
    """
    Fusionne récursivement deux dictionnaires (les listes sont remplacées)

    Returns:
        dict: Nouveau dictionnaire
    """
    merged = copy.deepcopy(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = deep_merge(merged[key], value)
        else:
            merged[key] = copy.deepcopy(value)
    return merged


def read_config_file(path):
    """
    Lit un fichier de configuration sans le valider

    Args:
        path: Fichier .toml, .yaml/.yml ou manifest .json

    Returns:
        dict: Document lu

    Raises:
        ConfigError: Fichier illisible ou de type inconnu
    """
    path = Path(path)
    suffix = path.suffix.lower()
    try:
        if suffix == ".toml":
            with open(path, "rb") as handle:
                document = tomllib.load(handle)
        elif suffix in (".yaml", ".yml"):
            with open(path, encoding="utf-8") as handle:
                document = yaml.safe_load(handle) or {}
        elif suffix == ".json":
            with open(path, encoding="utf-8") as handle:
                document = json.load(handle)
            # manifeste d'une exécution précédente: on reprend sa configuration résolue
            document = document.get("config", document)
        else:
            raise ConfigError(f"type de fichier de configuration inconnu: {path.name}", field_path=str(path))
    except (tomllib.TOMLDecodeError, yaml.YAMLError, json.JSONDecodeError) as e:
        raise ConfigError(f"configuration illisible ({path}): {e}", field_path=str(path))

    if not isinstance(document, dict):
        raise ConfigError(f"la configuration doit être une table ({path})", field_path=str(path))
    return document


def validate_config(config):
    """
    Valide une configuration complète

    Returns:
        dict: Configuration normalisée

    Raises:
        ConfigError: Champ invalide (chemin pointé, par ex. 'meta.alpha')
    """
    try:
        config = CONFIG_SCHEMA(config)
    except MultipleInvalid as e:
        error = e.errors[0]
        field_path = ".".join(str(part) for part in error.path)
        raise ConfigError(f"configuration invalide: {field_path}: {error.msg}", field_path=field_path)

    channel = config["channel"]
    if not channel["aod_low"] < channel["aod_high"]:
        raise ConfigError("aod_low doit être < aod_high", field_path="channel.aod_low")
    roles = [env["role"] for env in config["environments"]]
    if roles.count("target") != 1:
        raise ConfigError("exactement un environnement cible est requis", field_path="environments")
    names = [env["name"] for env in config["environments"]]
    if len(set(names)) != len(names):
        raise ConfigError("noms d'environnements en double", field_path="environments")
    if config["estimator"]["num_pilots"] > channel["nt"]:
        raise ConfigError("num_pilots doit être <= nt", field_path="estimator.num_pilots")
    return config


def load_config(path=None, scale=None, seed=None):
    """
    Résout la configuration d'une exécution

    Args:
        path (str, optional): Fichier de configuration
        scale (str, optional): Préréglage imposé par la ligne de commande
        seed (int, optional): Graine imposée par la ligne de commande

    Returns:
        dict: Configuration validée

    Raises:
        ConfigError: Configuration invalide
    """
    document = read_config_file(path) if path else {}
    chosen = scale or document.get("run", {}).get("scale") or DEFAULTS["run"]["scale"]
    if chosen not in SCALES:
        raise ConfigError(f"préréglage inconnu: {chosen}", field_path="run.scale")

    config = deep_merge(DEFAULTS, PRESETS[chosen])
    config = deep_merge(config, document)
    config["run"]["scale"] = chosen
    if seed is not None:
        config["run"]["seed"] = seed

    config = validate_config(config)
    logger.debug(f"Configuration résolue (préréglage {chosen}, empreinte {config_digest(config)[:12]})")
    return config


def config_digest(config):
    return calculate_json_hash(config)


def build_environments(config):
    """
    Environnements configurés, dans l'ordre des indices de condition

    Chaque environnement reçoit une graine dérivée de la graine d'exécution.

    Returns:
        list: Environment
    """
    base = config["channel"]
    seed = config["run"]["seed"]
    environments = []
    for index, entry in enumerate(config["environments"]):
        channel = ChannelConfig(
            nt=base["nt"],
            num_paths=base["num_paths"],
            power_gain=entry.get("power_gain", base["power_gain"]),
            center_freq=entry["center_freq"],
            distance=entry.get("distance", base["distance"]),
            aod_low=base["aod_low"],
            aod_high=base["aod_high"],
            seed=derive_seed(seed, "channel", index),
        )
        environments.append(Environment(index, entry["name"], entry["role"], channel, entry.get("csv")))
    return environments
