#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
Modèle de canal géométrique MISO à bande étroite

Ce module produit les canaux de référence ("genie"):

    h = sqrt(nt / L) * sum_l rho_l * a(theta_l)
    rho_l ~ CN(0, P0 / (f^2 R^2))
    a(theta) = (1 / nt) [1, e^{j theta}, ..., e^{j (nt - 1) theta}]

Le réseau d'antennes est linéaire uniforme, theta_l est directement le
déphasage entre antennes voisines. f est en GHz et R en mètres; avec
P0 = 784, f = 28 GHz et R = 1 m le gain de trajet moyen vaut 1.
"""

import math
import logging
from dataclasses import dataclass, asdict, replace

import numpy as np
from tqdm import tqdm

from modules.common.dataset import WirelessDataset
from modules.common.errors import InvalidArgumentError
from modules.common.rng import derive_rng
from utils.hashing import calculate_json_hash

logger = logging.getLogger(__name__)

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class ChannelConfig:
    """
    Paramètres physiques d'un environnement sans fil

    Attributes:
        nt (int): Nombre d'antennes d'émission
        num_paths (int): Nombre de trajets L
        power_gain (float): Gain de puissance P0 (sans dimension)
        center_freq (float): Fréquence centrale f en GHz
        distance (float): Distance R en mètres
        aod_low (float): Borne basse des déphasages (radians)
        aod_high (float): Borne haute des déphasages (radians)
        seed (int): Graine 64 bits non signée
    """

    nt: int = 8
    num_paths: int = 3
    power_gain: float = 784.0
    center_freq: float = 28.0
    distance: float = 1.0
    aod_low: float = 0.0
    aod_high: float = TWO_PI
    seed: int = 0

    def __post_init__(self):
        if self.nt < 1:
            raise InvalidArgumentError(f"nt doit être >= 1 (reçu {self.nt})")
        if self.num_paths < 1:
            raise InvalidArgumentError(f"num_paths doit être >= 1 (reçu {self.num_paths})")
        for name in ("power_gain", "center_freq", "distance"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise InvalidArgumentError(f"{name} doit être un réel > 0 (reçu {value})")
        if not (0.0 <= self.aod_low < self.aod_high <= TWO_PI):
            raise InvalidArgumentError(
                f"plage de déphasage invalide [{self.aod_low}, {self.aod_high}]: 0 <= bas < haut <= 2pi requis"
            )
        if not 0 <= int(self.seed) < (1 << 64):
            raise InvalidArgumentError(f"graine hors de [0, 2^64): {self.seed}")

    def with_updates(self, **changes):
        return replace(self, **changes)

    def to_dict(self):
        return asdict(self)

    def digest(self):
        """
        Empreinte SHA-256 de la configuration (provenance des jeux de données)
        """
        return calculate_json_hash(self.to_dict())


def steering_vector(theta, nt):
    """
    Réponse du réseau d'antennes pour un déphasage donné

    Args:
        theta (float): Déphasage entre antennes voisines (radians)
        nt (int): Nombre d'antennes

    Returns:
        np.ndarray: Vecteur complex128 de longueur nt et de norme au carré 1/nt

    Raises:
        InvalidArgumentError: nt < 1 ou theta non fini
    """
    if nt < 1:
        raise InvalidArgumentError(f"nt doit être >= 1 (reçu {nt})")
    if not math.isfinite(theta):
        raise InvalidArgumentError(f"déphasage non fini: {theta}")
    return np.exp(1j * theta * np.arange(nt)) / nt


def path_gain_variance(cfg):
    """
    Variance C = P0 / (f^2 R^2) des gains complexes de trajet

    Args:
        cfg (ChannelConfig): Configuration de l'environnement

    Returns:
        float: Variance C
    """
    return cfg.power_gain / (cfg.center_freq ** 2 * cfg.distance ** 2)


def sample_channel(cfg, rng):
    """
    Tire un vecteur de canal

    Les déphasages sont tirés en premier, puis les parties réelles et
    imaginaires des gains (chacune de variance C/2).

    Args:
        cfg (ChannelConfig): Configuration de l'environnement
        rng (np.random.Generator): Flux aléatoire

    Returns:
        np.ndarray: Vecteur complex128 de longueur nt
    """
    num_paths = cfg.num_paths
    thetas = rng.uniform(cfg.aod_low, cfg.aod_high, size=num_paths)
    sigma = math.sqrt(path_gain_variance(cfg) / 2.0)
    real = rng.standard_normal(num_paths)
    imag = rng.standard_normal(num_paths)
    gains = sigma * (real + 1j * imag)

    responses = np.exp(1j * np.outer(thetas, np.arange(cfg.nt))) / cfg.nt
    return math.sqrt(cfg.nt / num_paths) * (gains @ responses)


def sample_rng(seed, index):
    """
    Flux aléatoire de l'échantillon d'indice donné
    """
    return derive_rng(seed, index)


def generate_dataset(cfg, n, condition_index, progress=False):
    """
    Génère un jeu de données de référence

    Chaque échantillon a son propre flux dérivé de (cfg.seed, indice): le
    résultat ne dépend pas de l'ordre d'évaluation.

    Args:
        cfg (ChannelConfig): Configuration de l'environnement
        n (int): Nombre d'échantillons
        condition_index (int): Indice i de l'environnement
        progress (bool, optional): Affiche une barre de progression

    Returns:
        WirelessDataset: Jeu de données non normalisé (scale = 1.0)

    Raises:
        InvalidArgumentError: n < 1
    """
    if n < 1:
        raise InvalidArgumentError(f"n doit être >= 1 (reçu {n})")

    samples = np.empty((n, cfg.nt), dtype=np.complex128)
    iterator = range(n)
    if progress:
        iterator = tqdm(iterator, desc=f"canaux {cfg.center_freq:g} GHz", unit="éch", leave=False)
    for index in iterator:
        samples[index] = sample_channel(cfg, sample_rng(cfg.seed, index))

    logger.debug(
        f"{n} canaux générés (f={cfg.center_freq} GHz, R={cfg.distance} m, condition {condition_index})"
    )
    return WirelessDataset(
        nt=cfg.nt,
        samples=samples,
        condition_index=condition_index,
        scale=1.0,
        meta={
            "source": "genie",
            "config_digest": cfg.digest(),
            "config": cfg.to_dict(),
            "seed": int(cfg.seed),
        },
    )
