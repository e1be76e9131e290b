#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
Jeux de données de canaux sans fil

Un WirelessDataset regroupe des vecteurs de canal complexes (un par ligne),
l'indice de l'environnement qu'il représente, le facteur d'échelle appliqué
aux échantillons bruts et sa provenance.
"""

import copy
from dataclasses import dataclass, field

import numpy as np

from modules.common.errors import InvalidArgumentError
from utils.hashing import calculate_array_hash, calculate_json_hash

SOURCES = ("genie", "synthesized", "imported")


def as_complex_vec(values, nt=None):
    """
    Convertit une séquence en ComplexVec (tableau complex128 à une dimension)

    Args:
        values: Séquence de nombres complexes
        nt (int, optional): Longueur attendue

    Returns:
        np.ndarray: Vecteur complex128

    Raises:
        InvalidArgumentError: Longueur inattendue ou composante non finie
    """
    vec = np.asarray(values, dtype=np.complex128).reshape(-1)
    if nt is not None and vec.shape[0] != nt:
        raise InvalidArgumentError(f"vecteur de longueur {vec.shape[0]}, {nt} attendu")
    if not np.all(np.isfinite(vec)):
        raise InvalidArgumentError("vecteur de canal non fini")
    return vec


@dataclass
class WirelessDataset:
    """
    Ensemble de canaux d'un environnement (D_i)

    Les échantillons stockés valent échantillons bruts × scale.

    Attributes:
        nt (int): Nombre d'antennes d'émission
        samples (np.ndarray): Matrice complex128 (n, nt)
        condition_index (int): Indice i de l'environnement
        scale (float): Facteur appliqué aux échantillons bruts (1.0: non normalisé)
        meta (dict): Provenance (source, empreinte de configuration, graine, ...)
    """

    nt: int
    samples: np.ndarray
    condition_index: int = 0
    scale: float = 1.0
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=np.complex128)
        if self.samples.ndim == 1 and self.nt >= 1 and self.samples.size % self.nt == 0:
            self.samples = self.samples.reshape(-1, self.nt)
        if self.nt < 1:
            raise InvalidArgumentError(f"nt doit être >= 1 (reçu {self.nt})")
        if self.samples.ndim != 2 or self.samples.shape[1] != self.nt:
            raise InvalidArgumentError(
                f"échantillons de forme {self.samples.shape}, (n, {self.nt}) attendu"
            )
        if not self.scale > 0:
            raise InvalidArgumentError(f"scale doit être > 0 (reçu {self.scale})")
        if self.condition_index < 0:
            raise InvalidArgumentError(f"condition_index doit être >= 0 (reçu {self.condition_index})")
        if not np.all(np.isfinite(self.samples)):
            raise InvalidArgumentError("le jeu de données contient des valeurs non finies")
        self.scale = float(self.scale)
        self.condition_index = int(self.condition_index)

    def __len__(self):
        return self.samples.shape[0]

    @property
    def source(self):
        return self.meta.get("source")

    def raw_samples(self):
        """
        Échantillons en unités physiques (échelle annulée)

        Returns:
            np.ndarray: Matrice complex128 (n, nt)
        """
        if self.scale == 1.0:
            return self.samples
        return self.samples / self.scale

    def require_nonempty(self, what="jeu de données"):
        if len(self) == 0:
            raise InvalidArgumentError(f"{what} vide")

    def subset(self, indices, **meta_updates):
        """
        Extrait un sous-ensemble d'échantillons en conservant l'échelle et la condition

        Args:
            indices: Indices des échantillons à conserver
            **meta_updates: Entrées de provenance à ajouter

        Returns:
            WirelessDataset: Nouveau jeu de données
        """
        meta = copy.deepcopy(self.meta)
        meta.update(meta_updates)
        return WirelessDataset(
            nt=self.nt,
            samples=self.samples[np.asarray(indices, dtype=np.int64)],
            condition_index=self.condition_index,
            scale=self.scale,
            meta=meta,
        )

    def digest(self):
        """
        Empreinte du contenu (échantillons, condition, échelle, provenance)

        Returns:
            str: Empreinte SHA-256 hexadécimale
        """
        return calculate_json_hash({
            "nt": self.nt,
            "samples": calculate_array_hash(self.samples),
            "condition_index": self.condition_index,
            "scale": self.scale.hex(),
            "meta": self.meta,
        })

    def to_dict(self):
        """
        Résumé du jeu de données (sans les échantillons) pour les rapports
        """
        return {
            "nt": self.nt,
            "sample_count": len(self),
            "condition_index": self.condition_index,
            "scale": self.scale,
            "meta": self.meta,
        }
