#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
Génération de canaux par SMOTE

SMOTE sert ici uniquement de générateur par interpolation: chaque
échantillon synthétique est un point du segment qui relie un échantillon
de base à l'un de ses k plus proches voisins. Les voisins sont cherchés
exactement (distance euclidienne sur la forme réelle encodée).
"""

import logging

import numpy as np
from sklearn.neighbors import NearestNeighbors

from modules.common.dataset import WirelessDataset
from modules.common.errors import InvalidArgumentError
from modules.gan.cgan import encode_sample

logger = logging.getLogger(__name__)


def nearest_neighbors(points, k):
    """
    Indices des k plus proches voisins de chaque point (le point lui-même exclu)

    Args:
        points (np.ndarray): Vecteurs réels (n, dim)
        k (int): Nombre de voisins, k < n

    Returns:
        np.ndarray: Indices (n, k), du plus proche au plus lointain
    """
    nn = NearestNeighbors(n_neighbors=k).fit(points)
    return nn.kneighbors(return_distance=False)


def smote_interpolate(samples, k, n, rng):
    """
    Interpolations SMOTE et couples utilisés

    Tirages dans l'ordre: indices de base, rang du voisin, coefficients lambda.

    Args:
        samples (np.ndarray): Canaux complexes (N, nt), N >= k + 1
        k (int): Nombre de voisins >= 1
        n (int): Nombre d'échantillons à produire
        rng (np.random.Generator): Flux aléatoire

    Returns:
        tuple: (synthétiques (n, nt), indices de base (n,), indices des voisins (n,), lambdas (n,))

    Raises:
        InvalidArgumentError: k < 1, n < 0 ou moins de k + 1 échantillons
    """
    if k < 1:
        raise InvalidArgumentError(f"k doit être >= 1 (reçu {k})")
    if n < 0:
        raise InvalidArgumentError(f"n doit être >= 0 (reçu {n})")
    count = samples.shape[0]
    if count < k + 1:
        raise InvalidArgumentError(f"SMOTE demande au moins {k + 1} échantillons ({count} disponibles)")

    neighbors = nearest_neighbors(encode_sample(samples, 1.0), k)
    base = rng.integers(0, count, size=n)
    rank = rng.integers(0, k, size=n)
    lam = rng.random(n)
    partner = neighbors[base, rank]

    x = samples[base]
    synthetic = x + lam[:, None] * (samples[partner] - x)
    return synthetic, base, partner, lam


def smote_generate(dataset, k, n, rng):
    """
    Jeu synthétique SMOTE de n canaux

    Args:
        dataset (WirelessDataset): Jeu de base (au moins k + 1 échantillons)
        k (int): Nombre de voisins
        n (int): Nombre d'échantillons produits
        rng (np.random.Generator): Flux aléatoire

    Returns:
        WirelessDataset: Jeu synthétisé en unités physiques (échelle 1.0)
    """
    synthetic, _, _, _ = smote_interpolate(dataset.raw_samples(), k, n, rng)
    logger.info(f"SMOTE: {n} canaux synthétisés à partir de {len(dataset)} (k={k})")
    return WirelessDataset(
        nt=dataset.nt,
        samples=synthetic,
        condition_index=dataset.condition_index,
        scale=1.0,
        meta={
            "source": "synthesized",
            "method": "smote",
            "k": int(k),
            "base_digest": dataset.digest(),
        },
    )
