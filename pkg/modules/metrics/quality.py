#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
Mesures de qualité des jeux de données et de l'entraînement

- gain de trajet moyen E[||h||^2] en unités physiques;
- distance en variation totale entre histogrammes d'une caractéristique scalaire;
- écart de pertes entre l'environnement cible et les environnements méta,
  rapporté à côté d'une approximation empirique de la variation totale.

La variation totale est calculée sur un histogramme scalaire et non dans
l'espace à 2 nt dimensions: à l'échelle d'un poste de travail une
estimation en grande dimension serait vide de sens.
"""

import numpy as np

from modules.common.dataset import WirelessDataset
from modules.common.errors import InvalidArgumentError
from modules.gan.cgan import encode_sample, generate, disc_loss, sample_noise

TV_FEATURES = ("path_gain_per_sample", "real_part_flattened")
DEFAULT_BINS = 50
GAP_MAX_SAMPLES = 2048


def path_gain(dataset):
    """
    Gain de trajet moyen: moyenne de ||h||^2 après annulation de l'échelle

    Args:
        dataset (WirelessDataset): Jeu non vide

    Returns:
        float: Gain de trajet >= 0

    Raises:
        InvalidArgumentError: Jeu vide
    """
    dataset.require_nonempty()
    return float(np.mean(per_sample_gain(dataset)))


def per_sample_gain(dataset):
    raw = dataset.raw_samples()
    return np.sum(raw.real ** 2 + raw.imag ** 2, axis=1)


def extract_feature(dataset, feature):
    """
    Caractéristique scalaire utilisée pour les histogrammes

    Args:
        dataset (WirelessDataset): Jeu non vide
        feature (str): 'path_gain_per_sample' ou 'real_part_flattened'

    Returns:
        np.ndarray: Valeurs à une dimension
    """
    dataset.require_nonempty()
    if feature == "path_gain_per_sample":
        return per_sample_gain(dataset)
    if feature == "real_part_flattened":
        return dataset.raw_samples().real.reshape(-1)
    raise InvalidArgumentError(f"caractéristique inconnue: {feature}")


def histogram(values, bins, value_range):
    """
    Histogramme normalisé; la masse hors de [lo, hi] va dans les classes extrêmes

    Returns:
        np.ndarray: Probabilités par classe (somme 1)
    """
    lo, hi = value_range
    counts, _ = np.histogram(np.clip(values, lo, hi), bins=bins, range=(lo, hi))
    return counts / counts.sum()


def tv_between_histograms(p, q):
    """
    Variation totale 0.5 * sum |p_b - q_b| entre deux histogrammes normalisés
    """
    p = np.asarray(p, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    if p.shape != q.shape:
        raise InvalidArgumentError(f"histogrammes de tailles différentes: {p.shape} et {q.shape}")
    return float(0.5 * np.sum(np.abs(p - q)))


def tv_distance(ds_a, ds_b, feature="path_gain_per_sample", bins=DEFAULT_BINS, value_range=None):
    """
    Distance en variation totale entre deux jeux, sur une caractéristique scalaire

    Args:
        ds_a (WirelessDataset): Premier jeu
        ds_b (WirelessDataset): Second jeu
        feature (str): Caractéristique ('path_gain_per_sample' ou 'real_part_flattened')
        bins (int): Nombre de classes >= 1
        value_range (tuple, optional): (lo, hi) avec lo < hi; par défaut l'étendue commune des valeurs

    Returns:
        float: Distance dans [0, 1]

    Raises:
        InvalidArgumentError: Jeu vide, bins < 1 ou lo >= hi
    """
    if bins < 1:
        raise InvalidArgumentError(f"bins doit être >= 1 (reçu {bins})")
    values_a = extract_feature(ds_a, feature)
    values_b = extract_feature(ds_b, feature)
    if value_range is None:
        lo = float(min(values_a.min(), values_b.min()))
        hi = float(max(values_a.max(), values_b.max()))
        value_range = (lo, hi if hi > lo else lo + 1.0)
    lo, hi = value_range
    if not lo < hi:
        raise InvalidArgumentError(f"plage invalide: [{lo}, {hi}]")
    return tv_between_histograms(histogram(values_a, bins, value_range), histogram(values_b, bins, value_range))


def pool(datasets):
    """
    Réunit des jeux en un seul (échantillons bruts, échelle 1)
    """
    if not datasets:
        raise InvalidArgumentError("aucun jeu à réunir")
    nt = datasets[0].nt
    return WirelessDataset(
        nt=nt,
        samples=np.concatenate([ds.raw_samples() for ds in datasets], axis=0),
        condition_index=0,
        meta={"source": "pooled", "members": [ds.condition_index for ds in datasets]},
    )


def default_range(datasets):
    """
    Plage par défaut des histogrammes de gain: [0, 4 x gain de trajet maximal]
    """
    top = max(path_gain(ds) for ds in datasets)
    return (0.0, 4.0 * top if top > 0 else 1.0)


def loss_gap_report(pair, datasets, target, conds, scale, rng, bins=DEFAULT_BINS, value_range=None,
                    max_samples=GAP_MAX_SAMPLES):
    """
    Diagnostic de l'écart de pertes entre la cible et les environnements méta

    gap = |L_cible(theta) - moyenne_i L_i(theta)| avec la perte du
    discriminateur aux paramètres courants; tv_proxy est la variation
    totale entre les jeux méta réunis et la cible sur le gain par
    échantillon. Les deux valeurs sont rapportées côte à côte; aucune
    inégalité n'est vérifiée (theta n'est pas l'optimum et la variation
    totale empirique n'est qu'une approximation).

    Toutes les pertes utilisent le même bruit pour les sorties du
    générateur, de sorte que deux jeux identiques de même condition
    donnent exactement la même perte.

    Args:
        pair (GanPair): Paire courante
        datasets (list): M jeux méta
        target (WirelessDataset): Jeu cible
        conds (list): M + 1 conditions (la dernière est celle de la cible)
        scale (float): Échelle d'encodage
        rng (np.random.Generator): Flux aléatoire (bruit commun)
        bins (int): Classes de l'histogramme
        value_range (tuple, optional): Plage de l'histogramme (défaut: [0, 4 x gain maximal des jeux méta])
        max_samples (int): Échantillons évalués au plus par jeu

    Returns:
        dict: {gap, tv_proxy, target_loss, meta_losses, feature, bins, range}
    """
    if len(conds) != len(datasets) + 1:
        raise InvalidArgumentError(f"{len(datasets) + 1} conditions attendues, {len(conds)} reçues")
    for ds in [*datasets, target]:
        ds.require_nonempty()

    noise = sample_noise(rng, max_samples, pair.spec.noise_dim)

    def loss_on(dataset, cond):
        encoded = encode_sample(dataset.raw_samples()[:max_samples], scale)
        fake = generate(pair, noise[:encoded.shape[0]], cond)
        return disc_loss(pair, encoded, fake, cond)

    meta_losses = [loss_on(ds, cond) for ds, cond in zip(datasets, conds[:-1])]
    target_loss = loss_on(target, conds[-1])
    gap = abs(target_loss - float(np.mean(meta_losses)))

    if value_range is None:
        value_range = default_range(datasets)
    tv_proxy = tv_distance(pool(datasets), target, "path_gain_per_sample", bins, value_range)

    return {
        "gap": gap,
        "tv_proxy": tv_proxy,
        "target_loss": target_loss,
        "meta_losses": meta_losses,
        "feature": "path_gain_per_sample",
        "bins": bins,
        "range": list(value_range),
    }
