#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
Flux pseudo-aléatoires dérivés

Chaque étape stochastique tire ses nombres d'un numpy.random.Generator
dérivé de la graine de l'exécution par une clé (étape, indice...). Deux
clés différentes donnent des flux indépendants, et le résultat ne dépend
pas de l'ordre dans lequel les flux sont créés.
"""

import hashlib

import numpy as np

from modules.common.errors import InvalidArgumentError

SEED_MASK = (1 << 64) - 1


def _key_word(key):
    if isinstance(key, (int, np.integer)):
        if key < 0:
            raise InvalidArgumentError(f"clé de flux négative: {key}")
        return int(key)
    # Les noms d'étape sont réduits à un entier stable sur 32 bits
    return int.from_bytes(hashlib.sha256(str(key).encode("utf-8")).digest()[:4], "little")


def derive_rng(seed, *keys):
    """
    Crée un générateur déterministe pour (graine, clés)

    Args:
        seed (int): Graine 64 bits non signée
        *keys: Suite de clés entières ou textuelles

    Returns:
        np.random.Generator: Générateur PCG64
    """
    seed = int(seed)
    if seed < 0 or seed > SEED_MASK:
        raise InvalidArgumentError(f"graine hors de [0, 2^64): {seed}")
    sequence = np.random.SeedSequence(seed, spawn_key=tuple(_key_word(k) for k in keys))
    return np.random.Generator(np.random.PCG64(sequence))


def derive_seed(seed, *keys):
    """
    Dérive une graine 64 bits enfant, pour les configurations qui stockent une graine

    Returns:
        int: Graine dérivée
    """
    sequence = np.random.SeedSequence(int(seed), spawn_key=tuple(_key_word(k) for k in keys))
    return int(sequence.generate_state(1, dtype=np.uint64)[0])
