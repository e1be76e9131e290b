#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
Utilitaires de hachage

Ce module calcule les empreintes SHA-256 utilisées partout dans l'outil:
provenance des jeux de données, compatibilité des points de contrôle,
manifeste de reproductibilité et vérification des sorties.
"""

import os
import json
import hashlib
import logging
from pathlib import Path
from concurrent.futures import ThreadPoolExecutor

import numpy as np


def calculate_file_hash(file_path, algorithms=None):
    """
    Calcule les hachages d'un fichier selon plusieurs algorithmes

    Args:
        file_path (str): Chemin vers le fichier à hacher
        algorithms (list, optional): Liste des algorithmes à utiliser
                                     Valeur par défaut: ['sha256']

    Returns:
        dict: Hachages par algorithme, plus la taille du fichier sous 'file_size'
    """
    if algorithms is None:
        algorithms = ['sha256']

    hash_objects = {}
    for algorithm in algorithms:
        if hasattr(hashlib, algorithm):
            hash_objects[algorithm] = getattr(hashlib, algorithm)()
        else:
            logging.warning(f"L'algorithme de hachage {algorithm} n'est pas disponible")

    # Lecture par blocs de 64k
    with open(file_path, 'rb') as f:
        while True:
            data = f.read(65536)
            if not data:
                break
            for hash_obj in hash_objects.values():
                hash_obj.update(data)

    result = {algorithm: hash_obj.hexdigest() for algorithm, hash_obj in hash_objects.items()}
    result['file_size'] = os.path.getsize(file_path)
    return result


def calculate_data_hash(data):
    """
    Calcule l'empreinte SHA-256 d'une donnée binaire

    Args:
        data (bytes): Données à hacher

    Returns:
        str: Empreinte hexadécimale
    """
    return hashlib.sha256(data).hexdigest()


def calculate_array_hash(array):
    """
    Empreinte d'un tableau numpy, indépendante de l'ordre mémoire de la machine

    Le type et la forme entrent dans l'empreinte: deux tableaux de mêmes
    octets mais de formes différentes ont des empreintes différentes.

    Args:
        array (np.ndarray): Tableau à hacher

    Returns:
        str: Empreinte hexadécimale
    """
    array = np.asarray(array)
    if array.dtype.kind == 'c':
        canonical = np.ascontiguousarray(array, dtype='<c16')
    elif array.dtype.kind == 'f':
        canonical = np.ascontiguousarray(array, dtype='<f8')
    else:
        canonical = np.ascontiguousarray(array, dtype='<i8')

    hash_obj = hashlib.sha256()
    hash_obj.update(f"{canonical.dtype.str}{canonical.shape}".encode('ascii'))
    hash_obj.update(canonical.tobytes())
    return hash_obj.hexdigest()


def calculate_json_hash(document):
    """
    Empreinte d'un document JSON sous forme canonique (clés triées, séparateurs compacts)

    Args:
        document: Objet sérialisable en JSON

    Returns:
        str: Empreinte hexadécimale
    """
    return calculate_data_hash(canonical_json(document))


def canonical_json(document):
    """
    Sérialise un document JSON de façon déterministe

    Returns:
        bytes: Document encodé en UTF-8
    """
    return json.dumps(document, sort_keys=True, separators=(',', ':'), ensure_ascii=False).encode('utf-8')


def batch_calculate_hashes(paths, base_dir=None):
    """
    Calcule les empreintes d'un ensemble de fichiers en parallèle

    Args:
        paths (list): Fichiers à hacher
        base_dir (str, optional): Répertoire de référence pour les chemins relatifs des clés

    Returns:
        dict: {chemin relatif: {'sha256': ..., 'file_size': ...}} trié par chemin
    """
    paths = [Path(p) for p in paths]
    base = Path(base_dir) if base_dir else None

    def process_file(file_path):
        key = file_path.relative_to(base).as_posix() if base else file_path.as_posix()
        return key, calculate_file_hash(str(file_path))

    with ThreadPoolExecutor() as executor:
        results = list(executor.map(process_file, paths))

    return dict(sorted(results))
