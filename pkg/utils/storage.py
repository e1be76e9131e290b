#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
Persistance des jeux de données et des paramètres

Formats binaires little-endian à largeur fixe:

WDC1 (jeu de données)
    magic "WDC1" | version u16 | nt u32 | sample_count u64 |
    condition_index u32 | scale f64 | metadata_length u32      (34 octets)
    métadonnées JSON UTF-8 (clés triées, séparateurs compacts)
    corps: sample_count * nt couples (Re, Im) en float64

WCK1 (point de contrôle)
    magic "WCK1" | version u16 | empreinte SHA-256 brute (32 octets) |
    nombre de paramètres u64                                   (46 octets)
    corps: paramètres en float64

Toutes les écritures passent par un fichier temporaire du répertoire de
destination renommé avec os.replace: un échec ne laisse aucun fichier partiel.
"""

import os
import csv
import json
import struct
import logging
import tempfile
from pathlib import Path

import numpy as np

from modules.common.dataset import WirelessDataset
from modules.common.errors import (
    InvalidArgumentError, FormatError, CorruptionError, ParseError, CompatibilityError,
)
from modules.estimator.estimator import EstimatorNet, PilotConfig
from modules.gan.cgan import GanSpec, GanPair
from modules.nn.network import MlpSpec
from modules.nn.optim import OptimizerState
from utils.hashing import canonical_json

logger = logging.getLogger(__name__)

DATASET_MAGIC = b"WDC1"
DATASET_VERSION = 1
DATASET_HEADER = struct.Struct("<4sHIQIdI")

CHECKPOINT_MAGIC = b"WCK1"
CHECKPOINT_VERSION = 1
CHECKPOINT_HEADER = struct.Struct("<4sH32sQ")

GAN_SPEC_FILE = "gan_spec.json"
GENERATOR_FILE = "generator.wck"
DISCRIMINATOR_FILE = "discriminator.wck"
ESTIMATOR_SPEC_FILE = "estimator.json"
ESTIMATOR_FILE = "estimator.wck"


def _check_path(path):
    if path is None or str(path) == "":
        raise FileNotFoundError("chemin vide")
    return Path(path)


def atomic_write(path, chunks):
    """
    Écrit des blocs d'octets dans un fichier de façon atomique

    Args:
        path: Fichier de destination (son répertoire doit exister)
        chunks: Suite de blocs bytes
    """
    path = _check_path(path)
    fd, tmp_name = tempfile.mkstemp(prefix=f".{path.name}.", suffix=".tmp", dir=path.parent)
    try:
        with os.fdopen(fd, "wb") as handle:
            for chunk in chunks:
                handle.write(chunk)
            handle.flush()
            os.fsync(handle.fileno())
        os.replace(tmp_name, path)
    except BaseException:
        if os.path.exists(tmp_name):
            os.unlink(tmp_name)
        raise


def save_dataset(dataset, path):
    """
    Enregistre un jeu de données au format WDC1

    Args:
        dataset (WirelessDataset): Jeu à enregistrer
        path: Fichier de destination
    """
    metadata = canonical_json(dataset.meta)
    header = DATASET_HEADER.pack(
        DATASET_MAGIC, DATASET_VERSION, dataset.nt, len(dataset),
        dataset.condition_index, dataset.scale, len(metadata),
    )
    body = np.ascontiguousarray(dataset.samples, dtype="<c16").tobytes()
    atomic_write(path, [header, metadata, body])
    logger.debug(f"Jeu de données enregistré: {path} ({len(dataset)} échantillons)")


def load_dataset(path):
    """
    Charge un jeu de données WDC1

    Args:
        path: Fichier source

    Returns:
        WirelessDataset: Jeu identique bit à bit à celui enregistré

    Raises:
        FormatError: Magic ou version inattendus
        CorruptionError: Fichier tronqué ou de longueur incohérente (offset de l'anomalie)
    """
    path = _check_path(path)
    data = path.read_bytes()

    if data[:4] != DATASET_MAGIC:
        raise FormatError(f"signature inattendue {data[:4]!r}, {DATASET_MAGIC!r} attendue", path=str(path))
    if len(data) < DATASET_HEADER.size:
        raise CorruptionError("en-tête tronqué", path=str(path), offset=len(data))

    _, version, nt, count, index, scale, meta_len = DATASET_HEADER.unpack_from(data)
    if version != DATASET_VERSION:
        raise FormatError(f"version {version} non prise en charge", path=str(path))

    meta_end = DATASET_HEADER.size + meta_len
    if len(data) < meta_end:
        raise CorruptionError("métadonnées tronquées", path=str(path), offset=len(data))
    try:
        meta = json.loads(data[DATASET_HEADER.size:meta_end].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise CorruptionError(f"métadonnées illisibles: {e}", path=str(path), offset=DATASET_HEADER.size)

    body_end = meta_end + count * nt * 16
    if len(data) < body_end:
        raise CorruptionError(
            f"corps tronqué: {len(data) - meta_end} octets sur {body_end - meta_end}",
            path=str(path), offset=len(data),
        )
    if len(data) > body_end:
        raise CorruptionError("octets en trop après le corps", path=str(path), offset=body_end)

    samples = np.frombuffer(data, dtype="<c16", count=count * nt, offset=meta_end)
    return WirelessDataset(
        nt=nt,
        samples=samples.astype(np.complex128).reshape(count, nt),
        condition_index=index,
        scale=scale,
        meta=meta,
    )


def import_csv(path, nt, condition_index=0):
    """
    Importe des canaux mesurés depuis un CSV (une ligne par canal, Re et Im entrelacés)

    Args:
        path: Fichier CSV
        nt (int): Nombre d'antennes (2 nt champs par ligne)
        condition_index (int): Indice de l'environnement

    Returns:
        WirelessDataset: Jeu importé (échelle 1.0, provenance 'imported')

    Raises:
        ParseError: Ligne de mauvaise arité ou champ non numérique (numéro de ligne)
        InvalidArgumentError: Aucun échantillon
    """
    path = _check_path(path)
    rows = []
    with open(path, newline="", encoding="utf-8") as handle:
        reader = csv.reader(handle)
        for row in reader:
            if not row or all(not field.strip() for field in row):
                continue
            if len(row) != 2 * nt:
                raise ParseError(
                    f"{len(row)} champs, {2 * nt} attendus", path=str(path), line=reader.line_num,
                )
            try:
                values = [float(field) for field in row]
            except ValueError as e:
                raise ParseError(f"champ non numérique: {e}", path=str(path), line=reader.line_num)
            if not np.all(np.isfinite(values)):
                raise ParseError("champ non fini", path=str(path), line=reader.line_num)
            rows.append(values)

    if not rows:
        raise InvalidArgumentError(f"aucun échantillon dans {path}")

    encoded = np.asarray(rows, dtype=np.float64)
    samples = np.empty((encoded.shape[0], nt), dtype=np.complex128)
    samples.real = encoded[:, 0::2]
    samples.imag = encoded[:, 1::2]
    logger.info(f"{len(rows)} canaux importés depuis {path}")
    return WirelessDataset(
        nt=nt,
        samples=samples,
        condition_index=condition_index,
        scale=1.0,
        meta={"source": "imported", "path": path.name},
    )


def export_csv(dataset, path):
    """
    Exporte les canaux (unités physiques) en CSV avec des réels exacts (repr)
    """
    raw = dataset.raw_samples()
    lines = []
    for h in raw:
        fields = []
        for value in h:
            fields.append(repr(float(value.real)))
            fields.append(repr(float(value.imag)))
        lines.append(",".join(fields) + "\n")
    atomic_write(path, [("".join(lines)).encode("utf-8")])


def save_checkpoint(spec_digest, params, path):
    """
    Enregistre un vecteur de paramètres au format WCK1

    Args:
        spec_digest (str): Empreinte SHA-256 hexadécimale de l'architecture
        params (np.ndarray): Paramètres float64
        path: Fichier de destination
    """
    digest = bytes.fromhex(spec_digest)
    if len(digest) != 32:
        raise InvalidArgumentError("empreinte d'architecture de 32 octets attendue")
    params = np.ascontiguousarray(params, dtype="<f8")
    header = CHECKPOINT_HEADER.pack(CHECKPOINT_MAGIC, CHECKPOINT_VERSION, digest, params.shape[0])
    atomic_write(path, [header, params.tobytes()])


def load_checkpoint(path, expected_digest=None):
    """
    Charge un point de contrôle WCK1

    Args:
        path: Fichier source
        expected_digest (str, optional): Empreinte d'architecture attendue

    Returns:
        tuple: (empreinte hexadécimale, paramètres float64)

    Raises:
        FormatError: Magic ou version inattendus
        CorruptionError: Fichier tronqué
        CompatibilityError: Empreinte différente de celle attendue
    """
    path = _check_path(path)
    data = path.read_bytes()
    if data[:4] != CHECKPOINT_MAGIC:
        raise FormatError(f"signature inattendue {data[:4]!r}, {CHECKPOINT_MAGIC!r} attendue", path=str(path))
    if len(data) < CHECKPOINT_HEADER.size:
        raise CorruptionError("en-tête tronqué", path=str(path), offset=len(data))

    _, version, digest, count = CHECKPOINT_HEADER.unpack_from(data)
    if version != CHECKPOINT_VERSION:
        raise FormatError(f"version {version} non prise en charge", path=str(path))
    body_end = CHECKPOINT_HEADER.size + 8 * count
    if len(data) != body_end:
        raise CorruptionError(
            f"corps de {len(data) - CHECKPOINT_HEADER.size} octets, {8 * count} attendus",
            path=str(path), offset=min(len(data), body_end),
        )
    if expected_digest is not None and digest.hex() != expected_digest:
        raise CompatibilityError(
            f"point de contrôle incompatible avec l'architecture: {path}",
            expected=expected_digest, found=digest.hex(),
        )
    params = np.frombuffer(data, dtype="<f8", count=count, offset=CHECKPOINT_HEADER.size)
    return digest.hex(), params.astype(np.float64)


def save_gan(pair, directory, extra=None):
    """
    Enregistre une paire CGAN dans un répertoire (câblage JSON et deux points de contrôle)

    Args:
        pair (GanPair): Paire à enregistrer
        directory: Répertoire de destination (créé si besoin)
        extra (dict, optional): Informations jointes au câblage (échelle d'encodage, environnements)
    """
    directory = _check_path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    document = {"spec": pair.spec.to_dict(), "optimizer": pair.gen_opt.to_dict(), "extra": extra or {}}
    atomic_write(directory / GAN_SPEC_FILE, [json.dumps(document, sort_keys=True, indent=2).encode("utf-8")])
    save_checkpoint(pair.spec.gen_spec.digest(), pair.gen_params, directory / GENERATOR_FILE)
    save_checkpoint(pair.spec.disc_spec.digest(), pair.disc_params, directory / DISCRIMINATOR_FILE)
    logger.info(f"CGAN enregistré dans {directory}")


def load_gan(directory):
    """
    Charge une paire CGAN enregistrée par save_gan

    Les moments des optimiseurs ne sont pas conservés: la paire repart
    avec des optimiseurs Adam neufs de même réglage.

    Returns:
        tuple: (GanPair, informations jointes)

    Raises:
        CompatibilityError: Point de contrôle d'une autre architecture
    """
    directory = _check_path(directory)
    try:
        document = json.loads((directory / GAN_SPEC_FILE).read_text(encoding="utf-8"))
        spec = GanSpec.from_dict(document["spec"])
    except (json.JSONDecodeError, KeyError, TypeError) as e:
        raise FormatError(f"câblage illisible: {e}", path=str(directory / GAN_SPEC_FILE))

    _, gen_params = load_checkpoint(directory / GENERATOR_FILE, spec.gen_spec.digest())
    _, disc_params = load_checkpoint(directory / DISCRIMINATOR_FILE, spec.disc_spec.digest())
    opt = document.get("optimizer", {})
    settings = {key: opt[key] for key in ("lr", "beta1", "beta2", "eps") if key in opt}
    pair = GanPair(
        spec=spec,
        gen_params=gen_params,
        disc_params=disc_params,
        gen_opt=OptimizerState.adam(gen_params.shape[0], **settings),
        disc_opt=OptimizerState.adam(disc_params.shape[0], **settings),
    )
    return pair, document.get("extra", {})


def save_estimator(net, pilot_cfg, directory):
    """
    Enregistre un estimateur entraîné (description JSON et point de contrôle)

    Args:
        net (EstimatorNet): Estimateur
        pilot_cfg (PilotConfig): Sondage pilote utilisé à l'entraînement
        directory: Répertoire de destination (créé si besoin)
    """
    directory = _check_path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    document = {
        "spec": net.spec.to_dict(),
        "norm": net.norm,
        "hyper": net.hyper,
        "history": net.history,
        "pilots": pilot_cfg.to_dict(),
    }
    atomic_write(directory / ESTIMATOR_SPEC_FILE, [json.dumps(document, sort_keys=True, indent=2).encode("utf-8")])
    save_checkpoint(net.spec.digest(), net.params, directory / ESTIMATOR_FILE)
    logger.info(f"Estimateur enregistré dans {directory}")


def load_estimator(directory):
    """
    Charge un estimateur enregistré par save_estimator

    Returns:
        tuple: (EstimatorNet, PilotConfig)
    """
    directory = _check_path(directory)
    try:
        document = json.loads((directory / ESTIMATOR_SPEC_FILE).read_text(encoding="utf-8"))
        spec = MlpSpec.from_dict(document["spec"])
        pilots = document["pilots"]
        pilot_cfg = PilotConfig.dft(
            pilots["nt"], pilots["num_pilots"], pilots["snr_grid_db"], pilots["reference_power"], pilots["seed"],
        )
    except (json.JSONDecodeError, KeyError, TypeError) as e:
        raise FormatError(f"description d'estimateur illisible: {e}", path=str(directory / ESTIMATOR_SPEC_FILE))

    _, params = load_checkpoint(directory / ESTIMATOR_FILE, spec.digest())
    net = EstimatorNet(
        spec=spec, params=params, norm=document["norm"],
        hyper=document.get("hyper", {}), history=document.get("history", []),
    )
    return net, pilot_cfg
