#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
Traçabilité des exécutions

- RunManifest: manifeste déterministe (aucune date) qui suffit à reproduire
  une exécution octet pour octet: version de l'outil, versions de Python
  et numpy, configuration résolue, graine, sorties de chaque étape avec
  leurs empreintes SHA-256.
- RunJournal: journal d'audit de l'exécution (dates, opérateur, machine,
  événements des étapes), non déterministe par nature.
- verify_manifest: recalcule les empreintes des sorties d'un manifeste.
"""

import json
import getpass
import logging
import datetime
import platform
from pathlib import Path

import numpy as np

try:
    import psutil
    PSUTIL_AVAILABLE = True
except ImportError:
    PSUTIL_AVAILABLE = False

from utils.hashing import calculate_file_hash, batch_calculate_hashes, calculate_json_hash
from utils.storage import atomic_write

MANIFEST_FILE = "manifest.json"
JOURNAL_FILE = "run_journal.json"


def _dump(document):
    return (json.dumps(document, sort_keys=True, indent=2, ensure_ascii=False) + "\n").encode("utf-8")


class RunManifest:
    """
    Manifeste déterministe d'une exécution
    """

    def __init__(self, output_dir, config, subcommand, tool_version):
        """
        Reprend les étapes d'un manifeste existant du même répertoire s'il
        porte la même configuration, pour que des sous-commandes lancées
        séparément forment un seul manifeste.

        Args:
            output_dir (str): Répertoire de sortie de l'exécution
            config (dict): Configuration résolue
            subcommand (str): Sous-commande exécutée
            tool_version (str): Version de l'outil
        """
        self.output_dir = Path(output_dir)
        self.manifest_file = self.output_dir / MANIFEST_FILE
        self.document = {
            "tool": "widac",
            "tool_version": tool_version,
            "python_version": platform.python_version(),
            "numpy_version": np.__version__,
            "subcommands": [subcommand],
            "config": config,
            "config_digest": calculate_json_hash(config),
            "seed": config["run"]["seed"],
            "stages": {},
        }
        self._resume()

    def _resume(self):
        if not self.manifest_file.is_file():
            return
        try:
            previous = json.loads(self.manifest_file.read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError):
            logging.warning(f"Manifeste existant illisible, remplacé: {self.manifest_file}")
            return
        if previous.get("config_digest") != self.config_digest:
            logging.warning(f"Manifeste d'une autre configuration remplacé: {self.manifest_file}")
            return
        self.document["stages"] = previous.get("stages", {})
        self.document["subcommands"] = sorted(set(previous.get("subcommands", [])) | set(self.document["subcommands"]))

    @property
    def config_digest(self):
        return self.document["config_digest"]

    def _stage(self, stage):
        return self.document["stages"].setdefault(stage, {"outputs": {}, "summary": {}})

    def add_output(self, stage, path):
        """
        Enregistre une sortie d'étape avec son empreinte

        Args:
            stage (str): Nom de l'étape
            path: Fichier produit (dans le répertoire de sortie)

        Returns:
            str: Empreinte SHA-256
        """
        path = Path(path).resolve()
        try:
            key = path.relative_to(self.output_dir.resolve()).as_posix()
        except ValueError:
            key = path.as_posix()
        hashes = calculate_file_hash(str(path))
        self._stage(stage)["outputs"][key] = hashes
        return hashes["sha256"]

    def add_summary(self, stage, **values):
        """
        Ajoute des valeurs déterministes au résumé d'une étape (seeds, empreintes, comptes)
        """
        self._stage(stage)["summary"].update(values)

    def outputs(self):
        """
        Returns:
            dict: {chemin relatif: empreintes} de toutes les étapes
        """
        merged = {}
        for stage in self.document["stages"].values():
            merged.update(stage["outputs"])
        return merged

    def save(self):
        self.output_dir.mkdir(parents=True, exist_ok=True)
        atomic_write(self.manifest_file, [_dump(self.document)])
        logging.info(f"Manifeste enregistré: {self.manifest_file}")
        return self.manifest_file


def verify_manifest(manifest_path):
    """
    Recalcule les empreintes des sorties listées dans un manifeste

    Args:
        manifest_path (str): Chemin du manifest.json

    Returns:
        list: Anomalies (chemin relatif, raison); vide si tout correspond
    """
    manifest_path = Path(manifest_path)
    document = json.loads(manifest_path.read_text(encoding="utf-8"))
    base = manifest_path.parent

    expected = {}
    for stage in document.get("stages", {}).values():
        expected.update(stage.get("outputs", {}))

    present = {key: base / key for key in expected if (base / key).is_file()}
    by_path = batch_calculate_hashes(present.values())
    actual = {key: by_path[path.as_posix()] for key, path in present.items()}

    problems = []
    for key, hashes in sorted(expected.items()):
        if key not in actual:
            problems.append((key, "absent"))
        elif actual[key]["sha256"] != hashes["sha256"]:
            problems.append((key, "empreinte différente"))
    for key, reason in problems:
        logging.warning(f"Vérification échouée pour {key}: {reason}")
    if not problems:
        logging.info(f"{len(expected)} sorties vérifiées pour {manifest_path}")
    return problems


class RunJournal:
    """
    Journal d'audit d'une exécution
    """

    def __init__(self, run_id, output_dir):
        """
        Initialise le journal

        Args:
            run_id (str): Identifiant de l'exécution
            output_dir (str): Répertoire de sortie
        """
        self.run_id = run_id
        self.output_dir = Path(output_dir)
        self.journal_file = self.output_dir / JOURNAL_FILE
        self.start_time = datetime.datetime.now()
        self.end_time = None
        self.operator = self._get_operator()
        self.system_info = self._get_system_info()
        self.journal_data = None

    @staticmethod
    def _get_operator():
        try:
            return getpass.getuser()
        except (KeyError, OSError):
            return "inconnu"

    def _get_system_info(self):
        """
        Collecte des informations sur la machine d'exécution

        Returns:
            dict: Informations sur le système
        """
        info = {
            "hostname": platform.node(),
            "platform": platform.system(),
            "platform_release": platform.release(),
            "architecture": platform.machine(),
            "processor": platform.processor(),
            "python_version": platform.python_version(),
            "numpy_version": np.__version__,
        }
        if PSUTIL_AVAILABLE:
            info["cpu_count"] = psutil.cpu_count(logical=True)
            info["memory_total"] = psutil.virtual_memory().total
        return info

    def start(self, subcommand, config_digest):
        """
        Ouvre le journal d'une exécution
        """
        self.journal_data = {
            "run_id": self.run_id,
            "subcommand": subcommand,
            "config_digest": config_digest,
            "start_time": self.start_time.isoformat(),
            "operator": self.operator,
            "system": self.system_info,
            "audit_log": [self._create_audit_entry("Run started")],
        }
        self._save()
        logging.info(f"Journal d'exécution ouvert pour {self.run_id}")

    def record(self, action, **details):
        """
        Ajoute un événement au journal (début ou fin d'étape, sortie écrite...)

        Args:
            action (str): Événement
            **details: Détails sérialisables en JSON
        """
        entry = self._create_audit_entry(action)
        if details:
            entry["details"] = details
        self.journal_data["audit_log"].append(entry)
        self._save()

    def finalize(self, status="success"):
        """
        Clôt le journal avec l'état final de l'exécution
        """
        self.end_time = datetime.datetime.now()
        self.journal_data["end_time"] = self.end_time.isoformat()
        self.journal_data["status"] = status
        self.journal_data["duration_seconds"] = (self.end_time - self.start_time).total_seconds()
        self.journal_data["audit_log"].append(self._create_audit_entry(f"Run finalized ({status})"))
        self._save()
        logging.info(f"Exécution {self.run_id} terminée: {status}")

    def _create_audit_entry(self, action):
        return {
            "timestamp": datetime.datetime.now().isoformat(),
            "action": action,
            "user": self.operator,
            "hostname": self.system_info["hostname"],
        }

    def _save(self):
        try:
            self.output_dir.mkdir(parents=True, exist_ok=True)
            atomic_write(self.journal_file, [_dump(self.journal_data)])
        except OSError as e:
            logging.error(f"Erreur lors de l'enregistrement du journal d'exécution: {str(e)}")
