#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
Configuration et gestion de la journalisation pour WiDaC
"""

import os
import logging
from logging.handlers import RotatingFileHandler

VERBOSITY_LEVELS = (logging.WARNING, logging.INFO, logging.DEBUG)


def verbosity_to_level(verbosity):
    """
    Convertit le nombre d'options -v en niveau de journalisation

    Args:
        verbosity (int): 0 (WARNING), 1 (INFO), 2 ou plus (DEBUG)

    Returns:
        int: Niveau logging
    """
    return VERBOSITY_LEVELS[max(0, min(verbosity, len(VERBOSITY_LEVELS) - 1))]


def setup_logging(log_level=logging.INFO, log_file=None):
    """
    Configure la journalisation pour l'application

    Args:
        log_level (int): Niveau de journalisation (DEBUG, INFO, WARNING, ERROR, CRITICAL)
        log_file (str, optional): Chemin vers le fichier de log. Si None, ne journalise que dans la console.
    """
    formatter = logging.Formatter(
        "%(asctime)s [%(levelname)s] %(name)s - %(message)s",
        datefmt="%Y-%m-%d %H:%M:%S"
    )

    root_logger = logging.getLogger()
    root_logger.setLevel(log_level)

    # Supprime les gestionnaires existants pour éviter les doublons
    for handler in root_logger.handlers[:]:
        root_logger.removeHandler(handler)
        handler.close()

    console_handler = logging.StreamHandler()
    console_handler.setFormatter(formatter)
    console_handler.setLevel(log_level)
    root_logger.addHandler(console_handler)

    if log_file:
        try:
            os.makedirs(os.path.dirname(os.path.abspath(log_file)), exist_ok=True)

            file_handler = RotatingFileHandler(
                log_file,
                maxBytes=10485760,  # 10 Mo maximum
                backupCount=5,
                encoding="utf-8"
            )
            file_handler.setFormatter(formatter)
            file_handler.setLevel(log_level)
            root_logger.addHandler(file_handler)

            logging.info(f"Journalisation configurée dans le fichier: {log_file}")
        except OSError as e:
            logging.error(f"Impossible de configurer la journalisation dans le fichier {log_file}: {str(e)}")

    # Modules externes trop verbeux
    logging.getLogger("matplotlib").setLevel(logging.WARNING)
    logging.getLogger("numexpr").setLevel(logging.WARNING)


class RunLogger:
    """
    Journalisation d'une exécution, préfixée par l'identifiant d'exécution et l'étape en cours
    """

    def __init__(self, module_name, run_id=None, stage=None):
        """
        Initialise un logger d'exécution

        Args:
            module_name (str): Nom du module utilisant ce logger
            run_id (str, optional): Identifiant de l'exécution
            stage (str, optional): Étape du pipeline
        """
        self.logger = logging.getLogger(module_name)
        self.run_id = run_id
        self.stage = stage

    def for_stage(self, stage):
        """
        Même logger pour une autre étape

        Returns:
            RunLogger: Nouveau logger
        """
        return RunLogger(self.logger.name, run_id=self.run_id, stage=stage)

    def _format_message(self, message):
        prefix = ""

        if self.run_id:
            prefix += f"[Run: {self.run_id}] "

        if self.stage:
            prefix += f"[Stage: {self.stage}] "

        return f"{prefix}{message}"

    def debug(self, message):
        self.logger.debug(self._format_message(message))

    def info(self, message):
        self.logger.info(self._format_message(message))

    def warning(self, message):
        self.logger.warning(self._format_message(message))

    def error(self, message):
        self.logger.error(self._format_message(message))

    def critical(self, message):
        self.logger.critical(self._format_message(message))

    def metric(self, name, value, step=None):
        """
        Journalise une mesure de suivi d'entraînement

        Args:
            name (str): Nom de la mesure (perte, gain de trajet...)
            value: Valeur
            step (int, optional): Itération
        """
        where = f" @ {step}" if step is not None else ""
        self.logger.info(self._format_message(f"METRIC - {name}{where}: {value}"))
