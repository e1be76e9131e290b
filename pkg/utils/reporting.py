#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
Génération des rapports d'une exécution

Ce module écrit les mesures (JSON), les tableaux de suivi et les courbes
de NMSE (CSV via pandas), et un rapport HTML récapitulatif.
"""

import io
import json
import logging
from pathlib import Path

import pandas as pd
from tabulate import tabulate

try:
    import jinja2
    JINJA2_AVAILABLE = True
except ImportError:
    JINJA2_AVAILABLE = False
    logging.warning("Le module jinja2 n'est pas disponible. Le rapport HTML ne sera pas généré.")

from utils.storage import atomic_write

TEMPLATE_DIR = Path(__file__).parent.parent / "templates"
HTML_TEMPLATE = "run_report.html"
MSE_COLUMNS = ["snr_db", "nmse", "dataset_label", "seed"]


def _json_bytes(document):
    return (json.dumps(document, sort_keys=True, indent=2, ensure_ascii=False) + "\n").encode("utf-8")


def mse_rows(curves, seed):
    """
    Lignes (snr_db, nmse, dataset_label, seed) des courbes de NMSE

    Args:
        curves (dict): {étiquette du jeu d'entraînement: MseCurve ou liste de (snr, nmse)}
        seed (int): Graine de l'exécution

    Returns:
        list: Dictionnaires dans l'ordre des étiquettes puis des SNR
    """
    rows = []
    for label, curve in curves.items():
        for snr_db, nmse in curve:
            rows.append({"snr_db": snr_db, "nmse": nmse, "dataset_label": label, "seed": int(seed)})
    return rows


def render_mse_table(curves):
    """
    Tableau console: une colonne par jeu d'entraînement, une ligne par SNR

    Returns:
        str: Tableau formaté
    """
    labels = list(curves)
    by_snr = {}
    for label in labels:
        for snr_db, nmse in curves[label]:
            by_snr.setdefault(snr_db, {})[label] = nmse
    rows = [[snr] + [f"{values.get(label, float('nan')):.4e}" for label in labels] for snr, values in by_snr.items()]
    return tabulate(rows, headers=["SNR (dB)"] + labels, tablefmt="github")


def render_gain_table(gains):
    """
    Tableau console des gains de trajet {nom: gain}
    """
    return tabulate([[name, f"{gain:.4f}"] for name, gain in gains.items()],
                    headers=["Jeu", "Gain de trajet"], tablefmt="github")


class ReportGenerator:
    """
    Classe pour l'écriture des résultats d'une exécution
    """

    def __init__(self, output_dir, run_id):
        """
        Initialise le générateur de rapports

        Args:
            output_dir (str): Répertoire de sortie de l'exécution
            run_id (str): Identifiant de l'exécution (clé des mesures)
        """
        self.output_dir = Path(output_dir)
        self.output_dir.mkdir(parents=True, exist_ok=True)
        self.report_dir = self.output_dir / "reports"
        self.run_id = run_id
        self.metrics = {}
        self.sections = []

        self.jinja_env = None
        if JINJA2_AVAILABLE and TEMPLATE_DIR.exists():
            self.jinja_env = jinja2.Environment(
                loader=jinja2.FileSystemLoader(str(TEMPLATE_DIR)),
                autoescape=jinja2.select_autoescape(['html', 'xml'])
            )

    def add_metrics(self, name, values):
        """
        Ajoute des mesures sous un nom (regroupées par identifiant d'exécution dans metrics.json)
        """
        self.metrics[name] = values
        self.sections.append({"title": name, "values": values})

    def write_metrics(self):
        path = self.output_dir / "metrics.json"
        atomic_write(path, [_json_bytes({self.run_id: self.metrics})])
        return path

    def write_json(self, filename, document):
        path = self.output_dir / filename
        atomic_write(path, [_json_bytes(document)])
        return path

    def write_table(self, filename, rows, columns=None):
        """
        Écrit une table CSV avec pandas

        Args:
            filename (str): Nom du fichier dans le répertoire de sortie
            rows (list): Dictionnaires, une ligne chacun
            columns (list, optional): Ordre des colonnes

        Returns:
            Path: Fichier écrit
        """
        frame = pd.DataFrame(rows, columns=columns)
        buffer = io.StringIO()
        frame.to_csv(buffer, index=False, lineterminator="\n")
        path = self.output_dir / filename
        atomic_write(path, [buffer.getvalue().encode("utf-8")])
        logging.debug(f"Table écrite: {path} ({len(frame)} lignes)")
        return path

    def write_mse_curves(self, curves, seed, filename="mse_curves.csv"):
        return self.write_table(filename, mse_rows(curves, seed), columns=MSE_COLUMNS)

    def generate_html(self, title, summary=None, tables=None):
        """
        Génère le rapport HTML de l'exécution

        Args:
            title (str): Titre
            summary (dict, optional): Valeurs clés affichées en tête
            tables (dict, optional): {titre: {"headers": [...], "rows": [[...], ...]}}

        Returns:
            Path: Rapport écrit, None si jinja2 ou le modèle manque
        """
        if self.jinja_env is None:
            logging.warning("Rapport HTML ignoré: jinja2 ou le modèle est indisponible")
            return None
        try:
            template = self.jinja_env.get_template(HTML_TEMPLATE)
        except jinja2.TemplateNotFound:
            logging.warning(f"Modèle {HTML_TEMPLATE} introuvable, rapport HTML ignoré")
            return None

        html_content = template.render(
            title=title,
            run_id=self.run_id,
            summary=summary or {},
            tables=tables or {},
            sections=[{"title": s["title"], "json": json.dumps(s["values"], indent=2, sort_keys=True)}
                      for s in self.sections],
        )
        self.report_dir.mkdir(exist_ok=True)
        path = self.report_dir / "run_report.html"
        atomic_write(path, [html_content.encode("utf-8")])
        logging.info(f"Rapport généré avec succès: {path}")
        return path
