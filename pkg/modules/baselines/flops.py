#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
Comptage des opérations flottantes nécessaires pour produire un canal

Une seule convention pour toutes les méthodes; elle est rappelée dans
chaque rapport.
"""

import math
from dataclasses import dataclass, field

from tabulate import tabulate

from modules.common.errors import InvalidArgumentError

GENERATOR_CONVENTION = (
    "par couche: 2*entrée*sortie (multiplication-accumulation = 2 flops) "
    "+ sortie (biais) + sortie (activation)"
)
SMOTE_CONVENTION = (
    "par échantillon: n*(2*dim + 1) (distances) + k*ceil(log2 n) (tri partiel) "
    "+ 3*dim (interpolation)"
)


@dataclass(frozen=True)
class FlopsReport:
    """
    Coût de génération d'un échantillon

    Attributes:
        method (str): Nom de la méthode
        flops (int): Opérations flottantes par échantillon (> 0)
        convention (str): Règle de comptage
        assumptions (dict): Paramètres du calcul (n, dim, k, câblage)
    """

    method: str
    flops: int
    convention: str
    assumptions: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.flops <= 0:
            raise InvalidArgumentError(f"nombre de flops doit être > 0 (reçu {self.flops})")

    def to_dict(self):
        return {
            "method": self.method,
            "flops_per_sample": self.flops,
            "convention": self.convention,
            "assumptions": self.assumptions,
        }


def flops_generator(spec, method="cgan"):
    """
    Coût d'une passe avant du générateur

    Args:
        spec (MlpSpec): Câblage du générateur

    Returns:
        FlopsReport: Rapport
    """
    total = sum(2 * fan_in * fan_out + 2 * fan_out for fan_in, fan_out in spec.layer_shapes())
    return FlopsReport(
        method=method,
        flops=int(total),
        convention=GENERATOR_CONVENTION,
        assumptions={"layer_widths": list(spec.layer_widths)},
    )


def flops_smote(n_dataset, dim, k):
    """
    Coût de SMOTE par échantillon avec recherche exacte des voisins

    Args:
        n_dataset (int): Taille du jeu de base
        dim (int): Dimension réelle d'un échantillon
        k (int): Nombre de voisins

    Returns:
        FlopsReport: Rapport

    Raises:
        InvalidArgumentError: Paramètre non positif
    """
    if n_dataset < 1 or dim < 1 or k < 1:
        raise InvalidArgumentError("n_dataset, dim et k doivent être >= 1")
    selection = k * math.ceil(math.log2(n_dataset))
    total = n_dataset * (2 * dim + 1) + selection + 3 * dim
    return FlopsReport(
        method="smote",
        flops=int(total),
        convention=SMOTE_CONVENTION,
        assumptions={"n_dataset": n_dataset, "dim": dim, "k": k},
    )


def flops_rows(reports):
    return [{"method": r.method, "flops_per_sample": r.flops, "convention": r.convention} for r in reports]


def render_flops_table(reports):
    """
    Tableau console des coûts de génération

    Returns:
        str: Tableau formaté
    """
    rows = [[r.method, f"{r.flops:,}"] for r in reports]
    return tabulate(rows, headers=["Méthode", "Flops / échantillon"], tablefmt="github", colalign=("left", "right"))
