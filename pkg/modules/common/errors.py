#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
Hiérarchie des exceptions de widac-synth

Les modules de calcul lèvent ces exceptions; seul le script principal
les intercepte pour les journaliser et choisir le code de sortie.
"""


class WidacError(Exception):
    """
    Classe de base de toutes les erreurs de l'outil
    """


class InvalidArgumentError(WidacError, ValueError):
    """
    Argument hors du domaine de définition d'une opération
    """


class NumericError(WidacError, ArithmeticError):
    """
    Valeur non finie rencontrée pendant un calcul

    Attributes:
        index (int): Position de la première composante fautive (ou None)
    """

    def __init__(self, message, index=None):
        super().__init__(message if index is None else f"{message} (index {index})")
        self.index = index


class FormatError(WidacError):
    """
    Fichier dont l'en-tête (magic, version) n'est pas reconnu
    """

    def __init__(self, message, path=None):
        super().__init__(f"{path}: {message}" if path else message)
        self.path = path


class CorruptionError(WidacError):
    """
    Fichier tronqué ou incohérent avec son en-tête

    Attributes:
        path (str): Fichier concerné
        offset (int): Position en octets où la lecture a échoué
    """

    def __init__(self, message, path=None, offset=None):
        super().__init__(f"{path}: {message} (offset {offset})")
        self.path = path
        self.offset = offset


class ParseError(WidacError):
    """
    Ligne CSV illisible

    Attributes:
        path (str): Fichier concerné
        line (int): Numéro de ligne (à partir de 1)
    """

    def __init__(self, message, path=None, line=None):
        super().__init__(f"{path}:{line}: {message}")
        self.path = path
        self.line = line


class CompatibilityError(WidacError):
    """
    Point de contrôle produit pour une autre architecture
    """

    def __init__(self, message, expected=None, found=None):
        super().__init__(f"{message} (attendu {expected}, trouvé {found})")
        self.expected = expected
        self.found = found


class ConfigError(WidacError):
    """
    Configuration invalide

    Attributes:
        field_path (str): Chemin pointé du champ fautif (ex: "meta.alpha")
    """

    def __init__(self, message, field_path=None):
        super().__init__(f"{field_path}: {message}" if field_path else message)
        self.field_path = field_path


class StageError(WidacError):
    """
    Échec d'une étape du pipeline
    """

    def __init__(self, stage, message):
        super().__init__(f"étape {stage}: {message}")
        self.stage = stage


class DataLeakageError(WidacError):
    """
    Jeu d'entraînement qui recoupe le jeu de test
    """
