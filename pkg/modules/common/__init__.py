# -*- coding: utf-8 -*-

"""
Module commun pour les fonctionnalités partagées

Ce module contient le jeu de données, les erreurs et les flux aléatoires
utilisés par les autres modules.
"""
