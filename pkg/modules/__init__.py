# -*- coding: utf-8 -*-

"""
Modules de génération de jeux de données de canaux sans fil

Ce paquet contient le modèle de canal, les réseaux, le CGAN, l'apprentissage
méta, l'estimateur de canal, les méthodes de référence et les mesures.
"""
