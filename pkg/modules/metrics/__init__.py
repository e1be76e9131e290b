# -*- coding: utf-8 -*-

"""
Mesures de qualité des jeux de données
"""
