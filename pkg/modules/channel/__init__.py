# -*- coding: utf-8 -*-

"""
Modèle de canal géométrique à trajets multiples
"""
