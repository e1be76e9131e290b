# -*- coding: utf-8 -*-

"""
Méthodes de référence: SMOTE et coût de génération
"""
