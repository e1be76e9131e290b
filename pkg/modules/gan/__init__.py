# -*- coding: utf-8 -*-

"""
Réseau antagoniste génératif conditionnel
"""
