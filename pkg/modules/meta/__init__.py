# -*- coding: utf-8 -*-

"""
Apprentissage méta du CGAN et ajustement fin
"""
