# -*- coding: utf-8 -*-

"""
Perceptrons multicouches et optimiseurs (numpy)
"""
