# -*- coding: utf-8 -*-

"""
Estimateur de canal par réseau de neurones
"""
