# -*- coding: utf-8 -*-

"""
Utilitaires pour WiDaC

Ce paquet contient la configuration, la journalisation, le stockage,
les empreintes, le manifeste et les rapports.
"""
