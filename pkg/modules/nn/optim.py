#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
Optimiseurs (descente de gradient simple et Adam)

Les états sont des valeurs immuables: optimizer_step retourne de nouveaux
paramètres et un nouvel état sans modifier ses entrées.
"""

from dataclasses import dataclass, replace

import numpy as np

from modules.common.errors import InvalidArgumentError, NumericError

KINDS = ("sgd", "adam")


@dataclass(frozen=True, eq=False)
class OptimizerState:
    """
    État d'un optimiseur

    Attributes:
        kind (str): 'sgd' ou 'adam'
        lr (float): Pas d'apprentissage
        beta1 (float): Décroissance du premier moment (adam)
        beta2 (float): Décroissance du second moment (adam)
        eps (float): Terme de stabilité (adam)
        m (np.ndarray): Premier moment (adam), None pour sgd
        v (np.ndarray): Second moment (adam), None pour sgd
        step (int): Nombre de pas effectués
    """

    kind: str = "sgd"
    lr: float = 0.01
    beta1: float = 0.5
    beta2: float = 0.999
    eps: float = 1e-8
    m: np.ndarray = None
    v: np.ndarray = None
    step: int = 0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InvalidArgumentError(f"optimiseur inconnu: {self.kind}")
        if self.lr < 0:
            raise InvalidArgumentError(f"pas d'apprentissage négatif: {self.lr}")
        if self.step < 0:
            raise InvalidArgumentError(f"compteur de pas négatif: {self.step}")

    @classmethod
    def sgd(cls, lr):
        return cls(kind="sgd", lr=float(lr))

    @classmethod
    def adam(cls, size, lr=2e-4, beta1=0.5, beta2=0.999, eps=1e-8):
        """
        Crée un état Adam aux moments nuls pour un vecteur de taille donnée
        """
        return cls(
            kind="adam", lr=float(lr), beta1=beta1, beta2=beta2, eps=eps,
            m=np.zeros(size, dtype=np.float64), v=np.zeros(size, dtype=np.float64), step=0,
        )

    def reset(self):
        """
        Même réglage, moments et compteur remis à zéro
        """
        if self.kind == "sgd":
            return replace(self, step=0)
        return replace(self, m=np.zeros_like(self.m), v=np.zeros_like(self.v), step=0)

    def to_dict(self):
        return {"kind": self.kind, "lr": self.lr, "beta1": self.beta1, "beta2": self.beta2, "eps": self.eps}


def optimizer_step(state, params, grads):
    """
    Applique un pas d'optimisation

    Args:
        state (OptimizerState): État courant
        params (np.ndarray): Paramètres
        grads (np.ndarray): Gradients, même longueur

    Returns:
        tuple: (nouveaux paramètres, nouvel état)

    Raises:
        InvalidArgumentError: Longueurs incohérentes
        NumericError: Gradient non fini (index de la première composante fautive)
    """
    params = np.asarray(params, dtype=np.float64)
    grads = np.asarray(grads, dtype=np.float64)
    if params.shape != grads.shape:
        raise InvalidArgumentError(f"paramètres {params.shape} et gradients {grads.shape} incompatibles")

    finite = np.isfinite(grads)
    if not finite.all():
        raise NumericError("gradient non fini", index=int(np.argmin(finite)))

    if state.kind == "sgd":
        return params - state.lr * grads, replace(state, step=state.step + 1)

    if state.m is None or state.m.shape != params.shape:
        raise InvalidArgumentError("moments Adam de taille incompatible avec les paramètres")

    step = state.step + 1
    m = state.beta1 * state.m + (1.0 - state.beta1) * grads
    v = state.beta2 * state.v + (1.0 - state.beta2) * grads ** 2
    m_hat = m / (1.0 - state.beta1 ** step)
    v_hat = v / (1.0 - state.beta2 ** step)
    new_params = params - state.lr * m_hat / (np.sqrt(v_hat) + state.eps)
    return new_params, replace(state, m=m, v=v, step=step)
