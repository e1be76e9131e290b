#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
Réseaux denses minimalistes

Ce module fournit le noyau numérique sur lequel reposent le CGAN,
l'apprentissage méta et l'estimateur de canal: description d'architecture,
vecteur plat de paramètres, propagation avant et gradients exacts en mode
inverse.

Disposition canonique d'un vecteur de paramètres (float64), couche par
couche, de l'entrée vers la sortie:

    W_k : matrice (out_k, in_k) en ordre ligne (row-major), y = W_k x + b_k
    b_k : vecteur (out_k,)

Longueur totale: somme sur les couches de in_k * out_k + out_k. Cette
disposition est celle des points de contrôle WCK1, portable d'une
implémentation à l'autre.
"""

import math
from dataclasses import dataclass, asdict

import numpy as np

from modules.common.errors import InvalidArgumentError
from utils.hashing import calculate_json_hash

HIDDEN_ACTIVATIONS = ("relu", "leaky_relu")
OUTPUT_ACTIVATIONS = ("linear", "sigmoid")


@dataclass(frozen=True)
class MlpSpec:
    """
    Architecture d'un perceptron multicouche

    Attributes:
        layer_widths (tuple): Largeurs (entrée, couches cachées..., sortie)
        hidden_activation (str): 'relu' ou 'leaky_relu'
        output_activation (str): 'linear' ou 'sigmoid'
        leaky_slope (float): Pente négative de leaky_relu, dans (0, 1)
    """

    layer_widths: tuple
    hidden_activation: str = "relu"
    output_activation: str = "linear"
    leaky_slope: float = 0.2

    def __post_init__(self):
        widths = tuple(int(w) for w in self.layer_widths)
        object.__setattr__(self, "layer_widths", widths)
        if len(widths) < 2:
            raise InvalidArgumentError(f"au moins deux largeurs requises (reçu {widths})")
        if min(widths) < 1:
            raise InvalidArgumentError(f"toutes les largeurs doivent être >= 1 (reçu {widths})")
        if self.hidden_activation not in HIDDEN_ACTIVATIONS:
            raise InvalidArgumentError(f"activation cachée inconnue: {self.hidden_activation}")
        if self.output_activation not in OUTPUT_ACTIVATIONS:
            raise InvalidArgumentError(f"activation de sortie inconnue: {self.output_activation}")
        if self.hidden_activation == "leaky_relu" and not 0.0 < self.leaky_slope < 1.0:
            raise InvalidArgumentError(f"pente leaky_relu hors de (0, 1): {self.leaky_slope}")

    @property
    def input_width(self):
        return self.layer_widths[0]

    @property
    def output_width(self):
        return self.layer_widths[-1]

    def layer_shapes(self):
        """
        Returns:
            list: Couples (in, out) de chaque couche affine
        """
        return list(zip(self.layer_widths[:-1], self.layer_widths[1:]))

    def num_params(self):
        return sum(n_in * n_out + n_out for n_in, n_out in self.layer_shapes())

    def to_dict(self):
        data = asdict(self)
        data["layer_widths"] = list(self.layer_widths)
        return data

    @classmethod
    def from_dict(cls, data):
        return cls(
            layer_widths=tuple(data["layer_widths"]),
            hidden_activation=data.get("hidden_activation", "relu"),
            output_activation=data.get("output_activation", "linear"),
            leaky_slope=data.get("leaky_slope", 0.2),
        )

    def digest(self):
        """
        Empreinte SHA-256 de l'architecture (vérifiée au chargement des points de contrôle)
        """
        return calculate_json_hash(self.to_dict())


def unpack(spec, params):
    """
    Découpe un vecteur de paramètres en vues (W, b) par couche

    Args:
        spec (MlpSpec): Architecture
        params (np.ndarray): Vecteur plat

    Returns:
        list: Couples (W, b) qui partagent la mémoire de params
    """
    params = np.asarray(params)
    if params.ndim != 1 or params.shape[0] != spec.num_params():
        raise InvalidArgumentError(
            f"vecteur de paramètres de taille {params.shape}, {spec.num_params()} attendu"
        )
    layers = []
    offset = 0
    for n_in, n_out in spec.layer_shapes():
        weights = params[offset:offset + n_in * n_out].reshape(n_out, n_in)
        offset += n_in * n_out
        bias = params[offset:offset + n_out]
        offset += n_out
        layers.append((weights, bias))
    return layers


def init_params(spec, rng):
    """
    Initialisation He-uniforme des poids (borne sqrt(6/in)), biais nuls

    Args:
        spec (MlpSpec): Architecture
        rng (np.random.Generator): Flux aléatoire

    Returns:
        np.ndarray: Vecteur de paramètres
    """
    params = np.zeros(spec.num_params(), dtype=np.float64)
    offset = 0
    for n_in, n_out in spec.layer_shapes():
        bound = math.sqrt(6.0 / n_in)
        params[offset:offset + n_in * n_out] = rng.uniform(-bound, bound, size=n_in * n_out)
        offset += n_in * n_out + n_out
    return params


def _hidden(spec, z):
    if spec.hidden_activation == "relu":
        return np.maximum(z, 0.0)
    return np.where(z > 0.0, z, spec.leaky_slope * z)


def _hidden_grad(spec, z):
    if spec.hidden_activation == "relu":
        return np.where(z > 0.0, 1.0, 0.0)
    return np.where(z > 0.0, 1.0, spec.leaky_slope)


def sigmoid(z):
    # forme tanh: pas de dépassement pour les grands |z|
    return 0.5 * (1.0 + np.tanh(0.5 * z))


def _as_batch(spec, inputs):
    inputs = np.asarray(inputs, dtype=np.float64)
    single = inputs.ndim == 1
    batch = inputs.reshape(1, -1) if single else inputs
    if batch.ndim != 2 or batch.shape[1] != spec.input_width:
        raise InvalidArgumentError(
            f"entrée de largeur {batch.shape[-1]}, {spec.input_width} attendue"
        )
    return batch, single


def _forward_cache(spec, layers, batch):
    activations = [batch]
    pre_activations = []
    current = batch
    last = len(layers) - 1
    for k, (weights, bias) in enumerate(layers):
        z = current @ weights.T + bias
        pre_activations.append(z)
        if k < last:
            current = _hidden(spec, z)
        elif spec.output_activation == "sigmoid":
            current = sigmoid(z)
        else:
            current = z
        activations.append(current)
    return activations, pre_activations


def forward(spec, params, inputs):
    """
    Propagation avant

    Args:
        spec (MlpSpec): Architecture
        params (np.ndarray): Vecteur de paramètres
        inputs (np.ndarray): Vecteur (in,) ou lot (batch, in)

    Returns:
        np.ndarray: Sortie (out,) ou (batch, out), même rang que l'entrée

    Raises:
        InvalidArgumentError: Largeur d'entrée incorrecte
    """
    batch, single = _as_batch(spec, inputs)
    activations, _ = _forward_cache(spec, unpack(spec, params), batch)
    output = activations[-1]
    return output[0] if single else output


def backward(spec, params, inputs, output_grad):
    """
    Gradients exacts en mode inverse de la sortie contractée avec output_grad

    Pour un lot, le gradient des paramètres est la somme des contributions
    des échantillons; le gradient d'entrée est donné par échantillon (il
    permet de chaîner le discriminateur vers le générateur).

    Args:
        spec (MlpSpec): Architecture
        params (np.ndarray): Vecteur de paramètres
        inputs (np.ndarray): Entrée (in,) ou (batch, in)
        output_grad (np.ndarray): Gradient par rapport à la sortie, même rang que la sortie

    Returns:
        tuple: (gradient des paramètres (P,), gradient d'entrée de même forme que inputs)

    Raises:
        InvalidArgumentError: Dimensions incohérentes
    """
    batch, single = _as_batch(spec, inputs)
    grad_out = np.asarray(output_grad, dtype=np.float64).reshape(batch.shape[0], -1)
    if grad_out.shape[1] != spec.output_width:
        raise InvalidArgumentError(
            f"gradient de sortie de largeur {grad_out.shape[1]}, {spec.output_width} attendue"
        )

    layers = unpack(spec, params)
    activations, pre_activations = _forward_cache(spec, layers, batch)

    param_grad = np.zeros(spec.num_params(), dtype=np.float64)
    grad_layers = unpack(spec, param_grad)

    if spec.output_activation == "sigmoid":
        out = activations[-1]
        delta = grad_out * out * (1.0 - out)
    else:
        delta = grad_out

    for k in range(len(layers) - 1, -1, -1):
        weights, _ = layers[k]
        grad_w, grad_b = grad_layers[k]
        grad_w[...] = delta.T @ activations[k]
        grad_b[...] = delta.sum(axis=0)
        upstream = delta @ weights
        if k > 0:
            delta = upstream * _hidden_grad(spec, pre_activations[k - 1])
        else:
            input_grad = upstream

    return param_grad, (input_grad[0] if single else input_grad)


def finite_diff_grad(loss, params, step=1e-5):
    """
    Gradient par différences centrées, coordonnée par coordonnée (oracle de test)

    Args:
        loss (callable): Fonction scalaire d'un vecteur de paramètres
        params (np.ndarray): Point d'évaluation
        step (float): Pas h > 0

    Returns:
        np.ndarray: Gradient approché
    """
    if not step > 0:
        raise InvalidArgumentError(f"pas de différence finie doit être > 0 (reçu {step})")
    params = np.array(params, dtype=np.float64)
    grad = np.zeros_like(params)
    for i in range(params.shape[0]):
        original = params[i]
        params[i] = original + step
        upper = loss(params)
        params[i] = original - step
        lower = loss(params)
        params[i] = original
        grad[i] = (upper - lower) / (2.0 * step)
    return grad
