#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
Estimateur de canal par apprentissage profond

Sert à noter la qualité d'un jeu de données: on entraîne le même
estimateur sur des canaux de référence, sur des canaux synthétisés par
un CGAN classique et par le CGAN méta-appris, puis on compare l'erreur
quadratique normalisée (NMSE) en fonction du rapport signal à bruit.

Modèle d'observation: Np faisceaux pilotes DFT, bruit blanc par faisceau,

    y_p = f_p^H h + n_p,   n_p ~ CN(0, sigma^2),
    sigma^2 = puissance de référence * 10^(-snr / 10).

La même puissance de référence sert pour tous les jeux d'entraînement,
de sorte que la comparaison ne porte que sur la qualité des données.
"""

import math
import logging
from dataclasses import dataclass, field

import numpy as np
from tqdm import tqdm

from modules.common.errors import InvalidArgumentError
from modules.gan.cgan import encode_sample, decode_sample
from modules.nn.network import MlpSpec, init_params, forward, backward
from modules.nn.optim import OptimizerState, optimizer_step

logger = logging.getLogger(__name__)

DEFAULT_SNR_GRID = (0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0)
EVAL_CHUNK = 4096


def dft_pilots(nt, num_pilots):
    """
    Faisceaux pilotes: colonnes régulièrement espacées de la matrice DFT unitaire

    Avec num_pilots = nt, la matrice obtenue est la DFT unitaire complète.

    Returns:
        np.ndarray: Matrice complex128 (nt, num_pilots) à colonnes de norme 1
    """
    if not 1 <= num_pilots <= nt:
        raise InvalidArgumentError(f"nombre de pilotes {num_pilots} hors de [1, {nt}]")
    columns = (np.arange(num_pilots) * nt) // num_pilots
    n = np.arange(nt)[:, None]
    return np.exp(-2j * np.pi * n * columns[None, :] / nt) / math.sqrt(nt)


@dataclass(frozen=True, eq=False)
class PilotConfig:
    """
    Sondage pilote

    Attributes:
        nt (int): Nombre d'antennes
        num_pilots (int): Np, 1 <= Np <= nt
        pilots (np.ndarray): Matrice (nt, Np) de faisceaux de norme 1
        snr_grid_db (tuple): Grille des SNR en dB
        reference_power (float): Puissance de canal de référence pour le SNR
        seed (int): Graine
    """

    nt: int
    num_pilots: int
    pilots: np.ndarray
    snr_grid_db: tuple = DEFAULT_SNR_GRID
    reference_power: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if not 1 <= self.num_pilots <= self.nt:
            raise InvalidArgumentError(f"nombre de pilotes {self.num_pilots} hors de [1, {self.nt}]")
        if self.pilots.shape != (self.nt, self.num_pilots):
            raise InvalidArgumentError(f"matrice pilote {self.pilots.shape}, ({self.nt}, {self.num_pilots}) attendue")
        norms = np.linalg.norm(self.pilots, axis=0)
        if np.max(np.abs(norms - 1.0)) > 1e-9:
            raise InvalidArgumentError("les faisceaux pilotes doivent être de norme 1")
        if not self.snr_grid_db:
            raise InvalidArgumentError("grille de SNR vide")
        if not self.reference_power > 0:
            raise InvalidArgumentError(f"puissance de référence doit être > 0 (reçu {self.reference_power})")

    @classmethod
    def dft(cls, nt, num_pilots, snr_grid_db=DEFAULT_SNR_GRID, reference_power=1.0, seed=0):
        return cls(nt, num_pilots, dft_pilots(nt, num_pilots), tuple(snr_grid_db), float(reference_power), seed)

    def noise_variance(self, snr_db):
        return self.reference_power * 10.0 ** (-np.asarray(snr_db, dtype=np.float64) / 10.0)

    def to_dict(self):
        return {
            "nt": self.nt,
            "num_pilots": self.num_pilots,
            "snr_grid_db": list(self.snr_grid_db),
            "reference_power": self.reference_power,
            "seed": self.seed,
        }


def simulate_pilots_batch(channels, cfg, snr_db, rng):
    """
    Observations pilotes d'une matrice de canaux

    Args:
        channels (np.ndarray): Canaux bruts (n, nt)
        cfg (PilotConfig): Sondage pilote
        snr_db: SNR commun (scalaire) ou par canal (n,); math.inf pour une observation sans bruit
        rng (np.random.Generator): Flux aléatoire

    Returns:
        np.ndarray: Observations encodées (n, 2 Np), parties réelle et imaginaire entrelacées
    """
    channels = np.atleast_2d(np.asarray(channels, dtype=np.complex128))
    if channels.shape[1] != cfg.nt:
        raise InvalidArgumentError(f"canaux de longueur {channels.shape[1]}, {cfg.nt} attendue")
    n = channels.shape[0]
    clean = channels @ cfg.pilots.conj()
    sigma = np.sqrt(np.broadcast_to(cfg.noise_variance(snr_db), (n,)) / 2.0)[:, None]
    noise = sigma * (rng.standard_normal((n, cfg.num_pilots)) + 1j * rng.standard_normal((n, cfg.num_pilots)))
    return encode_sample(clean + noise, 1.0)


def simulate_pilots(h, cfg, snr_db, rng):
    """
    Observation pilote d'un canal: y = F_p^H h + n

    Args:
        h (np.ndarray): Canal (nt,)
        cfg (PilotConfig): Sondage pilote
        snr_db (float): SNR en dB
        rng (np.random.Generator): Flux aléatoire

    Returns:
        np.ndarray: Observation encodée de longueur 2 Np
    """
    h = np.asarray(h, dtype=np.complex128)
    if h.shape != (cfg.nt,):
        raise InvalidArgumentError(f"canal de forme {h.shape}, ({cfg.nt},) attendue")
    return simulate_pilots_batch(h[None, :], cfg, snr_db, rng)[0]


def linear_inversion(observations, cfg):
    """
    Estimation par moindres carrés ĥ = pinv(F_p^H) y (contrôle de cohérence)

    Returns:
        np.ndarray: Canaux estimés (n, nt)
    """
    y = decode_sample(np.atleast_2d(observations), 1.0)
    return y @ np.linalg.pinv(cfg.pilots.conj().T).T


@dataclass(frozen=True, eq=False)
class EstimatorNet:
    """
    Estimateur entraîné: observation pilote encodée -> canal encodé

    Attributes:
        spec (MlpSpec): Entrée 2 Np, cinq couches cachées de 256, sortie 2 nt
        params (np.ndarray): Paramètres
        norm (float): Échelle d'amplitude des entrées et sorties (racine de la puissance de référence)
        hyper (dict): Hyperparamètres d'entraînement
        history (list): Perte moyenne par époque
    """

    spec: MlpSpec
    params: np.ndarray
    norm: float
    hyper: dict = field(default_factory=dict)
    history: list = field(default_factory=list)

    def estimate(self, observations):
        """
        Estime les canaux à partir des observations encodées

        Returns:
            np.ndarray: Canaux complexes (n, nt)
        """
        observations = np.atleast_2d(np.asarray(observations, dtype=np.float64))
        estimates = np.empty((observations.shape[0], self.spec.output_width // 2), dtype=np.complex128)
        for start in range(0, observations.shape[0], EVAL_CHUNK):
            chunk = observations[start:start + EVAL_CHUNK] / self.norm
            estimates[start:start + EVAL_CHUNK] = decode_sample(forward(self.spec, self.params, chunk), self.norm)
        return estimates


def estimator_spec(nt, num_pilots, hidden=256, depth=5):
    return MlpSpec(
        layer_widths=(2 * num_pilots, *([hidden] * depth), 2 * nt),
        hidden_activation="relu",
        output_activation="linear",
    )


def train_estimator(train_set, cfg, epochs, rng, batch_size=64, lr=1e-3, hidden=256, depth=5, progress=False):
    """
    Entraîne l'estimateur sur les canaux d'un jeu de données

    À chaque époque les observations sont régénérées avec un bruit frais et
    un SNR tiré uniformément dans la grille; les étiquettes viennent
    uniquement du jeu fourni. Perte: erreur quadratique du canal encodé.

    Args:
        train_set (WirelessDataset): Canaux d'entraînement
        cfg (PilotConfig): Sondage pilote
        epochs (int): Nombre d'époques (0: réseau non entraîné)
        rng (np.random.Generator): Flux aléatoire
        batch_size (int): Taille des lots
        lr (float): Pas Adam

    Returns:
        EstimatorNet: Estimateur entraîné

    Raises:
        InvalidArgumentError: Jeu vide
    """
    train_set.require_nonempty("jeu d'entraînement")
    if train_set.nt != cfg.nt:
        raise InvalidArgumentError(f"jeu à {train_set.nt} antennes pour un sondage à {cfg.nt}")

    spec = estimator_spec(cfg.nt, cfg.num_pilots, hidden, depth)
    params = init_params(spec, rng)
    opt = OptimizerState.adam(params.shape[0], lr=lr, beta1=0.9, beta2=0.999)
    norm = math.sqrt(cfg.reference_power)

    channels = train_set.raw_samples()
    targets = encode_sample(channels, norm)
    n = channels.shape[0]
    grid = np.asarray(cfg.snr_grid_db, dtype=np.float64)
    history = []

    iterator = range(epochs)
    if progress:
        iterator = tqdm(iterator, desc="estimateur", unit="époque", leave=False)
    for epoch in iterator:
        snrs = rng.choice(grid, size=n)
        inputs = simulate_pilots_batch(channels, cfg, snrs, rng) / norm
        order = rng.permutation(n)
        total = 0.0
        for start in range(0, n, batch_size):
            idx = order[start:start + batch_size]
            outputs = forward(spec, params, inputs[idx])
            error = outputs - targets[idx]
            total += float(np.sum(error ** 2))
            grad, _ = backward(spec, params, inputs[idx], 2.0 * error / idx.shape[0])
            params, opt = optimizer_step(opt, params, grad)
        history.append(total / n)
        logger.info(f"estimateur époque {epoch + 1}/{epochs}: perte {history[-1]:.5f}")

    return EstimatorNet(
        spec=spec,
        params=params,
        norm=norm,
        hyper={"epochs": epochs, "batch_size": batch_size, "lr": lr, "hidden": hidden, "depth": depth},
        history=history,
    )


@dataclass
class MseCurve:
    """
    NMSE par point de SNR

    Attributes:
        points (list): Couples (snr_db, nmse)
        excluded (int): Canaux de test de norme nulle exclus de la moyenne
    """

    points: list
    excluded: int = 0

    def __iter__(self):
        return iter(self.points)

    def __len__(self):
        return len(self.points)

    def __getitem__(self, index):
        return self.points[index]


def eval_mse(net, test_set, cfg, rng):
    """
    NMSE moyenne ||ĥ - h||^2 / ||h||^2 sur le jeu de test, pour chaque SNR de la grille

    Args:
        net: Objet muni de estimate(observations) -> canaux (EstimatorNet)
        test_set (WirelessDataset): Canaux de test
        cfg (PilotConfig): Sondage pilote
        rng (np.random.Generator): Flux aléatoire (bruit frais)

    Returns:
        MseCurve: Points (snr_db, nmse) et nombre de canaux exclus

    Raises:
        InvalidArgumentError: Jeu vide ou entièrement nul
    """
    test_set.require_nonempty("jeu de test")
    channels = test_set.raw_samples()
    energy = np.sum(np.abs(channels) ** 2, axis=1)
    valid = energy > 0
    excluded = int(np.count_nonzero(~valid))
    if excluded:
        logger.warning(f"{excluded} canaux de test de norme nulle exclus du calcul de NMSE")
    if not valid.any():
        raise InvalidArgumentError("tous les canaux de test sont nuls")

    points = []
    for snr_db in cfg.snr_grid_db:
        observations = simulate_pilots_batch(channels, cfg, snr_db, rng)
        estimates = net.estimate(observations)
        errors = np.sum(np.abs(estimates - channels) ** 2, axis=1)
        nmse = float(np.mean(errors[valid] / energy[valid]))
        points.append((float(snr_db), nmse))
        logger.debug(f"SNR {snr_db} dB: NMSE {nmse:.4e}")
    return MseCurve(points=points, excluded=excluded)
