#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
Apprentissage méta du CGAN puis ajustement fin

Boucle méta à la manière de MAML sur M environnements:

    psi_i   = theta - alpha * grad L_i(theta)              (adaptation)
    theta' = theta - beta  * sum_i grad L_i(psi_i)          (mise à jour méta)

puis descente de gradient de pas gamma sur l'environnement cible.

Le gradient méta est du premier ordre: les paramètres adaptés sont traités
comme des constantes par rapport à theta. Générateur et discriminateur
suivent chacun ces équations avec leur propre perte.

La perte d'une tâche est fournie par un objet « objectif »: CganObjective
pour l'entraînement réel, QuadraticSurrogate pour les vérifications
analytiques.
"""

import math
import logging
from dataclasses import dataclass, field, asdict

import numpy as np
from tqdm import tqdm

from modules.common.errors import InvalidArgumentError
from modules.gan.cgan import (
    init_pair, encode_sample, generate, gan_step, disc_loss, condition_index,
    disc_loss_and_grad, gen_loss_and_grad, sample_noise, synthesize,
)
from modules.metrics.quality import path_gain
from modules.nn.optim import OptimizerState, optimizer_step

logger = logging.getLogger(__name__)

META_GRAD_MODES = ("first_order",)


@dataclass(frozen=True)
class MetaConfig:
    """
    Réglages de l'apprentissage méta et de l'ajustement fin

    Attributes:
        alpha (float): Pas de l'adaptation par environnement
        beta (float): Pas de la mise à jour méta
        gamma (float): Pas de l'ajustement fin
        inner_steps (int): Pas d'adaptation par environnement et par itération
        meta_iters (int): Itérations méta
        fine_tune_iters (int): Itérations d'ajustement fin
        batch_size (int): Taille des lots
        meta_grad_mode (str): 'first_order'
        seed (int): Graine
        log_interval (int): Période des enregistrements de suivi
    """

    alpha: float = 1e-3
    beta: float = 2.5e-4
    gamma: float = 1e-3
    inner_steps: int = 1
    meta_iters: int = 10000
    fine_tune_iters: int = 2000
    batch_size: int = 64
    meta_grad_mode: str = "first_order"
    seed: int = 0
    log_interval: int = 100

    def __post_init__(self):
        for name in ("alpha", "beta", "gamma"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value >= 0):
                raise InvalidArgumentError(f"{name} doit être un réel >= 0 (reçu {value})")
        if self.inner_steps < 1:
            raise InvalidArgumentError(f"inner_steps doit être >= 1 (reçu {self.inner_steps})")
        if self.meta_iters < 0 or self.fine_tune_iters < 0:
            raise InvalidArgumentError("les nombres d'itérations doivent être >= 0")
        if self.batch_size < 1:
            raise InvalidArgumentError(f"batch_size doit être >= 1 (reçu {self.batch_size})")
        if self.log_interval < 1:
            raise InvalidArgumentError(f"log_interval doit être >= 1 (reçu {self.log_interval})")
        if self.meta_grad_mode not in META_GRAD_MODES:
            raise InvalidArgumentError(f"mode de gradient méta non pris en charge: {self.meta_grad_mode}")

    def to_dict(self):
        return asdict(self)


@dataclass
class MetaRecord:
    """
    Enregistrement de suivi d'une itération méta
    """

    iteration: int
    inner_losses: list = field(default_factory=list)
    meta_loss: float = None
    meta_gen_loss: float = None
    validation_loss: float = None
    path_gains: dict = field(default_factory=dict)

    def to_row(self):
        row = {"iteration": self.iteration}
        for i, (d_value, g_value) in enumerate(self.inner_losses):
            row[f"inner_disc_loss_{i}"] = d_value
            row[f"inner_gen_loss_{i}"] = g_value
        row["meta_loss"] = self.meta_loss
        row["meta_gen_loss"] = self.meta_gen_loss
        row["validation_loss"] = self.validation_loss
        for index, gain in sorted(self.path_gains.items()):
            row[f"path_gain_c{index}"] = gain
        return row


@dataclass
class MetaTrace:
    """
    Suivi de l'apprentissage méta

    Attributes:
        records (list): MetaRecord à l'itération 0 puis toutes les log_interval itérations
        meta_losses (list): Perte méta de chaque itération (pour le lissage)
    """

    records: list = field(default_factory=list)
    meta_losses: list = field(default_factory=list)

    def append(self, record):
        if self.records and record.iteration <= self.records[-1].iteration:
            raise InvalidArgumentError("les itérations du suivi doivent être croissantes")
        self.records.append(record)

    def to_rows(self):
        return [record.to_row() for record in self.records]

    def smoothed_losses(self, fraction=0.1):
        """
        Moyennes de la perte méta sur la première et la dernière fraction des itérations

        Returns:
            tuple: (moyenne du début, moyenne de la fin), None si aucune itération
        """
        losses = np.asarray(self.meta_losses, dtype=np.float64)
        if losses.size == 0:
            return None
        width = max(1, int(losses.size * fraction))
        return float(losses[:width].mean()), float(losses[-width:].mean())


def split_validation(dataset, fraction, rng):
    """
    Sépare un jeu en parties d'entraînement et de validation

    La validation reçoit round(fraction * n) échantillons, au moins un; un
    jeu d'un seul échantillon n'a pas de validation.

    Returns:
        tuple: (entraînement, validation ou None)
    """
    dataset.require_nonempty()
    if not 0.0 <= fraction < 1.0:
        raise InvalidArgumentError(f"fraction de validation hors de [0, 1): {fraction}")
    n = len(dataset)
    n_val = max(1, int(round(fraction * n))) if fraction > 0 else 0
    if n_val == 0 or n < 2:
        return dataset, None
    order = rng.permutation(n)
    return (
        dataset.subset(np.sort(order[n_val:]), split="train"),
        dataset.subset(np.sort(order[:n_val]), split="validation"),
    )


def normalization_scale(datasets):
    """
    Échelle d'encodage commune: racine du gain de trajet moyen des jeux méta,
    arrondie à la puissance de deux la plus proche

    Une seule échelle pour toutes les conditions: le CGAN doit apprendre
    lui-même les écarts de gain entre environnements. Une puissance de deux
    rend encode puis decode exact au bit près.

    Returns:
        float: Échelle d'amplitude > 0 (puissance de deux)
    """
    if not datasets:
        raise InvalidArgumentError("aucun jeu de données")
    mean_gain = float(np.mean([path_gain(ds) for ds in datasets]))
    if not mean_gain > 0:
        raise InvalidArgumentError("gain de trajet moyen nul: échelle indéfinie")
    return 2.0 ** round(math.log2(math.sqrt(mean_gain)))


class CganObjective:
    """
    Perte de tâche du CGAN sur des jeux de canaux encodés
    """

    def __init__(self, scale, batch_size=64, validation_cap=512, probe_samples=2000):
        """
        Args:
            scale (float): Échelle d'encodage des canaux
            batch_size (int): Taille des lots
            validation_cap (int): Nombre maximal d'échantillons de validation évalués
            probe_samples (int): Échantillons synthétisés pour mesurer le gain de trajet
        """
        if not scale > 0:
            raise InvalidArgumentError(f"échelle doit être > 0 (reçu {scale})")
        self.scale = float(scale)
        self.batch_size = int(batch_size)
        self.validation_cap = int(validation_cap)
        self.probe_samples = int(probe_samples)
        self._encoded = {}

    def clear_cache(self):
        self._encoded.clear()

    def encoded(self, dataset):
        key = id(dataset)
        cached = self._encoded.get(key)
        if cached is None or cached[0] is not dataset:
            dataset.require_nonempty()
            cached = (dataset, encode_sample(dataset.raw_samples(), self.scale))
            self._encoded[key] = cached
        return cached[1]

    def sample_batches(self, dataset, count, rng):
        """
        Tire count lots disjoints (avec remise si le jeu est trop petit)

        Returns:
            list: Lots encodés
        """
        encoded = self.encoded(dataset)
        n = encoded.shape[0]
        total = count * self.batch_size
        indices = rng.choice(n, size=total, replace=total > n)
        return [encoded[indices[k * self.batch_size:(k + 1) * self.batch_size]] for k in range(count)]

    def adapt_step(self, pair, batch, cond, rng):
        return gan_step(pair, batch, cond, rng)

    def meta_gradients(self, pair, batch, cond, rng):
        """
        Gradients des deux pertes aux paramètres donnés, sur le lot méta

        Returns:
            tuple: (gradient G, gradient D, perte D, perte G)
        """
        spec = pair.spec
        fake = generate(pair, sample_noise(rng, batch.shape[0], spec.noise_dim), cond)
        d_value, disc_grad = disc_loss_and_grad(pair, batch, fake, cond)
        g_value, gen_grad = gen_loss_and_grad(pair, sample_noise(rng, batch.shape[0], spec.noise_dim), cond)
        return gen_grad, disc_grad, d_value, g_value

    def validation_loss(self, pair, dataset, cond, rng):
        encoded = self.encoded(dataset)[:self.validation_cap]
        fake = generate(pair, sample_noise(rng, encoded.shape[0], pair.spec.noise_dim), cond)
        return disc_loss(pair, encoded, fake, cond)

    def path_gain_probe(self, pair, cond, rng):
        return path_gain(synthesize(pair, cond, self.probe_samples, self.scale, rng))


class QuadraticSurrogate:
    """
    Perte de substitution quadratique L_i(theta) = ||theta - cible_i||^2 / 2

    La cible d'une tâche dépend de l'indice de sa condition; elle porte sur
    les deux vecteurs de paramètres. Les lots sont ignorés.
    """

    def __init__(self, gen_targets, disc_targets):
        """
        Args:
            gen_targets (dict): {indice de condition: cible du générateur}
            disc_targets (dict): {indice de condition: cible du discriminateur}
        """
        self.gen_targets = {k: np.asarray(v, dtype=np.float64) for k, v in gen_targets.items()}
        self.disc_targets = {k: np.asarray(v, dtype=np.float64) for k, v in disc_targets.items()}

    def loss(self, pair, cond):
        index = condition_index(cond)
        return 0.5 * (
            float(np.sum((pair.gen_params - self.gen_targets[index]) ** 2))
            + float(np.sum((pair.disc_params - self.disc_targets[index]) ** 2))
        )

    def gradients(self, pair, cond):
        index = condition_index(cond)
        return pair.gen_params - self.gen_targets[index], pair.disc_params - self.disc_targets[index]

    def clear_cache(self):
        pass

    def sample_batches(self, dataset, count, rng):
        dataset.require_nonempty()
        return [None] * count

    def adapt_step(self, pair, batch, cond, rng):
        gen_grad, disc_grad = self.gradients(pair, cond)
        disc_params, disc_opt = optimizer_step(pair.disc_opt, pair.disc_params, disc_grad)
        gen_params, gen_opt = optimizer_step(pair.gen_opt, pair.gen_params, gen_grad)
        new_pair = pair.with_params(gen_params, disc_params).with_optimizers(gen_opt, disc_opt)
        value = self.loss(new_pair, cond)
        return new_pair, value, value

    def meta_gradients(self, pair, batch, cond, rng):
        gen_grad, disc_grad = self.gradients(pair, cond)
        value = self.loss(pair, cond)
        return gen_grad, disc_grad, value, value

    def validation_loss(self, pair, dataset, cond, rng):
        return self.loss(pair, cond)

    def path_gain_probe(self, pair, cond, rng):
        return None


def _adapt(pair, batches, cond, lr, rng, objective):
    sgd = OptimizerState.sgd(lr)
    adapted = pair.with_optimizers(sgd, sgd)
    d_value = g_value = None
    for batch in batches:
        adapted, d_value, g_value = objective.adapt_step(adapted, batch, cond, rng)
    return adapted.with_optimizers(pair.gen_opt, pair.disc_opt), d_value, g_value


def inner_adapt(pair, dataset, cond, alpha, steps, rng, objective):
    """
    Paramètres adaptés psi_i par descente de gradient de pas alpha

    Args:
        pair (GanPair): Paramètres theta (non modifiés)
        dataset (WirelessDataset): Jeu de l'environnement i
        cond (np.ndarray): Condition one-hot de l'environnement
        alpha (float): Pas d'adaptation
        steps (int): Nombre de pas alternés (discriminateur puis générateur)
        rng (np.random.Generator): Flux aléatoire
        objective: Perte de tâche (CganObjective ou QuadraticSurrogate)

    Returns:
        GanPair: Paire adaptée

    Raises:
        InvalidArgumentError: Jeu vide
    """
    dataset.require_nonempty()
    batches = objective.sample_batches(dataset, steps, rng)
    adapted, _, _ = _adapt(pair, batches, cond, alpha, rng, objective)
    return adapted


def meta_step(pair, datasets, conds, cfg, rng, objective, iteration=0):
    """
    Une itération méta sur les M environnements

    Pour chaque environnement: adaptation sur un lot, puis gradients des
    pertes aux paramètres adaptés sur un lot méta disjoint. Les gradients
    sont sommés dans l'ordre des environnements et appliqués à theta avec
    un pas beta.

    Args:
        pair (GanPair): Paramètres theta
        datasets (list): M jeux de données
        conds (list): M conditions one-hot
        cfg (MetaConfig): Réglages
        rng (np.random.Generator): Flux aléatoire
        objective: Perte de tâche
        iteration (int): Numéro de l'itération (pour l'enregistrement)

    Returns:
        tuple: (nouvelle paire, MetaRecord)

    Raises:
        InvalidArgumentError: M = 0 ou listes de longueurs différentes
    """
    if len(datasets) == 0:
        raise InvalidArgumentError("au moins un jeu de données méta est requis")
    if len(datasets) != len(conds):
        raise InvalidArgumentError(f"{len(datasets)} jeux de données pour {len(conds)} conditions")

    gen_sum = np.zeros_like(pair.gen_params)
    disc_sum = np.zeros_like(pair.disc_params)
    record = MetaRecord(iteration=iteration, meta_loss=0.0, meta_gen_loss=0.0)

    for dataset, cond in zip(datasets, conds):
        batches = objective.sample_batches(dataset, cfg.inner_steps + 1, rng)
        adapted, d_inner, g_inner = _adapt(pair, batches[:-1], cond, cfg.alpha, rng, objective)
        gen_grad, disc_grad, d_value, g_value = objective.meta_gradients(adapted, batches[-1], cond, rng)
        gen_sum += gen_grad
        disc_sum += disc_grad
        record.inner_losses.append((d_inner, g_inner))
        record.meta_loss += d_value
        record.meta_gen_loss += g_value

    if cfg.beta == 0:
        return pair, record

    sgd = OptimizerState.sgd(cfg.beta)
    gen_params, _ = optimizer_step(sgd, pair.gen_params, gen_sum)
    disc_params, _ = optimizer_step(sgd, pair.disc_params, disc_sum)
    return pair.with_params(gen_params, disc_params), record


def _probe(record, pair, datasets, conds, validation, objective, rng):
    if validation:
        values = [objective.validation_loss(pair, ds, cond, rng) for ds, cond in zip(validation, conds)]
        record.validation_loss = float(np.mean(values))
    for cond in conds:
        gain = objective.path_gain_probe(pair, cond, rng)
        if gain is not None:
            record.path_gains[condition_index(cond)] = gain


def meta_train(spec, datasets, conds, cfg, rng, objective, validation=None, initial=None, progress=False):
    """
    Apprentissage méta complet à partir d'une initialisation aléatoire

    Args:
        spec (GanSpec): Câblage du CGAN
        datasets (list): M jeux de données méta
        conds (list): M conditions one-hot
        cfg (MetaConfig): Réglages
        rng (np.random.Generator): Flux aléatoire
        objective: Perte de tâche (CganObjective à l'échelle commune)
        validation (list, optional): Jeux de validation alignés sur conds
        initial (GanPair, optional): Paire de départ à la place de l'initialisation aléatoire
        progress (bool, optional): Barre de progression

    Returns:
        tuple: (GanPair, MetaTrace)
    """
    if len(datasets) == 0:
        raise InvalidArgumentError("au moins un jeu de données méta est requis")
    objective.clear_cache()

    pair = initial if initial is not None else init_pair(spec, rng)
    # flux séparé pour les mesures: elles ne perturbent pas l'entraînement
    probe_rng = np.random.default_rng(int(rng.integers(0, 2 ** 63)))
    trace = MetaTrace()

    record = MetaRecord(iteration=0)
    _probe(record, pair, datasets, conds, validation, objective, probe_rng)
    trace.append(record)

    iterator = range(1, cfg.meta_iters + 1)
    if progress:
        iterator = tqdm(iterator, desc="apprentissage méta", unit="it", leave=False)
    for iteration in iterator:
        pair, record = meta_step(pair, datasets, conds, cfg, rng, objective, iteration=iteration)
        trace.meta_losses.append(record.meta_loss)
        if iteration % cfg.log_interval == 0:
            _probe(record, pair, datasets, conds, validation, objective, probe_rng)
            trace.append(record)
            gains = ", ".join(f"c{k}={v:.3f}" for k, v in sorted(record.path_gains.items()))
            logger.info(
                f"itération méta {iteration}/{cfg.meta_iters}: perte méta {record.meta_loss:.4f}, "
                f"validation {record.validation_loss}, gains [{gains}]"
            )
        else:
            logger.debug(f"itération méta {iteration}: perte méta {record.meta_loss:.4f}")

    objective.clear_cache()
    return pair, trace


def fine_tune(pair, dataset_target, cond_target, cfg, rng, objective, progress=False):
    """
    Ajustement fin sur l'environnement cible (descente de pas gamma)

    Args:
        pair (GanPair): Paramètres issus de l'apprentissage méta
        dataset_target (WirelessDataset): Échantillons de l'environnement cible
        cond_target (np.ndarray): Condition one-hot de la cible
        cfg (MetaConfig): Réglages (gamma, fine_tune_iters, batch_size)
        rng (np.random.Generator): Flux aléatoire
        objective: Perte de tâche (doit partager l'échelle de l'apprentissage méta)

    Returns:
        tuple: (paire ajustée, liste d'enregistrements {iteration, disc_loss, gen_loss})

    Raises:
        InvalidArgumentError: Jeu cible vide
    """
    dataset_target.require_nonempty("jeu de données cible")

    sgd = OptimizerState.sgd(cfg.gamma)
    tuned = pair.with_optimizers(sgd, sgd)
    losses = []
    iterator = range(1, cfg.fine_tune_iters + 1)
    if progress:
        iterator = tqdm(iterator, desc="ajustement fin", unit="it", leave=False)
    for iteration in iterator:
        batch = objective.sample_batches(dataset_target, 1, rng)[0]
        tuned, d_value, g_value = objective.adapt_step(tuned, batch, cond_target, rng)
        losses.append({"iteration": iteration, "disc_loss": d_value, "gen_loss": g_value})
        if iteration % cfg.log_interval == 0:
            logger.info(f"ajustement fin {iteration}/{cfg.fine_tune_iters}: perte D {d_value:.4f}, perte G {g_value:.4f}")

    return tuned.with_optimizers(pair.gen_opt, pair.disc_opt), losses
