#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
GAN conditionnel (CGAN)

Ce module implémente l'encodage des conditions, les pertes du générateur
et du discriminateur, le pas d'entraînement alterné et la synthèse de
canaux. Le générateur reçoit la concaténation [z ; c], le discriminateur
la concaténation [x ; c], où c est un vecteur one-hot qui désigne
l'environnement.

Les canaux complexes sont présentés aux réseaux sous forme réelle
entrelacée (Re, Im, Re, Im, ...) divisée par une échelle globale.
"""

import logging
from dataclasses import dataclass, replace

import numpy as np
from tqdm import tqdm

from modules.common.dataset import WirelessDataset
from modules.common.errors import InvalidArgumentError
from modules.nn.network import MlpSpec, init_params, forward, backward
from modules.nn.optim import OptimizerState, optimizer_step
from utils.hashing import calculate_array_hash, calculate_json_hash

logger = logging.getLogger(__name__)

LOSS_VARIANTS = ("minimax", "non_saturating")
PREDICTION_EPS = 1e-12
SYNTH_CHUNK = 4096


@dataclass(frozen=True)
class GanSpec:
    """
    Câblage du CGAN

    Attributes:
        noise_dim (int): Dimension du bruit z
        num_envs (int): Nombre d'environnements (longueur des conditions)
        data_dim (int): 2 * nt composantes réelles par canal
        gen_spec (MlpSpec): Générateur, entrée noise_dim + num_envs, sortie data_dim
        disc_spec (MlpSpec): Discriminateur, entrée data_dim + num_envs, sortie 1 sigmoïde
        loss_variant (str): 'minimax' ou 'non_saturating'
    """

    noise_dim: int
    num_envs: int
    data_dim: int
    gen_spec: MlpSpec
    disc_spec: MlpSpec
    loss_variant: str = "non_saturating"

    def __post_init__(self):
        if self.noise_dim < 1 or self.num_envs < 1 or self.data_dim < 1:
            raise InvalidArgumentError("noise_dim, num_envs et data_dim doivent être >= 1")
        if self.gen_spec.input_width != self.noise_dim + self.num_envs:
            raise InvalidArgumentError(
                f"entrée du générateur {self.gen_spec.input_width}, "
                f"{self.noise_dim + self.num_envs} attendue (bruit + condition)"
            )
        if self.gen_spec.output_width != self.data_dim:
            raise InvalidArgumentError(f"sortie du générateur {self.gen_spec.output_width}, {self.data_dim} attendue")
        if self.disc_spec.input_width != self.data_dim + self.num_envs:
            raise InvalidArgumentError(
                f"entrée du discriminateur {self.disc_spec.input_width}, "
                f"{self.data_dim + self.num_envs} attendue (donnée + condition)"
            )
        if self.disc_spec.output_width != 1 or self.disc_spec.output_activation != "sigmoid":
            raise InvalidArgumentError("le discriminateur doit avoir une sortie unique sigmoïde")
        if self.loss_variant not in LOSS_VARIANTS:
            raise InvalidArgumentError(f"variante de perte inconnue: {self.loss_variant}")

    @classmethod
    def build(cls, noise_dim, num_envs, data_dim, gen_hidden=(256, 256, 256), disc_hidden=None,
              loss_variant="non_saturating", leaky_slope=0.2):
        """
        Construit un câblage standard

        Générateur à couches cachées relu et sortie linéaire; discriminateur
        à couches cachées leaky_relu et sortie sigmoïde. Sans précision, le
        discriminateur reprend les couches cachées du générateur.

        Returns:
            GanSpec: Câblage validé
        """
        if disc_hidden is None:
            disc_hidden = gen_hidden
        gen_spec = MlpSpec(
            layer_widths=(noise_dim + num_envs, *gen_hidden, data_dim),
            hidden_activation="relu",
            output_activation="linear",
        )
        disc_spec = MlpSpec(
            layer_widths=(data_dim + num_envs, *disc_hidden, 1),
            hidden_activation="leaky_relu",
            output_activation="sigmoid",
            leaky_slope=leaky_slope,
        )
        return cls(noise_dim, num_envs, data_dim, gen_spec, disc_spec, loss_variant)

    def to_dict(self):
        return {
            "noise_dim": self.noise_dim,
            "num_envs": self.num_envs,
            "data_dim": self.data_dim,
            "gen_spec": self.gen_spec.to_dict(),
            "disc_spec": self.disc_spec.to_dict(),
            "loss_variant": self.loss_variant,
        }

    @classmethod
    def from_dict(cls, data):
        return cls(
            noise_dim=data["noise_dim"],
            num_envs=data["num_envs"],
            data_dim=data["data_dim"],
            gen_spec=MlpSpec.from_dict(data["gen_spec"]),
            disc_spec=MlpSpec.from_dict(data["disc_spec"]),
            loss_variant=data.get("loss_variant", "non_saturating"),
        )

    def digest(self):
        return calculate_json_hash(self.to_dict())


@dataclass(frozen=True, eq=False)
class GanPair:
    """
    Générateur et discriminateur (paramètres et optimiseurs)

    Valeur immuable: chaque mise à jour retourne une nouvelle paire.
    """

    spec: GanSpec
    gen_params: np.ndarray
    disc_params: np.ndarray
    gen_opt: OptimizerState
    disc_opt: OptimizerState

    def __post_init__(self):
        if self.gen_params.shape != (self.spec.gen_spec.num_params(),):
            raise InvalidArgumentError("paramètres du générateur de taille incompatible")
        if self.disc_params.shape != (self.spec.disc_spec.num_params(),):
            raise InvalidArgumentError("paramètres du discriminateur de taille incompatible")

    def with_params(self, gen_params=None, disc_params=None):
        return replace(
            self,
            gen_params=self.gen_params if gen_params is None else gen_params,
            disc_params=self.disc_params if disc_params is None else disc_params,
        )

    def with_optimizers(self, gen_opt, disc_opt):
        return replace(self, gen_opt=gen_opt, disc_opt=disc_opt)

    def generator_digest(self):
        return calculate_array_hash(self.gen_params)

    def digest(self):
        """
        Empreinte des deux vecteurs de paramètres et du câblage
        """
        return calculate_json_hash({
            "spec": self.spec.digest(),
            "gen": calculate_array_hash(self.gen_params),
            "disc": calculate_array_hash(self.disc_params),
        })


def init_pair(spec, rng, lr=2e-4, beta1=0.5, beta2=0.999, eps=1e-8):
    """
    Initialise une paire avec des optimiseurs Adam

    Args:
        spec (GanSpec): Câblage
        rng (np.random.Generator): Flux aléatoire (générateur puis discriminateur)

    Returns:
        GanPair: Paire initialisée
    """
    gen_params = init_params(spec.gen_spec, rng)
    disc_params = init_params(spec.disc_spec, rng)
    return GanPair(
        spec=spec,
        gen_params=gen_params,
        disc_params=disc_params,
        gen_opt=OptimizerState.adam(gen_params.shape[0], lr=lr, beta1=beta1, beta2=beta2, eps=eps),
        disc_opt=OptimizerState.adam(disc_params.shape[0], lr=lr, beta1=beta1, beta2=beta2, eps=eps),
    )


def make_condition(index, num_envs):
    """
    Vecteur one-hot de l'environnement d'indice donné

    Returns:
        np.ndarray: Vecteur réel de longueur num_envs
    """
    if not 0 <= index < num_envs:
        raise InvalidArgumentError(f"indice de condition {index} hors de [0, {num_envs})")
    cond = np.zeros(num_envs, dtype=np.float64)
    cond[index] = 1.0
    return cond


def condition_index(cond):
    """
    Indice de l'entrée active d'une condition one-hot

    Raises:
        InvalidArgumentError: Vecteur qui n'est pas one-hot
    """
    cond = np.asarray(cond, dtype=np.float64)
    if cond.ndim != 1 or not np.all((cond == 0.0) | (cond == 1.0)) or cond.sum() != 1.0:
        raise InvalidArgumentError(f"condition non one-hot: {cond}")
    return int(np.argmax(cond))


def encode_sample(h, scale):
    """
    Forme réelle d'un canal (ou d'une matrice de canaux)

    Args:
        h (np.ndarray): Vecteur (nt,) ou matrice (n, nt) complexe
        scale (float): Échelle > 0

    Returns:
        np.ndarray: (2 nt,) ou (n, 2 nt), parties réelle et imaginaire entrelacées, divisées par scale
    """
    if not scale > 0:
        raise InvalidArgumentError(f"échelle doit être > 0 (reçu {scale})")
    h = np.asarray(h, dtype=np.complex128)
    interleaved = np.stack([h.real, h.imag], axis=-1).reshape(*h.shape[:-1], 2 * h.shape[-1])
    return interleaved / scale


def decode_sample(v, scale):
    """
    Inverse de encode_sample (exact pour une échelle puissance de deux)

    Returns:
        np.ndarray: Vecteur ou matrice complex128
    """
    v = np.asarray(v, dtype=np.float64) * scale
    h = np.empty(v.shape[:-1] + (v.shape[-1] // 2,), dtype=np.complex128)
    h.real = v[..., 0::2]
    h.imag = v[..., 1::2]
    return h


def cross_entropy(label, prediction):
    """
    Entropie croisée binaire H(x, x̂) = -x log x̂ - (1 - x) log(1 - x̂)

    La prédiction est ramenée dans [eps, 1 - eps] avec eps = 1e-12.

    Args:
        label: 0 ou 1 (scalaire ou tableau)
        prediction: Probabilité(s) prédite(s)

    Returns:
        float ou np.ndarray: Entropie croisée
    """
    p = np.clip(prediction, PREDICTION_EPS, 1.0 - PREDICTION_EPS)
    return -label * np.log(p) - (1.0 - label) * np.log(1.0 - p)


def _cross_entropy_grad(label, prediction):
    # dérivée par rapport à la prédiction, nulle dans les zones écrêtées
    inside = (prediction > PREDICTION_EPS) & (prediction < 1.0 - PREDICTION_EPS)
    p = np.clip(prediction, PREDICTION_EPS, 1.0 - PREDICTION_EPS)
    return np.where(inside, -label / p + (1.0 - label) / (1.0 - p), 0.0)


def _with_condition(batch, cond):
    batch = np.atleast_2d(np.asarray(batch, dtype=np.float64))
    conds = np.broadcast_to(np.asarray(cond, dtype=np.float64), (batch.shape[0], len(cond)))
    return np.concatenate([batch, conds], axis=1)


def _check_batch(batch, width, what):
    batch = np.atleast_2d(np.asarray(batch, dtype=np.float64))
    if batch.shape[0] == 0:
        raise InvalidArgumentError(f"lot {what} vide")
    if batch.shape[1] != width:
        raise InvalidArgumentError(f"lot {what} de largeur {batch.shape[1]}, {width} attendue")
    return batch


def generate(pair, noise_batch, cond):
    """
    Sorties du générateur G(z | c), forme encodée

    Returns:
        np.ndarray: (batch, data_dim)
    """
    spec = pair.spec
    noise_batch = _check_batch(noise_batch, spec.noise_dim, "de bruit")
    return forward(spec.gen_spec, pair.gen_params, _with_condition(noise_batch, cond))


def discriminate(pair, data_batch, cond):
    """
    Sorties du discriminateur D(x | c)

    Returns:
        np.ndarray: (batch,) probabilités d'être réel
    """
    spec = pair.spec
    data_batch = _check_batch(data_batch, spec.data_dim, "de données")
    return forward(spec.disc_spec, pair.disc_params, _with_condition(data_batch, cond))[:, 0]


def disc_loss_and_grad(pair, real_batch, fake_batch, cond):
    """
    Perte du discriminateur et son gradient par rapport à ses paramètres

    Returns:
        tuple: (perte, gradient)
    """
    spec = pair.spec
    real = _check_batch(real_batch, spec.data_dim, "réel")
    fake = _check_batch(fake_batch, spec.data_dim, "généré")
    real_in = _with_condition(real, cond)
    fake_in = _with_condition(fake, cond)

    p_real = forward(spec.disc_spec, pair.disc_params, real_in)[:, 0]
    p_fake = forward(spec.disc_spec, pair.disc_params, fake_in)[:, 0]
    loss = cross_entropy(1.0, p_real).mean() + cross_entropy(0.0, p_fake).mean()

    g_real = _cross_entropy_grad(1.0, p_real) / real.shape[0]
    g_fake = _cross_entropy_grad(0.0, p_fake) / fake.shape[0]
    grad_real, _ = backward(spec.disc_spec, pair.disc_params, real_in, g_real[:, None])
    grad_fake, _ = backward(spec.disc_spec, pair.disc_params, fake_in, g_fake[:, None])
    return float(loss), grad_real + grad_fake


def disc_loss(pair, real_batch, fake_batch, cond):
    """
    Perte du discriminateur (opposé de l'objectif intérieur du min-max conditionnel)

    Moyenne de H(1, D(x|c)) sur les échantillons réels plus moyenne de
    H(0, D(x̃|c)) sur les sorties du générateur.

    Args:
        pair (GanPair): Paire courante
        real_batch (np.ndarray): Échantillons réels encodés (batch, data_dim)
        fake_batch (np.ndarray): Sorties du générateur (batch, data_dim)
        cond (np.ndarray): Condition one-hot

    Returns:
        float: Perte

    Raises:
        InvalidArgumentError: Lot vide ou de mauvaise largeur
    """
    real = _check_batch(real_batch, pair.spec.data_dim, "réel")
    fake = _check_batch(fake_batch, pair.spec.data_dim, "généré")
    p_real = discriminate(pair, real, cond)
    p_fake = discriminate(pair, fake, cond)
    return float(cross_entropy(1.0, p_real).mean() + cross_entropy(0.0, p_fake).mean())


def _gen_objective(variant, p):
    p_clipped = np.clip(p, PREDICTION_EPS, 1.0 - PREDICTION_EPS)
    inside = (p > PREDICTION_EPS) & (p < 1.0 - PREDICTION_EPS)
    if variant == "minimax":
        return np.log(1.0 - p_clipped), np.where(inside, -1.0 / (1.0 - p_clipped), 0.0)
    return -np.log(p_clipped), np.where(inside, -1.0 / p_clipped, 0.0)


def gen_loss_and_grad(pair, noise_batch, cond):
    """
    Perte du générateur et son gradient, propagé à travers D puis G

    Returns:
        tuple: (perte, gradient par rapport aux paramètres du générateur)
    """
    spec = pair.spec
    noise = _check_batch(noise_batch, spec.noise_dim, "de bruit")
    gen_in = _with_condition(noise, cond)
    fake = forward(spec.gen_spec, pair.gen_params, gen_in)
    disc_in = _with_condition(fake, cond)
    p = forward(spec.disc_spec, pair.disc_params, disc_in)[:, 0]

    values, dp = _gen_objective(spec.loss_variant, p)
    _, disc_input_grad = backward(spec.disc_spec, pair.disc_params, disc_in, (dp / noise.shape[0])[:, None])
    gen_grad, _ = backward(spec.gen_spec, pair.gen_params, gen_in, disc_input_grad[:, :spec.data_dim])
    return float(values.mean()), gen_grad


def gen_loss(pair, noise_batch, cond):
    """
    Perte du générateur

    minimax: moyenne de log(1 - D(G(z|c)|c));
    non_saturating: moyenne de -log D(G(z|c)|c).

    Args:
        pair (GanPair): Paire courante
        noise_batch (np.ndarray): Bruits (batch, noise_dim)
        cond (np.ndarray): Condition one-hot

    Returns:
        float: Perte
    """
    fake = generate(pair, noise_batch, cond)
    values, _ = _gen_objective(pair.spec.loss_variant, discriminate(pair, fake, cond))
    return float(values.mean())


def sample_noise(rng, n, noise_dim):
    """
    Bruit gaussien standard z
    """
    return rng.standard_normal((n, noise_dim))


def gan_step(pair, real_batch, cond, rng):
    """
    Un pas d'entraînement alterné

    Mise à jour du discriminateur sur des sorties fraîches du générateur,
    puis du générateur sur un bruit frais, chacune avec l'optimiseur de la
    paire. Les pertes retournées sont évaluées après les deux mises à jour.

    Args:
        pair (GanPair): Paire courante (non modifiée)
        real_batch (np.ndarray): Échantillons réels encodés
        cond (np.ndarray): Condition one-hot
        rng (np.random.Generator): Flux aléatoire

    Returns:
        tuple: (nouvelle paire, perte du discriminateur, perte du générateur)

    Raises:
        InvalidArgumentError: Lot vide
        NumericError: Gradient non fini
    """
    spec = pair.spec
    real = _check_batch(real_batch, spec.data_dim, "réel")
    batch_size = real.shape[0]

    fake = generate(pair, sample_noise(rng, batch_size, spec.noise_dim), cond)
    _, disc_grad = disc_loss_and_grad(pair, real, fake, cond)
    disc_params, disc_opt = optimizer_step(pair.disc_opt, pair.disc_params, disc_grad)
    pair = replace(pair, disc_params=disc_params, disc_opt=disc_opt)

    noise = sample_noise(rng, batch_size, spec.noise_dim)
    _, gen_grad = gen_loss_and_grad(pair, noise, cond)
    gen_params, gen_opt = optimizer_step(pair.gen_opt, pair.gen_params, gen_grad)
    pair = replace(pair, gen_params=gen_params, gen_opt=gen_opt)

    d_value = disc_loss(pair, real, generate(pair, noise, cond), cond)
    g_value = gen_loss(pair, noise, cond)
    return pair, d_value, g_value


def sample_batch(encoded, batch_size, rng):
    """
    Tire un lot sans remise (avec remise si le jeu est plus petit que le lot)

    Args:
        encoded (np.ndarray): Échantillons encodés (n, data_dim)
        batch_size (int): Taille du lot
        rng (np.random.Generator): Flux aléatoire

    Returns:
        np.ndarray: Lot (batch_size, data_dim)
    """
    n = encoded.shape[0]
    if n == 0:
        raise InvalidArgumentError("jeu de données vide")
    indices = rng.choice(n, size=batch_size, replace=batch_size > n)
    return encoded[indices]


def train_cgan(pair, dataset, cond, steps, batch_size, scale, rng, log_interval=100, progress=False):
    """
    Entraînement classique (sans apprentissage méta) sur un seul jeu de données

    Args:
        pair (GanPair): Paire de départ
        dataset (WirelessDataset): Échantillons réels
        cond (np.ndarray): Condition one-hot
        steps (int): Nombre de pas alternés
        batch_size (int): Taille des lots
        scale (float): Échelle d'encodage
        rng (np.random.Generator): Flux aléatoire

    Returns:
        tuple: (paire entraînée, liste des enregistrements {step, disc_loss, gen_loss})
    """
    dataset.require_nonempty()
    encoded = encode_sample(dataset.raw_samples(), scale)
    trace = []
    iterator = range(1, steps + 1)
    if progress:
        iterator = tqdm(iterator, desc="CGAN", unit="pas", leave=False)
    for step in iterator:
        pair, d_value, g_value = gan_step(pair, sample_batch(encoded, batch_size, rng), cond, rng)
        if step % log_interval == 0 or step == steps:
            trace.append({"step": step, "disc_loss": d_value, "gen_loss": g_value})
            logger.info(f"CGAN pas {step}/{steps}: perte D {d_value:.4f}, perte G {g_value:.4f}")
    return pair, trace


def synthesize(pair, cond, n, scale, rng):
    """
    Synthétise n canaux pour la condition donnée

    Args:
        pair (GanPair): Paire entraînée
        cond (np.ndarray): Condition one-hot
        n (int): Nombre d'échantillons
        scale (float): Échelle d'encodage (les canaux produits sont en unités physiques)
        rng (np.random.Generator): Flux aléatoire

    Returns:
        WirelessDataset: Jeu synthétisé (scale = 1.0)

    Raises:
        InvalidArgumentError: n < 1
    """
    if n < 1:
        raise InvalidArgumentError(f"n doit être >= 1 (reçu {n})")
    spec = pair.spec
    index = condition_index(cond)
    nt = spec.data_dim // 2

    samples = np.empty((n, nt), dtype=np.complex128)
    for start in range(0, n, SYNTH_CHUNK):
        stop = min(start + SYNTH_CHUNK, n)
        noise = sample_noise(rng, stop - start, spec.noise_dim)
        samples[start:stop] = decode_sample(generate(pair, noise, cond), scale)

    return WirelessDataset(
        nt=nt,
        samples=samples,
        condition_index=index,
        scale=1.0,
        meta={
            "source": "synthesized",
            "method": "cgan",
            "generator_digest": pair.generator_digest(),
            "gan_spec_digest": spec.digest(),
            "encoding_scale": float(scale),
        },
    )
