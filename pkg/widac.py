#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
WiDaC - Génération de jeux de données de canaux sans fil par CGAN méta-appris

Ce script principal enchaîne les étapes du pipeline: génération des canaux
de référence, apprentissage méta du CGAN sur plusieurs environnements,
ajustement fin sur l'environnement cible, synthèse, entraînement et
évaluation d'estimateurs de canal, références SMOTE et comptage des flops.
"""

import sys
import json
import argparse
import logging
from contextlib import contextmanager
from pathlib import Path

from modules.baselines.flops import flops_generator, flops_smote, flops_rows, render_flops_table
from modules.baselines.smote import smote_generate
from modules.channel.model import generate_dataset, path_gain_variance
from modules.common.errors import WidacError, ConfigError, StageError, InvalidArgumentError, DataLeakageError
from modules.common.rng import derive_rng, derive_seed
from modules.estimator.estimator import PilotConfig, train_estimator, eval_mse
from modules.gan.cgan import GanSpec, init_pair, make_condition, train_cgan, synthesize
from modules.meta.trainer import (
    MetaConfig, CganObjective, meta_train, fine_tune, normalization_scale, split_validation,
)
from modules.metrics.quality import path_gain, tv_distance, loss_gap_report, default_range
from utils.config import load_config, build_environments
from utils.logging import setup_logging, verbosity_to_level, RunLogger
from utils.manifest import RunManifest, RunJournal, verify_manifest
from utils.reporting import ReportGenerator, render_mse_table, render_gain_table
from utils.storage import (
    GAN_SPEC_FILE, GENERATOR_FILE, DISCRIMINATOR_FILE, ESTIMATOR_SPEC_FILE, ESTIMATOR_FILE,
    atomic_write, save_dataset, load_dataset, import_csv, export_csv, save_gan, load_gan, save_estimator, load_estimator,
)

__version__ = "1.0.0"

VALIDATION_FRACTION = 0.1
GAIN_PROBE_SAMPLES = 2000
INVENTORY_FILE = "datasets.json"


def banner():
    """
    Affiche la bannière du programme
    """
    print("""
    ╔══════════════════════════════════════════════╗
    ║                    WIDAC                     ║
    ║   Génération de jeux de données sans fil     ║
    ║                   v{}                     ║
    ╚══════════════════════════════════════════════╝
    """.format(__version__))


def parse_arguments(argv=None):
    """
    Parse les arguments de ligne de commande
    """
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--config', type=str, help='Fichier de configuration (TOML, YAML ou manifest.json)')
    common.add_argument('--seed', type=int, help='Graine de l\'exécution')
    common.add_argument('--out-dir', type=str, default='widac_out', help='Répertoire de sortie')
    common.add_argument('--scale', choices=['desk', 'paper'], help='Préréglage de taille des expériences')
    common.add_argument('--datasets-dir', type=str,
                        help='Répertoire des jeux de données (défaut: <out-dir>/datasets)')
    common.add_argument('--verbose', '-v', action='count', default=0, help='Niveau de verbosité (v, vv)')

    parser = argparse.ArgumentParser(description="Génération de jeux de données de canaux sans fil")
    parser.add_argument('--version', action='version', version=f'WiDaC v{__version__}')
    sub = parser.add_subparsers(dest='command', required=True)

    sub.add_parser('gen-channels', parents=[common], help='Génère les jeux de référence de chaque environnement')
    sub.add_parser('meta-train', parents=[common], help='Apprentissage méta du CGAN sur les environnements méta')

    p = sub.add_parser('fine-tune', parents=[common], help='Ajustement fin sur l\'environnement cible')
    p.add_argument('--gan', type=str, help='CGAN méta-appris (défaut: <out-dir>/checkpoints/meta_gan)')

    sub.add_parser('train-cgan', parents=[common], help='CGAN classique entraîné sur la cible seule')

    p = sub.add_parser('synthesize', parents=[common], help='Synthétise des canaux avec un CGAN enregistré')
    p.add_argument('--gan', type=str, required=True, help='Répertoire du CGAN')
    p.add_argument('--env', type=str, help='Environnement (défaut: la cible)')
    p.add_argument('--n', type=int, help='Nombre d\'échantillons (défaut: samples.synth)')
    p.add_argument('--label', type=str, default='cgan', help='Étiquette du jeu produit')
    p.add_argument('--csv', type=str, help='Exporte aussi le jeu produit en CSV (Re, Im entrelacés)')

    p = sub.add_parser('train-estimator', parents=[common], help='Entraîne un estimateur de canal')
    p.add_argument('--train', type=str, required=True, help='Jeu d\'entraînement WDC1')
    p.add_argument('--label', type=str, help='Étiquette de l\'estimateur (défaut: nom du fichier)')

    p = sub.add_parser('evaluate', parents=[common], help='Évalue des estimateurs enregistrés')
    p.add_argument('--estimator', action='append', required=True, metavar='LABEL=DIR',
                   help='Estimateur à évaluer (répétable)')
    p.add_argument('--test', type=str, help='Jeu de test WDC1 (défaut: jeu de test de la cible)')

    p = sub.add_parser('smote', parents=[common], help='Génère des canaux par SMOTE')
    p.add_argument('--input', type=str, help='Jeu de base WDC1 (défaut: échantillons de la cible)')
    p.add_argument('--n', type=int, help='Nombre d\'échantillons (défaut: samples.synth)')
    p.add_argument('--k', type=int, help='Nombre de voisins (défaut: smote.k)')

    sub.add_parser('flops-report', parents=[common], help='Coût de génération par échantillon')

    p = sub.add_parser('diagnostics', parents=[common], help='Gains de trajet, variation totale, écart de pertes')
    p.add_argument('--gan', type=str, help='CGAN à diagnostiquer')

    sub.add_parser('repro-fig3a', parents=[common], help='Pipeline complet et courbes de NMSE')

    p = sub.add_parser('verify', parents=[common], help='Vérifie les sorties listées dans un manifeste')
    p.add_argument('--manifest', type=str, help='Manifeste (défaut: <out-dir>/manifest.json)')

    return parser.parse_args(argv)


class Run:
    """
    Contexte d'une exécution: configuration, flux aléatoires, manifeste, journal et rapports
    """

    def __init__(self, args, config):
        self.args = args
        self.config = config
        self.seed = config["run"]["seed"]
        self.out_dir = Path(args.out_dir)
        self.datasets_dir = Path(args.datasets_dir) if args.datasets_dir else self.out_dir / "datasets"
        self.manifest = RunManifest(self.out_dir, config, args.command, __version__)
        self.run_id = f"{args.command}-{self.manifest.config_digest[:8]}"
        self.log = RunLogger("widac", run_id=self.run_id)
        self.journal = RunJournal(self.run_id, self.out_dir)
        self.report = ReportGenerator(self.out_dir, self.run_id)
        self.environments = build_environments(config)
        self.progress = args.verbose > 0 and sys.stderr.isatty()

    @property
    def num_envs(self):
        return len(self.environments)

    @property
    def meta_envs(self):
        return [env for env in self.environments if env.role == "meta"]

    @property
    def target_env(self):
        return next(env for env in self.environments if env.role == "target")

    def environment(self, name):
        for env in self.environments:
            if env.name == name:
                return env
        raise ConfigError(f"environnement inconnu: {name}", field_path="environments")

    def rng(self, *keys):
        return derive_rng(self.seed, *keys)

    def condition(self, env):
        return make_condition(env.index, self.num_envs)

    @contextmanager
    def stage(self, name):
        """
        Exécute une étape: journal d'audit, messages console et erreurs typées
        """
        print(f"[*] Étape: {name}")
        self.journal.record(f"Stage started: {name}")
        try:
            yield self.log.for_stage(name)
        except ConfigError:
            raise
        except (WidacError, OSError) as e:
            if isinstance(e, StageError):
                raise
            self.journal.record(f"Stage failed: {name}", error=str(e))
            raise StageError(name, str(e)) from e
        except Exception as e:
            self.journal.record(f"Stage failed: {name}", error=f"{type(e).__name__}: {e}")
            raise
        self.journal.record(f"Stage completed: {name}")
        print(f"[+] Étape {name} terminée")

    def output(self, stage, path):
        digest = self.manifest.add_output(stage, path)
        self.journal.record(f"Output written: {Path(path).name}", sha256=digest)
        return path

    def write_dataset(self, stage, dataset, path):
        path.parent.mkdir(parents=True, exist_ok=True)
        save_dataset(dataset, path)
        return self.output(stage, path)

    def write_gan(self, stage, pair, directory, extra):
        save_gan(pair, directory, extra)
        for name in (GAN_SPEC_FILE, GENERATOR_FILE, DISCRIMINATOR_FILE):
            self.output(stage, directory / name)
        return directory


def gan_spec(run):
    gan = run.config["gan"]
    return GanSpec.build(
        noise_dim=gan["noise_dim"],
        num_envs=run.num_envs,
        data_dim=2 * run.config["channel"]["nt"],
        gen_hidden=tuple(gan["hidden"]),
        loss_variant=gan["loss_variant"],
    )


def meta_config(run):
    meta = run.config["meta"]
    return MetaConfig(
        alpha=meta["alpha"],
        beta=meta["beta"],
        gamma=meta["gamma"],
        inner_steps=meta["inner_steps"],
        meta_iters=meta["meta_iters"],
        fine_tune_iters=meta["fine_tune_iters"],
        batch_size=meta["batch_size"],
        meta_grad_mode=meta["meta_grad_mode"],
        seed=derive_seed(run.seed, "meta"),
        log_interval=run.config["run"]["log_interval"],
    )


def new_pair(run, key):
    gan = run.config["gan"]
    return init_pair(gan_spec(run), run.rng(key), lr=gan["lr"], beta1=gan["beta1"], beta2=gan["beta2"])


# -- jeux de données ----------------------------------------------------------

def stage_gen_channels(run):
    """
    Jeux de référence: un fichier par environnement méta, plus les fichiers
    cible (ajustement fin), test et entraînement de référence de la cible
    """
    samples = run.config["samples"]
    nt = run.config["channel"]["nt"]
    inventory = {"environments": [], "target": None, "test": None, "genie": None}

    with run.stage("gen-channels") as log:
        for env in run.meta_envs:
            if env.csv:
                dataset = import_csv(env.csv, nt, env.index)
            else:
                dataset = generate_dataset(env.channel, samples["meta_per_env"], env.index, run.progress)
            path = run.write_dataset("gen-channels", dataset, run.datasets_dir / f"{env.name}_meta.wdc")
            inventory["environments"].append({"name": env.name, "index": env.index, "file": path.name})
            log.metric(f"gain de trajet {env.name}", path_gain(dataset))

        env = run.target_env
        if env.csv:
            imported = import_csv(env.csv, nt, env.index)
            order = run.rng("target-split").permutation(len(imported))
            if len(imported) <= samples["target"]:
                raise InvalidArgumentError(
                    f"{len(imported)} canaux dans {env.csv}: il en faut plus de {samples['target']} (cible + test)"
                )
            target = imported.subset(order[:samples["target"]], split="target")
            test = imported.subset(order[samples["target"]:], split="test")
            genie = None
        else:
            target = generate_dataset(env.channel, samples["target"], env.index, run.progress)
            test_cfg = env.channel.with_updates(seed=derive_seed(run.seed, "test", env.index))
            test = generate_dataset(test_cfg, samples["estimator_test"], env.index, run.progress)
            genie_cfg = env.channel.with_updates(seed=derive_seed(run.seed, "genie", env.index))
            genie = generate_dataset(genie_cfg, samples["synth"], env.index, run.progress)

        inventory["target"] = run.write_dataset("gen-channels", target, run.datasets_dir / f"{env.name}_target.wdc").name
        inventory["test"] = run.write_dataset("gen-channels", test, run.datasets_dir / f"{env.name}_test.wdc").name
        if genie is not None:
            inventory["genie"] = run.write_dataset(
                "gen-channels", genie, run.datasets_dir / f"{env.name}_genie.wdc").name
        inventory["target_env"] = {"name": env.name, "index": env.index}

        index_path = run.datasets_dir / INVENTORY_FILE
        atomic_write(index_path, [(json.dumps(inventory, sort_keys=True, indent=2) + "\n").encode("utf-8")])
        run.output("gen-channels", index_path)
        log.info(f"{len(inventory['environments'])} environnements méta et la cible {env.name} écrits")
    return inventory


class Inventory:
    """
    Jeux de données écrits par gen-channels, chargés à la demande
    """

    def __init__(self, run):
        index_path = run.datasets_dir / INVENTORY_FILE
        if not index_path.is_file():
            raise FileNotFoundError(f"{index_path} absent: lancer d'abord gen-channels")
        self.run = run
        self.document = json.loads(index_path.read_text(encoding="utf-8"))
        self._cache = {}

    def _load(self, name):
        if name not in self._cache:
            self._cache[name] = load_dataset(self.run.datasets_dir / name)
        return self._cache[name]

    @property
    def meta(self):
        return [self._load(entry["file"]) for entry in self.document["environments"]]

    @property
    def target(self):
        return self._load(self.document["target"])

    @property
    def test(self):
        return self._load(self.document["test"])

    @property
    def genie(self):
        return self._load(self.document["genie"]) if self.document.get("genie") else None

    def splits(self):
        """
        Séparation entraînement / validation de chaque jeu méta (déterministe)

        Returns:
            tuple: (jeux d'entraînement, jeux de validation)
        """
        trains, vals = [], []
        for dataset in self.meta:
            train, val = split_validation(dataset, VALIDATION_FRACTION, self.run.rng("split", dataset.condition_index))
            trains.append(train)
            vals.append(val if val is not None else train)
        return trains, vals

    def encoding_scale(self):
        trains, _ = self.splits()
        return normalization_scale(trains)


def reference_power(run, inventory):
    """
    Puissance de référence du SNR: gain théorique de la cible, gain mesuré si la cible est importée
    """
    env = run.target_env
    if env.csv:
        return path_gain(inventory.target)
    return path_gain_variance(env.channel)


def pilot_config(run, inventory):
    est = run.config["estimator"]
    return PilotConfig.dft(
        nt=run.config["channel"]["nt"],
        num_pilots=est["num_pilots"],
        snr_grid_db=est["snr_grid_db"],
        reference_power=reference_power(run, inventory),
        seed=derive_seed(run.seed, "pilots"),
    )


# -- CGAN ---------------------------------------------------------------------

def stage_meta_train(run, inventory):
    cfg = meta_config(run)
    spec = gan_spec(run)
    trains, vals = inventory.splits()
    scale = normalization_scale(trains)
    conds = [make_condition(ds.condition_index, run.num_envs) for ds in trains]

    with run.stage("meta-train") as log:
        log.info(f"échelle d'encodage {scale:.6g}, {len(trains)} environnements, {cfg.meta_iters} itérations")
        objective = CganObjective(scale, batch_size=cfg.batch_size, probe_samples=GAIN_PROBE_SAMPLES)
        pair, trace = meta_train(
            spec, trains, conds, cfg, run.rng("meta-train"),
            objective=objective, validation=vals, initial=new_pair(run, "meta-init"), progress=run.progress,
        )
        directory = run.write_gan("meta-train", pair, run.out_dir / "checkpoints" / "meta_gan", {
            "encoding_scale": scale,
            "environments": [env.name for env in run.environments],
            "stage": "meta-train",
        })
        run.output("meta-train", run.report.write_table("meta_trace.csv", trace.to_rows()))

        smoothed = trace.smoothed_losses()
        final_gains = trace.records[-1].path_gains if trace.records else {}
        metrics = {
            "encoding_scale": scale,
            "meta_loss_start_end": list(smoothed) if smoothed else None,
            "final_path_gains": {run.environments[k].name: v for k, v in sorted(final_gains.items())},
            "genie_path_gains": {run.environments[ds.condition_index].name: path_gain(ds) for ds in inventory.meta},
        }
        run.report.add_metrics("meta-train", metrics)
        run.manifest.add_summary("meta-train", generator_digest=pair.generator_digest(), encoding_scale=scale)
        for name, gain in metrics["final_path_gains"].items():
            log.metric(f"gain synthétisé {name}", f"{gain:.4f}", step=cfg.meta_iters)
    return pair, scale, directory


def stage_fine_tune(run, inventory, pair, scale):
    cfg = meta_config(run)
    env = run.target_env
    with run.stage("fine-tune") as log:
        objective = CganObjective(scale, batch_size=cfg.batch_size)
        tuned, losses = fine_tune(
            pair, inventory.target, run.condition(env), cfg, run.rng("fine-tune"),
            objective=objective, progress=run.progress,
        )
        directory = run.write_gan("fine-tune", tuned, run.out_dir / "checkpoints" / "finetuned_gan", {
            "encoding_scale": scale,
            "environments": [e.name for e in run.environments],
            "stage": "fine-tune",
        })
        run.output("fine-tune", run.report.write_table("finetune_trace.csv", losses,
                                                         columns=["iteration", "disc_loss", "gen_loss"]))
        run.manifest.add_summary("fine-tune", generator_digest=tuned.generator_digest())
        if losses:
            log.metric("perte D finale", f"{losses[-1]['disc_loss']:.4f}", step=len(losses))
    return tuned, directory


def stage_train_cgan(run, inventory):
    gan = run.config["gan"]
    env = run.target_env
    scale = inventory.encoding_scale()
    with run.stage("train-cgan") as log:
        pair, trace = train_cgan(
            new_pair(run, "cgan-init"), inventory.target, run.condition(env), gan["cgan_steps"],
            gan["batch_size"], scale, run.rng("train-cgan"),
            log_interval=run.config["run"]["log_interval"], progress=run.progress,
        )
        directory = run.write_gan("train-cgan", pair, run.out_dir / "checkpoints" / "cgan", {
            "encoding_scale": scale,
            "environments": [e.name for e in run.environments],
            "stage": "train-cgan",
        })
        run.output("train-cgan", run.report.write_table("cgan_trace.csv", trace,
                                                          columns=["step", "disc_loss", "gen_loss"]))
        run.manifest.add_summary("train-cgan", generator_digest=pair.generator_digest())
        log.info(f"CGAN classique entraîné sur {len(inventory.target)} échantillons")
    return pair, directory


def synthesize_from(run, pair, extra, env, n, label):
    stage = f"synthesize-{label}"
    with run.stage(stage) as log:
        dataset = synthesize(pair, run.condition(env), n, extra["encoding_scale"], run.rng("synthesize", label))
        dataset.meta["label"] = label
        path = run.write_dataset(stage, dataset, run.datasets_dir / f"synth_{label}.wdc")
        log.metric(f"gain de trajet synthétisé ({env.name})", f"{path_gain(dataset):.4f}")
    return dataset, path


# -- estimateurs ----------------------------------------------------------------

def ensure_disjoint(train, test, label):
    """
    Refuse un jeu d'entraînement qui contient des canaux du jeu de test

    Raises:
        DataLeakageError: Même empreinte ou au moins un canal commun
    """
    if train.digest() == test.digest():
        raise DataLeakageError(f"le jeu d'entraînement {label} est le jeu de test")
    held_out = {row.tobytes() for row in test.raw_samples()}
    shared = sum(row.tobytes() in held_out for row in train.raw_samples())
    if shared:
        raise DataLeakageError(f"le jeu d'entraînement {label} contient {shared} canaux du jeu de test")


def stage_train_estimator(run, dataset, label, pilots, test=None):
    est = run.config["estimator"]
    stage = f"train-estimator-{label}"
    with run.stage(stage) as log:
        if test is not None:
            ensure_disjoint(dataset, test, label)
        net = train_estimator(
            dataset, pilots, est["epochs"], run.rng("estimator", label),
            batch_size=est["batch_size"], lr=est["lr"], hidden=est["hidden"], depth=est["depth"],
            progress=run.progress,
        )
        directory = run.out_dir / "estimators" / label
        save_estimator(net, pilots, directory)
        run.output(stage, directory / ESTIMATOR_SPEC_FILE)
        run.output(stage, directory / ESTIMATOR_FILE)
        if net.history:
            log.metric("perte d'entraînement finale", f"{net.history[-1]:.5f}", step=len(net.history))
    return directory


def stage_evaluate(run, estimators, test):
    """
    NMSE de chaque estimateur sur le même jeu de test et le même bruit

    Args:
        estimators (dict): {étiquette: répertoire de l'estimateur}
        test (WirelessDataset): Canaux de test
    """
    curves = {}
    with run.stage("evaluate") as log:
        for label, directory in estimators.items():
            net, pilots = load_estimator(directory)
            curve = eval_mse(net, test, pilots, run.rng("evaluate"))
            curves[label] = curve
            if curve.excluded:
                log.warning(f"{label}: {curve.excluded} canaux de test nuls exclus")
        run.output("evaluate", run.report.write_mse_curves(curves, run.seed))
        run.report.add_metrics("evaluate", {label: [list(p) for p in curve] for label, curve in curves.items()})
    print(render_mse_table(curves))
    return curves


# -- références et diagnostics -----------------------------------------------

def stage_smote(run, base, n, k):
    with run.stage("smote") as log:
        dataset = smote_generate(base, k, n, run.rng("smote"))
        path = run.write_dataset("smote", dataset, run.datasets_dir / "synth_smote.wdc")
        if len(dataset):
            log.metric("gain de trajet SMOTE", f"{path_gain(dataset):.4f}")
    return dataset, path


def stage_flops(run):
    flops = run.config["flops"]
    with run.stage("flops-report"):
        reports = [
            flops_generator(gan_spec(run).gen_spec, method="d-widac"),
            flops_smote(flops["n_dataset"], flops["dim"], flops["k"]),
        ]
        run.output("flops-report", run.report.write_table("flops.csv", flops_rows(reports)))
        run.output("flops-report", run.report.write_json("flops.json", [r.to_dict() for r in reports]))
        run.report.add_metrics("flops", {r.method: r.flops for r in reports})
    print(render_flops_table(reports))
    return reports


def stage_diagnostics(run, inventory, gan_dir=None):
    metrics_cfg = run.config["metrics"]
    meta, target = inventory.meta, inventory.target
    names = {env.index: env.name for env in run.environments}
    with run.stage("diagnostics") as log:
        gains = {names[ds.condition_index]: path_gain(ds) for ds in [*meta, target]}
        closed_form = {env.name: path_gain_variance(env.channel) for env in run.environments if not env.csv}
        value_range = default_range([*meta, target]) if metrics_cfg["tv_feature"] == "path_gain_per_sample" else None
        tv = {
            names[ds.condition_index]: tv_distance(ds, target, metrics_cfg["tv_feature"], metrics_cfg["bins"],
                                                   value_range)
            for ds in meta
        }
        result = {"path_gains": gains, "closed_form_gains": closed_form, "tv_to_target": tv}

        if gan_dir:
            pair, extra = load_gan(gan_dir)
            scale = extra["encoding_scale"]
            rng = run.rng("diagnostics")
            result["synthesized_gains"] = {
                env.name: path_gain(synthesize(pair, run.condition(env), GAIN_PROBE_SAMPLES, scale, rng))
                for env in run.environments
            }
            conds = [make_condition(ds.condition_index, run.num_envs) for ds in meta] + [run.condition(run.target_env)]
            result["loss_gap"] = loss_gap_report(pair, meta, target, conds, scale, rng, bins=metrics_cfg["bins"])
            log.metric("écart de pertes", f"{result['loss_gap']['gap']:.4f}")
            log.metric("variation totale (approximation)", f"{result['loss_gap']['tv_proxy']:.4f}")

        run.output("diagnostics", run.report.write_json("diagnostics.json", result))
        run.report.add_metrics("diagnostics", result)
    print(render_gain_table(gains))
    return result


# -- sous-commandes -----------------------------------------------------------

def _gan_dir(run, default):
    return Path(run.args.gan) if getattr(run.args, "gan", None) else run.out_dir / "checkpoints" / default


def cmd_gen_channels(run):
    stage_gen_channels(run)


def cmd_meta_train(run):
    stage_meta_train(run, Inventory(run))


def cmd_fine_tune(run):
    inventory = Inventory(run)
    pair, extra = load_gan(_gan_dir(run, "meta_gan"))
    stage_fine_tune(run, inventory, pair, extra["encoding_scale"])


def cmd_train_cgan(run):
    stage_train_cgan(run, Inventory(run))


def cmd_synthesize(run):
    pair, extra = load_gan(run.args.gan)
    env = run.environment(run.args.env) if run.args.env else run.target_env
    n = run.args.n if run.args.n is not None else run.config["samples"]["synth"]
    dataset, _ = synthesize_from(run, pair, extra, env, n, run.args.label)
    if run.args.csv:
        csv_path = Path(run.args.csv)
        csv_path.parent.mkdir(parents=True, exist_ok=True)
        export_csv(dataset, csv_path)
        run.output(f"synthesize-{run.args.label}", csv_path)


def cmd_train_estimator(run):
    inventory = Inventory(run)
    path = Path(run.args.train)
    stage_train_estimator(run, load_dataset(path), run.args.label or path.stem, pilot_config(run, inventory),
                          test=inventory.test)


def cmd_evaluate(run):
    estimators = {}
    for item in run.args.estimator:
        label, sep, directory = item.partition("=")
        if not sep or not label or not directory:
            raise ConfigError(f"estimateur attendu sous la forme LABEL=DIR: {item}", field_path="estimator")
        estimators[label] = Path(directory)
    test = load_dataset(run.args.test) if run.args.test else Inventory(run).test
    stage_evaluate(run, estimators, test)


def cmd_smote(run):
    base = load_dataset(run.args.input) if run.args.input else Inventory(run).target
    n = run.args.n if run.args.n is not None else run.config["samples"]["synth"]
    k = run.args.k if run.args.k is not None else run.config["smote"]["k"]
    stage_smote(run, base, n, k)


def cmd_flops_report(run):
    stage_flops(run)


def cmd_diagnostics(run):
    stage_diagnostics(run, Inventory(run), run.args.gan)


def cmd_repro_fig3a(run):
    """
    Pipeline complet: canaux de référence, apprentissage méta, ajustement
    fin, CGAN classique, synthèse, trois estimateurs et courbes de NMSE
    """
    samples = run.config["samples"]
    stage_gen_channels(run)
    inventory = Inventory(run)
    target_env = run.target_env

    meta_pair, scale, _ = stage_meta_train(run, inventory)
    tuned, tuned_dir = stage_fine_tune(run, inventory, meta_pair, scale)
    cgan_pair, cgan_dir = stage_train_cgan(run, inventory)

    dwidac_set, _ = synthesize_from(run, *load_gan(tuned_dir), target_env, samples["synth"], "dwidac")
    cgan_set, _ = synthesize_from(run, *load_gan(cgan_dir), target_env, samples["synth"], "cgan")
    meta_only = synthesize(meta_pair, run.condition(target_env), GAIN_PROBE_SAMPLES, scale,
                           run.rng("synthesize", "meta-only"))

    pilots = pilot_config(run, inventory)
    estimators = {}
    if inventory.genie is not None:
        estimators["genie"] = stage_train_estimator(run, inventory.genie, "genie", pilots, test=inventory.test)
    estimators["dwidac"] = stage_train_estimator(run, dwidac_set, "dwidac", pilots, test=inventory.test)
    estimators["cgan"] = stage_train_estimator(run, cgan_set, "cgan", pilots, test=inventory.test)
    curves = stage_evaluate(run, estimators, inventory.test)

    reports = stage_flops(run)

    target_gains = {
        "genie": path_gain(inventory.test),
        "meta-only": path_gain(meta_only),
        "fine-tuned": path_gain(dwidac_set),
        "cgan": path_gain(cgan_set),
    }
    reduction = (samples["synth"] - samples["target"]) / samples["synth"]
    run.report.add_metrics("target_path_gains", target_gains)
    run.report.add_metrics("sample_reduction", {
        "synthesized": samples["synth"], "target": samples["target"], "ratio": reduction,
    })
    print(render_gain_table(target_gains))
    print(f"[+] Réduction des échantillons cibles: {100.0 * reduction:.1f} %")

    snrs = [snr for snr, _ in next(iter(curves.values()))]
    run.report.generate_html(
        title="WiDaC - comparaison des jeux d'entraînement",
        summary={
            "Graine": run.seed,
            "Préréglage": run.config["run"]["scale"],
            "Empreinte de configuration": run.manifest.config_digest,
            "Réduction des échantillons cibles": f"{100.0 * reduction:.1f} %",
        },
        tables={
            "NMSE par SNR": {
                "headers": ["SNR (dB)", *curves.keys()],
                "rows": [[snr, *[f"{dict(c.points)[snr]:.4e}" for c in curves.values()]] for snr in snrs],
            },
            "Gains de trajet (cible)": {
                "headers": ["Jeu", "Gain"],
                "rows": [[k, f"{v:.4f}"] for k, v in target_gains.items()],
            },
            "Flops par échantillon": {
                "headers": ["Méthode", "Flops"],
                "rows": [[r.method, r.flops] for r in reports],
            },
        },
    )


COMMANDS = {
    "gen-channels": cmd_gen_channels,
    "meta-train": cmd_meta_train,
    "fine-tune": cmd_fine_tune,
    "train-cgan": cmd_train_cgan,
    "synthesize": cmd_synthesize,
    "train-estimator": cmd_train_estimator,
    "evaluate": cmd_evaluate,
    "smote": cmd_smote,
    "flops-report": cmd_flops_report,
    "diagnostics": cmd_diagnostics,
    "repro-fig3a": cmd_repro_fig3a,
}


def run_verify(args):
    manifest = Path(args.manifest) if args.manifest else Path(args.out_dir) / "manifest.json"
    print(f"[*] Vérification des sorties de {manifest}")
    problems = verify_manifest(manifest)
    if problems:
        for key, reason in problems:
            print(f"    - {key} : {reason}")
        print("[!] Attention : certaines sorties ne correspondent pas au manifeste")
        return 1
    print("[+] Toutes les sorties correspondent au manifeste")
    return 0


def setup_environment(args):
    """
    Configure la journalisation et résout la configuration
    """
    log_file = Path(args.out_dir) / "logs" / f"widac_{args.command}.log"
    setup_logging(verbosity_to_level(args.verbose), str(log_file))
    logging.info(f"WiDaC v{__version__} démarré ({args.command})")
    return load_config(args.config, scale=args.scale, seed=args.seed)


def main(argv=None):
    """
    Fonction principale du programme

    Returns:
        int: Code de sortie (0 succès, 1 échec, 2 configuration invalide, 130 interruption)
    """
    args = parse_arguments(argv)
    banner()
    run = None
    try:
        config = setup_environment(args)
        if args.command == "verify":
            return run_verify(args)

        run = Run(args, config)
        run.journal.start(args.command, run.manifest.config_digest)
        COMMANDS[args.command](run)
        run.manifest.save()
        run.report.write_metrics()
        run.journal.finalize("success")
        print(f"\n[+] Exécution {run.run_id} terminée avec succès")
        print(f"[+] Les résultats sont disponibles dans : {run.out_dir.resolve()}")
        return 0

    except KeyboardInterrupt:
        print("\n[!] Opération interrompue par l'utilisateur")
        if run is not None and run.journal.journal_data is not None:
            run.journal.finalize("interrupted")
        return 130
    except ConfigError as e:
        logging.error(f"Configuration invalide ({e.field_path}): {str(e)}")
        print(f"\n[!] Configuration invalide ({e.field_path}) : {str(e)}")
        return 2
    except (WidacError, OSError) as e:
        logging.error(f"Erreur critique : {str(e)}")
        print(f"\n[!] Erreur critique : {str(e)}")
        if run is not None and run.journal.journal_data is not None:
            run.journal.finalize("failed")
        return 1
    except Exception as e:
        logging.exception(f"Erreur inattendue : {str(e)}")
        print(f"\n[!] Erreur inattendue : {type(e).__name__}: {str(e)}")
        if run is not None and run.journal.journal_data is not None:
            run.journal.finalize("failed")
        return 1


if __name__ == "__main__":
    sys.exit(main())
