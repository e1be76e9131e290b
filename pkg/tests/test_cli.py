# -*- coding: utf-8 -*-

import json
import logging

import numpy as np
import pandas as pd
import pytest

import widac
from modules.common.dataset import WirelessDataset
from modules.common.errors import DataLeakageError
from utils.logging import setup_logging
from utils.storage import load_dataset, import_csv


@pytest.fixture(autouse=True)
def reset_logging():
    yield
    setup_logging(logging.WARNING)


def _run(*argv):
    return widac.main([str(arg) for arg in argv])


def test_stages_one_by_one(tmp_path, tiny_config_file):
    out = tmp_path / "out"
    common = ["--config", tiny_config_file, "--out-dir", out]

    assert _run("gen-channels", *common) == 0
    inventory = json.loads((out / "datasets" / "datasets.json").read_text(encoding="utf-8"))
    assert [entry["file"] for entry in inventory["environments"]] == ["f28_meta.wdc", "f60_meta.wdc"]
    assert len(load_dataset(out / "datasets" / "f39_target.wdc")) == 16
    assert len(load_dataset(out / "datasets" / "f39_test.wdc")) == 24
    assert len(load_dataset(out / "datasets" / "f39_genie.wdc")) == 32

    assert _run("meta-train", *common) == 0
    assert (out / "checkpoints" / "meta_gan" / "generator.wck").is_file()
    trace = pd.read_csv(out / "meta_trace.csv")
    assert list(trace["iteration"]) == [0, 5]

    assert _run("fine-tune", *common) == 0
    assert _run("train-cgan", *common) == 0
    assert _run("synthesize", *common, "--gan", out / "checkpoints" / "finetuned_gan", "--n", 12,
                "--label", "dwidac", "--csv", out / "exports" / "dwidac.csv") == 0
    synth = load_dataset(out / "datasets" / "synth_dwidac.wdc")
    assert len(synth) == 12 and synth.condition_index == 2
    exported = import_csv(out / "exports" / "dwidac.csv", 4, condition_index=2)
    assert np.array_equal(exported.samples, synth.samples)

    assert _run("train-estimator", *common, "--train", out / "datasets" / "synth_dwidac.wdc") == 0
    assert _run("evaluate", *common, "--estimator", f"dwidac={out / 'estimators' / 'synth_dwidac'}") == 0
    curves = pd.read_csv(out / "mse_curves.csv")
    assert list(curves.columns) == ["snr_db", "nmse", "dataset_label", "seed"]
    assert list(curves["snr_db"]) == [0.0, 10.0]
    assert set(curves["dataset_label"]) == {"dwidac"} and set(curves["seed"]) == {7}
    assert np.all(np.isfinite(curves["nmse"]))

    assert _run("smote", *common, "--n", 20) == 0
    assert len(load_dataset(out / "datasets" / "synth_smote.wdc")) == 20
    assert _run("flops-report", *common) == 0
    flops = json.loads((out / "flops.json").read_text(encoding="utf-8"))
    assert [entry["method"] for entry in flops] == ["d-widac", "smote"]
    assert _run("diagnostics", *common, "--gan", out / "checkpoints" / "meta_gan") == 0
    diagnostics = json.loads((out / "diagnostics.json").read_text(encoding="utf-8"))
    assert set(diagnostics["tv_to_target"]) == {"f28", "f60"}
    assert "loss_gap" in diagnostics

    manifest = json.loads((out / "manifest.json").read_text(encoding="utf-8"))
    assert {"gen-channels", "meta-train", "evaluate", "smote"} <= set(manifest["subcommands"])
    assert _run("verify", "--out-dir", out) == 0

    (out / "datasets" / "synth_smote.wdc").write_bytes(b"WDC1")
    assert _run("verify", "--out-dir", out) == 1


def test_full_pipeline_is_reproducible_from_its_manifest(tmp_path, tiny_config_file):
    first, second = tmp_path / "first", tmp_path / "second"
    assert _run("repro-fig3a", "--config", tiny_config_file, "--out-dir", first) == 0
    assert _run("repro-fig3a", "--config", first / "manifest.json", "--out-dir", second) == 0

    assert (first / "manifest.json").read_bytes() == (second / "manifest.json").read_bytes()
    curves = pd.read_csv(first / "mse_curves.csv")
    assert sorted(set(curves["dataset_label"])) == ["cgan", "dwidac", "genie"]
    metrics = json.loads((first / "metrics.json").read_text(encoding="utf-8"))
    (run_metrics,) = metrics.values()
    assert run_metrics["sample_reduction"]["ratio"] == pytest.approx((32 - 16) / 32)
    for name in ("mse_curves.csv", "flops.csv", "datasets/synth_dwidac.wdc"):
        assert (first / name).read_bytes() == (second / name).read_bytes()


def test_imported_target_environment(tmp_path, tiny_config_file, rng):
    csv_path = tmp_path / "f39.csv"
    rows = rng.standard_normal((30, 8)) * 0.1
    csv_path.write_text("\n".join(",".join(repr(float(v)) for v in row) for row in rows) + "\n", encoding="utf-8")
    config = tiny_config_file.read_text(encoding="utf-8").replace(
        'name = "f39"\ncenter_freq = 39.0\n', f'name = "f39"\ncenter_freq = 39.0\ncsv = "{csv_path.as_posix()}"\n',
    )
    config_path = tmp_path / "imported.toml"
    config_path.write_text(config, encoding="utf-8")
    out = tmp_path / "out"

    assert _run("gen-channels", "--config", config_path, "--out-dir", out) == 0
    inventory = json.loads((out / "datasets" / "datasets.json").read_text(encoding="utf-8"))
    assert inventory["genie"] is None
    target = load_dataset(out / "datasets" / "f39_target.wdc")
    test = load_dataset(out / "datasets" / "f39_test.wdc")
    assert len(target) == 16 and len(test) == 14
    assert target.meta["source"] == "imported"


def test_invalid_configuration_exits_with_two(tmp_path):
    path = tmp_path / "bad.toml"
    path.write_text("[meta]\nalpha = -1.0\n", encoding="utf-8")
    assert _run("flops-report", "--config", path, "--out-dir", tmp_path / "out") == 2


def test_malformed_estimator_argument_exits_with_two(tmp_path, tiny_config_file):
    assert _run("evaluate", "--config", tiny_config_file, "--out-dir", tmp_path / "out",
                "--estimator", "sans-repertoire") == 2


def test_missing_inventory_fails_cleanly(tmp_path, tiny_config_file):
    assert _run("meta-train", "--config", tiny_config_file, "--out-dir", tmp_path / "empty") == 1


@pytest.mark.slow
def test_desk_pipeline_ordering(tmp_path):
    """
    Pipeline complet au préréglage desk: la NMSE des estimateurs suit
    l'ordre référence <= D-WiDaC <= CGAN classique aux SNR élevés
    """
    medians = {}
    tuned_errors, meta_only_errors = [], []
    for seed in (0, 1, 2):
        out = tmp_path / f"seed{seed}"
        assert _run("repro-fig3a", "--scale", "desk", "--seed", seed, "--out-dir", out) == 0
        curves = pd.read_csv(out / "mse_curves.csv")
        for row in curves.itertuples():
            medians.setdefault((row.dataset_label, row.snr_db), []).append(row.nmse)

        (metrics,) = json.loads((out / "metrics.json").read_text(encoding="utf-8")).values()
        meta = metrics["meta-train"]
        for name, genie_gain in meta["genie_path_gains"].items():
            assert meta["final_path_gains"][name] == pytest.approx(genie_gain, rel=0.15)
        gains = metrics["target_path_gains"]
        tuned_errors.append(abs(gains["fine-tuned"] - gains["genie"]))
        meta_only_errors.append(abs(gains["meta-only"] - gains["genie"]))

    assert np.median(tuned_errors) <= np.median(meta_only_errors)
    db = {key: 10 * np.log10(np.median(values)) for key, values in medians.items()}
    for snr in (10.0, 15.0, 20.0, 25.0, 30.0):
        assert db[("genie", snr)] <= db[("dwidac", snr)] <= db[("cgan", snr)]
        assert db[("dwidac", snr)] - db[("genie", snr)] <= 2.0
        assert db[("cgan", snr)] - db[("dwidac", snr)] >= 1.0


def _journal(out):
    return json.loads((out / "run_journal.json").read_text(encoding="utf-8"))


def test_training_on_the_test_set_is_refused(tmp_path, tiny_config_file):
    out = tmp_path / "out"
    common = ["--config", tiny_config_file, "--out-dir", out]
    assert _run("gen-channels", *common) == 0

    assert _run("train-estimator", *common, "--train", out / "datasets" / "f39_test.wdc") == 1
    journal = _journal(out)
    failures = [entry for entry in journal["audit_log"] if entry["action"] == "Stage failed: train-estimator-f39_test"]
    assert len(failures) == 1 and "jeu de test" in failures[0]["details"]["error"]
    assert journal["status"] == "failed"
    assert not (out / "estimators" / "f39_test").exists()


def test_shared_channels_are_detected(small_dataset):
    train = WirelessDataset(nt=2, samples=small_dataset.samples[:10] * 4.0, scale=4.0)
    with pytest.raises(DataLeakageError):
        widac.ensure_disjoint(train, small_dataset, "copie")
    widac.ensure_disjoint(WirelessDataset(nt=2, samples=small_dataset.samples + 1.0), small_dataset, "décalé")


def test_zero_counts_are_not_replaced_by_defaults(tmp_path, tiny_config_file):
    out = tmp_path / "out"
    common = ["--config", tiny_config_file, "--out-dir", out]
    assert _run("gen-channels", *common) == 0

    assert _run("smote", *common, "--n", 0) == 0
    empty = load_dataset(out / "datasets" / "synth_smote.wdc")
    assert len(empty) == 0 and empty.nt == 4

    assert _run("smote", *common, "--k", 0) == 1
    assert _journal(out)["audit_log"][-2]["action"] == "Stage failed: smote"
    assert len(load_dataset(out / "datasets" / "synth_smote.wdc")) == 0


def test_unexpected_stage_errors_are_journaled(tmp_path, tiny_config_file, monkeypatch):
    def broken(*args, **kwargs):
        raise RuntimeError("panne")

    monkeypatch.setattr(widac, "flops_smote", broken)
    out = tmp_path / "out"
    assert _run("flops-report", "--config", tiny_config_file, "--out-dir", out) == 1
    journal = _journal(out)
    (failure,) = [entry for entry in journal["audit_log"] if entry["action"] == "Stage failed: flops-report"]
    assert failure["details"]["error"] == "RuntimeError: panne"
    assert journal["status"] == "failed"
