# -*- coding: utf-8 -*-

import json
import logging

import numpy as np
import pandas as pd
import pytest

from modules.estimator.estimator import MseCurve
from utils.config import load_config
from utils.hashing import calculate_file_hash, calculate_array_hash, canonical_json
from utils.logging import RunLogger, verbosity_to_level, setup_logging
from utils.manifest import RunManifest, RunJournal, verify_manifest, MANIFEST_FILE, JOURNAL_FILE
from utils.reporting import ReportGenerator, mse_rows, render_mse_table, JINJA2_AVAILABLE


@pytest.fixture
def config():
    return load_config(seed=11)


def _write(path, text):
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")
    return path


def test_manifest_is_deterministic(tmp_path, config):
    documents = []
    for name in ("a", "b"):
        out = tmp_path / name
        manifest = RunManifest(out, config, "gen-channels", "1.0.0")
        manifest.add_output("gen-channels", _write(out / "datasets" / "x.wdc", "contenu"))
        manifest.add_summary("gen-channels", count=3)
        documents.append(manifest.save().read_bytes())
    assert documents[0] == documents[1]

    document = json.loads(documents[0])
    assert document["seed"] == 11
    assert document["config"] == config
    assert "datasets/x.wdc" in document["stages"]["gen-channels"]["outputs"]


def test_manifest_accumulates_subcommands(tmp_path, config):
    first = RunManifest(tmp_path, config, "gen-channels", "1.0.0")
    first.add_output("gen-channels", _write(tmp_path / "a.txt", "a"))
    first.save()
    second = RunManifest(tmp_path, config, "meta-train", "1.0.0")
    second.add_output("meta-train", _write(tmp_path / "b.txt", "b"))
    second.save()
    assert second.document["subcommands"] == ["gen-channels", "meta-train"]
    assert set(second.outputs()) == {"a.txt", "b.txt"}

    other = RunManifest(tmp_path, load_config(seed=12), "meta-train", "1.0.0")
    assert other.outputs() == {}


def test_verify_detects_changed_and_missing_outputs(tmp_path, config):
    manifest = RunManifest(tmp_path, config, "smote", "1.0.0")
    kept = _write(tmp_path / "kept.csv", "1\n")
    changed = _write(tmp_path / "changed.csv", "2\n")
    removed = _write(tmp_path / "removed.csv", "3\n")
    for path in (kept, changed, removed):
        manifest.add_output("smote", path)
    path = manifest.save()
    assert verify_manifest(path) == []

    changed.write_text("4\n", encoding="utf-8")
    removed.unlink()
    assert verify_manifest(path) == [("changed.csv", "empreinte différente"), ("removed.csv", "absent")]


def test_journal_records_stage_events(tmp_path):
    journal = RunJournal("run-1", tmp_path)
    journal.start("flops-report", "abc")
    journal.record("Stage started: flops-report")
    journal.finalize("success")
    document = json.loads((tmp_path / JOURNAL_FILE).read_text(encoding="utf-8"))
    assert document["status"] == "success"
    assert [entry["action"] for entry in document["audit_log"]] == [
        "Run started", "Stage started: flops-report", "Run finalized (success)",
    ]
    assert not (tmp_path / MANIFEST_FILE).exists()


def test_hashes(tmp_path):
    path = _write(tmp_path / "f.txt", "abc")
    hashes = calculate_file_hash(str(path))
    assert hashes["sha256"] == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
    assert hashes["file_size"] == 3
    assert canonical_json({"b": 1, "a": [1, 2]}) == b'{"a":[1,2],"b":1}'
    assert calculate_array_hash(np.zeros(4)) != calculate_array_hash(np.zeros((2, 2)))


def test_report_tables_and_metrics(tmp_path):
    report = ReportGenerator(tmp_path, "run-x")
    curves = {"genie": MseCurve([(0.0, 0.5), (10.0, 0.1)]), "cgan": [(0.0, 0.7), (10.0, 0.2)]}
    path = report.write_mse_curves(curves, 11)
    assert path.read_text(encoding="utf-8").splitlines()[0] == "snr_db,nmse,dataset_label,seed"
    frame = pd.read_csv(path)
    assert len(frame) == 4
    assert list(frame["dataset_label"]) == ["genie", "genie", "cgan", "cgan"]
    assert set(frame["seed"]) == {11}
    assert mse_rows(curves, 11)[3] == {"snr_db": 10.0, "nmse": 0.2, "dataset_label": "cgan", "seed": 11}
    assert "genie" in render_mse_table(curves)

    report.add_metrics("flops", {"smote": 10})
    metrics = json.loads(report.write_metrics().read_text(encoding="utf-8"))
    assert metrics == {"run-x": {"flops": {"smote": 10}}}


@pytest.mark.skipif(not JINJA2_AVAILABLE, reason="jinja2 indisponible")
def test_html_report(tmp_path):
    report = ReportGenerator(tmp_path, "run-y")
    report.add_metrics("gains", {"f28": 1.0})
    path = report.generate_html(
        "Essai", summary={"Graine": 1}, tables={"Gains": {"headers": ["Jeu", "Gain"], "rows": [["f28", "1.0"]]}},
    )
    html = path.read_text(encoding="utf-8")
    assert "Essai" in html and "f28" in html


def test_run_logger_prefixes(caplog):
    logger = RunLogger("widac.test", run_id="r1").for_stage("meta-train")
    with caplog.at_level(logging.INFO, logger="widac.test"):
        logger.metric("perte", 0.5, step=10)
        logger.info("bonjour")
    assert caplog.messages == [
        "[Run: r1] [Stage: meta-train] METRIC - perte @ 10: 0.5",
        "[Run: r1] [Stage: meta-train] bonjour",
    ]


def test_verbosity_levels_and_file_handler(tmp_path):
    assert verbosity_to_level(0) == logging.WARNING
    assert verbosity_to_level(1) == logging.INFO
    assert verbosity_to_level(5) == logging.DEBUG
    log_file = tmp_path / "logs" / "run.log"
    setup_logging(logging.INFO, str(log_file))
    setup_logging(logging.INFO, str(log_file))
    file_handlers = [h for h in logging.getLogger().handlers if isinstance(h, logging.FileHandler)]
    assert len(file_handlers) == 1
    assert log_file.exists()
    setup_logging(logging.WARNING)
