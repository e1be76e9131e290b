# -*- coding: utf-8 -*-

import numpy as np
import pytest
from numpy.testing import assert_array_equal

from modules.common.dataset import WirelessDataset
from modules.common.errors import FormatError, CorruptionError, ParseError, CompatibilityError, InvalidArgumentError
from modules.estimator.estimator import PilotConfig, train_estimator
from modules.nn.network import MlpSpec
from utils.storage import (
    DATASET_HEADER, CHECKPOINT_HEADER, atomic_write, save_dataset, load_dataset, import_csv, export_csv,
    save_checkpoint, load_checkpoint, save_gan, load_gan, save_estimator, load_estimator,
)


@pytest.fixture
def stored(small_dataset, tmp_path):
    dataset = WirelessDataset(nt=2, samples=small_dataset.samples * 0.5, condition_index=3, scale=0.5,
                              meta={"source": "genie", "seed": 12})
    path = tmp_path / "d.wdc"
    save_dataset(dataset, path)
    return dataset, path


def test_header_sizes():
    assert DATASET_HEADER.size == 34
    assert CHECKPOINT_HEADER.size == 46


def test_dataset_round_trip_is_bit_exact(stored):
    dataset, path = stored
    loaded = load_dataset(path)
    assert_array_equal(loaded.samples.view(np.uint8), dataset.samples.view(np.uint8))
    assert loaded.condition_index == 3 and loaded.scale == 0.5
    assert loaded.meta == dataset.meta
    assert loaded.digest() == dataset.digest()


def test_equal_datasets_give_equal_bytes(stored, tmp_path):
    dataset, path = stored
    other = tmp_path / "e.wdc"
    save_dataset(dataset.subset(range(len(dataset))), other)
    assert other.read_bytes() == path.read_bytes()


def test_bad_magic_and_version(stored, tmp_path):
    _, path = stored
    data = path.read_bytes()
    wrong = tmp_path / "wrong.wdc"
    wrong.write_bytes(b"XXXX" + data[4:])
    with pytest.raises(FormatError):
        load_dataset(wrong)
    wrong.write_bytes(data[:4] + (9).to_bytes(2, "little") + data[6:])
    with pytest.raises(FormatError):
        load_dataset(wrong)


def test_truncated_dataset_reports_offset(stored, tmp_path):
    _, path = stored
    data = path.read_bytes()
    cut = tmp_path / "cut.wdc"
    for size in (10, 40, len(data) - 3):
        cut.write_bytes(data[:size])
        with pytest.raises(CorruptionError) as excinfo:
            load_dataset(cut)
        assert excinfo.value.offset == size


def test_trailing_bytes_are_corruption(stored, tmp_path):
    _, path = stored
    data = path.read_bytes()
    longer = tmp_path / "long.wdc"
    longer.write_bytes(data + b"\x00")
    with pytest.raises(CorruptionError) as excinfo:
        load_dataset(longer)
    assert excinfo.value.offset == len(data)


def test_missing_file(tmp_path):
    with pytest.raises(FileNotFoundError):
        load_dataset(tmp_path / "absent.wdc")
    with pytest.raises(FileNotFoundError):
        load_dataset("")


def test_csv_round_trip(small_dataset, tmp_path):
    path = tmp_path / "channels.csv"
    export_csv(small_dataset, path)
    imported = import_csv(path, 2, condition_index=1)
    assert_array_equal(imported.samples, small_dataset.samples)
    assert imported.condition_index == 1
    assert imported.meta == {"source": "imported", "path": "channels.csv"}


def test_csv_errors_carry_line_numbers(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("1,2,3,4\n\n1,2,3\n", encoding="utf-8")
    with pytest.raises(ParseError) as excinfo:
        import_csv(path, 2)
    assert excinfo.value.line == 3

    path.write_text("1,2,3,4\n1,x,3,4\n", encoding="utf-8")
    with pytest.raises(ParseError) as excinfo:
        import_csv(path, 2)
    assert excinfo.value.line == 2

    path.write_text("\n\n", encoding="utf-8")
    with pytest.raises(InvalidArgumentError):
        import_csv(path, 2)


def test_checkpoint_round_trip_and_digest_check(rng, tmp_path):
    spec = MlpSpec((3, 4, 2))
    params = rng.standard_normal(spec.num_params())
    path = tmp_path / "net.wck"
    save_checkpoint(spec.digest(), params, path)
    digest, loaded = load_checkpoint(path, spec.digest())
    assert digest == spec.digest()
    assert_array_equal(loaded, params)
    with pytest.raises(CompatibilityError) as excinfo:
        load_checkpoint(path, MlpSpec((3, 5, 2)).digest())
    assert excinfo.value.found == spec.digest()


def test_truncated_checkpoint(rng, tmp_path):
    spec = MlpSpec((2, 2))
    path = tmp_path / "net.wck"
    save_checkpoint(spec.digest(), rng.standard_normal(spec.num_params()), path)
    path.write_bytes(path.read_bytes()[:-1])
    with pytest.raises(CorruptionError):
        load_checkpoint(path)


def test_gan_round_trip(tiny_pair, tmp_path):
    save_gan(tiny_pair, tmp_path / "gan", {"encoding_scale": 0.25})
    pair, extra = load_gan(tmp_path / "gan")
    assert pair.digest() == tiny_pair.digest()
    assert extra == {"encoding_scale": 0.25}
    assert pair.gen_opt.kind == "adam" and pair.gen_opt.step == 0


def test_estimator_round_trip(rng, tmp_path):
    cfg = PilotConfig.dft(4, 2, snr_grid_db=(0.0, 10.0), reference_power=2.0, seed=5)
    train_set = WirelessDataset(nt=4, samples=rng.standard_normal((10, 4)) + 0j)
    net = train_estimator(train_set, cfg, 1, rng, hidden=4, depth=1)
    save_estimator(net, cfg, tmp_path / "est")
    loaded, loaded_cfg = load_estimator(tmp_path / "est")
    assert_array_equal(loaded.params, net.params)
    assert loaded.norm == net.norm
    assert loaded_cfg.to_dict() == cfg.to_dict()


def test_atomic_write_leaves_no_partial_file(tmp_path):
    target = tmp_path / "out.bin"

    def chunks():
        yield b"abc"
        raise RuntimeError("interrompu")

    with pytest.raises(RuntimeError):
        atomic_write(target, chunks())
    assert list(tmp_path.iterdir()) == []
