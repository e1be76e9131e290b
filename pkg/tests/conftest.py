# -*- coding: utf-8 -*-

"""
Fixtures communes des tests
"""

import sys
from pathlib import Path

import numpy as np
import pytest

ROOT = Path(__file__).resolve().parent.parent
if str(ROOT) not in sys.path:
    sys.path.insert(0, str(ROOT))

from modules.common.dataset import WirelessDataset  # noqa: E402
from modules.gan.cgan import GanSpec, init_pair  # noqa: E402

TINY_CONFIG = """
[run]
seed = 7
log_interval = 5

[channel]
nt = 4
num_paths = 2

[[environments]]
name = "f28"
center_freq = 28.0
role = "meta"

[[environments]]
name = "f60"
center_freq = 60.0
role = "meta"

[[environments]]
name = "f39"
center_freq = 39.0
role = "target"

[samples]
meta_per_env = 40
target = 16
synth = 32
estimator_test = 24

[gan]
noise_dim = 2
hidden = [8]
batch_size = 8
cgan_steps = 5

[meta]
meta_iters = 5
fine_tune_iters = 5
batch_size = 8

[estimator]
num_pilots = 2
snr_grid_db = [0.0, 10.0]
epochs = 2
batch_size = 8
hidden = 8
depth = 2

[smote]
k = 3

[flops]
n_dataset = 1000
dim = 8
k = 3
"""


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def tiny_spec():
    return GanSpec.build(noise_dim=2, num_envs=2, data_dim=4, gen_hidden=(5,), loss_variant="non_saturating")


@pytest.fixture
def tiny_pair(tiny_spec, rng):
    return init_pair(tiny_spec, rng)


@pytest.fixture
def small_dataset(rng):
    samples = rng.standard_normal((30, 2)) + 1j * rng.standard_normal((30, 2))
    return WirelessDataset(nt=2, samples=samples, condition_index=0, meta={"source": "genie"})


@pytest.fixture
def tiny_config_file(tmp_path):
    path = tmp_path / "tiny.toml"
    path.write_text(TINY_CONFIG, encoding="utf-8")
    return path
