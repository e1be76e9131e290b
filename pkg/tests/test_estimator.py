# -*- coding: utf-8 -*-

import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from modules.channel.model import ChannelConfig, generate_dataset, path_gain_variance
from modules.common.dataset import WirelessDataset
from modules.common.errors import InvalidArgumentError
from modules.estimator.estimator import (
    PilotConfig, dft_pilots, simulate_pilots, simulate_pilots_batch, linear_inversion, train_estimator, eval_mse,
)


class _StoredChannels:
    """
    Estimateur de test: renvoie des canaux fixés d'avance
    """

    def __init__(self, channels):
        self.channels = channels

    def estimate(self, observations):
        assert observations.shape[0] == self.channels.shape[0]
        return self.channels


def _channels(rng, n=50, nt=4):
    return rng.standard_normal((n, nt)) + 1j * rng.standard_normal((n, nt))


def test_full_dft_is_unitary():
    f = dft_pilots(8, 8)
    assert_allclose(f.conj().T @ f, np.eye(8), atol=1e-12)


def test_pilot_columns_are_evenly_spaced():
    f = dft_pilots(8, 4)
    n = np.arange(8)
    assert_allclose(f[:, 1], np.exp(-2j * np.pi * n * 2 / 8) / math.sqrt(8))


def test_pilot_config_validation():
    with pytest.raises(InvalidArgumentError):
        PilotConfig.dft(4, 5)
    with pytest.raises(InvalidArgumentError):
        PilotConfig(4, 2, np.ones((4, 2), dtype=complex))
    with pytest.raises(InvalidArgumentError):
        PilotConfig.dft(4, 2, reference_power=0.0)


def test_noiseless_linear_inversion_recovers_channel(rng):
    cfg = PilotConfig.dft(4, 4)
    channels = _channels(rng)
    observations = simulate_pilots_batch(channels, cfg, math.inf, rng)
    assert observations.shape == (50, 8)
    assert_allclose(linear_inversion(observations, cfg), channels, atol=1e-10)


def test_noise_variance_follows_reference_power(rng):
    cfg = PilotConfig.dft(4, 4, reference_power=2.0)
    zeros = np.zeros((20000, 4), dtype=complex)
    observations = simulate_pilots_batch(zeros, cfg, 10.0, rng)
    assert np.mean(observations ** 2) * 2 == pytest.approx(0.2, rel=0.03)


def test_single_channel_observation(rng):
    cfg = PilotConfig.dft(4, 2)
    y = simulate_pilots(np.ones(4, dtype=complex), cfg, math.inf, rng)
    assert y.shape == (4,)
    with pytest.raises(InvalidArgumentError):
        simulate_pilots(np.ones(3, dtype=complex), cfg, 0.0, rng)


def test_eval_mse_with_exact_and_zero_estimates(rng):
    cfg = PilotConfig.dft(4, 2, snr_grid_db=(0.0, 20.0))
    channels = _channels(rng)
    test_set = WirelessDataset(nt=4, samples=channels)

    exact = eval_mse(_StoredChannels(channels), test_set, cfg, rng)
    assert [snr for snr, _ in exact] == [0.0, 20.0]
    assert all(nmse == 0.0 for _, nmse in exact)

    zero = eval_mse(_StoredChannels(np.zeros_like(channels)), test_set, cfg, rng)
    assert_allclose([nmse for _, nmse in zero], [1.0, 1.0])
    assert zero.excluded == 0


def test_eval_mse_excludes_zero_channels(rng):
    cfg = PilotConfig.dft(4, 2, snr_grid_db=(10.0,))
    channels = _channels(rng, n=5)
    channels[2] = 0.0
    curve = eval_mse(_StoredChannels(np.zeros_like(channels)), WirelessDataset(nt=4, samples=channels), cfg, rng)
    assert curve.excluded == 1
    assert curve[0] == (10.0, pytest.approx(1.0))

    all_zero = WirelessDataset(nt=4, samples=np.zeros((3, 4), dtype=complex))
    with pytest.raises(InvalidArgumentError):
        eval_mse(_StoredChannels(np.zeros((3, 4))), all_zero, cfg, rng)


def test_train_estimator_reduces_loss(rng):
    cfg = PilotConfig.dft(4, 4, snr_grid_db=(20.0, 30.0))
    train_set = WirelessDataset(nt=4, samples=_channels(rng, n=400))
    net = train_estimator(train_set, cfg, 15, rng, batch_size=32, lr=3e-3, hidden=32, depth=2)
    assert len(net.history) == 15
    assert net.history[-1] < net.history[0]
    assert net.spec.layer_widths == (8, 32, 32, 8)
    assert net.estimate(simulate_pilots_batch(train_set.samples[:3], cfg, 30.0, rng)).shape == (3, 4)


def test_train_estimator_checks_dimensions(rng):
    cfg = PilotConfig.dft(4, 2)
    with pytest.raises(InvalidArgumentError):
        train_estimator(WirelessDataset(nt=3, samples=np.ones((5, 3), dtype=complex)), cfg, 1, rng)


def test_untrained_estimator_has_no_history(rng):
    cfg = PilotConfig.dft(4, 2, reference_power=4.0)
    net = train_estimator(WirelessDataset(nt=4, samples=_channels(rng, n=8)), cfg, 0, rng, hidden=8, depth=1)
    assert net.history == []
    assert net.norm == 2.0


def _single_path_channels(count, seed):
    cfg = ChannelConfig(nt=2, num_paths=1, seed=seed)
    return generate_dataset(cfg, count, 0), path_gain_variance(cfg)


def test_noiseless_two_antenna_estimator_is_accurate(rng):
    train_set, power = _single_path_channels(5000, 1)
    test_set, _ = _single_path_channels(500, 2)
    cfg = PilotConfig.dft(2, 2, snr_grid_db=(math.inf,), reference_power=power)
    net = train_estimator(train_set, cfg, 40, rng, batch_size=32, lr=3e-3, hidden=64, depth=1)
    ((snr, nmse),) = eval_mse(net, test_set, cfg, rng)
    assert snr == math.inf
    assert nmse < 1e-2


def test_nmse_does_not_increase_with_snr(rng):
    train_set, power = _single_path_channels(3000, 3)
    test_set, _ = _single_path_channels(2000, 4)
    cfg = PilotConfig.dft(2, 1, snr_grid_db=(0.0, 10.0, 20.0, 30.0), reference_power=power)
    net = train_estimator(train_set, cfg, 25, rng, batch_size=32, lr=3e-3, hidden=32, depth=2)
    db = [10.0 * math.log10(nmse) for _, nmse in eval_mse(net, test_set, cfg, rng)]
    for lower, higher in zip(db, db[1:]):
        assert higher <= lower + 0.5
