# -*- coding: utf-8 -*-

import math

import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from modules.channel.model import (
    ChannelConfig, steering_vector, path_gain_variance, sample_channel, generate_dataset,
)
from modules.common.errors import InvalidArgumentError
from modules.metrics.quality import path_gain


def test_steering_vector_norm_and_phase():
    a = steering_vector(0.7, 8)
    assert a.shape == (8,)
    assert_allclose(np.vdot(a, a).real, 1.0 / 8)
    assert_allclose(a[0], 1.0 / 8)
    assert_allclose(a[1] / a[0], np.exp(0.7j))


def test_steering_vector_rejects_bad_input():
    with pytest.raises(InvalidArgumentError):
        steering_vector(0.0, 0)
    with pytest.raises(InvalidArgumentError):
        steering_vector(math.nan, 4)


def test_path_gain_variance_reference_point():
    assert path_gain_variance(ChannelConfig(center_freq=28.0)) == pytest.approx(1.0)
    assert path_gain_variance(ChannelConfig(center_freq=28.0, distance=2.0)) == pytest.approx(0.25)


@pytest.mark.parametrize("changes", [
    {"nt": 0},
    {"num_paths": 0},
    {"center_freq": 0.0},
    {"distance": -1.0},
    {"aod_low": 3.0, "aod_high": 2.0},
    {"aod_high": 7.0},
])
def test_channel_config_validation(changes):
    with pytest.raises(InvalidArgumentError):
        ChannelConfig(**changes)


def test_single_path_channel_has_flat_modulus(rng):
    cfg = ChannelConfig(nt=6, num_paths=1)
    h = sample_channel(cfg, rng)
    assert_allclose(np.abs(h), np.full(6, np.abs(h[0])), rtol=1e-12)


@pytest.mark.parametrize("freq", [28.0, 39.0, 60.0])
def test_mean_path_gain_matches_closed_form(freq):
    cfg = ChannelConfig(center_freq=freq, seed=11)
    dataset = generate_dataset(cfg, 20000, 0)
    assert path_gain(dataset) == pytest.approx(path_gain_variance(cfg), rel=0.05)


@pytest.mark.slow
@pytest.mark.parametrize("freq", [28.0, 39.0, 60.0])
def test_mean_path_gain_large_sample(freq):
    cfg = ChannelConfig(center_freq=freq, seed=3)
    dataset = generate_dataset(cfg, 100000, 0)
    assert path_gain(dataset) == pytest.approx(path_gain_variance(cfg), rel=0.02)


def test_generation_is_deterministic_and_prefix_stable():
    cfg = ChannelConfig(seed=42)
    first = generate_dataset(cfg, 10, 2)
    again = generate_dataset(cfg, 10, 2)
    prefix = generate_dataset(cfg, 4, 2)
    assert_array_equal(first.samples, again.samples)
    assert_array_equal(first.samples[:4], prefix.samples)
    assert first.condition_index == 2
    assert first.meta["source"] == "genie"
    assert first.meta["config_digest"] == cfg.digest()


def test_generate_dataset_requires_samples():
    with pytest.raises(InvalidArgumentError):
        generate_dataset(ChannelConfig(), 0, 0)


@pytest.mark.parametrize("count, tolerance", [
    (20000, 0.05),
    pytest.param(100000, 0.03, marks=pytest.mark.slow),
])
def test_path_gains_are_centered_with_half_variance_per_part(count, tolerance):
    # une antenne et un trajet: le canal est le gain complexe lui-même
    cfg = ChannelConfig(nt=1, num_paths=1, center_freq=39.0, seed=21)
    gains = generate_dataset(cfg, count, 0).samples[:, 0]
    half = path_gain_variance(cfg) / 2.0
    for part in (gains.real, gains.imag):
        assert abs(part.mean()) < 4.0 * math.sqrt(half / count)
        assert part.var() == pytest.approx(half, rel=tolerance)
