"""Shared fixtures: deterministic stream designs and small matrix builders."""

from __future__ import annotations

import numpy as np
import pytest

import stablefs as sf

GOLDEN = 0.6180339887498949


def make_matrix(values, targets=None, names=None) -> sf.DesignMatrix:
    values = np.asarray(values, dtype=np.float64)
    n = values.shape[1]
    ids = tuple(sf.FeatureId(j, names[j] if names else f"f{j}") for j in range(n))
    return sf.DesignMatrix(values=values, feature_ids=ids, targets=targets)


def random_matrix(seed: int, m: int, n: int, with_target: bool = False) -> sf.DesignMatrix:
    rng = np.random.default_rng(seed)
    values = rng.random((m, n))
    targets = rng.random(m) + 0.5 if with_target else None
    return make_matrix(values, targets)


def stationary_matrix(m: int = 1100) -> sf.DesignMatrix:
    """Deterministic stationary stream: all rankings lock from t=8 on.

    Rows live on a smooth curve parameterized by a Weyl sequence, so the
    sample graph is a 1-D chain at every prefix. Features 0-3 are
    near-linear in the latent coordinate with mixed directions (high
    deviation, mutually decorrelated, low graph energy); features 4-7 are
    odd-power sine oscillators (low deviation, high graph energy); the
    target is a monotone combination of features 0-3, so tree importance
    spreads over exactly that quartet. All three rankers keep the same
    top-4 at every checkpoint, which drives the search to its horizon.
    """
    t = np.arange(1, m + 1)
    z = np.mod(0.5 + t * GOLDEN, 1.0)
    cols = np.empty((m, 8))
    cols[:, 0] = z
    cols[:, 1] = 1.0 - z ** 1.05
    cols[:, 2] = z ** 0.9
    cols[:, 3] = 1.0 - z ** 0.8
    for jj, (p, q) in enumerate(((3, 3), (5, 4), (7, 5), (9, 6))):
        cols[:, 4 + jj] = 0.5 + 0.5 * np.sin(2 * np.pi * q * z) ** p
    y = 8 * cols[:, 0] + 4 * cols[:, 1] + 2 * cols[:, 2] + cols[:, 3]
    raw = make_matrix(cols, targets=y)
    matrix, _ = sf.preprocess(raw)
    return matrix


def shift_matrix(shift: int, m: int = 1100, jitter_seed: int | None = None,
                 with_target: bool = False) -> sf.DesignMatrix:
    """Stream whose top features flip mid-stream: features 0-3 carry an
    alternating signal before row ``shift`` and go flat after, features 4-7
    the other way around. The declining overlap triggers early termination
    at a checkpoint controlled by ``shift``.
    """
    rows = np.arange(m)
    alt = np.where(rows % 2 == 0, 1.0, -1.0)
    cols = np.zeros((m, 8))
    for j in range(4):
        cols[:shift, j] = alt[:shift] * (1 + 0.01 * j)
    for j in range(4, 8):
        cols[shift:, j] = alt[shift:] * (1 + 0.01 * (j - 4))
    if jitter_seed is not None:
        rng = np.random.default_rng(jitter_seed)
        cols = cols + 0.01 * rng.random((m, 8))
    targets = 2.0 + alt + 0.1 * np.cos(rows / 7.0) if with_target else None
    matrix, _ = sf.preprocess(make_matrix(cols, targets=targets))
    return matrix


def rotate_matrix(n_groups: int = 3, group: int = 4, m: int = 1100,
                  fillers: int = 0, jitter_seed: int | None = None) -> sf.DesignMatrix:
    """Stream whose top-k membership rotates between disjoint groups.

    Group g bursts in the windows [2^i, 2^(i+1)) with i = g (mod n_groups)
    at geometrically growing amplitude, so each checkpoint's leaders are
    the latest window's group and consecutive top-k sets stay disjoint.
    With three groups of 256 features the whole grid is exhausted.
    """
    n = n_groups * group + fillers
    rows = np.arange(m)
    alt = np.where(rows % 2 == 0, 1.0, -1.0)
    cols = np.zeros((m, n))
    for i in range(0, 11):
        lo, hi = 2 ** i, min(2 ** (i + 1), m)
        if lo >= m:
            break
        g = i % n_groups
        for jj in range(group):
            j = g * group + jj
            cols[lo:hi, j] = alt[lo:hi] * (8.0 ** i) * (1 + 0.01 * jj)
    for j in range(n_groups * group, n):
        cols[j % 7::8, j] = 0.05
    if jitter_seed is not None:
        rng = np.random.default_rng(jitter_seed)
        cols = cols + 0.01 * rng.random((m, n))
    matrix, _ = sf.preprocess(make_matrix(cols))
    return matrix


def planted_trace(noise_sigma: float, seed: int = 11, n_features: int = 1000,
                  m_samples: int = 5000) -> sf.DesignMatrix:
    """Preprocessed planted trace used by the desk-scale experiments."""
    spec = sf.SynthSpec(
        n_features=n_features, m_samples=m_samples, n_informative=5,
        n_redundant=20, noise_sigma=noise_sigma,
        load_pattern=sf.PeriodicLoad(period_s=32.0, amplitude=1.0, base=0.0),
        seed=seed)
    matrix, _ = sf.preprocess(sf.generate(spec))
    return matrix


@pytest.fixture(scope="session")
def stationary():
    return stationary_matrix()


@pytest.fixture(scope="session")
def planted_clean():
    return planted_trace(noise_sigma=0.0)


@pytest.fixture(scope="session")
def planted_noisy():
    return planted_trace(noise_sigma=0.05)
