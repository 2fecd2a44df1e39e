"""Exact, exponential-cost reference distributions.

Two independent routes:

* :func:`brute_force_distribution` sums the amplitude over every intermediate
  spin history explicitly (``~4**N`` terms).
* :func:`matrix_product_distribution` multiplies the ``2x2`` step matrices
  along each leaf (``~N * 2**N`` small products).
"""
from __future__ import annotations

import hashlib
import itertools
from functools import reduce
from typing import NamedTuple, Sequence

import numpy as np

from .errors import LengthMismatch, TooLarge
from .model import ModelConfig
from .observables import observable
from .outcomes import OutcomeDistribution, path_bit_matrix

BRUTE_FORCE_MAX_N = 14
MATRIX_PRODUCT_MAX_N = 24

_CHUNK_BITS = 16


class SpinVector(NamedTuple):
    down: float
    up: float


def config_hash(config: ModelConfig) -> str:
    return hashlib.sha256(config.to_json().encode()).hexdigest()[:16]


def leaf_amplitude(config: ModelConfig, path_bits: Sequence[int]) -> SpinVector:
    """Final (unnormalized) spin amplitudes for one leaf, left = 1."""
    if len(path_bits) != config.n_steps:
        raise LengthMismatch(f"path has {len(path_bits)} bits, expected {config.n_steps}")
    v = config.initial_spin
    for (left, right), bit in zip(config.step_matrices(), path_bits):
        v = (left if bit else right) @ v
    return SpinVector(float(v[0]), float(v[1]))


def brute_force_distribution(config: ModelConfig) -> OutcomeDistribution:
    """Sum over all spin histories ``s_0 .. s_N`` for every leaf at once.

    For a fixed history the amplitude factorizes over steps, so its
    contribution to all ``2**N`` leaves is an outer product of per-step
    ``(right, left)`` factors.
    """
    n = config.n_steps
    if n > BRUTE_FORCE_MAX_N:
        raise TooLarge(f"brute force limited to N <= {BRUTE_FORCE_MAX_N}, got {n}")
    mats = config.step_matrices()
    init = config.initial_spin
    amps = np.zeros((1 << n, 2))
    for hist in itertools.product((0, 1), repeat=n + 1):
        weight = init[hist[0]]
        if weight == 0.0:
            continue
        factors = []
        for step in range(n, 0, -1):
            left, right = mats[step - 1]
            f = np.array([right[hist[step], hist[step - 1]], left[hist[step], hist[step - 1]]])
            if not f.any():
                break
            factors.append(f)
        else:
            # outer product over steps N..1 puts step 1 on the fastest axis
            amps[:, hist[n]] += weight * reduce(np.multiply.outer, factors).ravel()
    return OutcomeDistribution(n, (amps**2).ravel(), method="brute-force", config_hash=config_hash(config))


def _leaf_vectors(init: np.ndarray, mats, start: int, stop: int) -> np.ndarray:
    """Apply the step matrices selected by each leaf index in ``[start, stop)`` to ``init``."""
    idx = np.arange(start, stop, dtype=np.int64)
    v0 = np.full(idx.shape, init[0])
    v1 = np.full(idx.shape, init[1])
    for step, (left, right) in enumerate(mats):
        bit = ((idx >> step) & 1).astype(bool)
        m00 = np.where(bit, left[0, 0], right[0, 0])
        m01 = np.where(bit, left[0, 1], right[0, 1])
        m10 = np.where(bit, left[1, 0], right[1, 0])
        m11 = np.where(bit, left[1, 1], right[1, 1])
        v0, v1 = m00 * v0 + m01 * v1, m10 * v0 + m11 * v1
    return np.stack([v0, v1], axis=1)


def leaf_products(init: np.ndarray, mats) -> np.ndarray:
    """``(2**N, 2)`` array of final spin vectors for every leaf, computed in chunks."""
    n_leaves = 1 << len(mats)
    chunk = 1 << _CHUNK_BITS
    out = np.empty((n_leaves, 2))
    for start in range(0, n_leaves, chunk):
        stop = min(start + chunk, n_leaves)
        out[start:stop] = _leaf_vectors(init, mats, start, stop)
    return out


def matrix_product_distribution(config: ModelConfig) -> OutcomeDistribution:
    """Per-leaf product of step matrices applied to the initial spin."""
    n = config.n_steps
    if n > MATRIX_PRODUCT_MAX_N:
        raise TooLarge(f"matrix product limited to N <= {MATRIX_PRODUCT_MAX_N}, got {n}")
    amps = leaf_products(config.initial_spin, config.step_matrices())
    return OutcomeDistribution(n, (amps**2).ravel(), method="matrix-product", config_hash=config_hash(config))


def path_marginal(dist: OutcomeDistribution) -> np.ndarray:
    return dist.table().sum(axis=1)


def observable_values(n_steps: int, name: str) -> np.ndarray:
    fn, _ = observable(name)
    return fn(path_bit_matrix(n_steps))


def observable_marginal(dist: OutcomeDistribution, name: str) -> tuple[np.ndarray, np.ndarray]:
    """Exact distribution of an observable: ``(values, probabilities)`` over its full range."""
    _, value_range = observable(name)
    values = np.array(value_range(dist.n_steps))
    per_path = observable_values(dist.n_steps, name)
    probs = np.bincount(per_path - values[0], weights=path_marginal(dist), minlength=len(values))
    return values, probs


def exact_observable_expectation(dist: OutcomeDistribution, name: str) -> float:
    return float(np.dot(path_marginal(dist), observable_values(dist.n_steps, name)))
