"""O(N)-per-event samplers and their exact enumerations.

The two-qubit state is ordered ``index = 2 * spin + path``, so after a step
``b[0], b[2]`` carry path bit 0 (right) and ``b[1], b[3]`` path bit 1 (left).
Between steps the path qubit is reset, leaving ``(a1, 0, a3, 0)``.

Draw order per event (see :mod:`itree.rng`): draw ``n`` selects the move at
step ``n + 1``; the last draw selects the final spin (for the naive chain it
selects the initial spin instead, since the final spin is the chain's own).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .circuit import path_rotation_angle, ry_matrix, sample_events_statevector
from .errors import DegenerateBranch, TooLarge
from .model import ModelConfig
from .oracle import MATRIX_PRODUCT_MAX_N, config_hash, leaf_products
from .outcomes import Events, OutcomeDistribution
from .rng import run_blocks

ENUMERATE_MAX_N = 14
CHAIN_TOL = 1e-12
_TINY = 1e-300


@dataclass
class OpCounter:
    """Tally of floating-point operations spent inside the per-event loop."""

    flops: int = 0
    steps: int = 0


@dataclass(frozen=True)
class TwoQubitState:
    amps: tuple[float, float, float, float]

    @classmethod
    def reduced(cls, a1: float, a3: float) -> "TwoQubitState":
        return cls((a1, 0.0, a3, 0.0))

    @property
    def norm(self) -> float:
        return math.sqrt(sum(v * v for v in self.amps))

    def is_reduced(self) -> bool:
        return self.amps[1] == 0.0 and self.amps[3] == 0.0


def step_unitary(theta_down: float, theta_up: float) -> np.ndarray:
    """4x4 matrix of one step: a path rotation controlled on spin 0, then on spin 1."""
    u = np.zeros((4, 4))
    u[0:2, 0:2] = ry_matrix(path_rotation_angle(theta_down))
    u[2:4, 2:4] = ry_matrix(path_rotation_angle(theta_up))
    return u


def _step_unitaries(config: ModelConfig) -> list[np.ndarray]:
    p = config.decoupled
    return [step_unitary(d, u) for d, u in zip(p.theta_down, p.theta_up)]


def rotate_in(lam: float, v0, v1):
    """Apply the basis rotation ``R(lam)`` to the spin pair."""
    c, s = math.cos(lam), math.sin(lam)
    return c * v0 - s * v1, s * v0 + c * v1


def rotate_out(lam: float, v0, v1):
    """Apply ``R(lam)^T``."""
    c, s = math.cos(lam), math.sin(lam)
    return c * v0 + s * v1, c * v1 - s * v0


def two_qubit_step(state: TwoQubitState, unitary: np.ndarray, draw: float) -> tuple[int, TwoQubitState, tuple[float, float]]:
    """One step of the repeated-measurement circuit.

    Returns ``(bit, next_state, (P0, P1))``; ``bit`` is 0 when ``draw < P0``.
    """
    b = unitary @ np.asarray(state.amps)
    p0 = b[0] * b[0] + b[2] * b[2]
    p1 = b[1] * b[1] + b[3] * b[3]
    if draw < p0:
        bit, p, keep = 0, p0, (b[0], b[2])
    else:
        bit, p, keep = 1, p1, (b[1], b[3])
    if p < _TINY:
        raise DegenerateBranch(f"selected branch has probability {p!r}")
    norm = math.sqrt(p)
    return bit, TwoQubitState.reduced(float(keep[0] / norm), float(keep[1] / norm)), (float(p0), float(p1))


def two_qubit_sample(config: ModelConfig, n_events: int, threads: int | None = None) -> Events:
    """Simulate the two-qubit circuit with mid-circuit measurement and reset.

    Vectorized across the events of a block; each event costs ``O(N)``.
    """
    n = config.n_steps
    unitaries = _step_unitaries(config)
    lam = config.lam
    spin0 = config.initial_spin

    def block(draws: np.ndarray) -> Events:
        size = draws.shape[0]
        a1, a3 = rotate_in(lam, np.full(size, spin0[0]), np.full(size, spin0[1]))
        state = np.zeros((size, 4))
        path = np.empty((size, n), dtype=np.uint8)
        for k, u in enumerate(unitaries):
            state[:, 0], state[:, 2] = a1, a3
            state[:, 1] = state[:, 3] = 0.0
            b = state @ u.T
            p0 = b[:, 0] * b[:, 0] + b[:, 2] * b[:, 2]
            p1 = b[:, 1] * b[:, 1] + b[:, 3] * b[:, 3]
            right = draws[:, k] < p0
            path[:, k] = ~right
            norm = np.sqrt(np.where(right, p0, p1))
            a1 = np.where(right, b[:, 0], b[:, 1]) / norm
            a3 = np.where(right, b[:, 2], b[:, 3]) / norm
        f0, f1 = rotate_out(lam, a1, a3)
        spin = ~(draws[:, n] < f0 * f0 / (f0 * f0 + f1 * f1))
        return Events(n, spin.astype(np.uint8), path)

    return run_blocks(block, n_events, n, config.seed, threads)


def qica_event(
    draws,
    unitaries: list[tuple[tuple[float, ...], ...]],
    lam: float,
    a: float,
    literal: bool = False,
    counter: OpCounter | None = None,
) -> tuple[int, list[int]]:
    """Generate one event with the quantum-inspired classical algorithm.

    ``unitaries`` are the 4x4 step matrices as nested tuples. With ``literal``
    the basis rotations around the evolution are skipped.
    """
    a1, a3 = a, math.sqrt(1.0 - a * a)
    if not literal:
        a1, a3 = rotate_in(lam, a1, a3)
    c_psi = []
    flops = 0
    for step, u in enumerate(unitaries):
        vec = (a1, 0.0, a3, 0.0)
        b = [u[i][0] * vec[0] + u[i][1] * vec[1] + u[i][2] * vec[2] + u[i][3] * vec[3] for i in range(4)]
        p0 = b[0] * b[0] + b[2] * b[2]
        p1 = b[1] * b[1] + b[3] * b[3]
        if draws[step] < p0:
            c_psi.append(0)
            r = math.sqrt(p0)
            a1, a3 = b[0] / r, b[2] / r
        else:
            c_psi.append(1)
            r = math.sqrt(p1)
            a1, a3 = b[1] / r, b[3] / r
        flops += 28 + 6 + 1 + 1 + 2
    if not literal:
        a1, a3 = rotate_out(lam, a1, a3)
        flops += 6
    c_f = 0 if draws[len(unitaries)] < a1 * a1 / (a1 * a1 + a3 * a3) else 1
    flops += 4
    if counter is not None:
        counter.flops += flops
        counter.steps += len(unitaries)
    return c_f, c_psi


def qica_sample(
    config: ModelConfig,
    n_events: int,
    threads: int | None = None,
    literal: bool = False,
    counter: OpCounter | None = None,
) -> Events:
    n = config.n_steps
    unitaries = [tuple(tuple(float(v) for v in row) for row in u) for u in _step_unitaries(config)]

    def block(draws: np.ndarray) -> Events:
        spin = np.empty(draws.shape[0], dtype=np.uint8)
        path = np.empty((draws.shape[0], n), dtype=np.uint8)
        for i, row in enumerate(draws.tolist()):
            spin[i], path[i] = qica_event(row, unitaries, config.lam, config.initial_a, literal, counter)
        return Events(n, spin, path)

    return run_blocks(block, n_events, n, config.seed, threads)


def qica_literal_sample(config: ModelConfig, n_events: int, threads: int | None = None) -> Events:
    return qica_sample(config, n_events, threads, literal=True)


def _branch(a1, a3, u, bit):
    b = np.stack([a1, np.zeros_like(a1), a3, np.zeros_like(a3)], axis=1) @ u.T
    return (b[:, 1], b[:, 3]) if bit else (b[:, 0], b[:, 2])


def enumerate_two_qubit_distribution(config: ModelConfig, literal: bool = False) -> OutcomeDistribution:
    """Exact outcome table of the two-qubit circuit by walking every measurement branch.

    Each leaf's probability is the product of the conditional branch
    probabilities times the final spin probability. The same walk carries the
    unnormalized amplitudes, and the two must agree to ``CHAIN_TOL``.
    """
    n = config.n_steps
    if n > ENUMERATE_MAX_N:
        raise TooLarge(f"two-qubit enumeration limited to N <= {ENUMERATE_MAX_N}, got {n}")
    lam = config.lam
    x0, x1 = config.initial_spin
    if not literal:
        x0, x1 = rotate_in(lam, x0, x1)
    a1, a3 = np.array([x0]), np.array([x1])
    raw1, raw3 = a1.copy(), a3.copy()
    chain = np.ones(1)
    for u in _step_unitaries(config):
        kids = []
        for bit in (0, 1):
            b1, b3 = _branch(a1, a3, u, bit)
            p = b1 * b1 + b3 * b3
            safe = np.where(p > 0.0, np.sqrt(np.where(p > 0.0, p, 1.0)), 1.0)
            r1, r3 = _branch(raw1, raw3, u, bit)
            kids.append((b1 / safe, b3 / safe, chain * p, r1, r3))
        # bit-0 children first: the new step becomes the most significant path bit so far
        a1, a3, chain, raw1, raw3 = (np.concatenate([k0, k1]) for k0, k1 in zip(*kids))
    if not literal:
        a1, a3 = rotate_out(lam, a1, a3)
        raw1, raw3 = rotate_out(lam, raw1, raw3)
    denom = a1 * a1 + a3 * a3
    q0 = np.where(denom > 0.0, a1 * a1 / np.where(denom > 0.0, denom, 1.0), 0.5)
    probs = np.stack([chain * q0, chain * (1.0 - q0)], axis=1)
    direct = np.stack([raw1 * raw1, raw3 * raw3], axis=1)
    gap = float(np.max(np.abs(probs - direct)))
    if gap > CHAIN_TOL:
        raise RuntimeError(f"conditional probability chain disagrees with amplitudes by {gap:.3e}")
    method = "two-qubit-literal-enum" if literal else "two-qubit-enum"
    return OutcomeDistribution(n, probs.ravel(), method=method, config_hash=config_hash(config))


def naive_mcmc_sample(config: ModelConfig, n_events: int, threads: int | None = None) -> Events:
    """Step-by-step sampling of squared original-basis amplitudes (no interference).

    At each step the latent spin ``s`` moves to one of four options
    ``(left, 0), (left, 1), (right, 0), (right, 1)`` with probability
    ``M_move[s', s]**2``; the reported spin is the latent spin after step N.
    """
    n = config.n_steps
    mats = config.step_matrices()
    # cumulative option probabilities per step, shape (2 initial spins, 4 options)
    cums = []
    for left, right in mats:
        w = np.stack([left[0] ** 2, left[1] ** 2, right[0] ** 2, right[1] ** 2], axis=1)
        cum = np.cumsum(w, axis=1)
        cums.append(cum / cum[:, -1:])
    p_down0 = config.initial_spin[0] ** 2

    def block(draws: np.ndarray) -> Events:
        spin = (draws[:, n] >= p_down0).astype(np.int64)
        path = np.empty((draws.shape[0], n), dtype=np.uint8)
        for k, cum in enumerate(cums):
            choice = (draws[:, k, None] >= cum[spin, :3]).sum(axis=1)
            path[:, k] = choice < 2
            spin = choice & 1
        return Events(n, spin.astype(np.uint8), path)

    return run_blocks(block, n_events, n, config.seed, threads)


def naive_mcmc_distribution(config: ModelConfig) -> OutcomeDistribution:
    """Exact distribution of the naive chain: leaf products of squared step matrices."""
    n = config.n_steps
    if n > MATRIX_PRODUCT_MAX_N:
        raise TooLarge(f"naive chain enumeration limited to N <= {MATRIX_PRODUCT_MAX_N}")
    squared = [(left**2, right**2) for left, right in config.step_matrices()]
    init = config.initial_spin**2
    probs = leaf_products(init, squared)
    return OutcomeDistribution(n, probs.ravel(), method="naive-mcmc-exact", config_hash=config_hash(config))


SAMPLERS = {
    "statevector": sample_events_statevector,
    "two-qubit": two_qubit_sample,
    "qica": qica_sample,
    "qica-literal": qica_literal_sample,
    "mcmc": naive_mcmc_sample,
}


def sample(method: str, config: ModelConfig, n_events: int, threads: int | None = None) -> Events:
    try:
        fn = SAMPLERS[method]
    except KeyError:
        raise KeyError(f"unknown method {method!r}; choose from {sorted(SAMPLERS)}") from None
    return fn(config, n_events, threads=threads)
