"""Full-register circuit: construction, decomposition, dense simulation.

Qubit 0 holds the spin (``|0>`` = down), qubit ``i`` for ``i = 1..N`` records
the move at step ``i`` (``|1>`` = left). In a statevector index, bit ``q`` is
qubit ``q``, which coincides with the flat outcome index ``spin + 2 * path``.

``RY(phi) = [[cos(phi/2), -sin(phi/2)], [sin(phi/2), cos(phi/2)]]``, so
``RY(2 * lam)`` is the basis rotation. The per-step path rotation must put the
left amplitude ``cos(theta)`` on ``|1>``; that is ``RY(pi - 2 * theta)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import TooLarge, UnsupportedGate
from .model import ModelConfig
from .oracle import config_hash
from .outcomes import Events, OutcomeDistribution
from .rng import run_blocks

STATEVECTOR_MAX_N = 24
UNITARY_MAX_N = 6

GATE_KINDS = ("ry", "x", "cx", "cry")
STANDARD_KINDS = ("ry", "x", "cx")


@dataclass(frozen=True)
class Gate:
    kind: str
    target: int
    control: int | None = None
    angle: float = 0.0
    control_value: int = 1

    def __post_init__(self):
        if self.kind not in GATE_KINDS:
            raise UnsupportedGate(f"unknown gate kind {self.kind!r}")
        needs_control = self.kind in ("cx", "cry")
        if needs_control != (self.control is not None):
            raise UnsupportedGate(f"{self.kind} gate control mismatch")
        if self.control is not None and self.control == self.target:
            raise UnsupportedGate("control and target coincide")
        if self.control_value not in (0, 1):
            raise UnsupportedGate("control value must be 0 or 1")

    @property
    def qubits(self) -> tuple[int, ...]:
        return (self.target,) if self.control is None else (self.control, self.target)


def ry(angle: float, target: int) -> Gate:
    return Gate("ry", target, angle=float(angle))


def x(target: int) -> Gate:
    return Gate("x", target)


def cx(control: int, target: int) -> Gate:
    return Gate("cx", target, control=control)


def cry(angle: float, control: int, target: int, control_value: int = 1) -> Gate:
    return Gate("cry", target, control=control, angle=float(angle), control_value=control_value)


@dataclass(frozen=True)
class Circuit:
    n_qubits: int
    gates: tuple[Gate, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "gates", tuple(self.gates))
        for g in self.gates:
            if max(g.qubits) >= self.n_qubits or min(g.qubits) < 0:
                raise UnsupportedGate(f"gate {g} addresses a qubit outside 0..{self.n_qubits - 1}")

    def __len__(self) -> int:
        return len(self.gates)

    @property
    def n_steps(self) -> int:
        return self.n_qubits - 1

    def is_standard(self) -> bool:
        return all(g.kind in STANDARD_KINDS for g in self.gates)


def path_rotation_angle(theta: float) -> float:
    return math.pi - 2.0 * theta


def ry_matrix(angle: float) -> np.ndarray:
    c, s = math.cos(angle / 2), math.sin(angle / 2)
    return np.array([[c, -s], [s, c]])


_X = np.array([[0.0, 1.0], [1.0, 0.0]])


def build_circuit(config: ModelConfig) -> Circuit:
    params = config.decoupled
    gates = [ry(2 * params.lam, 0)]
    for n in range(1, config.n_steps + 1):
        gates.append(cry(path_rotation_angle(params.theta_down[n - 1]), 0, n, control_value=0))
        gates.append(cry(path_rotation_angle(params.theta_up[n - 1]), 0, n, control_value=1))
    gates.append(ry(-2 * params.lam, 0))
    return Circuit(config.n_steps + 1, gates)


def _decompose_cry(g: Gate) -> list[Gate]:
    # CRY(phi) = RY(phi/4) CX RY(-phi/2) CX RY(phi/4) on the target
    alpha, beta = g.angle / 4, -g.angle / 2
    body = [ry(alpha, g.target), cx(g.control, g.target), ry(beta, g.target),
            cx(g.control, g.target), ry(alpha, g.target)]
    if g.control_value == 0:
        return [x(g.control), *body, x(g.control)]
    return body


def decompose(circuit: Circuit) -> Circuit:
    """Rewrite every controlled rotation into RY, X and CX gates."""
    out: list[Gate] = []
    for g in circuit.gates:
        if g.kind in STANDARD_KINDS:
            out.append(g)
        elif g.kind == "cry":
            out.extend(_decompose_cry(g))
        else:
            raise UnsupportedGate(f"cannot decompose {g.kind}")
    return Circuit(circuit.n_qubits, out)


def _qubit_view(psi: np.ndarray, n_qubits: int) -> np.ndarray:
    # one axis per qubit (qubit q on axis n-1-q) plus a trailing batch axis
    return psi.reshape((2,) * n_qubits + (-1,))


def _axis_index(n_qubits: int, fixed: dict[int, int]) -> tuple:
    idx = [slice(None)] * (n_qubits + 1)
    for q, v in fixed.items():
        idx[n_qubits - 1 - q] = v
    return tuple(idx)


def _rotate(view: np.ndarray, n_qubits: int, target: int, m: np.ndarray, fixed: dict[int, int]) -> None:
    a0 = view[_axis_index(n_qubits, {**fixed, target: 0})]
    a1 = view[_axis_index(n_qubits, {**fixed, target: 1})]
    new0 = m[0, 0] * a0 + m[0, 1] * a1
    a1 *= m[1, 1]
    a1 += m[1, 0] * a0
    a0[...] = new0


def apply_gate(psi: np.ndarray, gate: Gate, n_qubits: int) -> None:
    """Apply ``gate`` in place to ``psi`` of shape ``(2**n,)`` or ``(2**n, batch)``."""
    view = _qubit_view(psi, n_qubits)
    if gate.kind == "ry":
        _rotate(view, n_qubits, gate.target, ry_matrix(gate.angle), {})
    elif gate.kind == "x":
        _rotate(view, n_qubits, gate.target, _X, {})
    elif gate.kind == "cx":
        _rotate(view, n_qubits, gate.target, _X, {gate.control: 1})
    elif gate.kind == "cry":
        _rotate(view, n_qubits, gate.target, ry_matrix(gate.angle), {gate.control: gate.control_value})
    else:
        raise UnsupportedGate(gate.kind)


def gate_matrix(gate: Gate, n_qubits: int) -> np.ndarray:
    return circuit_unitary(Circuit(n_qubits, [gate]))


def circuit_unitary(circuit: Circuit) -> np.ndarray:
    if circuit.n_qubits > UNITARY_MAX_N + 1:
        raise TooLarge(f"dense unitary limited to {UNITARY_MAX_N + 1} qubits")
    u = np.eye(1 << circuit.n_qubits)
    for g in circuit.gates:
        apply_gate(u, g, circuit.n_qubits)
    return u


def initial_state(config: ModelConfig) -> np.ndarray:
    psi = np.zeros(1 << (config.n_steps + 1))
    psi[:2] = config.initial_spin
    return psi


def run_statevector(config: ModelConfig, decomposed: bool = False, norm_tol: float | None = None) -> np.ndarray:
    """Final statevector. With ``norm_tol`` set, the norm is checked after every gate."""
    if config.n_steps > STATEVECTOR_MAX_N:
        raise TooLarge(f"statevector limited to N <= {STATEVECTOR_MAX_N}, got {config.n_steps}")
    circuit = build_circuit(config)
    if decomposed:
        circuit = decompose(circuit)
    psi = initial_state(config)
    for g in circuit.gates:
        apply_gate(psi, g, circuit.n_qubits)
        if norm_tol is not None:
            norm = float(psi @ psi)
            if abs(norm - 1.0) > norm_tol:
                raise AssertionError(f"norm drifted to {norm!r} after {g}")
    return psi


def statevector_run(config: ModelConfig, decomposed: bool = False) -> OutcomeDistribution:
    psi = run_statevector(config, decomposed=decomposed)
    return OutcomeDistribution(config.n_steps, psi * psi, method="statevector", config_hash=config_hash(config))


def sample_from_distribution(
    dist: OutcomeDistribution, n_events: int, seed: int, threads: int | None = None
) -> Events:
    """Inverse-CDF sampling; event ``i`` uses the spin-column draw of its row."""
    n = dist.n_steps
    cdf = np.cumsum(dist.probs)
    cdf /= cdf[-1]
    shifts = np.arange(n, dtype=np.int64)

    def block(draws: np.ndarray) -> Events:
        idx = np.searchsorted(cdf, draws[:, n], side="right")
        idx = np.minimum(idx, len(cdf) - 1)
        path = ((idx[:, None] >> 1 >> shifts) & 1).astype(np.uint8)
        return Events(n, (idx & 1).astype(np.uint8), path)

    return run_blocks(block, n_events, n, seed, threads)


def sample_events_statevector(
    config: ModelConfig, n_events: int, threads: int | None = None
) -> Events:
    if n_events == 0:
        if config.n_steps > STATEVECTOR_MAX_N:
            raise TooLarge(f"statevector limited to N <= {STATEVECTOR_MAX_N}, got {config.n_steps}")
        return Events(config.n_steps)
    return sample_from_distribution(statevector_run(config), n_events, config.seed, threads)
