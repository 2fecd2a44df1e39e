"""OpenQASM 2.0 export of the tree circuit, plus a reader for the emitted subset."""
from __future__ import annotations

import re

from .circuit import Circuit, Gate, cry, cx, ry, x
from .errors import UnsupportedGate

HEADER = 'OPENQASM 2.0;\ninclude "qelib1.inc";\n'
CUSTOM_GATES = (
    "gate cry_on1(theta) c,t { ry(theta/4) t; cx c,t; ry(-theta/2) t; cx c,t; ry(theta/4) t; }\n"
    "gate cry_on0(theta) c,t { x c; cry_on1(theta) c,t; x c; }\n"
)


def _angle(value: float) -> str:
    return f"{value:.17g}"


def gate_line(g: Gate) -> str:
    if g.kind == "ry":
        return f"ry({_angle(g.angle)}) q[{g.target}];"
    if g.kind == "x":
        return f"x q[{g.target}];"
    if g.kind == "cx":
        return f"cx q[{g.control}],q[{g.target}];"
    if g.kind == "cry":
        return f"cry_on{g.control_value}({_angle(g.angle)}) q[{g.control}],q[{g.target}];"
    raise UnsupportedGate(g.kind)


def export_qasm(circuit: Circuit, decomposed: bool = False) -> str:
    """Render ``circuit`` as OpenQASM 2.0.

    With ``decomposed`` set the circuit must already consist of ry/x/cx gates;
    otherwise controlled rotations are emitted through two custom gates.
    """
    if decomposed and not circuit.is_standard():
        bad = sorted({g.kind for g in circuit.gates} - {"ry", "x", "cx"})
        raise UnsupportedGate(f"non-standard gates in decomposed export: {bad}")
    n = circuit.n_qubits
    lines = [
        HEADER.rstrip("\n"),
        f"// q[0] = spin (|0> down, |1> up); q[1..{n - 1}] = move at step i (|1> left, |0> right)",
    ]
    if not decomposed:
        lines.append(CUSTOM_GATES.rstrip("\n"))
    lines.append(f"qreg q[{n}];")
    lines.append(f"creg c[{n}];")
    lines.extend(gate_line(g) for g in circuit.gates)
    lines.extend(f"measure q[{i}] -> c[{i}];" for i in range(n))
    return "\n".join(lines) + "\n"


_QREG = re.compile(r"^qreg\s+q\[(\d+)\];$")
_RY = re.compile(r"^ry\(([^)]+)\)\s+q\[(\d+)\];$")
_X = re.compile(r"^x\s+q\[(\d+)\];$")
_CX = re.compile(r"^cx\s+q\[(\d+)\],\s*q\[(\d+)\];$")
_CRY = re.compile(r"^cry_on([01])\(([^)]+)\)\s+q\[(\d+)\],\s*q\[(\d+)\];$")
_SKIP = ("OPENQASM", "include", "gate ", "creg", "measure", "//")


def parse_qasm(text: str) -> Circuit:
    """Rebuild a :class:`Circuit` from text produced by :func:`export_qasm`."""
    n_qubits = None
    gates: list[Gate] = []
    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith(_SKIP):
            continue
        if m := _QREG.match(line):
            n_qubits = int(m.group(1))
        elif m := _RY.match(line):
            gates.append(ry(float(m.group(1)), int(m.group(2))))
        elif m := _X.match(line):
            gates.append(x(int(m.group(1))))
        elif m := _CX.match(line):
            gates.append(cx(int(m.group(1)), int(m.group(2))))
        elif m := _CRY.match(line):
            gates.append(cry(float(m.group(2)), int(m.group(3)), int(m.group(4)), int(m.group(1))))
        else:
            raise UnsupportedGate(f"unrecognized QASM line: {line!r}")
    if n_qubits is None:
        raise UnsupportedGate("no qreg declaration found")
    return Circuit(n_qubits, gates)


def count_gate_lines(text: str) -> int:
    """Number of gate applications, excluding declarations, definitions and measurements."""
    return len(parse_qasm(text).gates)
