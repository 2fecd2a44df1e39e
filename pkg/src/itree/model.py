"""Tree parameters in the original spin basis and in the rotated (decoupled) basis.

Spin vectors are real 2-vectors ``(down, up)``. A step matrix ``M`` has rows
indexed by the final spin and columns by the initial spin, so the amplitude
``A_h^{s1 s2}`` lives at ``M_h[s2, s1]``.

The rotation ``R(lam) = [[cos, -sin], [sin, cos]]`` is the gate applied to the
spin before the decoupled evolution; the original-basis step is therefore
``M_h = R^T diag(d_down, d_up) R`` with ``d = cos(theta)`` for a left move and
``d = sin(theta)`` for a right move.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import (
    DegenerateDenominator,
    InconsistentAmplitudes,
    LengthMismatch,
    NotDecouplable,
    OutOfRange,
)

UNITARITY_TOL = 1e-12
SYMMETRY_TOL = 1e-12
RESIDUAL_TOL = 1e-9
CROSS_CHECK_TOL = 1e-9
# angles this close to either end of the principal interval are taken as +pi/4
BRANCH_EDGE_TOL = 1e-12

_QUARTER = math.pi / 4


@dataclass(frozen=True)
class StepAmplitudes:
    """The eight original-basis amplitudes of one step, named ``a{move}{initial}{final}``."""

    aLdd: float
    aLdu: float
    aLud: float
    aLuu: float
    aRdd: float
    aRdu: float
    aRud: float
    aRuu: float

    FIELDS = ("aLdd", "aLdu", "aLud", "aLuu", "aRdd", "aRdu", "aRud", "aRuu")

    @classmethod
    def from_matrices(cls, left: np.ndarray, right: np.ndarray) -> "StepAmplitudes":
        return cls(
            aLdd=float(left[0, 0]), aLdu=float(left[1, 0]),
            aLud=float(left[0, 1]), aLuu=float(left[1, 1]),
            aRdd=float(right[0, 0]), aRdu=float(right[1, 0]),
            aRud=float(right[0, 1]), aRuu=float(right[1, 1]),
        )

    @classmethod
    def from_dict(cls, data: dict) -> "StepAmplitudes":
        missing = [k for k in cls.FIELDS if k not in data]
        if missing:
            raise OutOfRange(f"missing amplitude fields: {missing}")
        return cls(**{k: float(data[k]) for k in cls.FIELDS})

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.FIELDS}

    def matrices(self) -> tuple[np.ndarray, np.ndarray]:
        left = np.array([[self.aLdd, self.aLud], [self.aLdu, self.aLuu]])
        right = np.array([[self.aRdd, self.aRud], [self.aRdu, self.aRuu]])
        return left, right


@dataclass(frozen=True)
class DecoupledParams:
    """Rotation angle plus per-step angles of the two independent trees.

    ``theta_down[n-1]`` and ``theta_up[n-1]`` belong to step ``n``. The left
    amplitude on each tree is ``cos(theta)``, the right amplitude ``sin(theta)``.
    """

    lam: float
    theta_down: tuple[float, ...]
    theta_up: tuple[float, ...]

    def __post_init__(self):
        if len(self.theta_down) != len(self.theta_up):
            raise LengthMismatch("theta_down and theta_up differ in length")
        if len(self.theta_down) < 1:
            raise OutOfRange("need at least one step")
        values = (self.lam, *self.theta_down, *self.theta_up)
        if not all(math.isfinite(v) for v in values):
            raise OutOfRange("angles must be finite")

    @property
    def n_steps(self) -> int:
        return len(self.theta_down)

    def left(self, n: int) -> tuple[float, float]:
        """Decoupled left amplitudes (down tree, up tree) at 1-based step ``n``."""
        return math.cos(self.theta_down[n - 1]), math.cos(self.theta_up[n - 1])

    def right(self, n: int) -> tuple[float, float]:
        return math.sin(self.theta_down[n - 1]), math.sin(self.theta_up[n - 1])


def _broadcast(p, n_steps: int, name: str) -> tuple[float, ...]:
    if np.ndim(p) == 0:
        values = (float(p),) * n_steps
    else:
        values = tuple(float(x) for x in p)
        if len(values) != n_steps:
            raise LengthMismatch(f"{name} has {len(values)} entries, expected {n_steps}")
    for v in values:
        if not (0.0 <= v <= 1.0):
            raise OutOfRange(f"{name} probability {v} outside [0, 1]")
    return values


@dataclass(frozen=True)
class ModelConfig:
    """Everything needed to define and sample one tree."""

    n_steps: int
    lam: float
    p_down: tuple[float, ...]
    p_up: tuple[float, ...]
    initial_a: float = 1.0
    seed: int = 0
    decoupled: DecoupledParams = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if not isinstance(self.n_steps, (int, np.integer)) or self.n_steps < 1:
            raise OutOfRange(f"n_steps must be a positive integer, got {self.n_steps!r}")
        if not math.isfinite(self.lam):
            raise OutOfRange("lambda must be finite")
        if not (-1.0 <= self.initial_a <= 1.0):
            raise OutOfRange(f"initial_a={self.initial_a} outside [-1, 1]")
        if self.seed < 0:
            raise OutOfRange("seed must be non-negative")
        object.__setattr__(self, "p_down", _broadcast(self.p_down, self.n_steps, "p_down"))
        object.__setattr__(self, "p_up", _broadcast(self.p_up, self.n_steps, "p_up"))
        params = DecoupledParams(
            lam=float(self.lam),
            theta_down=tuple(theta_from_probability(p) for p in self.p_down),
            theta_up=tuple(theta_from_probability(p) for p in self.p_up),
        )
        object.__setattr__(self, "decoupled", params)

    @property
    def initial_spin(self) -> np.ndarray:
        a = self.initial_a
        return np.array([a, math.sqrt(max(0.0, 1.0 - a * a))])

    def with_lambda(self, lam: float) -> "ModelConfig":
        return ModelConfig(self.n_steps, lam, self.p_down, self.p_up, self.initial_a, self.seed)

    def with_seed(self, seed: int) -> "ModelConfig":
        return ModelConfig(self.n_steps, self.lam, self.p_down, self.p_up, self.initial_a, seed)

    def step_matrices(self) -> list[tuple[np.ndarray, np.ndarray]]:
        """Original-basis ``(M_L, M_R)`` for steps 1..N."""
        return [recouple(self.decoupled, n) for n in range(1, self.n_steps + 1)]

    def to_dict(self) -> dict:
        def compact(values):
            return values[0] if len(set(values)) == 1 else list(values)

        return {
            "n_steps": self.n_steps,
            "lambda": self.lam,
            "p_down": compact(self.p_down),
            "p_up": compact(self.p_up),
            "initial_a": self.initial_a,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ModelConfig":
        try:
            n_steps = data["n_steps"]
            lam = data["lambda"]
            p_down = data["p_down"]
            p_up = data["p_up"]
        except KeyError as exc:
            raise OutOfRange(f"config is missing key {exc.args[0]!r}") from None
        if isinstance(n_steps, bool) or not isinstance(n_steps, int):
            raise OutOfRange(f"n_steps must be an integer, got {n_steps!r}")
        seed = data.get("seed", 0)
        if isinstance(seed, bool) or not isinstance(seed, int):
            raise OutOfRange(f"seed must be an unsigned integer, got {seed!r}")
        return config_from_probabilities(
            n_steps, float(lam), p_down, p_up, float(data.get("initial_a", 1.0)), seed
        )

    @classmethod
    def from_json(cls, text: str) -> "ModelConfig":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise OutOfRange(f"config is not valid JSON: {exc}") from None
        if not isinstance(data, dict):
            raise OutOfRange("config must be a JSON object")
        return cls.from_dict(data)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def theta_from_probability(p: float) -> float:
    """Angle in [0, pi/2] whose squared cosine is the left-move probability ``p``."""
    if not (0.0 <= p <= 1.0):
        raise OutOfRange(f"probability {p} outside [0, 1]")
    return math.acos(math.sqrt(p))


def config_from_probabilities(
    n_steps: int,
    lam: float,
    p_down: float | Sequence[float],
    p_up: float | Sequence[float],
    initial_a: float = 1.0,
    seed: int = 0,
) -> ModelConfig:
    return ModelConfig(n_steps, lam, p_down, p_up, initial_a, seed)


def benchmark_config(lam: float = 0.5, seed: int = 0) -> ModelConfig:
    """The N=20 benchmark tree: left probability 0.8 on the down tree, 0.5 on the up tree."""
    return config_from_probabilities(20, lam, 0.8, 0.5, 1.0, seed)


def rotation_matrix(lam: float) -> np.ndarray:
    c, s = math.cos(lam), math.sin(lam)
    return np.array([[c, -s], [s, c]])


def recouple(params: DecoupledParams, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Original-basis left/right step matrices for 1-based step ``n``."""
    r = rotation_matrix(params.lam)
    left = r.T @ np.diag(params.left(n)) @ r
    right = r.T @ np.diag(params.right(n)) @ r
    # symmetric by construction; pin the off-diagonals so decouplability holds exactly
    for m in (left, right):
        m[0, 1] = m[1, 0]
    return left, right


def step_amplitudes(params: DecoupledParams, n: int) -> StepAmplitudes:
    return StepAmplitudes.from_matrices(*recouple(params, n))


def validate_unitarity(amps: StepAmplitudes, tol: float = UNITARITY_TOL) -> tuple[bool, tuple[float, float]]:
    """Check that each initial spin's four outgoing amplitudes have unit squared norm.

    Returns ``(ok, (residual_down, residual_up))``.
    """
    row_down = amps.aLdd**2 + amps.aLdu**2 + amps.aRdd**2 + amps.aRdu**2
    row_up = amps.aLuu**2 + amps.aLud**2 + amps.aRuu**2 + amps.aRud**2
    residuals = (abs(row_down - 1.0), abs(row_up - 1.0))
    return max(residuals) <= tol, residuals


def _check_symmetric(amps: StepAmplitudes, tol: float) -> None:
    if abs(amps.aLdu - amps.aLud) > tol:
        raise NotDecouplable(f"left off-diagonals differ: {amps.aLdu} vs {amps.aLud}")
    if abs(amps.aRdu - amps.aRud) > tol:
        raise NotDecouplable(f"right off-diagonals differ: {amps.aRdu} vs {amps.aRud}")


def rotation_residual(lam: float, diag_diff: float, off_diag: float) -> float:
    """Left side of ``cos(l) sin(l) (A^dd - A^uu) + cos(2 l) A = 0``."""
    return math.cos(lam) * math.sin(lam) * diag_diff + math.cos(2 * lam) * off_diag


def _principal(lam: float) -> float:
    # fold into (-pi/4, pi/4]; the rotation equation has period pi/2
    while lam > _QUARTER:
        lam -= 2 * _QUARTER
    while lam <= -_QUARTER:
        lam += 2 * _QUARTER
    if abs(abs(lam) - _QUARTER) <= BRANCH_EDGE_TOL:
        # roundoff in A_dd - A_uu decides the sign of atan2 at the edge
        return _QUARTER
    return lam


def solve_rotation_angle(amps: StepAmplitudes, tol: float = SYMMETRY_TOL) -> float:
    """Rotation angle in (-pi/4, pi/4] that removes spin mixing from the step.

    The left-move equation fixes the angle; the right-move equation must then
    hold with residual at most ``RESIDUAL_TOL``. When the left matrix is a
    multiple of the identity it carries no information and the right-move
    equation is used instead. If both are, every angle works and 0 is returned.
    """
    _check_symmetric(amps, tol)
    eqs = [
        (amps.aLdd - amps.aLuu, 0.5 * (amps.aLdu + amps.aLud)),
        (amps.aRdd - amps.aRuu, 0.5 * (amps.aRdu + amps.aRud)),
    ]
    informative = [e for e in eqs if math.hypot(*e) > tol]
    if not informative:
        return 0.0
    diff, off = informative[0]
    lam = _principal(0.5 * math.atan2(-2.0 * off, diff))
    for diff, off in eqs:
        res = rotation_residual(lam, diff, off)
        if abs(res) > RESIDUAL_TOL:
            raise InconsistentAmplitudes(
                f"rotation equations disagree: residual {res:.3e} at lambda={lam:.12g}"
            )
    return lam


def _closed_form_left(diag_dd: float, diag_uu: float, off: float) -> tuple[float, float]:
    """Radical closed form for the decoupled left amplitudes.

    It selects the root with ``cos(2*lam) <= 0`` (``|lam| >= pi/4``), i.e. the
    labelling in which the two decoupled trees are swapped relative to the
    principal angle.
    """
    diff = diag_dd - diag_uu
    if diff == 0.0:
        raise DegenerateDenominator("closed form divides by A_L^dd - A_L^uu = 0")
    root = math.sqrt(4 * off**2 * diff**2 + diff**4)
    down = diag_dd - (root + diff**2) / (2 * diff)
    up = diag_dd + 2 * off**2 * diff / (root + diff**2)
    return down, up


def _project(m: np.ndarray, lam: float) -> tuple[float, float]:
    # least-squares solution of the two linear equations for each tree, which is
    # the diagonal of R M R^T; exact when the rotation decouples the step
    c, s = math.cos(lam), math.sin(lam)
    down = c * (c * m[0, 0] - s * m[0, 1]) - s * (c * m[1, 0] - s * m[1, 1])
    up = s * (s * m[0, 0] + c * m[0, 1]) + c * (s * m[1, 0] + c * m[1, 1])
    return down, up


def decouple(amps: StepAmplitudes, lam: float) -> tuple[float, float, float, float]:
    """Decoupled amplitudes ``(L_down, L_up, R_down, R_up)`` under rotation ``lam``.

    Evaluated from the linear equations of the rotated step and cross-checked
    against the closed form (skipped when its denominator vanishes).
    """
    _check_symmetric(amps, SYMMETRY_TOL)
    left, right = amps.matrices()
    l_down, l_up = _project(left, lam)
    r_down, r_up = _project(right, lam)
    try:
        cf_down, cf_up = _closed_form_left(amps.aLdd, amps.aLuu, amps.aLdu)
    except DegenerateDenominator:
        pass
    else:
        if math.cos(2 * lam) > 0:
            cf_down, cf_up = cf_up, cf_down
        err = max(abs(cf_down - l_down), abs(cf_up - l_up))
        if err > CROSS_CHECK_TOL and abs(math.cos(2 * lam)) > 1e-6:
            raise InconsistentAmplitudes(
                f"closed form and linear solution differ by {err:.3e}"
            )
    return l_down, l_up, r_down, r_up


def solve_basis(amps: StepAmplitudes) -> DecoupledParams:
    """Rotation angle and single-step decoupled angles for an original-basis step."""
    lam = solve_rotation_angle(amps)
    l_down, l_up, r_down, r_up = decouple(amps, lam)
    for name, (c, s) in (("down", (l_down, r_down)), ("up", (l_up, r_up))):
        if abs(c * c + s * s - 1.0) > RESIDUAL_TOL:
            raise InconsistentAmplitudes(f"decoupled {name} tree is not unitary")
    return DecoupledParams(
        lam=lam,
        theta_down=(math.atan2(r_down, l_down),),
        theta_up=(math.atan2(r_up, l_up),),
    )
