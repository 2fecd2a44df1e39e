"""Outcome tables and event streams shared by every oracle and sampler.

An outcome is a path (``N`` bits, 1 = left) plus a final spin bit. Both the
exact tables and the statevector use the flat index ``spin + 2 * path`` where
``path`` packs step 1 into the least significant bit.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from typing import Iterator

import numpy as np

from .errors import KeyMismatch, LengthMismatch

NORM_TOL = 1e-10


def path_to_int(bits) -> int:
    return int(sum(int(b) << i for i, b in enumerate(bits)))


def int_to_path(value: int, n_steps: int) -> tuple[int, ...]:
    return tuple((value >> i) & 1 for i in range(n_steps))


def path_string(bits) -> str:
    return "".join("1" if b else "0" for b in bits)


def path_bit_matrix(n_steps: int) -> np.ndarray:
    """``(2**N, N)`` uint8 array; row ``p`` holds the bits of path index ``p``."""
    idx = np.arange(1 << n_steps, dtype=np.int64)
    return ((idx[:, None] >> np.arange(n_steps)) & 1).astype(np.uint8)


@dataclass(frozen=True)
class OutcomeDistribution:
    """Probability of every ``(path, spin)`` outcome, stored flat."""

    n_steps: int
    probs: np.ndarray
    method: str = ""
    config_hash: str = ""

    def __post_init__(self):
        probs = np.asarray(self.probs, dtype=float)
        if probs.shape != (1 << (self.n_steps + 1),):
            raise LengthMismatch(
                f"expected {1 << (self.n_steps + 1)} outcomes, got shape {probs.shape}"
            )
        probs.setflags(write=False)
        object.__setattr__(self, "probs", probs)

    def prob(self, path, spin: int) -> float:
        if len(path) != self.n_steps:
            raise LengthMismatch(f"path has {len(path)} bits, expected {self.n_steps}")
        return float(self.probs[spin + 2 * path_to_int(path)])

    def table(self) -> np.ndarray:
        """View as ``(2**N, 2)`` indexed ``[path, spin]``."""
        return self.probs.reshape(-1, 2)

    def total(self) -> float:
        return float(self.probs.sum())

    def is_normalized(self, tol: float = NORM_TOL) -> bool:
        return bool(np.all(self.probs >= 0.0)) and abs(self.total() - 1.0) <= tol

    def max_abs_diff(self, other: "OutcomeDistribution") -> float:
        if other.n_steps != self.n_steps:
            raise KeyMismatch(f"outcome spaces differ: N={self.n_steps} vs N={other.n_steps}")
        return float(np.max(np.abs(self.probs - other.probs)))

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["path", "spin", "probability"])
        bits = path_bit_matrix(self.n_steps)
        for p in range(1 << self.n_steps):
            ps = path_string(bits[p])
            for s in (0, 1):
                w.writerow([ps, s, f"{self.probs[s + 2 * p]:.17g}"])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str, method: str = "csv") -> "OutcomeDistribution":
        rows = list(csv.DictReader(io.StringIO(text)))
        if not rows:
            raise LengthMismatch("empty distribution file")
        n_steps = len(rows[0]["path"])
        probs = np.zeros(1 << (n_steps + 1))
        for row in rows:
            probs[int(row["spin"]) + 2 * path_to_int(int(c) for c in row["path"])] = float(
                row["probability"]
            )
        return cls(n_steps, probs, method=method)


@dataclass(frozen=True)
class Event:
    spin: int
    path: tuple[int, ...]

    @property
    def n_steps(self) -> int:
        return len(self.path)


@dataclass
class Events:
    """A batch of sampled events held as arrays.

    ``spin`` has shape ``(M,)`` and ``path`` shape ``(M, N)``, both uint8.
    """

    n_steps: int
    spin: np.ndarray = field(default=None)
    path: np.ndarray = field(default=None)

    def __post_init__(self):
        if self.spin is None:
            self.spin = np.zeros(0, dtype=np.uint8)
        if self.path is None:
            self.path = np.zeros((0, self.n_steps), dtype=np.uint8)
        self.spin = np.asarray(self.spin, dtype=np.uint8)
        self.path = np.asarray(self.path, dtype=np.uint8).reshape(-1, self.n_steps)
        if self.path.shape[0] != self.spin.shape[0]:
            raise LengthMismatch("spin and path batches differ in length")

    def __len__(self) -> int:
        return int(self.spin.shape[0])

    def __iter__(self) -> Iterator[Event]:
        for s, p in zip(self.spin, self.path):
            yield Event(int(s), tuple(int(b) for b in p))

    def __getitem__(self, i: int) -> Event:
        return Event(int(self.spin[i]), tuple(int(b) for b in self.path[i]))

    def __eq__(self, other) -> bool:
        if not isinstance(other, Events):
            return NotImplemented
        return (
            self.n_steps == other.n_steps
            and np.array_equal(self.spin, other.spin)
            and np.array_equal(self.path, other.path)
        )

    @classmethod
    def from_list(cls, events: list[Event], n_steps: int) -> "Events":
        for e in events:
            if len(e.path) != n_steps:
                raise LengthMismatch(f"event path has {len(e.path)} bits, expected {n_steps}")
        spin = np.array([e.spin for e in events], dtype=np.uint8)
        path = np.array([e.path for e in events], dtype=np.uint8).reshape(-1, n_steps)
        return cls(n_steps, spin, path)

    @classmethod
    def concat(cls, parts: list["Events"], n_steps: int) -> "Events":
        if not parts:
            return cls(n_steps)
        return cls(
            n_steps,
            np.concatenate([p.spin for p in parts]),
            np.concatenate([p.path for p in parts]),
        )

    def outcome_index(self) -> np.ndarray:
        weights = np.int64(1) << np.arange(self.n_steps, dtype=np.int64)
        return self.spin.astype(np.int64) + 2 * (self.path.astype(np.int64) @ weights)

    def empirical(self) -> OutcomeDistribution:
        counts = np.bincount(self.outcome_index(), minlength=1 << (self.n_steps + 1))
        total = max(len(self), 1)
        return OutcomeDistribution(self.n_steps, counts / total, method="empirical")

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("event_id,spin,path\n")
        if len(self):
            chars = np.where(self.path == 1, ord("1"), ord("0")).astype(np.uint8)
            for i, (s, row) in enumerate(zip(self.spin, chars)):
                buf.write(f"{i},{s},{row.tobytes().decode()}\n")
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "Events":
        rows = list(csv.DictReader(io.StringIO(text)))
        if not rows:
            raise LengthMismatch("event file has no rows")
        n_steps = len(rows[0]["path"])
        spin = np.array([int(r["spin"]) for r in rows], dtype=np.uint8)
        path = np.array([[int(c) for c in r["path"]] for r in rows], dtype=np.uint8)
        return cls(n_steps, spin, path.reshape(-1, n_steps))
