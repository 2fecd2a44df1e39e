"""Per-event observables, for single events and vectorized over path arrays."""
from __future__ import annotations

from typing import Callable

import numpy as np

from .outcomes import Event


def first_left_depth(event: Event) -> int:
    """1-based step of the first left move; ``N + 1`` when the path never goes left."""
    for i, bit in enumerate(event.path, start=1):
        if bit:
            return i
    return len(event.path) + 1


def num_left_branches(event: Event) -> int:
    return int(sum(event.path))


def first_left_depth_array(path: np.ndarray) -> np.ndarray:
    path = np.asarray(path)
    n = path.shape[1]
    went_left = path.any(axis=1)
    return np.where(went_left, path.argmax(axis=1) + 1, n + 1).astype(np.int64)


def num_left_branches_array(path: np.ndarray) -> np.ndarray:
    return np.asarray(path).sum(axis=1, dtype=np.int64)


# name -> (vectorized function, value range as a function of N)
OBSERVABLES: dict[str, tuple[Callable[[np.ndarray], np.ndarray], Callable[[int], range]]] = {
    "first-left-depth": (first_left_depth_array, lambda n: range(1, n + 2)),
    "num-left-branches": (num_left_branches_array, lambda n: range(0, n + 1)),
}


def observable(name: str):
    try:
        return OBSERVABLES[name]
    except KeyError:
        raise KeyError(f"unknown observable {name!r}; choose from {sorted(OBSERVABLES)}") from None
