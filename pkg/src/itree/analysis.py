"""Histograms, distances between outcome tables, and expectation sweeps over lambda."""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import EmptyStream, InsufficientExpected, KeyMismatch
from .model import ModelConfig
from .observables import OBSERVABLES, observable
from .oracle import (
    MATRIX_PRODUCT_MAX_N,
    exact_observable_expectation,
    matrix_product_distribution,
    observable_marginal,
)
from .outcomes import Events, OutcomeDistribution
from .samplers import naive_mcmc_distribution, sample

MIN_EXPECTED = 5.0


@dataclass(frozen=True)
class Histogram:
    observable: str
    bins: np.ndarray
    counts: np.ndarray
    total: int

    @property
    def errors(self) -> np.ndarray:
        return np.sqrt(self.counts)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["observable", "bin", "count", "error"])
        for b, c, e in zip(self.bins, self.counts, self.errors):
            w.writerow([self.observable, int(b), int(c), f"{e:.17g}"])
        return buf.getvalue()


def observable_samples(events: Events, name: str) -> np.ndarray:
    fn, _ = observable(name)
    return fn(events.path)


def histogram(events: Events, name: str, bins: Sequence[int] | None = None) -> Histogram:
    """Integer-binned counts of an observable.

    Without ``bins`` the range spans the smallest to largest observed value.
    """
    if len(events) == 0:
        raise EmptyStream("cannot histogram an empty event stream")
    values = observable_samples(events, name)
    if bins is None:
        bins = np.arange(values.min(), values.max() + 1)
    bins = np.asarray(bins, dtype=np.int64)
    counts = np.bincount(values - bins[0], minlength=len(bins))[: len(bins)]
    return Histogram(name, bins, counts.astype(np.int64), int(len(events)))


def full_histogram(events: Events, name: str) -> Histogram:
    _, value_range = observable(name)
    return histogram(events, name, bins=list(value_range(events.n_steps)))


def mean_and_stderr(values: np.ndarray) -> tuple[float, float]:
    m = len(values)
    if m == 0:
        raise EmptyStream("no samples")
    mean = float(np.mean(values))
    if m == 1:
        return mean, 0.0
    return mean, float(np.std(values, ddof=1) / math.sqrt(m))


def tv_distance(a: OutcomeDistribution | np.ndarray, b: OutcomeDistribution | np.ndarray) -> float:
    pa = a.probs if isinstance(a, OutcomeDistribution) else np.asarray(a, dtype=float)
    pb = b.probs if isinstance(b, OutcomeDistribution) else np.asarray(b, dtype=float)
    if isinstance(a, OutcomeDistribution) and isinstance(b, OutcomeDistribution) and a.n_steps != b.n_steps:
        raise KeyMismatch(f"outcome spaces differ: N={a.n_steps} vs N={b.n_steps}")
    if pa.shape != pb.shape:
        raise KeyMismatch(f"outcome spaces differ: {pa.shape} vs {pb.shape}")
    return float(0.5 * np.abs(pa - pb).sum())


def tv_noise_floor(dist: OutcomeDistribution | np.ndarray, n_events: int) -> float:
    """Expected TV distance between ``dist`` and an ``n_events``-sample empirical copy.

    Normal approximation per outcome: ``E|p_hat - p| = sqrt(2 p (1 - p) / (pi M))``.
    """
    p = dist.probs if isinstance(dist, OutcomeDistribution) else np.asarray(dist, dtype=float)
    return float(0.5 * np.sqrt(2.0 * p * (1.0 - p) / (math.pi * n_events)).sum())


def _merge_bins(observed: np.ndarray, expected: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    obs_groups, exp_groups = [], []
    acc_o = acc_e = 0.0
    for o, e in zip(observed, expected):
        acc_o += o
        acc_e += e
        if acc_e >= MIN_EXPECTED:
            obs_groups.append(acc_o)
            exp_groups.append(acc_e)
            acc_o = acc_e = 0.0
    if acc_e > 0.0 or acc_o > 0.0:
        if not exp_groups:
            raise InsufficientExpected("total expected count below the merge threshold")
        obs_groups[-1] += acc_o
        exp_groups[-1] += acc_e
    return np.array(obs_groups), np.array(exp_groups)


def chi_square(hist: Histogram, expected: Sequence[float]) -> tuple[float, int]:
    """Pearson statistic against expected counts aligned with ``hist.bins``.

    Adjacent bins are merged left to right until each group expects at least
    ``MIN_EXPECTED`` counts; a short tail joins the last group.
    """
    expected = np.asarray(expected, dtype=float)
    if expected.shape != hist.counts.shape:
        raise KeyMismatch("expected counts do not align with histogram bins")
    obs, exp = _merge_bins(hist.counts.astype(float), expected)
    if len(exp) < 2:
        raise InsufficientExpected("fewer than two bins after merging")
    stat = float(((obs - exp) ** 2 / exp).sum())
    return stat, len(exp) - 1


def expected_counts(dist: OutcomeDistribution, hist: Histogram) -> np.ndarray:
    values, probs = observable_marginal(dist, hist.observable)
    lookup = dict(zip(values.tolist(), probs.tolist()))
    return np.array([lookup.get(int(b), 0.0) for b in hist.bins]) * hist.total


def observable_tv(dist: OutcomeDistribution, events: Events, name: str) -> float:
    """TV distance between the exact and empirical distributions of one observable."""
    _, probs = observable_marginal(dist, name)
    hist = full_histogram(events, name)
    return tv_distance(probs, hist.counts / hist.total)


@dataclass
class SweepResult:
    method: str
    lambdas: np.ndarray
    mean: dict[str, np.ndarray] = field(default_factory=dict)
    stderr: dict[str, np.ndarray] = field(default_factory=dict)

    def rows(self):
        for i, lam in enumerate(self.lambdas):
            for name in self.mean:
                yield float(lam), self.method, name, float(self.mean[name][i]), float(self.stderr[name][i])


EXACT_METHODS = ("exact", "mcmc-exact")


def sweep_seed(seed: int, lam_index: int) -> int:
    return int(np.random.SeedSequence(seed, spawn_key=(lam_index,)).generate_state(1)[0])


def lambda_sweep(
    template: ModelConfig,
    lambdas: Sequence[float],
    n_events: int,
    methods: Sequence[str],
    threads: int | None = None,
    include_exact: bool = True,
    observables: Sequence[str] = tuple(OBSERVABLES),
    on_events: Callable[[int, ModelConfig, str, Events], None] | None = None,
) -> list[SweepResult]:
    """Expectation value and standard error of each observable, per method and lambda.

    Sampling methods share one derived seed per lambda index. ``exact`` (the
    matrix-product oracle) and ``mcmc-exact`` (the naive chain enumerated) carry
    zero standard error; ``exact`` is appended automatically when N permits.
    ``on_events(lambda_index, config, method, events)`` sees every sampled batch.
    """
    lambdas = np.asarray(lambdas, dtype=float)
    if lambdas.ndim != 1 or len(lambdas) == 0:
        raise ValueError("lambda grid must be a non-empty 1-d sequence")
    if np.any(np.diff(lambdas) <= 0):
        raise ValueError("lambda grid must be strictly increasing")
    if lambdas[0] < 0.0 or lambdas[-1] > math.pi / 2 + 1e-12:
        raise ValueError("lambda grid must lie in [0, pi/2]")
    methods = list(methods)
    if include_exact and "exact" not in methods and template.n_steps <= MATRIX_PRODUCT_MAX_N:
        methods.append("exact")
    results = {m: SweepResult(m, lambdas, {o: np.zeros(len(lambdas)) for o in observables},
                              {o: np.zeros(len(lambdas)) for o in observables}) for m in methods}
    for i, lam in enumerate(lambdas):
        config = template.with_lambda(float(lam)).with_seed(sweep_seed(template.seed, i))
        for m in methods:
            if m in EXACT_METHODS:
                dist = matrix_product_distribution(config) if m == "exact" else naive_mcmc_distribution(config)
                for o in observables:
                    results[m].mean[o][i] = exact_observable_expectation(dist, o)
                    results[m].stderr[o][i] = 0.0
            else:
                events = sample(m, config, n_events, threads=threads)
                if on_events is not None:
                    on_events(i, config, m, events)
                for o in observables:
                    results[m].mean[o][i], results[m].stderr[o][i] = mean_and_stderr(
                        observable_samples(events, o)
                    )
    return [results[m] for m in methods]


def sweep_to_csv(results: Sequence[SweepResult]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["lambda", "method", "observable", "mean", "stderr"])
    for r in results:
        for lam, method, name, mean, err in r.rows():
            w.writerow([f"{lam:.17g}", method, name, f"{mean:.17g}", f"{err:.17g}"])
    return buf.getvalue()
