"""Monte Carlo harness: rejection tables and null-uniformity diagnostics.

``run_rejection_table`` replays the sequential test over many independent
replications of a simulation configuration and tallies, per step, how many
replications reached the step and how many rejected its null. Counts chain:
a replication reaches step k+1 exactly when it rejected at step k.

``collect_null_statistics`` instead evaluates the statistic at one fixed
step on every replication, with no sequential gating, to probe the claim
that the statistic is asymptotically Unif(0,1) under the null. That claim
is checked with the Kolmogorov-Smirnov distance to the uniform CDF.

Replications are mutually independent with per-replication seed streams, so
they may be executed by any number of workers in any order; aggregation is
a commutative count sum and the results are identical regardless of
scheduling.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .dgp import SimulationConfig, generate_dataset
from .errors import NumericalError, ValidationError
from .sequential import run_sequence
from .spectrum import sample_covariance, symmetric_eigen
from .statistic import QuadratureSettings, csv_statistic

__all__ = [
    "RejectionTable",
    "NullSample",
    "run_rejection_table",
    "collect_null_statistics",
    "ks_distance",
    "ks_pvalue_approx",
]


@dataclass(frozen=True)
class RejectionTable:
    """Per-step reach and rejection counts over all replications.

    Index i of the count tuples corresponds to step k = i + 1 (steps run
    1..p-1). ``rate_percent(k)`` is None for steps never reached.
    """

    config: SimulationConfig
    reached: tuple[int, ...]
    rejected: tuple[int, ...]

    def rate_percent(self, k: int) -> float | None:
        if not 1 <= k <= len(self.reached):
            raise ValidationError(f"step k must be in [1, {len(self.reached)}], got {k}")
        if self.reached[k - 1] == 0:
            return None
        return 100.0 * self.rejected[k - 1] / self.reached[k - 1]

    @property
    def n_steps(self) -> int:
        return len(self.reached)


@dataclass(frozen=True)
class NullSample:
    """Statistic values collected at one fixed step across replications."""

    statistics: np.ndarray
    k: int
    config: SimulationConfig


def _replicate_flags(cfg: SimulationConfig, replication: int,
                     settings: QuadratureSettings | None) -> list[bool]:
    """Rejection flags of the steps one replication reached, in step order."""
    data = generate_dataset(cfg, replication)
    cov = sample_covariance(data, center=False)
    spec = symmetric_eigen(cov)
    result = run_sequence(spec.eigenvalues, cfg.alpha, settings=settings)
    return [s.rejected for s in result.steps]


def _flags_worker(args) -> tuple[int, list[bool]]:
    cfg, replication, settings = args
    return replication, _replicate_flags(cfg, replication, settings)


def _null_statistic(cfg: SimulationConfig, k: int, replication: int,
                    settings: QuadratureSettings | None) -> float:
    data = generate_dataset(cfg, replication)
    cov = sample_covariance(data, center=False)
    spec = symmetric_eigen(cov)
    return csv_statistic(spec.eigenvalues, k, scale2=None, settings=settings)


def _null_worker(args) -> tuple[int, float]:
    cfg, k, replication, settings = args
    return replication, _null_statistic(cfg, k, replication, settings)


def _run_indexed(worker, jobs, workers: int):
    """Yield (index, result) pairs, optionally via a process pool."""
    if workers <= 1:
        for job in jobs:
            yield worker(job)
        return
    chunk = max(1, len(jobs) // (workers * 4))
    with ProcessPoolExecutor(max_workers=workers) as pool:
        yield from pool.map(worker, jobs, chunksize=chunk)


def run_rejection_table(cfg: SimulationConfig,
                        settings: QuadratureSettings | None = None,
                        workers: int = 1) -> RejectionTable:
    """Tally reach/rejection counts per step over ``cfg.reps`` replications.

    A replication that fails numerically aborts the whole table (with its
    index attached) rather than being skipped, since silent skips would
    bias the rates.
    """
    n_steps = cfg.p - 1
    reached = np.zeros(n_steps, dtype=np.int64)
    rejected = np.zeros(n_steps, dtype=np.int64)
    jobs = [(cfg, rep, settings) for rep in range(cfg.reps)]
    try:
        for rep, flags in _run_indexed(_flags_worker, jobs, workers):
            for i, flag in enumerate(flags):
                reached[i] += 1
                if flag:
                    rejected[i] += 1
    except NumericalError as exc:
        raise NumericalError(
            f"replication failed, aborting table: {exc}",
            best_estimate=exc.best_estimate,
            achieved_rel_tol=exc.achieved_rel_tol,
        ) from exc
    return RejectionTable(config=cfg, reached=tuple(int(v) for v in reached),
                          rejected=tuple(int(v) for v in rejected))


def collect_null_statistics(cfg: SimulationConfig, k: int,
                            settings: QuadratureSettings | None = None,
                            workers: int = 1) -> NullSample:
    """Evaluate the step-k statistic on every replication, no gating.

    Requires ``cfg.true_rank == k - 1`` (so step k is the first true null)
    and ``cfg.local_null_tau > 0``: with tau = 0 the trailing sample
    eigenvalues are exactly zero, the plug-in scale degenerates, and the
    statistic is identically 1 rather than Unif(0,1).
    """
    if not 1 <= k <= cfg.p - 1:
        raise ValidationError(f"step k must be in [1, p-1={cfg.p - 1}], got {k}")
    if cfg.true_rank != k - 1:
        raise ValidationError(
            f"null collection at step k={k} needs true_rank == k-1, got {cfg.true_rank}"
        )
    if cfg.local_null_tau <= 0.0:
        raise ValidationError(
            "local_null_tau must be positive: with an exactly low-rank population the "
            "plug-in scale is zero and the statistic degenerates to the constant 1"
        )
    stats = np.empty(cfg.reps, dtype=np.float64)
    jobs = [(cfg, k, rep, settings) for rep in range(cfg.reps)]
    try:
        for rep, value in _run_indexed(_null_worker, jobs, workers):
            stats[rep] = value
    except NumericalError as exc:
        raise NumericalError(
            f"replication failed, aborting null sample: {exc}",
            best_estimate=exc.best_estimate,
            achieved_rel_tol=exc.achieved_rel_tol,
        ) from exc
    return NullSample(statistics=stats, k=k, config=cfg)


def ks_distance(sample) -> float:
    """Sup-norm distance between the empirical CDF and the Unif(0,1) CDF.

    Accepts a :class:`NullSample` or any array of values in [0, 1].
    """
    values = sample.statistics if isinstance(sample, NullSample) else np.asarray(sample)
    values = np.asarray(values, dtype=np.float64)
    if values.size == 0:
        raise ValidationError("cannot compute a KS distance from an empty sample")
    if np.any(values < 0.0) or np.any(values > 1.0) or not np.all(np.isfinite(values)):
        raise ValidationError("sample values must lie in [0, 1]")
    x = np.sort(values)
    m = x.shape[0]
    grid = np.arange(1, m + 1) / m
    d_plus = float(np.max(grid - x))
    d_minus = float(np.max(x - (grid - 1.0 / m)))
    return max(d_plus, d_minus, 0.0)


def ks_pvalue_approx(distance: float, m: int) -> float:
    """Asymptotic Kolmogorov p-value for an m-sample KS distance.

    Uses the limiting alternating series Q(x) = 2 sum_j (-1)^(j-1)
    exp(-2 j^2 x^2) at x = sqrt(m) * distance. Approximate by nature; it is
    reported for orientation, not as an exact test.
    """
    if m <= 0:
        raise ValidationError(f"sample size must be positive, got {m}")
    x = math.sqrt(m) * float(distance)
    if x < 0.18:
        return 1.0
    total = 0.0
    for j in range(1, 101):
        term = math.exp(-2.0 * (j * x) ** 2) * (1 if j % 2 else -1)
        total += term
        if abs(term) < 1e-16:
            break
    return min(1.0, max(0.0, 2.0 * total))
