"""Sequential nested rank testing.

Steps k = 1, 2, ... each test "rank <= k-1" against "rank >= k" at level
alpha, rejecting when the step statistic falls at or below alpha. Testing
proceeds while nulls keep being rejected; the number of rejections before
the first acceptance is the rank estimate. Because step p is never tested,
a run that rejects all p - 1 nulls can only certify rank >= p - 1, which is
reported as rank_estimate p - 1 with ``boundary_reached`` set.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import NumericalError
from .spectrum import sample_covariance, symmetric_eigen
from .statistic import QuadratureSettings, csv_statistic, plug_in_scale, _check_eigenvalues

__all__ = ["StepOutcome", "SequentialResult", "run_sequence", "rank_from_data"]


@dataclass(frozen=True)
class StepOutcome:
    """Result of one test step.

    ``degenerate`` marks steps where the statistic was forced to 1 without
    quadrature (tied lam_k = lam_{k+1}, or a plug-in scale of exactly zero
    from an exactly low-rank trailing spectrum); such steps always accept.
    """

    k: int
    statistic: float
    rejected: bool
    scale2_used: float
    degenerate: bool


@dataclass(frozen=True)
class SequentialResult:
    alpha: float
    steps: tuple[StepOutcome, ...] = field(repr=False)
    rank_estimate: int
    boundary_reached: bool

    def __str__(self) -> str:
        tail = " (boundary reached)" if self.boundary_reached else ""
        return f"rank estimate {self.rank_estimate} after {len(self.steps)} step(s){tail}"


def run_sequence(eigenvalues, alpha: float,
                 settings: QuadratureSettings | None = None) -> SequentialResult:
    """Run the nested tests over k = 1..p-1 on a descending spectrum.

    Stops at the first step whose statistic exceeds alpha; every earlier
    step is a rejection. The plug-in scale is recomputed at each step from
    the trailing eigenvalues lam_k..lam_p.
    """
    lam = _check_eigenvalues(eigenvalues)
    alpha = float(alpha)
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must be in (0, 1), got {alpha}")

    p = lam.shape[0]
    steps: list[StepOutcome] = []
    for k in range(1, p):
        s2 = plug_in_scale(lam, k)
        degenerate = bool(s2 == 0.0 or lam[k - 1] == lam[k])
        try:
            stat = csv_statistic(lam, k, scale2=None, settings=settings)
        except NumericalError as exc:
            raise NumericalError(
                f"step k={k}: {exc}",
                best_estimate=exc.best_estimate,
                achieved_rel_tol=exc.achieved_rel_tol,
            ) from exc
        rejected = stat <= alpha
        steps.append(StepOutcome(k=k, statistic=stat, rejected=rejected,
                                 scale2_used=s2, degenerate=degenerate))
        if not rejected:
            break

    rank_estimate = sum(1 for s in steps if s.rejected)
    boundary = len(steps) == p - 1 and steps[-1].rejected
    return SequentialResult(alpha=alpha, steps=tuple(steps),
                            rank_estimate=rank_estimate, boundary_reached=boundary)


def rank_from_data(data, alpha: float, center: bool = False,
                   settings: QuadratureSettings | None = None) -> SequentialResult:
    """Estimate the covariance rank directly from an n x p data matrix.

    Composition of :func:`sample_covariance`, :func:`symmetric_eigen`, and
    :func:`run_sequence`. Warns when n <= p, where the asymptotic guarantees
    behind the test do not apply.
    """
    data = np.asarray(data, dtype=np.float64)
    if data.ndim == 2 and data.shape[0] <= data.shape[1]:
        warnings.warn(
            f"n={data.shape[0]} observations for p={data.shape[1]} covariates; "
            "the test's guarantees assume n > p",
            stacklevel=2,
        )
    cov = sample_covariance(data, center=center)
    spec = symmetric_eigen(cov)
    return run_sequence(spec.eigenvalues, alpha, settings=settings)
