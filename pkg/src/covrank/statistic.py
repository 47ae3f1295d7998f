"""Conditional singular-value test statistic, evaluated in the log domain.

The statistic for step k compares the mass of

    f(u) = exp(-u^2 / (2 s2)) * prod_{j != k} |u^2 - lam_j^2|

over the interval [lam_k, lam_{k-1}] against the mass over the wider
interval [lam_{k+1}, lam_{k-1}], with lam_0 taken as +infinity. Values near
0 indicate that lam_k is large relative to the trailing spectrum.

Everything is computed in the log domain: f is a product of up to p - 1
polynomial gap factors times a Gaussian whose scale s2 can be many orders of
magnitude below lam_1^2, so the linear-domain product overflows or
underflows double precision long before p gets interesting. Integrals are
therefore accumulated as log-magnitudes (floats, with ``-inf`` encoding an
exact zero) via max-shifted exponential sums.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import NumericalError, ValidationError

__all__ = [
    "QuadratureSettings",
    "plug_in_scale",
    "log_integrand",
    "log_integral",
    "csv_statistic",
]

_NEG_INF = float("-inf")

# Gauss-Legendre rules used as the (coarse, fine) pair of the adaptive
# scheme. Nodes are interior, so panel endpoints (where the integrand may
# vanish and its log blow down to -inf) are never evaluated.
_COARSE_X, _COARSE_W = np.polynomial.legendre.leggauss(10)
_FINE_X, _FINE_W = np.polynomial.legendre.leggauss(20)
_PAIR_X = np.concatenate([_COARSE_X, _FINE_X])
_COARSE_LOGW = np.log(_COARSE_W)
_FINE_LOGW = np.log(_FINE_W)


@dataclass(frozen=True)
class QuadratureSettings:
    """Tuning knobs for the adaptive log-domain quadrature.

    rel_tol:
        Target relative error of each integral (on the linear scale).
    max_subdivisions:
        Budget of panel splits per integral before giving up.
    tail_sigmas:
        Where to truncate an infinite upper limit, in units of the Gaussian
        scale sqrt(s2) beyond the largest eigenvalue. At the default of 12
        the discarded tail is exp(-72)-scale relative to the peak.
    """

    rel_tol: float = 1e-10
    max_subdivisions: int = 2000
    tail_sigmas: float = 12.0

    def __post_init__(self):
        if not (0.0 < self.rel_tol <= 1e-2):
            raise ValidationError(f"rel_tol must be in (0, 1e-2], got {self.rel_tol}")
        if self.max_subdivisions < 8:
            raise ValidationError(f"max_subdivisions must be >= 8, got {self.max_subdivisions}")
        if self.tail_sigmas < 6.0:
            raise ValidationError(f"tail_sigmas must be >= 6, got {self.tail_sigmas}")


def _check_eigenvalues(eigenvalues) -> np.ndarray:
    lam = np.asarray(eigenvalues, dtype=np.float64)
    if lam.ndim != 1 or lam.shape[0] < 2:
        raise ValidationError("eigenvalues must be a 1-d vector of length >= 2")
    if not np.all(np.isfinite(lam)):
        raise ValidationError("eigenvalues contain non-finite entries")
    if np.any(lam < 0.0):
        raise ValidationError("eigenvalues must be nonnegative")
    if np.any(np.diff(lam) > 0.0):
        raise ValidationError("eigenvalues must be sorted in descending order")
    return lam


def _check_step(k: int, p: int) -> int:
    k = int(k)
    if not 1 <= k <= p - 1:
        raise ValidationError(f"step k must satisfy 1 <= k <= p-1 = {p - 1}, got {k}")
    return k


def plug_in_scale(eigenvalues, k: int) -> float:
    """Trailing-eigenvalue noise-scale estimator ``sum_{j>=k} lam_j^2 / (p (p-k+1))``.

    Zero is a legal output (an exactly low-rank trailing spectrum); callers
    decide how to handle that degeneracy.
    """
    lam = _check_eigenvalues(eigenvalues)
    p = lam.shape[0]
    k = int(k)
    if not 1 <= k <= p:
        raise ValidationError(f"k must satisfy 1 <= k <= p = {p}, got {k}")
    tail = lam[k - 1 :]
    return float(np.dot(tail, tail) / (p * (p - k + 1)))


def _log_gap_product(u: np.ndarray, lam2_others: np.ndarray, inv_two_s2: float) -> np.ndarray:
    """log f(u) for a vector of abscissas; -inf where a gap factor is zero."""
    u2 = u * u
    out = -(u2 * inv_two_s2)
    if lam2_others.shape[0]:
        gaps = np.abs(u2[:, None] - lam2_others[None, :])
        with np.errstate(divide="ignore"):
            out = out + np.log(gaps).sum(axis=1)
    return out


def log_integrand(u, eigenvalues, k: int, scale2: float):
    """Log of the step-k integrand at ``u``: ``-u^2/(2 s2) + sum_{j != k} log|u^2 - lam_j^2|``.

    Returns exactly ``-inf`` when u coincides with some lam_j, j != k.
    Accepts a scalar or a 1-d array of nonnegative abscissas.
    """
    lam = _check_eigenvalues(eigenvalues)
    k = _check_step(k, lam.shape[0])
    s2 = float(scale2)
    if not (s2 > 0.0) or not math.isfinite(s2):
        raise ValidationError(f"scale2 must be a positive finite real, got {scale2}")
    u_arr = np.atleast_1d(np.asarray(u, dtype=np.float64))
    if np.any(u_arr < 0.0) or not np.all(np.isfinite(u_arr)):
        raise ValidationError("u must be finite and >= 0")
    lam2_others = np.delete(lam, k - 1) ** 2
    g = _log_gap_product(u_arr, lam2_others, 0.5 / s2)
    return float(g[0]) if np.isscalar(u) or np.ndim(u) == 0 else g


def _logsumexp(values: np.ndarray) -> float:
    m = float(np.max(values)) if values.size else _NEG_INF
    if m == _NEG_INF:
        return _NEG_INF
    return m + math.log(float(np.sum(np.exp(values - m))))


def _logabsdiff(a: float, b: float) -> float:
    """log |e^a - e^b| computed without leaving the log domain."""
    if a == b:
        return _NEG_INF
    hi, lo = (a, b) if a > b else (b, a)
    if lo == _NEG_INF:
        return hi
    return hi + math.log1p(-math.exp(lo - hi))


class _Panel:
    __slots__ = ("a", "b", "log_val", "log_err")

    def __init__(self, a, b, log_val, log_err):
        self.a = a
        self.b = b
        self.log_val = log_val
        self.log_err = log_err


def _make_panel(a: float, b: float, lam2_others: np.ndarray, inv_two_s2: float) -> _Panel:
    half = 0.5 * (b - a)
    mid = 0.5 * (a + b)
    g = _log_gap_product(mid + half * _PAIR_X, lam2_others, inv_two_s2)
    log_half = math.log(half)
    coarse = _logsumexp(g[:10] + _COARSE_LOGW) + log_half
    fine = _logsumexp(g[10:] + _FINE_LOGW) + log_half
    return _Panel(a, b, fine, _logabsdiff(fine, coarse))


def log_integral(lo: float, hi: float, eigenvalues, k: int, scale2: float,
                 settings: QuadratureSettings | None = None) -> float:
    """Log of the integral of the step-k integrand over [lo, hi].

    ``hi`` may be ``inf``; the upper limit is then truncated at
    ``max(lo, lam_max) + tail_sigmas * sqrt(s2)``, beyond which the Gaussian
    factor makes the remaining tail negligible. Eigenvalues lying strictly
    inside the interval become subdivision breakpoints, since the integrand
    has |.| kinks and zeros there. Panels are then refined adaptively,
    splitting whichever panel carries the largest error estimate, until the
    total estimated error drops below ``rel_tol`` times the integral.

    Returns the log-magnitude as a float; ``-inf`` encodes a zero integral
    (empty interval).

    Raises
    ------
    NumericalError
        Split budget exhausted before reaching rel_tol. The error carries
        ``best_estimate`` (the log value) and ``achieved_rel_tol``.
    """
    if settings is None:
        settings = QuadratureSettings()
    lam = _check_eigenvalues(eigenvalues)
    k = _check_step(k, lam.shape[0])
    s2 = float(scale2)
    if not (s2 > 0.0) or not math.isfinite(s2):
        raise ValidationError(f"scale2 must be a positive finite real, got {scale2}")
    lo = float(lo)
    hi = float(hi)
    if not (0.0 <= lo <= hi):
        raise ValidationError(f"integration limits must satisfy 0 <= lo <= hi, got [{lo}, {hi}]")
    if math.isinf(hi):
        hi = max(lo, float(lam[0])) + settings.tail_sigmas * math.sqrt(s2)
    if hi <= lo:
        return _NEG_INF

    lam2_others = np.delete(lam, k - 1) ** 2
    inv_two_s2 = 0.5 / s2

    interior = [float(v) for v in np.delete(lam, k - 1) if lo < v < hi]
    points = sorted(set([lo, hi] + interior))
    panels = [
        _make_panel(points[i], points[i + 1], lam2_others, inv_two_s2)
        for i in range(len(points) - 1)
    ]

    log_rel_tol = math.log(settings.rel_tol)
    splits = 0
    while True:
        vals = np.array([p.log_val for p in panels])
        errs = np.array([p.log_err for p in panels])
        log_total = _logsumexp(vals)
        log_err_total = _logsumexp(errs)
        if log_total == _NEG_INF and log_err_total == _NEG_INF:
            return _NEG_INF
        if log_err_total <= log_total + log_rel_tol:
            return log_total
        if splits >= settings.max_subdivisions:
            achieved = math.exp(log_err_total - log_total) if log_total > _NEG_INF else math.inf
            raise NumericalError(
                f"quadrature on [{lo}, {hi}] used all {settings.max_subdivisions} subdivisions "
                f"at relative error {achieved:.3e} (target {settings.rel_tol:.3e})",
                best_estimate=log_total,
                achieved_rel_tol=achieved,
            )
        worst = int(np.argmax(errs))
        panel = panels.pop(worst)
        mid = 0.5 * (panel.a + panel.b)
        if not panel.a < mid < panel.b:
            # Width is at floating-point resolution; nothing left to refine.
            panel.log_err = _NEG_INF
            panels.append(panel)
            continue
        panels.append(_make_panel(panel.a, mid, lam2_others, inv_two_s2))
        panels.append(_make_panel(mid, panel.b, lam2_others, inv_two_s2))
        splits += 1


def csv_statistic(eigenvalues, k: int, scale2: float | None = None,
                  settings: QuadratureSettings | None = None) -> float:
    """Step-k conditional singular-value statistic, a value in [0, 1].

    Ratio of the integrand mass on [lam_k, lam_{k-1}] to the mass on
    [lam_{k+1}, lam_{k-1}], with lam_0 = +inf. Small values are evidence
    that lam_k is too large to be part of the trailing noise spectrum.

    Parameters
    ----------
    eigenvalues : array_like
        Descending, nonnegative spectrum of length p >= 2.
    k : int
        Step index, 1 <= k <= p - 1.
    scale2 : float, optional
        Explicit Gaussian scale. Default (None) uses the plug-in estimator
        :func:`plug_in_scale`. An explicit value must be > 0.
    settings : QuadratureSettings, optional

    Degenerate rules
    ----------------
    - ``lam_k == lam_{k+1}``: numerator and denominator intervals coincide;
      returns exactly 1.0 (accept).
    - plug-in scale resolves to 0 (exactly low-rank trailing spectrum):
      returns exactly 1.0 by continuity.
    - ``lam_{k-1} == lam_k`` with k >= 2: empty numerator interval; returns
      exactly 0.0.
    """
    lam = _check_eigenvalues(eigenvalues)
    p = lam.shape[0]
    k = _check_step(k, p)
    if scale2 is None:
        s2 = plug_in_scale(lam, k)
    else:
        s2 = float(scale2)
        if not (s2 > 0.0) or not math.isfinite(s2):
            raise ValidationError(f"explicit scale2 must be a positive finite real, got {scale2}")

    lam_km1 = float(lam[k - 2]) if k >= 2 else math.inf
    lam_k = float(lam[k - 1])
    lam_kp1 = float(lam[k])

    if lam_k == lam_kp1 or s2 == 0.0:
        return 1.0
    if k >= 2 and lam_km1 == lam_k:
        return 0.0

    log_num = log_integral(lam_k, lam_km1, lam, k, s2, settings)
    log_den = log_integral(lam_kp1, lam_km1, lam, k, s2, settings)
    if log_den == _NEG_INF:
        return 1.0
    if log_num == _NEG_INF:
        return 0.0
    return min(1.0, max(0.0, math.exp(log_num - log_den)))
