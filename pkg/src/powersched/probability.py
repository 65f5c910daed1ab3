"""Poisson moments, generalized Bell numbers and checks of the moment
inequalities the rounding analysis relies on."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .rng import stream

SERIES_CAP = 200


class SeriesError(ArithmeticError):
    pass


@dataclass(frozen=True)
class MomentEstimate:
    mean: float
    stderr: float
    samples: int
    seed: int


def _check_alpha(alpha: float) -> None:
    if not alpha >= 1:
        raise ValueError(f"alpha must be >= 1, got {alpha}")


def poisson_moment(lam: float, alpha: float, tol: float = 1e-14) -> float:
    """E[P^alpha] for P ~ Poisson(lam), summed in log space.

    The tail after term k is bounded by a geometric series with ratio
    exp(alpha/k) * lam / (k+1), which bounds t_{i+1}/t_i for every i >= k;
    summation stops once that bound drops below ``tol``.
    """
    _check_alpha(alpha)
    if lam < 0:
        raise ValueError(f"lambda must be >= 0, got {lam}")
    if tol <= 0:
        raise ValueError("tol must be positive")
    if lam == 0:
        return 0.0
    log_lam = math.log(lam)
    total = 0.0
    for k in range(1, SERIES_CAP + 1):
        term = math.exp(alpha * math.log(k) + k * log_lam - lam - math.lgamma(k + 1))
        total += term
        ratio = math.exp(alpha / k) * lam / (k + 1)
        if ratio < 1 and term * ratio / (1 - ratio) < tol:
            return total
    raise SeriesError(f"series for lambda={lam}, alpha={alpha} did not reach tol={tol} by k={SERIES_CAP}")


def generalized_bell(alpha: float, tol: float = 1e-14) -> float:
    """alpha-th moment of Poisson(1); equals the Bell number at integer alpha."""
    return poisson_moment(1.0, alpha, tol)


def binomial_moment_mc(trial_probs, alpha: float, samples: int, seed: int, stream_path=(0,)) -> MomentEstimate:
    """Monte-Carlo estimate of E[(sum of independent Bernoullis)^alpha]."""
    if samples < 1:
        raise ValueError("samples must be >= 1")
    probs = np.asarray(trial_probs, dtype=float)
    rng = stream(seed, *stream_path)
    counts = (rng.random((samples, probs.size)) < probs).sum(axis=1)
    values = counts.astype(float) ** alpha
    mean = float(values.mean())
    stderr = float(values.std(ddof=1) / math.sqrt(samples)) if samples > 1 else 0.0
    return MomentEstimate(mean, stderr, samples, seed)


def binomial_moment_exact(trial_probs, alpha: float) -> float:
    """Exact E[(sum X_i)^alpha] via the Poisson-binomial distribution."""
    dist = np.array([1.0])
    for p in trial_probs:
        dist = np.convolve(dist, [1 - p, p])
    return float(np.dot(dist, np.arange(dist.size, dtype=float) ** alpha))


# ---------------------------------------------------------------------------
# inequality checks

@dataclass(frozen=True)
class CheckRow:
    proposition: str
    case: str
    lhs: float
    rhs: float
    slack: float  # allowed excess: tol or 3 standard errors
    passed: bool


def _row(prop, case, lhs, rhs, slack):
    return CheckRow(prop, case, float(lhs), float(rhs), float(slack), bool(lhs <= rhs + slack))


def _minkowski_rows(alpha, rng_seed, samples, tag):
    # X_1..X_3 independent non-negative variables with known means
    rows = []
    rng = stream(rng_seed, 1, tag)
    scales = np.array([0.5, 1.0, 2.0])
    draws = rng.exponential(scales, size=(samples, 3))
    lhs_samples = (draws ** (1 / alpha)).sum(axis=1) ** alpha
    lhs = lhs_samples.mean()
    se = lhs_samples.std(ddof=1) / math.sqrt(samples)
    rhs = (scales ** (1 / alpha)).sum() ** alpha
    rows.append(_row("1", f"alpha={alpha};X~Exp(means 0.5,1,2)", lhs, rhs, 3 * se))
    # Bernoulli-scaled variables, the shape used in the rounding analysis
    probs = np.array([0.3, 0.6, 0.9])
    vals = np.array([1.0, 2.0, 0.5])
    b = rng.random((samples, 3)) < probs
    lhs_samples = ((b * vals) ** (1 / alpha)).sum(axis=1) ** alpha
    lhs = lhs_samples.mean()
    se = lhs_samples.std(ddof=1) / math.sqrt(samples)
    rhs = ((probs * vals) ** (1 / alpha)).sum() ** alpha
    rows.append(_row("1", f"alpha={alpha};X=v*Bernoulli(p)", lhs, rhs, 3 * se))
    return rows


def _expect_power_sum(probs, values, alpha):
    """E[(sum_i X_i v_i)^alpha] over independent Bernoulli X_i, by enumeration."""
    total = 0.0
    for bits in itertools.product((0, 1), repeat=len(probs)):
        p = 1.0
        s = 0.0
        for bit, pi, vi in zip(bits, probs, values):
            p *= pi if bit else 1 - pi
            s += vi * bit
        total += p * s ** alpha
    return total


def _split_rows(alpha, tol):
    # f(A) = (sum_{e in A} e^(1/alpha))^alpha over a random subset; duplicating
    # the last constant and splitting its probability Y_n = Y'_n + Y'_{n+1}
    # between the two copies cannot decrease E[f].
    rows = []
    cases = [
        ([0.5], [1.0]),
        ([0.4, 0.8], [1.0, 2.0]),
        ([0.2, 0.5, 0.9], [0.5, 1.0, 3.0]),
        ([0.3, 0.3, 0.6, 0.7, 1.0], [1.0, 1.0, 2.0, 0.5, 1.5]),
    ]
    for probs, consts in cases:
        roots = [e ** (1 / alpha) for e in consts]
        before = _expect_power_sum(probs, roots, alpha)
        y_n = probs[-1]
        for share in (0.5, 0.25, 0.9, 1.0):
            split = [y_n * share, y_n * (1 - share)]
            after = _expect_power_sum(probs[:-1] + split, roots + roots[-1:], alpha)
            rows.append(_row("2", f"alpha={alpha};p={probs};e={consts};share={share}",
                             before, after, tol * max(1.0, after)))
    return rows


def _generalized_mean_rows(alpha, tol):
    rows = []
    sets = [[1, 1], [1, 2], [0.5, 1, 4], [3, 3, 3], [0.1, 0.2, 0.3, 0.4, 5, 6], [2]]
    for s in sets:
        lhs = sum(e ** (1 / alpha) for e in s) ** alpha
        rhs = len(s) ** (alpha - 1) * sum(s)
        rows.append(_row("3", f"alpha={alpha};S={s}", lhs, rhs, tol * max(1.0, rhs)))
    return rows


def _binomial_vs_poisson_rows(alpha, seed, samples, tag, tol):
    rows = []
    for probs in ([0.25, 0.25], [0.1, 0.2, 0.3], [0.5], [0.05] * 6, [0.9, 0.1]):
        a = sum(probs)
        if a > 1 + 1e-12:
            continue
        est = binomial_moment_mc(probs, alpha, samples, seed, stream_path=(2, tag, len(rows)))
        rhs = poisson_moment(a, alpha)
        rows.append(_row("4", f"alpha={alpha};p={probs};sampled", est.mean, rhs, 3 * est.stderr))
        exact = binomial_moment_exact(probs, alpha)
        rows.append(_row("4", f"alpha={alpha};p={probs};exact", exact, rhs, tol))
    return rows


def _poisson_scaling_rows(alpha, lambdas, tol):
    bell = generalized_bell(alpha)
    rows = []
    for lam in lambdas:
        lhs = poisson_moment(lam, alpha)
        if lam <= 1:
            rows.append(_row("5a", f"alpha={alpha};lambda={lam}", lhs, lam * bell, tol))
        else:
            rows.append(_row("5b", f"alpha={alpha};lambda={lam}", lhs, lam ** alpha * bell, tol))
    return rows


DEFAULT_ALPHAS = (1.5, 2.0, 2.5, 3.0)
DEFAULT_LAMBDAS = tuple(round(0.1 * k, 1) for k in range(1, 11)) + (1.5, 2.0, 4.0)


def check_inequalities(alpha_list=DEFAULT_ALPHAS, lambda_list=DEFAULT_LAMBDAS,
                       samples: int = 100_000, seed: int = 0, tol: float = 1e-9) -> list[CheckRow]:
    rows: list[CheckRow] = []
    for tag, alpha in enumerate(alpha_list):
        rows += _minkowski_rows(alpha, seed, samples, tag)
        rows += _split_rows(alpha, tol)
        rows += _generalized_mean_rows(alpha, tol)
        rows += _binomial_vs_poisson_rows(alpha, seed, samples, tag, tol)
        rows += _poisson_scaling_rows(alpha, lambda_list, tol)
    return rows
