"""Normality check, Friedman rank test and Nemenyi post-hoc comparison."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import kolmogorov, ndtr
from scipy.stats import chi2, rankdata, studentized_range


class StatsError(ValueError):
    pass


def ks_normality(samples):
    """One-sample KS test against a normal with the sample mean and std (ddof=1).

    Returns ``(D, p)`` with ``p`` from the asymptotic Kolmogorov
    distribution of ``sqrt(n) D``.
    """
    x = np.sort(np.asarray(samples, dtype=float).ravel())
    n = x.size
    if n < 5:
        raise StatsError("insufficient samples for a KS test (need >= 5)")
    sd = x.std(ddof=1)
    if sd == 0:
        return 1.0, 0.0
    F = ndtr((x - x.mean()) / sd)
    i = np.arange(1, n + 1)
    d = float(max(np.max(i / n - F), np.max(F - (i - 1) / n)))
    return d, float(kolmogorov(math.sqrt(n) * d))


@dataclass(frozen=True)
class FriedmanResult:
    statistic: float
    p: float
    mean_ranks: np.ndarray  # per condition; higher = larger values
    n: int
    k: int
    method: str


def _friedman_stat(ranks):
    n, k = ranks.shape
    R = ranks.sum(axis=0)
    return 12.0 * float(np.dot(R, R)) / (n * k * (k + 1)) - 3.0 * n * (k + 1)


def friedman_test(matrix, method: str = "asymptotic", n_resamples: int = 20000,
                  seed: int = 0) -> FriedmanResult:
    """Friedman rank test on a blocks x conditions matrix.

    Ranks are taken within rows (mid-ranks for ties) and no tie correction
    is applied to the statistic.

    Parameters
    ----------
    matrix : array_like, shape (n, k)
    method : {"asymptotic", "permutation", "auto"}
        ``asymptotic`` uses chi-square with k-1 d.f. ``permutation``
        permutes within rows, exhaustively when there are at most
        ``n_resamples`` arrangements and by Monte Carlo otherwise. ``auto``
        picks permutation for n < 10.
    """
    M = np.asarray(matrix, dtype=float)
    if M.ndim != 2 or M.shape[0] < 2 or M.shape[1] < 2:
        raise StatsError("Friedman test needs at least 2 blocks and 2 conditions")
    if not np.all(np.isfinite(M)):
        raise StatsError("Friedman test input contains non-finite values")
    n, k = M.shape
    ranks = rankdata(M, axis=1)
    stat = _friedman_stat(ranks)
    if abs(stat) < 1e-9 * n * k:
        stat = 0.0
    if method == "auto":
        method = "permutation" if n < 10 else "asymptotic"
    if method == "asymptotic":
        p = float(chi2.sf(stat, k - 1))
    elif method == "permutation":
        p = _permutation_p(ranks, stat, n_resamples, seed)
    else:
        raise StatsError(f"unknown method {method!r}")
    return FriedmanResult(stat, p, ranks.mean(axis=0), n, k, method)


def _permutation_p(ranks, stat, n_resamples, seed):
    n, k = ranks.shape
    tol = 1e-9 * max(1.0, abs(stat))
    total = 1
    for r in ranks:
        _, counts = np.unique(r, return_counts=True)
        total *= math.factorial(k) // math.prod(math.factorial(int(c)) for c in counts)
    if total <= n_resamples:
        rows = [sorted(set(itertools.permutations(r))) for r in ranks]
        hits = sum(_friedman_stat(np.array(c)) >= stat - tol for c in itertools.product(*rows))
        return hits / total
    rng = np.random.default_rng(seed)
    hits = 0
    for _ in range(n_resamples):
        perm = rng.permuted(ranks, axis=1)
        hits += _friedman_stat(perm) >= stat - tol
    return (hits + 1) / (n_resamples + 1)


def nemenyi_q(k: int, alpha: float = 0.05) -> float:
    """Critical value q_alpha of the Nemenyi test (studentized range / sqrt 2)."""
    return float(studentized_range.ppf(1 - alpha, k, np.inf) / math.sqrt(2))


def critical_difference(k: int, n: int, alpha: float = 0.05) -> float:
    return nemenyi_q(k, alpha) * math.sqrt(k * (k + 1) / (6.0 * n))


@dataclass(frozen=True)
class PosthocResult:
    conditions: tuple
    mean_ranks: np.ndarray
    cd: float
    significant: np.ndarray  # symmetric boolean matrix
    groups: tuple  # maximal runs of mutually indistinguishable conditions, best first

    def pairs(self):
        """(a, b, rank difference, significant) for every unordered pair."""
        out = []
        for i, j in itertools.combinations(range(len(self.conditions)), 2):
            out.append((self.conditions[i], self.conditions[j],
                        float(abs(self.mean_ranks[i] - self.mean_ranks[j])),
                        bool(self.significant[i, j])))
        return out

    @property
    def top_group(self):
        """Conditions not significantly different from the best-ranked one."""
        best = int(np.argmax(self.mean_ranks))
        return tuple(c for i, c in enumerate(self.conditions) if not self.significant[best, i])


def posthoc_nemenyi(matrix, conditions=None, alpha: float = 0.05) -> PosthocResult:
    """Nemenyi critical-difference comparison of Friedman mean ranks.

    Two conditions differ when their mean ranks are more than
    ``CD = q_alpha sqrt(k (k + 1) / (6 n))`` apart. Groups are the maximal
    sets of conditions, contiguous in rank order, whose rank spread is at
    most CD, as drawn in a critical-difference diagram.
    """
    M = np.asarray(matrix, dtype=float)
    if M.ndim != 2 or M.shape[0] < 2 or M.shape[1] < 2:
        raise StatsError("post-hoc test needs at least 2 blocks and 2 conditions")
    n, k = M.shape
    conditions = tuple(conditions) if conditions is not None else tuple(range(k))
    if len(conditions) != k:
        raise StatsError("condition names do not match the matrix columns")
    R = rankdata(M, axis=1).mean(axis=0)
    cd = critical_difference(k, n, alpha)
    diff = np.abs(R[:, None] - R[None, :])
    sig = diff > cd + 1e-12
    order = np.argsort(-R, kind="stable")
    groups = []
    last_end = -1
    for a in range(k):
        b = a
        while b + 1 < k and R[order[a]] - R[order[b + 1]] <= cd + 1e-12:
            b += 1
        if b > last_end:
            groups.append(tuple(conditions[i] for i in order[a:b + 1]))
            last_end = b
    return PosthocResult(conditions, R, cd, sig, tuple(groups))
