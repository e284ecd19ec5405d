"""Simulated-annealing subset search scored by leave-one-subject-out F1."""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from ..classifiers import ClassifierSpec
from ..evaluation.cv import loso_evaluate
from .rfe import SelectionError

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class AnnealingSchedule:
    """Geometric cooling ``T_t = T0 * cooling_factor ** t``.

    ``initial_temperature = 0`` gives a greedy search that only accepts
    moves that do not raise the energy.
    """

    iterations: int = 300
    initial_temperature: float = 1.0
    cooling_factor: float = 0.98
    initial_size: int = 20
    seed: int = 0

    def __post_init__(self):
        if self.iterations < 1:
            raise SelectionError("iterations must be >= 1")
        if not 0 < self.cooling_factor < 1:
            raise SelectionError("cooling_factor must lie in (0, 1)")
        if self.initial_temperature < 0:
            raise SelectionError("initial_temperature must be >= 0")
        if self.initial_size < 1:
            raise SelectionError("initial_size must be >= 1")

    def temperature(self, t):
        return self.initial_temperature * self.cooling_factor ** t


@dataclass
class AnnealingResult:
    mask: np.ndarray  # best subset visited
    energy: float
    initial_mask: np.ndarray
    initial_energy: float
    trace: list  # dicts: iteration, energy, temperature, accepted, n_features, best_energy
    evaluations: int

    def features(self, names):
        return tuple(n for n, m in zip(names, self.mask) if m)

    def write_trace(self, path):
        cols = ("iteration", "energy", "temperature", "accepted", "n_features", "best_energy")
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(cols)
            for row in self.trace:
                w.writerow([repr(row[c]) if isinstance(row[c], float) else int(row[c]) for c in cols])
        return path


def loso_energy(X, y, subjects, spec: ClassifierSpec, jobs: int = 1):
    """Energy function ``mask -> 1 - mean LOSO F1``.

    Empty subsets and failed fits cost 1; a subject whose fold is skipped
    counts as F1 = 0.
    """
    X = np.asarray(X, dtype=float)

    def energy(mask):
        cols = np.flatnonzero(mask)
        if cols.size == 0:
            return 1.0
        try:
            res = loso_evaluate(X, y, subjects, spec, cols, jobs=jobs)
        except ValueError as exc:
            log.warning("SA energy evaluation failed: %s", exc)
            return 1.0
        f1 = [0.0 if r.skipped else r.f1 for r in res.values()]
        return 1.0 - float(np.mean(f1))

    return energy


def anneal(energy, n_features: int, schedule: AnnealingSchedule | None = None) -> AnnealingResult:
    """Minimize ``energy(mask)`` over boolean masks with single-bit flips.

    Energies are memoized per subset. Returns the best state visited.
    """
    sch = schedule or AnnealingSchedule()
    rng = np.random.default_rng(sch.seed)
    memo = {}

    def E(mask):
        key = mask.tobytes()
        if key not in memo:
            memo[key] = float(energy(mask.copy()))
        return memo[key]

    mask = np.zeros(n_features, dtype=bool)
    mask[rng.choice(n_features, size=min(sch.initial_size, n_features), replace=False)] = True
    e = E(mask)
    init_mask, init_e = mask.copy(), e
    best_mask, best_e = mask.copy(), e
    trace = []
    for t in range(sch.iterations):
        T = sch.temperature(t)
        cand = mask.copy()
        cand[rng.integers(n_features)] ^= True
        ec = E(cand)
        delta = ec - e
        u = rng.random()
        if delta <= 0:
            accept = True
        elif T <= 0:
            accept = False
        else:
            accept = u < math.exp(-delta / T)
        if accept:
            mask, e = cand, ec
            if e < best_e:
                best_mask, best_e = mask.copy(), e
        trace.append({"iteration": t + 1, "energy": ec, "temperature": T, "accepted": accept,
                      "n_features": int(cand.sum()), "best_energy": best_e})
    return AnnealingResult(best_mask, best_e, init_mask, init_e, trace, len(memo))


def sa_select(X, y, subjects, spec: ClassifierSpec, schedule: AnnealingSchedule | None = None,
              jobs: int = 1) -> AnnealingResult:
    """Subject-independent subset search on pooled multi-subject trials."""
    subjects = np.asarray(subjects)
    if np.unique(subjects).size < 2:
        raise SelectionError("SA selection needs trials from at least 2 subjects")
    X = np.asarray(X, dtype=float)
    return anneal(loso_energy(X, y, subjects, spec, jobs), X.shape[1], schedule)


def schedule_to_dict(s: AnnealingSchedule):
    return asdict(s)
