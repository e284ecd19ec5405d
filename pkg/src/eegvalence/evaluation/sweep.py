"""Window-size sweep: within-subject CV for every (window, classifier) cell."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from joblib import Parallel, delayed

from ..classifiers import ClassifierSpec
from . import report
from .cv import subject_cv
from .stats import friedman_test, ks_normality, posthoc_nemenyi

log = logging.getLogger(__name__)


def _cell(trials, subject, spec, k, seed, group_by_clip, context):
    res = subject_cv(trials.for_subject(subject), spec, k, seed, group_by_clip)
    return report.fold_rows(res, subject=subject, **context)


@dataclass
class SweepResult:
    rows: list  # fold-level records
    windows: tuple
    classifiers: tuple

    def table(self) -> list[dict]:
        """One row per (window, classifier): mean and std of subject F1."""
        return report.summarize(self.rows, by=("window", "classifier"))

    def subject_matrix(self, classifier=None):
        """(subject ids, subjects x windows matrix of mean F1).

        With ``classifier=None`` each cell averages the classifiers.
        """
        subj = report.per_subject(self.rows, by=("window", "classifier"))
        ids = list(dict.fromkeys(r["subject"] for r in subj))
        M = np.full((len(ids), len(self.windows), len(self.classifiers)), np.nan)
        wi = {w: i for i, w in enumerate(self.windows)}
        ci = {c: i for i, c in enumerate(self.classifiers)}
        si = {s: i for i, s in enumerate(ids)}
        for r in subj:
            M[si[r["subject"]], wi[r["window"]], ci[r["classifier"]]] = r["mean_f1"]
        if classifier is None:
            return ids, M.mean(axis=2)
        return ids, M[:, :, ci[classifier]]


def window_sweep(trialsets: dict, classifiers, k: int = 8, seed: int = 0,
                 group_by_clip: bool = False, jobs: int = 1, criterion: str = "PR") -> SweepResult:
    """Within-subject k-fold CV at every window size for every classifier.

    Parameters
    ----------
    trialsets : dict
        ``{window_s: labeled TrialSet}``.
    classifiers : list of ClassifierSpec or algorithm names
    """
    specs = [c if isinstance(c, ClassifierSpec) else ClassifierSpec(c) for c in classifiers]
    windows = tuple(sorted(trialsets))
    tasks = []
    for w in windows:
        ts = trialsets[w]
        for spec in specs:
            ctx = dict(experiment="sweep", criterion=criterion, window=w, variant="all",
                       classifier=spec.algorithm)
            for s in ts.subject_ids:
                tasks.append((ts, s, spec, k, seed, group_by_clip, ctx))
    if jobs == 1:
        parts = [_cell(*t) for t in tasks]
    else:
        parts = Parallel(n_jobs=jobs)(delayed(_cell)(*t) for t in tasks)
    rows = [r for p in parts for r in p]
    return SweepResult(rows, windows, tuple(s.algorithm for s in specs))


def analyze_sweep(result: SweepResult, alpha: float = 0.05) -> dict:
    """KS normality per window, Friedman across windows, Nemenyi post-hoc.

    Blocks are subjects; each cell is the subject's F1 averaged over
    classifiers.
    """
    ids, M = result.subject_matrix()
    out = {"windows": list(result.windows), "ks": {}}
    for j, w in enumerate(result.windows):
        try:
            d, p = ks_normality(M[:, j])
            out["ks"][str(w)] = {"statistic": d, "p": p}
        except ValueError as exc:
            out["ks"][str(w)] = {"error": str(exc)}
    if len(result.windows) >= 2 and len(ids) >= 2:
        fr = friedman_test(M)
        ph = posthoc_nemenyi(M, [f"{w}s" for w in result.windows], alpha)
        out["friedman"] = {"statistic": fr.statistic, "p": fr.p, "n": fr.n, "k": fr.k,
                           "mean_ranks": dict(zip(ph.conditions, fr.mean_ranks.tolist()))}
        out["posthoc"] = posthoc_summary(ph)
    return out


def posthoc_summary(ph) -> dict:
    return {"method": "nemenyi", "critical_difference": ph.cd,
            "mean_ranks": dict(zip(map(str, ph.conditions), ph.mean_ranks.tolist())),
            "pairs": [{"a": str(a), "b": str(b), "rank_difference": d, "significant": s}
                      for a, b, d, s in ph.pairs()],
            "groups": [list(map(str, g)) for g in ph.groups],
            "top_group": list(map(str, ph.top_group))}


def compare_classifiers(result: SweepResult, window, alpha: float = 0.05) -> dict:
    """Friedman and post-hoc across classifiers at one window (subjects as blocks)."""
    cols = []
    for c in result.classifiers:
        ids, M = result.subject_matrix(c)
        cols.append(M[:, result.windows.index(window)])
    M = np.column_stack(cols)
    fr = friedman_test(M)
    ph = posthoc_nemenyi(M, result.classifiers, alpha)
    return {"window": window, "friedman": {"statistic": fr.statistic, "p": fr.p},
            "posthoc": posthoc_summary(ph)}
