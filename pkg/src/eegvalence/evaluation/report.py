"""Fold-level CSV records, summaries and markdown grids.

Floats are written with ``repr`` so every summary can be recomputed from
the raw CSV exactly.
"""

from __future__ import annotations

import csv
import json
import math
from collections import defaultdict
from pathlib import Path

import numpy as np

from .metrics import ConfusionCounts, accuracy, f1_score

FOLD_COLUMNS = ("experiment", "criterion", "window", "variant", "classifier", "subject", "fold",
                "n_train", "n_test", "tp", "tn", "fp", "fn", "f1", "accuracy", "degenerate",
                "skipped")

_INT = {"window", "n_train", "n_test", "tp", "tn", "fp", "fn"}
_FLOAT = {"f1", "accuracy"}


class ReportError(ValueError):
    pass


def fold_rows(result, **context) -> list[dict]:
    """One row per fold of a CVResult, tagged with ``context`` columns."""
    rows = []
    for f in result.folds:
        c = f.counts or ConfusionCounts(0, 0, 0, 0)
        row = {col: "" for col in FOLD_COLUMNS}
        row.update(context)
        row.update(fold=f.fold, n_train=f.n_train, n_test=f.n_test, tp=c.tp, tn=c.tn, fp=c.fp,
                   fn=c.fn, f1=f.f1, accuracy=f.accuracy, degenerate=int(f.degenerate),
                   skipped=f.skipped)
        rows.append(row)
    return rows


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return "" if math.isnan(v) else repr(float(v))
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    return str(v)


def write_rows(path, rows, columns=None):
    rows = list(rows)
    columns = list(columns or (rows[0].keys() if rows else FOLD_COLUMNS))
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for r in rows:
            w.writerow([_fmt(r.get(c, "")) for c in columns])
    return path


def read_rows(path) -> list[dict]:
    path = Path(path)
    if not path.exists():
        raise ReportError(f"missing raw file: {path}")
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    for r in rows:
        for k in list(r):
            if k in _INT and r[k] != "":
                r[k] = int(r[k])
            elif k in _FLOAT:
                r[k] = float(r[k]) if r[k] != "" else float("nan")
            elif k == "degenerate":
                r[k] = bool(int(r[k] or 0))
    return rows


def check_row(row):
    """Stored F1 and accuracy must equal values recomputed from the counts."""
    if row.get("skipped"):
        return
    c = ConfusionCounts(row["tp"], row["tn"], row["fp"], row["fn"])
    if f1_score(c) != row["f1"] or accuracy(c) != row["accuracy"]:
        raise ReportError(f"metrics disagree with confusion counts in row {row}")


def summarize(rows, by=("experiment", "criterion", "window", "variant", "classifier")) -> list[dict]:
    """Mean and std (population) across subjects of per-subject fold means.

    Skipped folds are left out. Output order follows first appearance.
    """
    per_subject = defaultdict(lambda: defaultdict(list))
    for r in rows:
        if r.get("skipped"):
            continue
        key = tuple(r[c] for c in by)
        per_subject[key][r["subject"]].append((r["f1"], r["accuracy"]))
    out = []
    for key, subjects in per_subject.items():
        f1 = np.array([np.mean([v[0] for v in vals]) for vals in subjects.values()])
        acc = np.array([np.mean([v[1] for v in vals]) for vals in subjects.values()])
        row = dict(zip(by, key))
        row.update(n_subjects=len(subjects), mean_f1=float(f1.mean()), std_f1=float(f1.std()),
                   mean_accuracy=float(acc.mean()), std_accuracy=float(acc.std()))
        out.append(row)
    return out


def per_subject(rows, by=("criterion", "window", "variant", "classifier")) -> list[dict]:
    """Per-subject mean F1 and accuracy over evaluated folds."""
    acc = defaultdict(list)
    for r in rows:
        if not r.get("skipped"):
            acc[tuple(r[c] for c in by) + (r["subject"],)].append((r["f1"], r["accuracy"]))
    out = []
    for key, vals in acc.items():
        row = dict(zip(by + ("subject",), key))
        row.update(n_folds=len(vals), mean_f1=float(np.mean([v[0] for v in vals])),
                   mean_accuracy=float(np.mean([v[1] for v in vals])))
        out.append(row)
    return out


def markdown_grid(summary, row_key, col_key, value="f1", digits=3, title=None) -> str:
    """``mean (± std)`` grid with one row per ``row_key`` and column per ``col_key``."""
    rows = list(dict.fromkeys(r[row_key] for r in summary))
    cols = list(dict.fromkeys(r[col_key] for r in summary))
    cell = {(r[row_key], r[col_key]): r for r in summary}
    lines = []
    if title:
        lines += [f"### {title}", ""]
    lines.append("| " + " | ".join([str(row_key)] + [str(c) for c in cols]) + " |")
    lines.append("|" + "---|" * (len(cols) + 1))
    for rk in rows:
        vals = []
        for ck in cols:
            r = cell.get((rk, ck))
            vals.append("" if r is None else
                        f"{r['mean_' + value]:.{digits}f} (± {r['std_' + value]:.{digits}f})")
        lines.append("| " + " | ".join([str(rk)] + vals) + " |")
    return "\n".join(lines) + "\n"


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, float) and math.isnan(obj):
        return None
    return obj


def write_json(path, obj):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n")
    return path
