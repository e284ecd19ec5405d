"""End-to-end pipeline: dataset -> features -> sweep -> selection -> evaluation -> report.

Every stage writes immutable artifacts under the run directory together
with a ``_stage.json`` holding the content hash of its inputs and
parameters. A stage whose hash matches and whose artifacts exist is
skipped (a cache hit).
"""

from __future__ import annotations

import hashlib
import json
import logging
import platform
import time
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np
from joblib import Parallel, delayed

from . import __version__
from .classifiers import ALGORITHMS, ClassifierError, ClassifierSpec, canonical_algorithm
from .dataset.io import load_dataset
from .dataset.labels import derive_labels
from .dataset.model import DatasetError
from .dataset import layout
from .dataset.synth import SynthConfig, _check_planted, generate_synthetic_dataset
from .evaluation import report
from .evaluation.cv import CVResult, EvaluationError, loso_evaluate, subject_cv
from .evaluation.stats import friedman_test, posthoc_nemenyi
from .evaluation.sweep import analyze_sweep, compare_classifiers, window_sweep
from .features.extract import extract_trialsets
from .features.trialset import TrialSet
from .features.wavelets import WaveletSpec
from .preprocess import PreprocessConfig
from .selection import (AnnealingSchedule, aggregate_common_features, rankings_from_json,
                        rankings_to_json, rfe_rank, sa_select)
from .selection.rfe import SelectionError

log = logging.getLogger(__name__)

VARIANTS = ("all-78", "top-5-common", "top-10-common", "top-15-common", "top-20-common",
            "20-individual-PR", "20-individual-SR", "SI-SA")
SELECTION_MODES = ("RFE-SD", "SA-SI", "none")
CV_MODES = ("SD-8fold", "SI-LOSO")
STAGES = ("extract", "sweep", "select", "evaluate", "report")


class ConfigError(ValueError):
    pass


class StageError(RuntimeError):
    """A stage failed; ``stage`` and ``entity`` say where."""

    def __init__(self, stage, entity, cause):
        self.stage, self.entity, self.cause = stage, entity, cause
        super().__init__(f"stage {stage} failed for {entity}: {cause}")


def canonical_variant(name: str, criterion: str = "PR") -> str:
    key = str(name).strip()
    if key == "20-individual":
        return f"20-individual-{criterion}"
    if key.lower() in {"all", "all-78"}:
        return "all-78"
    if key not in VARIANTS:
        raise ConfigError(f"unknown variant {name!r}; expected one of {', '.join(VARIANTS)}")
    return key


@dataclass
class PipelineConfig:
    """Run configuration; every field has a default.

    ``dataset`` is either ``{"manifest": path}`` or ``{"synth": preset name
    or SynthConfig fields, "seed": int}``. ``window`` fixes the final-stage
    window; None picks the sweep's best mean-F1 window (ties go to the
    longer window).
    """

    dataset: dict = field(default_factory=lambda: {"synth": "default", "seed": 0})
    preprocess: dict = field(default_factory=dict)
    wavelet: dict = field(default_factory=dict)
    windows: list = field(default_factory=lambda: list(range(1, 13)))
    window: int | None = None
    criterion: str = "PR"
    sweep: bool = True
    sweep_classifiers: list = field(default_factory=lambda: list(ALGORITHMS))
    classifiers: list = field(default_factory=lambda: ["QDA", "KNN"])
    si_classifiers: list = field(default_factory=lambda: list(ALGORITHMS))
    classifier_params: dict = field(default_factory=dict)
    selection: list = field(default_factory=lambda: ["RFE-SD", "SA-SI"])
    rfe_k: int = 20
    common_sizes: list = field(default_factory=lambda: [5, 10, 15, 20])
    sa_classifiers: list = field(default_factory=lambda: ["QDA", "KNN"])
    annealing: dict = field(default_factory=dict)
    variants: list = field(default_factory=lambda: list(VARIANTS))
    cv_modes: list = field(default_factory=lambda: list(CV_MODES))
    folds: int = 8
    group_by_clip: bool = False
    seed: int = 0
    jobs: int = 1
    out: str = "runs/default"

    # fields that never change an output byte
    _NON_SEMANTIC = ("jobs", "out")

    @classmethod
    def from_dict(cls, d: dict) -> "PipelineConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown config key(s): {', '.join(sorted(unknown))}")
        cfg = cls(**d)
        cfg.validate()
        return cfg

    @classmethod
    def load(cls, path) -> "PipelineConfig":
        path = Path(path)
        if not path.exists():
            raise ConfigError(f"config file not found: {path}")
        try:
            return cls.from_dict(json.loads(path.read_text()))
        except json.JSONDecodeError as exc:
            raise ConfigError(f"malformed config {path}: {exc}") from exc

    def to_dict(self, semantic_only=False):
        d = asdict(self)
        if semantic_only:
            for k in self._NON_SEMANTIC:
                d.pop(k)
        return d

    def content_hash(self) -> str:
        return _hash(self.to_dict(semantic_only=True))

    def validate(self):
        self.criterion = str(self.criterion).upper()
        if self.criterion not in ("PR", "SR"):
            raise ConfigError("criterion must be PR or SR")
        if not isinstance(self.dataset, dict) or not ({"manifest", "synth"} & set(self.dataset)):
            raise ConfigError('dataset needs a "manifest" path or a "synth" config')
        if "manifest" in self.dataset and not Path(self.dataset["manifest"]).exists():
            raise ConfigError(f"manifest not found: {self.dataset['manifest']}")
        try:
            self.windows = sorted({int(w) for w in self.windows})
        except (TypeError, ValueError):
            raise ConfigError("windows must be integers") from None
        if not self.windows or self.windows[0] < 1:
            raise ConfigError("windows must be positive integers")
        if self.window is not None:
            self.window = int(self.window)
            if self.window not in self.windows:
                self.windows = sorted(set(self.windows) | {self.window})
        elif not self.sweep:
            raise ConfigError("without a sweep the final window must be given")
        try:
            self.sweep_classifiers = [canonical_algorithm(c) for c in self.sweep_classifiers]
            self.classifiers = [canonical_algorithm(c) for c in self.classifiers]
            self.si_classifiers = [canonical_algorithm(c) for c in self.si_classifiers]
            self.sa_classifiers = [canonical_algorithm(c) for c in self.sa_classifiers]
            self.classifier_params = {canonical_algorithm(k): dict(v)
                                      for k, v in self.classifier_params.items()}
            for c in set(self.classifiers) | set(self.si_classifiers) | set(self.sweep_classifiers):
                self.spec(c)
        except (ClassifierError, TypeError) as exc:
            raise ConfigError(str(exc)) from None
        for m in self.selection:
            if m not in SELECTION_MODES:
                raise ConfigError(f"unknown selection mode {m!r}; expected one of {SELECTION_MODES}")
        for m in self.cv_modes:
            if m not in CV_MODES:
                raise ConfigError(f"unknown CV mode {m!r}; expected one of {CV_MODES}")
        self.variants = list(dict.fromkeys(canonical_variant(v, self.criterion) for v in self.variants))
        needs_rfe = [v for v in self.variants if v != "all-78" and v != "SI-SA"]
        if (needs_rfe or "SI-LOSO" in self.cv_modes) and "RFE-SD" not in self.selection:
            raise ConfigError(f"variants {needs_rfe or ['top-20-common']} need selection mode RFE-SD")
        if "SI-SA" in self.variants and "SA-SI" not in self.selection:
            raise ConfigError("variant SI-SA needs selection mode SA-SI")
        if "SA-SI" in self.selection:
            missing = sorted(set(self.classifiers) - set(self.sa_classifiers)) \
                if "SI-SA" in self.variants else []
            if missing:
                raise ConfigError(f"variant SI-SA needs SA runs for {', '.join(missing)}")
        for n in self.common_sizes:
            v = f"top-{n}-common"
            if v in VARIANTS and not 1 <= int(n) <= 78:
                raise ConfigError(f"common size {n} outside 1..78")
        for v in self.variants:
            if v.startswith("top-") and int(v.split("-")[1]) not in self.common_sizes:
                self.common_sizes = sorted(set(self.common_sizes) | {int(v.split("-")[1])})
        if self.folds < 2:
            raise ConfigError("folds must be >= 2")
        try:
            self.schedule()
            self.preprocess_config()
            self.wavelet_spec()
            synth = self.synth_config()
            if synth is not None:
                _check_planted(synth, synth.region_map(), layout.BANDS)
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from None
        if self.jobs < 1:
            raise ConfigError("jobs must be >= 1")

    def spec(self, algorithm) -> ClassifierSpec:
        a = canonical_algorithm(algorithm)
        return ClassifierSpec(a, **{"seed": self.seed, **self.classifier_params.get(a, {})})

    def schedule(self, offset=0) -> AnnealingSchedule:
        d = {"seed": self.seed, **self.annealing}
        d["seed"] = int(d["seed"]) + offset
        return AnnealingSchedule(**d)

    def preprocess_config(self):
        return PreprocessConfig(**self.preprocess)

    def wavelet_spec(self):
        return WaveletSpec(**self.wavelet)

    def synth_config(self):
        if "synth" not in self.dataset:
            return None
        s = self.dataset["synth"]
        if isinstance(s, str):
            return SynthConfig.preset(s)
        if isinstance(s, dict) and "preset" in s:
            base = SynthConfig.preset(s["preset"]).to_dict()
            base.update({k: v for k, v in s.items() if k != "preset"})
            return SynthConfig.from_dict(base)
        return SynthConfig.from_dict(s or {})


def _hash(obj) -> str:
    return hashlib.sha256(json.dumps(obj, sort_keys=True, default=str).encode()).hexdigest()


def _file_hash(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _map(fn, items, jobs):
    if jobs == 1:
        return [fn(*it) for it in items]
    return Parallel(n_jobs=jobs)(delayed(fn)(*it) for it in items)


@dataclass
class RunRecord:
    config_hash: str
    versions: dict
    timestamps: dict = field(default_factory=dict)
    stages: dict = field(default_factory=dict)  # name -> {"key", "cache_hit", "artifacts"}

    @property
    def artifacts(self):
        return [a for s in self.stages.values() for a in s.get("artifacts", [])]

    def to_dict(self):
        d = asdict(self)
        d["artifacts"] = self.artifacts
        return d


class Pipeline:
    """Stage runner bound to one config and run directory."""

    def __init__(self, config: PipelineConfig):
        self.cfg = config
        self.out = Path(config.out)
        self.record = RunRecord(config.content_hash(), {
            "eegvalence": __version__, "python": platform.python_version(),
            "numpy": np.__version__, "scipy": __import__("scipy").__version__})
        self._dataset = None
        self._trialsets = {}
        self._labels = {}

    # -- plumbing ---------------------------------------------------------

    def _stage_dir(self, name):
        d = self.out / name
        d.mkdir(parents=True, exist_ok=True)
        return d

    def _cached(self, name, key):
        if self.record.stages.get(name, {}).get("key") == key:
            return True  # already produced during this run
        meta = self.out / name / "_stage.json"
        if not meta.exists():
            return False
        try:
            doc = json.loads(meta.read_text())
        except json.JSONDecodeError:
            return False
        if doc.get("key") != key:
            return False
        if not all((self.out / a).exists() for a in doc.get("artifacts", [])):
            return False
        self.record.stages[name] = {"key": key, "cache_hit": True, "artifacts": doc["artifacts"]}
        log.info("stage %s: cache hit", name)
        return True

    def _done(self, name, key, artifacts):
        rel = sorted(str(Path(a).relative_to(self.out)) for a in artifacts)
        (self.out / name / "_stage.json").write_text(
            json.dumps({"key": key, "artifacts": rel}, indent=2, sort_keys=True) + "\n")
        self.record.stages[name] = {"key": key, "cache_hit": False, "artifacts": rel}

    # -- dataset and features ---------------------------------------------

    @property
    def dataset_key(self):
        d = dict(self.cfg.dataset)
        if "manifest" in d:
            return _hash({"manifest": _file_hash(d["manifest"])})
        return _hash({"synth": self.cfg.synth_config().to_dict(), "seed": int(d.get("seed", 0))})

    @property
    def dataset(self):
        if self._dataset is None:
            d = self.cfg.dataset
            if "manifest" in d:
                self._dataset = load_dataset(d["manifest"])
            else:
                self._dataset = generate_synthetic_dataset(self.cfg.synth_config(), int(d.get("seed", 0)))
        return self._dataset

    def labels(self, criterion):
        if criterion not in self._labels:
            self._labels[criterion] = derive_labels(self.dataset, criterion)
        return self._labels[criterion]

    def _features_key(self, w):
        return _hash({"dataset": self.dataset_key, "pre": asdict(self.cfg.preprocess_config()),
                      "wavelet": asdict(self.cfg.wavelet_spec()), "window": w})

    def extract(self, windows=None):
        """Band-power TrialSets (unlabeled) per window, cached as npz."""
        windows = windows or self.cfg.windows
        d = self._stage_dir("features")
        todo = []
        for w in windows:
            if w in self._trialsets:
                continue
            path, meta = d / f"w{w}.npz", d / f"w{w}.json"
            key = self._features_key(w)
            if path.exists() and meta.exists() and json.loads(meta.read_text()).get("key") == key:
                self._trialsets[w] = TrialSet.load_npz(path)
            else:
                todo.append(w)
        if todo:
            log.info("extracting features for windows %s", todo)
            try:
                fresh = extract_trialsets(self.dataset, todo, self.cfg.preprocess_config(),
                                          self.cfg.wavelet_spec(), jobs=self.cfg.jobs)
            except DatasetError:
                raise
            except ValueError as exc:
                raise StageError("extract", "dataset", exc) from exc
            for w, ts in fresh.items():
                ts.save_npz(d / f"w{w}.npz")
                (d / f"w{w}.json").write_text(json.dumps({"key": self._features_key(w)}) + "\n")
                self._trialsets[w] = ts
        st = self.record.stages.setdefault("extract", {"key": "", "cache_hit": True, "artifacts": []})
        st["cache_hit"] = st["cache_hit"] and not todo
        arts = set(st["artifacts"]) | {f"features/w{w}.{ext}" for w in windows for ext in ("npz", "json")}
        st["artifacts"] = sorted(arts)
        st["key"] = _hash(st["artifacts"] + [self._features_key(int(a[10:-4]))
                                             for a in st["artifacts"] if a.endswith(".npz")])
        return {w: self._trialsets[w] for w in windows}

    def trials(self, window, criterion):
        return self.extract([window])[window].with_labels(self.labels(criterion))

    def write_labels(self):
        d = self._stage_dir("labels")
        for crit in ("PR", "SR"):
            table = self.labels(crit)
            rows = [{"subject": s, "clip": c, "label": table.label(s, c)}
                    for s, c in self.dataset.keys()]
            report.write_rows(d / f"{crit}.csv", rows, ["subject", "clip", "label"])

    # -- sweep -------------------------------------------------------------

    def _sweep_key(self):
        c = self.cfg
        return _hash({"features": [self._features_key(w) for w in c.windows], "crit": c.criterion,
                      "clfs": [asdict(c.spec(a)) for a in c.sweep_classifiers], "k": c.folds,
                      "group": c.group_by_clip, "seed": c.seed})

    def run_sweep(self):
        key = self._sweep_key()
        d = self.out / "sweep"
        if self._cached("sweep", key):
            return json.loads((d / "stats.json").read_text())
        d = self._stage_dir("sweep")
        tss = {w: self.trials(w, self.cfg.criterion) for w in self.cfg.windows}
        try:
            res = window_sweep(tss, [self.cfg.spec(a) for a in self.cfg.sweep_classifiers],
                               self.cfg.folds, self.cfg.seed, self.cfg.group_by_clip,
                               self.cfg.jobs, self.cfg.criterion)
        except (EvaluationError, ClassifierError) as exc:
            raise StageError("sweep", "window sweep", exc) from exc
        table = res.table()
        stats = analyze_sweep(res) if len(res.windows) >= 2 else {"windows": list(res.windows)}
        best = best_window(table)
        stats["best_window"] = best
        if len(res.classifiers) >= 2:
            stats["classifier_comparison"] = compare_classifiers(res, best)
        arts = [report.write_rows(d / "folds.csv", res.rows, report.FOLD_COLUMNS),
                report.write_rows(d / "table.csv", table),
                report.write_json(d / "stats.json", stats)]
        self._done("sweep", key, arts)
        return json.loads((d / "stats.json").read_text())

    def final_window(self):
        if self.cfg.window is not None:
            return self.cfg.window
        return int(self.run_sweep()["best_window"])

    # -- selection ---------------------------------------------------------

    def _select_key(self, w):
        c = self.cfg
        return _hash({"features": self._features_key(w), "k": c.rfe_k, "sizes": c.common_sizes,
                      "modes": c.selection, "sa": [asdict(c.spec(a)) for a in c.sa_classifiers],
                      "crit": c.criterion, "annealing": asdict(c.schedule()),
                      "rfe_spec": asdict(ClassifierSpec("SVM_linear"))})

    def run_select(self):
        w = self.final_window()
        key = self._select_key(w)
        if self._cached("select", key):
            return self._load_selection()
        d = self._stage_dir("select")
        arts = []
        if "RFE-SD" in self.cfg.selection:
            for crit in ("PR", "SR"):
                ts = self.trials(w, crit)
                items = [(ts.for_subject(s), s, self.cfg.rfe_k) for s in ts.subject_ids]
                ranks = _map(_rfe_subject, items, self.cfg.jobs)
                arts.append(d / f"rankings_{crit}.json")
                arts[-1].write_text(rankings_to_json(ranks, crit))
                common = {str(n): aggregate_common_features(ranks, n, crit).to_dict()
                          for n in self.cfg.common_sizes}
                arts.append(report.write_json(d / f"common_{crit}.json", common))
        if "SA-SI" in self.cfg.selection:
            ts = self.trials(w, self.cfg.criterion)
            for i, a in enumerate(self.cfg.sa_classifiers):
                log.info("simulated annealing for %s", a)
                try:
                    res = sa_select(ts.X, ts.y, ts.subjects, self.cfg.spec(a), self.cfg.schedule(),
                                    jobs=self.cfg.jobs)
                except (SelectionError, ValueError) as exc:
                    raise StageError("select", f"SA {a}", exc) from exc
                feats = res.features(ts.feature_names)
                doc = {"classifier": a, "window": w, "criterion": self.cfg.criterion,
                       "features": list(feats), "n_features": len(feats), "energy": res.energy,
                       "mean_loso_f1": 1 - res.energy, "initial_energy": res.initial_energy,
                       "initial_features": [n for n, m in zip(ts.feature_names, res.initial_mask) if m],
                       "evaluations": res.evaluations, "schedule": asdict(self.cfg.schedule())}
                arts.append(report.write_json(d / f"sa_{a}.json", doc))
                arts.append(res.write_trace(d / f"sa_trace_{a}.csv"))
        self._done("select", key, arts)
        return self._load_selection()

    def _load_selection(self):
        d = self.out / "select"
        sel = {"rankings": {}, "common": {}, "sa": {}}
        for crit in ("PR", "SR"):
            p = d / f"rankings_{crit}.json"
            if p.exists():
                sel["rankings"][crit] = {r.subject_id: r for r in rankings_from_json(p.read_text())[0]}
                sel["common"][crit] = json.loads((d / f"common_{crit}.json").read_text())
        for a in self.cfg.sa_classifiers:
            p = d / f"sa_{a}.json"
            if p.exists():
                sel["sa"][a] = json.loads(p.read_text())
        return sel

    # -- evaluation --------------------------------------------------------

    def _variant_features(self, variant, sel, subject, classifier):
        crit = self.cfg.criterion
        if variant == "all-78":
            return None, crit
        if variant.startswith("top-"):
            n = variant.split("-")[1]
            return sel["common"][crit][n]["keys"], crit
        if variant.startswith("20-individual-"):
            c = variant.rsplit("-", 1)[1]
            return list(sel["rankings"][c][subject].selected), c
        if variant == "SI-SA":
            return sel["sa"][classifier]["features"], crit
        raise ConfigError(f"unknown variant {variant}")

    def run_evaluate(self):
        w = self.final_window()
        c = self.cfg
        key = _hash({"select": self._select_key(w), "clfs": [asdict(c.spec(a)) for a in c.classifiers],
                     "si": [asdict(c.spec(a)) for a in c.si_classifiers], "variants": c.variants,
                     "modes": c.cv_modes, "k": c.folds, "group": c.group_by_clip, "seed": c.seed})
        if self._cached("evaluate", key):
            return
        sel = self.run_select()
        d = self._stage_dir("evaluate")
        rows = []
        if "SD-8fold" in c.cv_modes:
            tasks = []
            for a in c.classifiers:
                for v in c.variants:
                    for s in self.dataset.subjects:
                        feats, crit = self._variant_features(v, sel, s, a)
                        ts = self.trials(w, crit).for_subject(s)
                        ctx = dict(experiment="SD-8fold", criterion=crit, window=w, variant=v,
                                   classifier=a, subject=s)
                        tasks.append((ts, c.spec(a), c.folds, c.seed, c.group_by_clip, feats, ctx))
            for part in _map(_sd_cell, tasks, c.jobs):
                rows.extend(part)
        if "SI-LOSO" in c.cv_modes:
            ts = self.trials(w, c.criterion)
            for a in c.si_classifiers:
                sets = [("top-20-common", sel["common"][c.criterion]["20"]["keys"]
                         if "20" in sel["common"].get(c.criterion, {}) else None)]
                if a in sel["sa"]:
                    sets.append(("SI-SA", sel["sa"][a]["features"]))
                for v, feats in sets:
                    if feats is None:
                        continue
                    sub = ts.select(feats)
                    try:
                        res = loso_evaluate(sub.X, sub.y, sub.subjects, c.spec(a), jobs=c.jobs)
                    except (EvaluationError, ClassifierError) as exc:
                        raise StageError("evaluate", f"LOSO {a}/{v}", exc) from exc
                    for subject, fr in res.items():
                        rows.extend(report.fold_rows(
                            CVResult([fr]), experiment="SI-LOSO",
                            criterion=c.criterion, window=w, variant=v, classifier=a,
                            subject=subject))
        arts = [report.write_rows(d / "folds.csv", rows, report.FOLD_COLUMNS)]
        arts.append(report.write_json(d / "stats.json", variant_statistics(rows)))
        self._done("evaluate", key, arts)

    # -- report ------------------------------------------------------------

    def run_report(self):
        arts = build_report(self.out, self.cfg)
        self.record.stages["report"] = {"key": "", "cache_hit": False,
                                        "artifacts": sorted(str(Path(a).relative_to(self.out))
                                                            for a in arts)}

    # -- orchestration -----------------------------------------------------

    def run(self, until="report"):
        if until not in STAGES:
            raise ConfigError(f"unknown stage {until!r}")
        self.out.mkdir(parents=True, exist_ok=True)
        self.record.timestamps["started"] = time.strftime("%Y-%m-%dT%H:%M:%S%z")
        report.write_json(self.out / "config.json", self.cfg.to_dict(semantic_only=True))
        self.write_labels()
        upto = STAGES.index(until)
        windows = self.cfg.windows if self.cfg.sweep else [self.cfg.window]
        self.extract(windows)
        if upto >= 1 and self.cfg.sweep:
            self.run_sweep()
        if upto >= 2 and self.cfg.selection != ["none"]:
            self.run_select()
        if upto >= 3:
            self.run_evaluate()
        if upto >= 4:
            self.run_report()
        self.record.timestamps["finished"] = time.strftime("%Y-%m-%dT%H:%M:%S%z")
        report.write_json(self.out / "run_record.json", self.record.to_dict())
        return self.record


def _rfe_subject(ts, subject, k):
    try:
        return rfe_rank(ts.X, ts.y, ts.feature_names, k, subject)
    except (SelectionError, ClassifierError) as exc:
        raise StageError("select", f"subject {subject}", exc) from exc


def _sd_cell(ts, spec, k, seed, group_by_clip, feats, ctx):
    try:
        res = subject_cv(ts, spec, k, seed, group_by_clip, feats)
    except (EvaluationError, ClassifierError) as exc:
        raise StageError("evaluate", f"subject {ctx['subject']} ({ctx['classifier']}, "
                         f"{ctx['variant']})", exc) from exc
    return report.fold_rows(res, **ctx)


def best_window(table) -> int:
    """Window with the highest mean F1 averaged over classifiers; ties go to the longer one."""
    by_w = {}
    for r in table:
        by_w.setdefault(int(r["window"]), []).append(r["mean_f1"])
    return max(by_w, key=lambda w: (float(np.mean(by_w[w])), w))


def variant_statistics(rows) -> dict:
    """Friedman + Nemenyi across feature-set variants per (experiment, classifier)."""
    out = {}
    subj = report.per_subject(rows, by=("experiment", "variant", "classifier"))
    groups = {}
    for r in subj:
        groups.setdefault((r["experiment"], r["classifier"]), {}).setdefault(
            r["variant"], {})[r["subject"]] = r["mean_f1"]
    for (exp, clf), by_v in groups.items():
        variants = list(by_v)
        subjects = sorted(set.intersection(*(set(v) for v in by_v.values())))
        if len(variants) < 2 or len(subjects) < 2:
            continue
        M = np.array([[by_v[v][s] for v in variants] for s in subjects])
        fr = friedman_test(M)
        ph = posthoc_nemenyi(M, variants)
        out[f"{exp}/{clf}"] = {
            "friedman": {"statistic": fr.statistic, "p": fr.p, "n": fr.n, "k": fr.k},
            "posthoc": {"critical_difference": ph.cd,
                        "mean_ranks": dict(zip(variants, ph.mean_ranks.tolist())),
                        "pairs": [{"a": a, "b": b, "rank_difference": dd, "significant": sg}
                                  for a, b, dd, sg in ph.pairs()],
                        "groups": [list(g) for g in ph.groups]}}
    return out


def build_report(run_dir, cfg: PipelineConfig | None = None):
    """Markdown and CSV summaries recomputed from the raw fold-level CSVs."""
    run_dir = Path(run_dir)
    rec_path = run_dir / "run_record.json"
    expected = []
    if rec_path.exists():
        arts = json.loads(rec_path.read_text()).get("artifacts", [])
        expected = [a for a in arts if a.endswith("folds.csv")]
    if not expected:
        expected = [a for a in ("sweep/folds.csv", "evaluate/folds.csv") if (run_dir / a).exists()]
        if not expected:
            raise report.ReportError(f"missing raw file: {run_dir / 'evaluate' / 'folds.csv'}")
    raw = {}
    for a in expected:
        raw[a] = report.read_rows(run_dir / a)  # raises naming a missing file
        for r in raw[a]:
            report.check_row(r)
    d = run_dir / "report"
    d.mkdir(parents=True, exist_ok=True)
    arts = []
    md = ["# Run summary", ""]
    if "sweep/folds.csv" in raw:
        table = report.summarize(raw["sweep/folds.csv"], by=("window", "classifier"))
        arts.append(report.write_rows(d / "sweep_table.csv", table))
        md.append(report.markdown_grid(table, "window", "classifier",
                                       title="Mean F1 across subjects per window and classifier"))
        stats_p = run_dir / "sweep" / "stats.json"
        if stats_p.exists():
            st = json.loads(stats_p.read_text())
            if "friedman" in st:
                md += [f"Friedman across windows: statistic {st['friedman']['statistic']:.4g}, "
                       f"p {st['friedman']['p']:.3g}; Nemenyi CD {st['posthoc']['critical_difference']:.3f}.",
                       "", "Top group: " + ", ".join(st["posthoc"]["top_group"]), ""]
            md += [f"Selected window: {st.get('best_window')} s", ""]
    if "evaluate/folds.csv" in raw:
        rows = raw["evaluate/folds.csv"]
        summary = report.summarize(rows, by=("experiment", "criterion", "window", "variant", "classifier"))
        arts.append(report.write_rows(d / "summary.csv", summary))
        sd = [r for r in summary if r["experiment"] == "SD-8fold"]
        si = [r for r in summary if r["experiment"] == "SI-LOSO"]
        if sd:
            t1 = report.markdown_grid(sd, "variant", "classifier",
                                      title="Subject-dependent 8-fold CV: F1 per feature set")
            (d / "table1.md").write_text(t1)
            arts.append(d / "table1.md")
            md.append(t1)
        if si:
            t2 = report.markdown_grid(si, "classifier", "variant",
                                      title="Leave-one-subject-out: F1 per classifier")
            sa_counts = []
            for clf in dict.fromkeys(r["classifier"] for r in si):
                p = run_dir / "select" / f"sa_{clf}.json"
                if p.exists():
                    sa_counts.append(f"| {clf} | {json.loads(p.read_text())['n_features']} |")
            if sa_counts:
                t2 += "\n| classifier | SA features |\n|---|---|\n" + "\n".join(sa_counts) + "\n"
            (d / "table2.md").write_text(t2)
            arts.append(d / "table2.md")
            md.append(t2)
        per = report.per_subject([r for r in rows if r["experiment"] == "SD-8fold"],
                                 by=("criterion", "window", "variant", "classifier"))
        arts.append(report.write_rows(d / "per_subject_f1.csv", per))
    (d / "summary.md").write_text("\n".join(md) + "\n")
    arts.append(d / "summary.md")
    return arts
