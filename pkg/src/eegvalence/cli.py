"""Command-line interface.

Exit codes: 0 success, 2 usage, 3 configuration error, 4 data error,
5 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from .classifiers import ClassifierError
from .dataset.io import write_dataset
from .dataset.model import DatasetError
from .evaluation.cv import EvaluationError
from .evaluation.report import ReportError
from .pipeline import ConfigError, Pipeline, PipelineConfig, StageError, build_report
from .preprocess import PreprocessError, preprocess_recording
from .selection.rfe import SelectionError

EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_NUMERICAL = 0, 3, 4, 5

log = logging.getLogger("eegvalence")


def load_config(args) -> PipelineConfig:
    """Config file, then flags on top (flag > config > default)."""
    base = {}
    if getattr(args, "config", None):
        path = Path(args.config)
        if not path.exists():
            raise ConfigError(f"config file not found: {path}")
        try:
            base = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"malformed config {path}: {exc}") from None
        if not isinstance(base, dict):
            raise ConfigError(f"config {path} must hold a JSON object")
    if getattr(args, "manifest", None):
        base["dataset"] = {"manifest": args.manifest}
    elif getattr(args, "preset", None):
        base["dataset"] = {**base.get("dataset", {}), "synth": args.preset}
        base["dataset"].pop("manifest", None)
    if args.seed is not None:
        base["seed"] = args.seed
        ds = base.setdefault("dataset", {"synth": "default"})
        if "synth" in ds:
            ds["seed"] = args.seed
    for flag in ("jobs", "out", "window"):
        v = getattr(args, flag, None)
        if v is not None:
            base[flag] = v
    if getattr(args, "criterion", None):
        base["criterion"] = args.criterion.upper()
    if getattr(args, "variant", None):
        base["variants"] = list(args.variant)
    return PipelineConfig.from_dict(base)


def cmd_synth(cfg: PipelineConfig, fmt="bin"):
    """Write the configured synthetic corpus (manifest + recordings) under ``cfg.out``."""
    from .dataset.synth import generate_synthetic_dataset
    synth = cfg.synth_config()
    if synth is None:
        raise ConfigError("synth needs a synthetic dataset config")
    ds = generate_synthetic_dataset(synth, int(cfg.dataset.get("seed", cfg.seed)))
    path = write_dataset(ds, cfg.out, fmt)
    print(f"wrote {len(ds)} recordings ({len(ds.subjects)} subjects x {len(ds.clips)} clips) "
          f"to {path}")
    return path


def cmd_preprocess(cfg: PipelineConfig):
    """Standardized stimulus epochs as float32 npz, one file per recording."""
    pipe = Pipeline(cfg)
    d = Path(cfg.out) / "epochs"
    d.mkdir(parents=True, exist_ok=True)
    pre = cfg.preprocess_config()
    for s, c in pipe.dataset.keys():
        try:
            ep = preprocess_recording(pipe.dataset.recording(s, c), pre)
        except PreprocessError as exc:
            raise StageError("preprocess", f"recording {s}/{c}", exc) from exc
        np.savez(d / f"{s}_{c}.npz", data=ep.data.astype(np.float32),
                 sample_rate_hz=ep.sample_rate_hz, channel_labels=np.array(ep.channel_labels))
    print(f"wrote {len(pipe.dataset)} epochs to {d}")


def cmd_run(cfg: PipelineConfig, until="report"):
    rec = Pipeline(cfg).run(until)
    for name, st in rec.stages.items():
        log.info("stage %s: %s", name, "cache hit" if st["cache_hit"] else "computed")
    print(f"run complete: {cfg.out} (config {rec.config_hash[:12]})")
    return rec


def cmd_report(run_dir):
    arts = build_report(run_dir)
    for a in arts:
        print(a)
    return arts


def _parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="pipeline config JSON")
    common.add_argument("--seed", type=int)
    common.add_argument("--jobs", type=int)
    common.add_argument("--out", help="output directory")
    common.add_argument("--window", type=int, help="final window length in seconds")
    common.add_argument("--criterion", choices=["pr", "sr", "PR", "SR"])
    common.add_argument("--variant", action="append",
                        help="feature-set variant (repeatable), e.g. top-20-common")
    common.add_argument("--manifest", help="dataset manifest (overrides the config dataset)")
    common.add_argument("--preset", help="synthetic corpus preset (overrides the config dataset)")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="eegvalence", description="EEG valence classification pipeline")
    sub = p.add_subparsers(dest="command", required=True)
    s = sub.add_parser("synth", parents=[common], help="write a synthetic corpus")
    s.add_argument("--format", choices=["bin", "csv"], default="bin")
    sub.add_parser("preprocess", parents=[common], help="write standardized epochs")
    for name, text in [("extract", "band-power features per window"),
                       ("sweep", "window-size sweep"), ("select", "RFE / SA feature selection"),
                       ("evaluate", "final classification"), ("run", "every stage and the report")]:
        sub.add_parser(name, parents=[common], help=text)
    r = sub.add_parser("report", parents=[common], help="rebuild summaries from raw CSVs")
    r.add_argument("run_dir", nargs="?", help="run directory (default: --out)")
    return p


def _exit_code(exc) -> int:
    if isinstance(exc, StageError):
        exc = exc.cause
    if isinstance(exc, ConfigError):
        return EXIT_CONFIG
    if isinstance(exc, (DatasetError, ReportError, EvaluationError, SelectionError,
                        PreprocessError, FileNotFoundError)):
        return EXIT_DATA
    if isinstance(exc, (ClassifierError, np.linalg.LinAlgError, FloatingPointError,
                        ArithmeticError)):
        return EXIT_NUMERICAL
    return EXIT_DATA


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "report":
            run_dir = args.run_dir or args.out
            if run_dir is None:
                raise ConfigError("report needs a run directory")
            cmd_report(run_dir)
            return EXIT_OK
        cfg = load_config(args)
        if args.command == "synth":
            cmd_synth(cfg, args.format)
        elif args.command == "preprocess":
            cmd_preprocess(cfg)
        else:
            cmd_run(cfg, "report" if args.command == "run" else args.command)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except StageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return _exit_code(exc)
    except (DatasetError, ReportError, PreprocessError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (ClassifierError, np.linalg.LinAlgError, FloatingPointError) as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
