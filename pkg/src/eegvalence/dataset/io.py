"""Manifest (JSON) and recording (CSV / binary) readers and writers.

Binary recording layout, little-endian::

    offset  size  field
    0       4     magic b"EEGV"
    4       4     uint32 format version (1)
    8       4     uint32 channel count
    12      8     uint64 sample count
    20      8     float64 sample rate (Hz)
    28      36    zero padding
    64      ...   float32 samples, channel-major (channels x samples)

CSV recordings carry the channel labels in the header row and one row per
sample. Both formats round-trip float32 values exactly.
"""

from __future__ import annotations

import io
import json
import os
import struct
from pathlib import Path

import numpy as np

from . import layout
from .model import (ClipMetadata, Dataset, DatasetError, DatasetManifest, Recording,
                    recording_violations)

MAGIC = b"EEGV"
VERSION = 1
HEADER_SIZE = 64
_HEADER = struct.Struct("<4sIIQd")
MANIFEST_VERSION = 1


def write_binary(path, samples, sample_rate_hz):
    data = np.ascontiguousarray(samples, dtype="<f4")
    n_ch, n = data.shape
    header = _HEADER.pack(MAGIC, VERSION, n_ch, n, float(sample_rate_hz))
    with open(path, "wb") as fh:
        fh.write(header.ljust(HEADER_SIZE, b"\0"))
        fh.write(data.tobytes())


def read_binary_header(path):
    with open(path, "rb") as fh:
        raw = fh.read(HEADER_SIZE)
    if len(raw) < HEADER_SIZE:
        raise DatasetError("truncated binary header", str(path))
    magic, version, n_ch, n, fs = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise DatasetError(f"bad magic {magic!r}", str(path))
    if version != VERSION:
        raise DatasetError(f"unsupported binary version {version}", str(path))
    expected = HEADER_SIZE + 4 * n_ch * n
    if os.path.getsize(path) != expected:
        raise DatasetError(f"file size {os.path.getsize(path)} != {expected}", str(path))
    return n_ch, n, fs


def read_binary(path):
    n_ch, n, fs = read_binary_header(path)
    data = np.fromfile(path, dtype="<f4", offset=HEADER_SIZE).reshape(n_ch, n)
    return data.astype(np.float32, copy=False), fs


def write_csv(path, samples, channel_labels):
    data = np.asarray(samples, dtype=np.float32)
    buf = io.StringIO()
    # 9 significant digits round-trip any float32
    np.savetxt(buf, data.T, fmt="%.9g", delimiter=",", header=",".join(channel_labels), comments="")
    Path(path).write_text(buf.getvalue())


def read_csv_header(path):
    with open(path) as fh:
        header = fh.readline().strip()
        n = sum(1 for line in fh if line.strip())
    return header.split(","), n


def read_csv(path):
    labels, _ = read_csv_header(path)
    data = np.loadtxt(path, delimiter=",", skiprows=1, dtype=np.float64, ndmin=2)
    return labels, data.T.astype(np.float32)


def _manifest_from_json(doc, root: Path):
    for key in ("subjects", "clips", "recordings"):
        if key not in doc:
            raise DatasetError(f"missing key {key!r}", "manifest")
    subjects = tuple(str(s) for s in doc["subjects"])
    if not subjects:
        raise DatasetError("no subjects", "manifest")
    clips = []
    for i, c in enumerate(doc["clips"]):
        try:
            ratings = {str(s): (int(v[0]), int(v[1])) for s, v in c.get("ratings", {}).items()}
            clips.append(ClipMetadata(str(c["clip_id"]), c["content_label"],
                                      float(c.get("duration_s", 0.0)), ratings))
        except (KeyError, TypeError, ValueError, IndexError) as exc:
            raise DatasetError(f"malformed clip entry: {exc}", f"clip #{i}") from exc
    entries = {}
    for i, r in enumerate(doc["recordings"]):
        try:
            key = (str(r["subject"]), str(r["clip"]))
            entries[key] = dict(r, path=str(root / r["path"]))
        except (KeyError, TypeError) as exc:
            raise DatasetError(f"malformed recording entry: {exc}", f"recording #{i}") from exc
    region_map = {k: list(v) for k, v in doc.get("region_map", layout.REGION_MAP).items()}
    bands = {k: (float(v[0]), float(v[1])) for k, v in doc.get("band_definitions", layout.BANDS).items()}
    extra = dict(doc.get("extra", {}))
    if "channels" in doc:
        extra["channels"] = list(doc["channels"])
    return DatasetManifest(subjects, tuple(clips), entries, region_map, bands, extra)


def _entry_loader(manifest: DatasetManifest):
    default_channels = manifest.extra.get("channels")

    def load(subject_id, clip_id):
        try:
            entry = manifest.recordings[subject_id, clip_id]
        except KeyError:
            raise DatasetError("no recording listed", f"recording {subject_id}/{clip_id}") from None
        path = entry["path"]
        fmt = entry.get("format") or ("csv" if path.endswith(".csv") else "bin")
        if fmt == "csv":
            labels, data = read_csv(path)
            fs = float(entry["sample_rate_hz"])
        else:
            data, fs = read_binary(path)
            labels = entry.get("channel_labels") or default_channels
            if labels is None:
                raise DatasetError("binary recording needs channel labels", f"recording {subject_id}/{clip_id}")
        return Recording(subject_id, clip_id, fs, tuple(labels), data,
                         tuple(entry["baseline_span"]), tuple(entry["stimulus_span"]))
    return load


def load_dataset(manifest_path, cache: bool = False) -> Dataset:
    """Parse a manifest and check every referenced recording's header.

    Sample data is read lazily, one recording at a time.
    """
    manifest_path = Path(manifest_path)
    if not manifest_path.exists():
        raise DatasetError("manifest not found", str(manifest_path))
    try:
        doc = json.loads(manifest_path.read_text())
    except json.JSONDecodeError as exc:
        raise DatasetError(f"malformed manifest: {exc}", str(manifest_path)) from exc
    manifest = _manifest_from_json(doc, manifest_path.parent)
    problems = list(manifest.violations())
    default_channels = manifest.extra.get("channels")
    for s in manifest.subjects:
        for c in manifest.clip_ids:
            ent = f"recording {s}/{c}"
            entry = manifest.recordings.get((s, c))
            if entry is None:
                raise DatasetError("missing from manifest", ent)
            path = entry["path"]
            if not os.path.exists(path):
                raise DatasetError(f"file not found: {path}", ent)
            if path.endswith(".csv") or entry.get("format") == "csv":
                labels, n = read_csv_header(path)
                fs = float(entry["sample_rate_hz"])
            else:
                n_ch, n, fs = read_binary_header(path)
                labels = entry.get("channel_labels") or default_channels
                if labels is None or len(labels) != n_ch:
                    raise DatasetError("channel labels do not match binary header", ent)
            # zero-stride stand-in: header-level checks without reading samples
            stub = Recording(s, c, fs, tuple(labels), np.broadcast_to(np.float32(0), (len(labels), n)),
                             tuple(entry["baseline_span"]), tuple(entry["stimulus_span"]))
            problems.extend(recording_violations(stub, manifest))
    if problems:
        raise DatasetError("; ".join(str(p) for p in problems), problems[0].entity)
    return Dataset(manifest, _entry_loader(manifest), cache=cache)


def manifest_to_json(manifest: DatasetManifest, recordings: list[dict]) -> dict:
    extra = dict(manifest.extra)
    channels = extra.pop("channels", None)
    doc = {
        "format_version": MANIFEST_VERSION,
        "subjects": list(manifest.subjects),
        "clips": [
            {"clip_id": c.clip_id, "content_label": c.content_label, "duration_s": c.duration_s,
             "ratings": {s: list(v) for s, v in c.per_subject_ratings.items()}}
            for c in manifest.clips
        ],
        "region_map": {k: list(v) for k, v in manifest.region_map.items()},
        "band_definitions": {k: list(v) for k, v in manifest.band_definitions.items()},
        "recordings": recordings,
        "extra": extra,
    }
    if channels is not None:
        doc["channels"] = channels
    return doc


def write_dataset(dataset: Dataset, out_dir, fmt: str = "bin") -> Path:
    """Write manifest.json plus one file per recording under ``out_dir``."""
    out_dir = Path(out_dir)
    (out_dir / "recordings").mkdir(parents=True, exist_ok=True)
    entries = []
    for rec in dataset:
        rel = f"recordings/{rec.subject_id}_{rec.clip_id}.{fmt}"
        entry = {"subject": rec.subject_id, "clip": rec.clip_id, "path": rel, "format": fmt,
                 "sample_rate_hz": rec.sample_rate_hz,
                 "baseline_span": list(map(int, rec.baseline_span)),
                 "stimulus_span": list(map(int, rec.stimulus_span))}
        if fmt == "csv":
            write_csv(out_dir / rel, rec.samples, rec.channel_labels)
        elif fmt == "bin":
            write_binary(out_dir / rel, rec.samples, rec.sample_rate_hz)
            entry["channel_labels"] = list(rec.channel_labels)
        else:
            raise ValueError(f"unknown recording format {fmt!r}")
        entries.append(entry)
    doc = manifest_to_json(dataset.manifest, entries)
    path = out_dir / "manifest.json"
    path.write_text(json.dumps(doc, indent=2) + "\n")
    return path
