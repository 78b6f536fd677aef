"""Manifest ingestion, end-to-end scoring runs, evaluation, and report files.

A run maps each manifest entry through sample -> preprocess -> optional
perturbation -> encode -> score. Entries are processed by a bounded thread
pool and merged back in manifest order, so results are byte-identical across
worker counts.
"""

from __future__ import annotations

import csv
import dataclasses
import hashlib
import json
import logging
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence, Union

import numpy as np
from concurrent.futures import ThreadPoolExecutor

from .encoders import EncoderConfig, EncoderKind, ExternalModelSession, encode
from .errors import ConfigError, EntryError, ManifestError, ModelError
from .features import (
    DistanceKind,
    FeatureOrder,
    d3_score,
    first_order_cosine,
    first_order_l2,
    second_order_diff,
)
from .frames import FrameSequence, SamplingPolicy, preprocess, sample_frames
from .metrics import REAL_POOL_TAG, EvalReport, ScoredLabel, evaluate_subsets
from .robustness import Perturbation, apply_perturbation

log = logging.getLogger(__name__)

STAGES = ("sample", "preprocess", "encode", "score")
_MANIFEST_FIELDS = {"path", "label", "subset", "id"}


@dataclass(frozen=True)
class ManifestEntry:
    """One video to score: where it lives and its ground truth."""

    path: str
    label: int
    subset: str
    id: str = ""

    def __post_init__(self) -> None:
        if not self.id:
            object.__setattr__(self, "id", self.path)
        if self.label not in (0, 1):
            raise ManifestError(f"entry {self.id!r}: label must be 0 or 1, got {self.label!r}")
        if not self.subset:
            raise ManifestError(f"entry {self.id!r}: subset must be non-empty")
        if not self.path:
            raise ManifestError("entry path must be non-empty")


@dataclass(frozen=True)
class RunConfig:
    """Everything that determines a run's scores, bundled for digesting."""

    encoder: EncoderConfig = EncoderConfig()
    sampling: SamplingPolicy = SamplingPolicy()
    distance_kind: DistanceKind = DistanceKind.L2
    feature_order: FeatureOrder = FeatureOrder.SECOND
    perturbation: Perturbation | None = None
    skip_short_videos: bool = True
    workers: int = 1

    def __post_init__(self) -> None:
        object.__setattr__(self, "distance_kind", DistanceKind(self.distance_kind))
        object.__setattr__(self, "feature_order", FeatureOrder(self.feature_order))
        if self.workers < 1:
            raise ConfigError(f"workers must be >= 1, got {self.workers}")


@dataclass(frozen=True)
class DetectionRecord:
    """One scored video; fake_score is the ranking key (higher = generated)."""

    id: str
    subset: str
    label: int
    sigma: float
    fake_score: float | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "sigma", float(self.sigma))
        if self.label not in (0, 1):
            raise ValueError(f"label must be 0 or 1, got {self.label!r}")
        if self.fake_score is None:
            object.__setattr__(self, "fake_score", -self.sigma)
        elif float(self.fake_score) != -self.sigma:
            raise ValueError(
                f"record {self.id!r}: fake_score {self.fake_score} is not -sigma ({-self.sigma})"
            )
        else:
            object.__setattr__(self, "fake_score", float(self.fake_score))


@dataclass
class DetectionRun:
    """Records in manifest order plus skip list and per-stage wall time."""

    records: list[DetectionRecord]
    skipped: list[tuple[str, str]] = field(default_factory=list)
    timings: dict[str, float] = field(default_factory=dict)
    series: dict[str, dict[str, list[float]]] | None = None


@dataclass
class SweepResult:
    """One report per perturbation that completed, failures for the rest."""

    reports: dict[Perturbation, EvalReport]
    failures: list[tuple[Perturbation, Exception]] = field(default_factory=list)


def load_manifest(path: Union[str, Path]) -> list[ManifestEntry]:
    """Read a JSONL manifest; relative entry paths resolve against its folder.

    Rejects malformed lines, missing or unknown fields, and duplicate ids,
    naming the offending line.
    """
    path = Path(path)
    base = path.parent
    entries: list[ManifestEntry] = []
    seen: set[str] = set()
    try:
        lines = path.read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise ManifestError(f"cannot read manifest {path}: {exc}") from exc
    for lineno, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            raw = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ManifestError(f"{path.name} line {lineno}: invalid JSON: {exc}") from exc
        if not isinstance(raw, dict):
            raise ManifestError(f"{path.name} line {lineno}: expected an object")
        missing = {"path", "label", "subset"} - raw.keys()
        if missing:
            raise ManifestError(
                f"{path.name} line {lineno}: missing field(s) {sorted(missing)}"
            )
        unknown = raw.keys() - _MANIFEST_FIELDS
        if unknown:
            raise ManifestError(
                f"{path.name} line {lineno}: unknown field(s) {sorted(unknown)}"
            )
        entry_path = Path(str(raw["path"]))
        if not entry_path.is_absolute():
            entry_path = base / entry_path
        try:
            entry = ManifestEntry(
                path=str(entry_path),
                label=raw["label"],
                subset=str(raw["subset"]),
                id=str(raw.get("id", "")) or str(raw["path"]),
            )
        except ManifestError as exc:
            raise ManifestError(f"{path.name} line {lineno}: {exc}") from exc
        if entry.id in seen:
            raise ManifestError(f"{path.name} line {lineno}: duplicate id {entry.id!r}")
        seen.add(entry.id)
        entries.append(entry)
    return entries


def _perturbed(seq: FrameSequence, pert: Perturbation | None) -> FrameSequence:
    if pert is None or pert.is_noop:
        return seq
    frames = tuple(apply_perturbation(f, pert) for f in seq.frames)
    return FrameSequence(frames, source_fps=seq.source_fps, sample_dt=seq.sample_dt)


def _score_entry(
    entry: ManifestEntry,
    cfg: RunConfig,
    pert: Perturbation | None,
    session: ExternalModelSession | None,
    want_series: bool,
):
    timings = dict.fromkeys(STAGES, 0.0)
    t0 = time.perf_counter()
    seq = sample_frames(entry.path, cfg.sampling)
    timings["sample"] = time.perf_counter() - t0
    t0 = time.perf_counter()
    seq = _perturbed(preprocess(seq), pert)
    timings["preprocess"] = time.perf_counter() - t0
    t0 = time.perf_counter()
    f0 = encode(seq, cfg.encoder, session)
    timings["encode"] = time.perf_counter() - t0
    t0 = time.perf_counter()
    score = d3_score(f0, cfg.distance_kind, cfg.feature_order)
    timings["score"] = time.perf_counter() - t0
    record = DetectionRecord(
        id=entry.id, subset=entry.subset, label=entry.label, sigma=score.sigma
    )
    series = None
    if want_series:
        f1 = (
            first_order_l2(f0)
            if cfg.distance_kind is DistanceKind.L2
            else first_order_cosine(f0)
        )
        series = {"first": [float(v) for v in f1.values]}
        if f0.num_frames >= 3:
            series["second"] = [float(v) for v in second_order_diff(f1).values]
    return record, timings, series


def run_detection(
    manifest: Union[str, Path, Sequence[ManifestEntry]],
    cfg: RunConfig,
    *,
    perturbation: Perturbation | None = None,
    workers: int | None = None,
    collect_series: bool = False,
) -> DetectionRun:
    """Score every manifest entry; output order equals manifest order.

    With skip_short_videos (the default), entries that fail to decode, are
    too short, or otherwise break are logged and listed in ``skipped``.
    Without it the first broken entry raises EntryError naming its id.
    Encoder/model misconfiguration always aborts.
    """
    if isinstance(manifest, (str, Path)):
        entries = load_manifest(manifest)
    else:
        entries = list(manifest)
    pert = perturbation if perturbation is not None else cfg.perturbation
    n_workers = workers if workers is not None else cfg.workers
    if n_workers < 1:
        raise ConfigError(f"workers must be >= 1, got {n_workers}")
    session = (
        ExternalModelSession(cfg.encoder)
        if cfg.encoder.kind is EncoderKind.EXTERNAL_MODEL and entries
        else None
    )

    def work(entry: ManifestEntry):
        try:
            return _score_entry(entry, cfg, pert, session, collect_series)
        except (ConfigError, ModelError):
            raise
        except Exception as exc:
            if not cfg.skip_short_videos:
                raise EntryError(entry.id, exc) from exc
            return None, exc, None

    with ThreadPoolExecutor(max_workers=n_workers) as pool:
        outcomes = list(pool.map(work, entries))

    run = DetectionRun(records=[], timings=dict.fromkeys(STAGES, 0.0))
    if collect_series:
        run.series = {}
    for entry, (record, extra, series) in zip(entries, outcomes):
        if record is None:
            log.warning("skipping %r: %s", entry.id, extra)
            run.skipped.append((entry.id, str(extra)))
            continue
        run.records.append(record)
        for stage, secs in extra.items():
            run.timings[stage] += secs
        if collect_series and series is not None:
            run.series[record.id] = series
    return run


def evaluate(
    run_or_records: Union[DetectionRun, Sequence[DetectionRecord]],
    real_pool_tag: str = REAL_POOL_TAG,
    config: RunConfig | None = None,
) -> EvalReport:
    """Per-subset AP/AUROC over fake scores; attaches the config digest."""
    if isinstance(run_or_records, DetectionRun):
        records: Sequence[DetectionRecord] = run_or_records.records
    else:
        records = run_or_records
    items = [ScoredLabel(r.fake_score, r.label, r.subset) for r in records]
    report = evaluate_subsets(items, real_pool_tag)
    if config is not None:
        report = dataclasses.replace(report, config_digest=config_digest(config))
    return report


def _encoder_dict(enc: EncoderConfig) -> dict:
    d = {
        "kind": enc.kind.value,
        "model_path": enc.model_path,
        "input_mean": list(enc.input_mean),
        "input_std": list(enc.input_std),
        "output_dim": enc.output_dim,
        "seed": enc.seed,
        "output_name": enc.output_name,
    }
    if enc.kind is EncoderKind.EXTERNAL_MODEL:
        try:
            digest = hashlib.sha256(Path(enc.model_path).read_bytes()).hexdigest()
        except OSError as exc:
            raise ConfigError(f"cannot hash model file {enc.model_path!r}: {exc}") from exc
        d["model_sha256"] = digest
    return d


def config_to_dict(cfg: RunConfig) -> dict:
    """JSON form of a config; external model files appear as content hashes."""
    pert = cfg.perturbation
    return {
        "encoder": _encoder_dict(cfg.encoder),
        "sampling": {
            "target_fps": cfg.sampling.target_fps,
            "max_duration_s": cfg.sampling.max_duration_s,
            "max_frames": cfg.sampling.max_frames,
        },
        "distance_kind": cfg.distance_kind.value,
        "feature_order": cfg.feature_order.value,
        "perturbation": None
        if pert is None
        else {"kind": pert.kind.value, "sigma": pert.sigma, "quality": pert.quality},
        "skip_short_videos": cfg.skip_short_videos,
        "workers": cfg.workers,
    }


def config_digest(cfg: RunConfig) -> str:
    payload = json.dumps(config_to_dict(cfg), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


def _check_pinned_model(enc: EncoderConfig, pinned_sha: str) -> None:
    """A config may pin model_sha256; reject if the file on disk drifted."""
    if enc.kind is not EncoderKind.EXTERNAL_MODEL:
        raise ConfigError("model_sha256 is only meaningful for external-model encoders")
    try:
        actual = hashlib.sha256(Path(enc.model_path).read_bytes()).hexdigest()
    except OSError as exc:
        raise ConfigError(f"cannot hash model file {enc.model_path!r}: {exc}") from exc
    if actual != pinned_sha:
        raise ConfigError(
            f"model file {enc.model_path!r} does not match pinned sha256 "
            f"{pinned_sha[:12]}... (found {actual[:12]}...)"
        )


def config_from_dict(raw: dict) -> RunConfig:
    """Build a RunConfig from parsed JSON/TOML, rejecting unknown keys."""
    if not isinstance(raw, dict):
        raise ConfigError(f"config root must be an object, got {type(raw).__name__}")
    known = {
        "encoder",
        "sampling",
        "distance_kind",
        "feature_order",
        "perturbation",
        "skip_short_videos",
        "workers",
    }
    unknown = raw.keys() - known
    if unknown:
        raise ConfigError(f"unknown config key(s) {sorted(unknown)}")
    kwargs: dict = {}
    try:
        if "encoder" in raw:
            enc = dict(raw["encoder"])
            pinned_sha = enc.pop("model_sha256", None)
            if "kind" in enc:
                enc["kind"] = EncoderKind(enc["kind"])
            if "input_mean" in enc:
                enc["input_mean"] = tuple(enc["input_mean"])
            if "input_std" in enc:
                enc["input_std"] = tuple(enc["input_std"])
            kwargs["encoder"] = EncoderConfig(**enc)
            if pinned_sha is not None:
                _check_pinned_model(kwargs["encoder"], str(pinned_sha))
        if "sampling" in raw:
            kwargs["sampling"] = SamplingPolicy(**dict(raw["sampling"]))
        if "distance_kind" in raw:
            kwargs["distance_kind"] = DistanceKind(raw["distance_kind"])
        if "feature_order" in raw:
            kwargs["feature_order"] = FeatureOrder(raw["feature_order"])
        if "perturbation" in raw and raw["perturbation"] is not None:
            kwargs["perturbation"] = Perturbation(**dict(raw["perturbation"]))
        if "skip_short_videos" in raw:
            kwargs["skip_short_videos"] = bool(raw["skip_short_videos"])
        if "workers" in raw:
            kwargs["workers"] = int(raw["workers"])
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid config: {exc}") from exc
    return RunConfig(**kwargs)


def emit_report(
    report: EvalReport | None,
    records: Sequence[DetectionRecord],
    out_dir: Union[str, Path],
    *,
    config: RunConfig | None = None,
    run: DetectionRun | None = None,
) -> list[Path]:
    """Write scores.csv and report.json (plus series.csv when collected).

    Floats are written with repr so scores.csv round-trips exactly and is
    byte-identical for identical runs. ``report`` may be None for score-only
    runs whose manifest cannot be evaluated (e.g. a single class).
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []

    scores_path = out_dir / "scores.csv"
    with open(scores_path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["id", "subset", "label", "sigma", "fake_score"])
        for r in records:
            writer.writerow([r.id, r.subset, r.label, repr(r.sigma), repr(r.fake_score)])
    written.append(scores_path)

    payload: dict = {"report": None if report is None else report.to_dict()}
    if config is not None:
        payload["config"] = config_to_dict(config)
        payload["config_digest"] = config_digest(config)
    if run is not None:
        payload["skipped"] = [{"id": i, "reason": reason} for i, reason in run.skipped]
        payload["timings"] = {k: round(v, 6) for k, v in run.timings.items()}
    report_path = out_dir / "report.json"
    report_path.write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")
    written.append(report_path)

    if run is not None and run.series is not None:
        by_id = {r.id: r for r in records}
        series_path = out_dir / "series.csv"
        with open(series_path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["id", "subset", "label", "series", "index", "value"])
            for entry_id, by_order in run.series.items():
                rec = by_id[entry_id]
                for name, values in by_order.items():
                    for k, v in enumerate(values):
                        writer.writerow([entry_id, rec.subset, rec.label, name, k, repr(v)])
        written.append(series_path)
    return written


def parse_scores(path: Union[str, Path]) -> list[DetectionRecord]:
    """Read back a scores.csv written by emit_report."""
    records = []
    try:
        fh = open(path, encoding="utf-8", newline="")
    except OSError as exc:
        raise ManifestError(f"cannot read scores {path}: {exc}") from exc
    with fh:
        reader = csv.DictReader(fh)
        expected = ["id", "subset", "label", "sigma", "fake_score"]
        if reader.fieldnames != expected:
            raise ManifestError(f"{path}: expected columns {expected}, got {reader.fieldnames}")
        for row in reader:
            try:
                records.append(
                    DetectionRecord(
                        id=row["id"],
                        subset=row["subset"],
                        label=int(row["label"]),
                        sigma=float(row["sigma"]),
                        fake_score=float(row["fake_score"]),
                    )
                )
            except (TypeError, ValueError) as exc:
                raise ManifestError(f"{path}: bad row {row}: {exc}") from exc
    return records


def compute_series(
    source: Union[str, Path], cfg: RunConfig
) -> dict[str, list[float]]:
    """Per-frame embedding norms plus first/second-order series for one clip."""
    seq = _perturbed(preprocess(sample_frames(source, cfg.sampling)), cfg.perturbation)
    session = (
        ExternalModelSession(cfg.encoder)
        if cfg.encoder.kind is EncoderKind.EXTERNAL_MODEL
        else None
    )
    f0 = encode(seq, cfg.encoder, session)
    out: dict[str, list[float]] = {
        "f0_norm": [float(v) for v in np.linalg.norm(f0.vectors, axis=1)]
    }
    if f0.num_frames >= 2:
        f1 = (
            first_order_l2(f0)
            if cfg.distance_kind is DistanceKind.L2
            else first_order_cosine(f0)
        )
        out["first"] = [float(v) for v in f1.values]
        if f0.num_frames >= 3:
            out["second"] = [float(v) for v in second_order_diff(f1).values]
    return out
