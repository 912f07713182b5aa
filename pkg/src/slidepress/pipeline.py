"""Folder-driven batch pipeline: inbox slides become published images.

Each slide dropped in the inbox is opened, snapshotted, linked to its
catalog specimen by filename stem, tiled into a Deep Zoom pyramid and
published; the slide then moves to the processed folder. Failures move
the offending file to the matching failed folder, emit a notification,
and never abort the batch. JPEGs already sitting in the processing
folder (manual review overrides, corrected requeues) go through the
link-and-publish path on the same run.

Moves use os.replace and publishing goes through a temp directory plus
rename, so a killed run never leaves a half-published image visible.
All directories are expected to live on one filesystem.
"""

from __future__ import annotations

import json
import os
import shutil
import smtplib
import tempfile
import time
from dataclasses import dataclass, field
from datetime import datetime, timezone
from email.message import EmailMessage
from enum import Enum
from pathlib import Path

from .catalog import Catalog, link_to_catalog
from .deepzoom import build_pyramid
from .errors import (
    ConfigError,
    IoError,
    LockHeld,
    MissingFile,
    MissingKey,
    NameCollision,
    ParseError,
    SlidepressError,
    SpecimenNotFound,
    UnknownKey,
)
from .jpegcodec import load_image
from .properties import parse_properties
from .slide import open_slide
from .snapshot import SnapshotConfig, create_snapshot
from .wtif import meta_path_for

SLIDE_SUFFIXES = (".wtif", ".synth")

_DIR_KEYS = (
    "ndpi_new_dir",
    "ndpi_processed_dir",
    "ndpi_failed_dir",
    "jpeg_processing_dir",
    "jpeg_processed_dir",
    "jpeg_failed_dir",
    "publish_dir",
)
_REQUIRED_KEYS = _DIR_KEYS + ("catalog_store",)
_OPTIONAL_KEYS = (
    "snapshot_magnification",
    "snapshot_quality",
    "snapshot_fraction",
    "watermark_path",
    "dzi_tile_size",
    "dzi_overlap",
    "notify_mode",
    "notify_target",
)


@dataclass
class PipelineConfig:
    ndpi_new_dir: Path
    ndpi_processed_dir: Path
    ndpi_failed_dir: Path
    jpeg_processing_dir: Path
    jpeg_processed_dir: Path
    jpeg_failed_dir: Path
    publish_dir: Path
    catalog_store: Path
    snapshot_magnification: float | None = None  # None = auto
    snapshot_quality: int = 85
    snapshot_fraction: float = 0.25
    watermark_path: Path | None = None
    dzi_tile_size: int = 254
    dzi_overlap: int = 1
    notify_mode: str = "file"
    notify_target: str = "failure-report.jsonl"

    def directories(self) -> tuple[Path, ...]:
        return tuple(getattr(self, key) for key in _DIR_KEYS)


def load_config(path: str | Path) -> PipelineConfig:
    """Parse a snapshot-creator properties file; paths resolve relative
    to the file itself."""
    path = Path(path)
    raw = parse_properties(path)
    unknown = set(raw) - set(_REQUIRED_KEYS) - set(_OPTIONAL_KEYS)
    if unknown:
        raise UnknownKey(f"{path}: unknown keys {sorted(unknown)}")
    for key in _REQUIRED_KEYS:
        if key not in raw:
            raise MissingKey(f"{path}: missing required key {key!r}")

    base = path.parent

    def as_path(value: str) -> Path:
        p = Path(value)
        return p if p.is_absolute() else (base / p)

    def num(key: str, conv, default):
        if key not in raw:
            return default
        try:
            return conv(raw[key])
        except ValueError as exc:
            raise ParseError(f"{path}: bad value for {key}: {raw[key]!r}") from exc

    kwargs = {key: as_path(raw[key]) for key in _DIR_KEYS}
    config = PipelineConfig(
        **kwargs,
        catalog_store=as_path(raw["catalog_store"]),
        snapshot_quality=num("snapshot_quality", int, 85),
        snapshot_fraction=num("snapshot_fraction", float, 0.25),
        dzi_tile_size=num("dzi_tile_size", int, 254),
        dzi_overlap=num("dzi_overlap", int, 1),
        notify_mode=raw.get("notify_mode", "file"),
        notify_target=raw.get("notify_target", str(base / "failure-report.jsonl")),
    )
    if "snapshot_magnification" in raw and raw["snapshot_magnification"] != "auto":
        config.snapshot_magnification = num("snapshot_magnification", float, None)
    if "watermark_path" in raw:
        config.watermark_path = as_path(raw["watermark_path"])
    if config.notify_mode not in ("file", "smtp"):
        raise ParseError(f"{path}: notify_mode must be file or smtp")
    if config.notify_mode == "file" and not Path(config.notify_target).is_absolute():
        config.notify_target = str(base / config.notify_target)

    dirs = config.directories()
    if len({d.resolve() for d in dirs}) != len(dirs):
        raise ConfigError(f"{path}: pipeline directories must be distinct")
    return config


# ---------------------------------------------------------------------------
# job state


class JobState(Enum):
    NEW = "new"
    SNAPSHOT_DONE = "snapshot_done"
    LINKED = "linked"
    PUBLISHED = "published"
    FAILED = "failed"


@dataclass
class SlideJob:
    specimen_id: str
    input_path: Path
    state: JobState = JobState.NEW
    failure_stage: str | None = None
    failure_reason: str | None = None
    used_override: bool = False
    timestamps: dict[str, str] = field(default_factory=dict)

    def advance(self, state: JobState) -> None:
        self.state = state
        self.timestamps[state.value] = _utcnow()


@dataclass
class RunReport:
    jobs: list[SlideJob] = field(default_factory=list)
    notifications: list[dict] = field(default_factory=list)
    notification_failures: list[str] = field(default_factory=list)

    @property
    def published(self) -> int:
        return sum(1 for j in self.jobs if j.state is JobState.PUBLISHED)

    @property
    def failed(self) -> int:
        return sum(1 for j in self.jobs if j.state is JobState.FAILED)

    @property
    def counts(self) -> dict[str, int]:
        return {"published": self.published, "failed": self.failed}


def _utcnow() -> str:
    return datetime.now(timezone.utc).isoformat()


# ---------------------------------------------------------------------------
# failure notification


class FileNotifier:
    """Default notifier: one JSON object per line in a report file."""

    def __init__(self, target: str | Path):
        self.target = Path(target)

    def notify(self, entry: dict) -> None:
        self.target.parent.mkdir(parents=True, exist_ok=True)
        with open(self.target, "a", encoding="utf-8") as fh:
            fh.write(json.dumps(entry) + "\n")


class SmtpNotifier:
    """Optional mail notifier; target is "host:port:recipient"."""

    def __init__(self, target: str):
        host, _, rest = target.partition(":")
        port, _, recipient = rest.partition(":")
        if not host or not port or not recipient:
            raise ConfigError(
                f"smtp notify_target must be host:port:recipient, got {target!r}"
            )
        self.host = host
        self.port = int(port)
        self.recipient = recipient

    def notify(self, entry: dict) -> None:
        msg = EmailMessage()
        msg["Subject"] = (
            f"slide pipeline failure: {entry['specimen_id']} ({entry['stage']})"
        )
        msg["From"] = "slidepress@localhost"
        msg["To"] = self.recipient
        msg.set_content(json.dumps(entry, indent=2))
        with smtplib.SMTP(self.host, self.port, timeout=10) as smtp:
            smtp.send_message(msg)


def make_notifier(config: PipelineConfig):
    if config.notify_mode == "smtp":
        return SmtpNotifier(config.notify_target)
    return FileNotifier(config.notify_target)


def notify_failure(job: SlideJob, notifier, report: RunReport) -> None:
    """Record the failure; notifier problems are noted, never raised."""
    entry = {
        "specimen_id": job.specimen_id,
        "stage": job.failure_stage,
        "reason": job.failure_reason,
        "timestamp": _utcnow(),
    }
    report.notifications.append(entry)
    try:
        notifier.notify(entry)
    except Exception as exc:
        report.notification_failures.append(
            f"{job.specimen_id}: notifier failed: {exc}"
        )


# ---------------------------------------------------------------------------
# batch lock


class _BatchLock:
    def __init__(self, config: PipelineConfig):
        self.path = config.ndpi_new_dir.parent / "slidepress-pipeline.lock"

    def __enter__(self):
        try:
            self._create()
        except FileExistsError:
            if self._holder_alive():
                raise LockHeld(f"pipeline lock {self.path} is held") from None
            self.path.unlink(missing_ok=True)  # stale lock from a dead run
            try:
                self._create()
            except FileExistsError:
                raise LockHeld(f"pipeline lock {self.path} is held") from None
        return self

    def _create(self) -> None:
        fd = os.open(self.path, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
        with os.fdopen(fd, "w") as fh:
            fh.write(str(os.getpid()))

    def _holder_alive(self) -> bool:
        try:
            pid = int(self.path.read_text().strip())
            os.kill(pid, 0)
            return True
        except (OSError, ValueError):
            return False

    def __exit__(self, *exc):
        self.path.unlink(missing_ok=True)


# ---------------------------------------------------------------------------
# file movement


def _move_into(source: Path, dest_dir: Path) -> Path:
    """Atomic move, uniquifying the name rather than overwriting."""
    target = dest_dir / source.name
    counter = 1
    while target.exists():
        target = dest_dir / f"{source.stem}.{counter}{source.suffix}"
        counter += 1
    try:
        os.replace(source, target)
    except OSError as exc:
        raise IoError(f"cannot move {source} to {target}: {exc}") from exc
    return target


def _move_slide(slide_path: Path, dest_dir: Path) -> None:
    _move_into(slide_path, dest_dir)
    sidecar = meta_path_for(slide_path)
    if sidecar.is_file():
        _move_into(sidecar, dest_dir)


# ---------------------------------------------------------------------------
# batch


def run_batch(config: PipelineConfig) -> RunReport:
    """Process every slide in the inbox, then every staged JPEG."""
    for directory in config.directories():
        try:
            directory.mkdir(parents=True, exist_ok=True)
        except OSError as exc:
            raise ConfigError(f"cannot create {directory}: {exc}") from exc

    report = RunReport()
    notifier = make_notifier(config)
    with _BatchLock(config):
        try:
            catalog = Catalog(config.catalog_store)
        except SlidepressError as exc:
            raise ConfigError(str(exc)) from exc
        try:
            slides = sorted(
                p
                for p in config.ndpi_new_dir.iterdir()
                if p.is_file() and p.suffix.lower() in SLIDE_SUFFIXES
            )
            for slide_path in slides:
                _process_slide(slide_path, config, catalog, notifier, report)
            overrides = sorted(config.jpeg_processing_dir.glob("*.jpg"))
            for jpeg_path in overrides:
                _process_staged_jpeg(jpeg_path, config, catalog, notifier, report)
        finally:
            catalog.close()
    return report


def _fail(job, stage, exc, notifier, report) -> None:
    job.failure_stage = stage
    job.failure_reason = str(exc)
    job.advance(JobState.FAILED)
    notify_failure(job, notifier, report)


def _process_slide(slide_path, config, catalog, notifier, report) -> None:
    job = SlideJob(specimen_id=slide_path.stem, input_path=slide_path)
    report.jobs.append(job)

    staged = config.jpeg_processing_dir / f"{job.specimen_id}.jpg"
    try:
        src = open_slide(slide_path)
    except SlidepressError as exc:
        _fail(job, "open", exc, notifier, report)
        _move_slide(slide_path, config.ndpi_failed_dir)
        return

    try:
        if staged.exists():
            # a manual snapshot supersedes the automatic one
            job.used_override = True
        else:
            snap_config = SnapshotConfig(
                magnification=config.snapshot_magnification,
                jpeg_quality=config.snapshot_quality,
                watermark_path=config.watermark_path,
                fraction=config.snapshot_fraction,
            )
            with tempfile.TemporaryDirectory(
                dir=config.jpeg_processing_dir, prefix=".snap-"
            ) as tmp:
                result = create_snapshot(src, snap_config, tmp)
                os.replace(result.jpeg_path, staged)
        job.advance(JobState.SNAPSHOT_DONE)
    except (SlidepressError, OSError) as exc:
        _fail(job, "snapshot", exc, notifier, report)
        _move_slide(slide_path, config.ndpi_failed_dir)
        return
    finally:
        src.close()

    ok = _link_and_publish(job, staged, config, catalog, notifier, report)
    _move_slide(
        slide_path,
        config.ndpi_processed_dir if ok else config.ndpi_failed_dir,
    )


def _process_staged_jpeg(jpeg_path, config, catalog, notifier, report) -> None:
    job = SlideJob(specimen_id=jpeg_path.stem, input_path=jpeg_path)
    report.jobs.append(job)
    job.advance(JobState.SNAPSHOT_DONE)
    _link_and_publish(job, jpeg_path, config, catalog, notifier, report)


def _link_and_publish(job, jpeg_path, config, catalog, notifier, report) -> bool:
    """Publish one staged JPEG and link it; moves the JPEG to its
    terminal folder. Returns True on success."""
    specimen_id = job.specimen_id
    published: list[Path] = []
    try:
        if catalog.get(specimen_id) is None:
            raise SpecimenNotFound(
                f"no specimen {specimen_id!r} in catalog (filename mismatch?)"
            )
        job.advance(JobState.LINKED)
        snapshot_pub, dzi_pub = _publish_assets(jpeg_path, specimen_id, config, published)
        link_to_catalog(
            specimen_id,
            {"snapshot": str(snapshot_pub), "dzi": str(dzi_pub)},
            catalog,
        )
        job.advance(JobState.PUBLISHED)
        _move_into(jpeg_path, config.jpeg_processed_dir)
        return True
    except (SlidepressError, OSError) as exc:
        # roll back anything partially published for this specimen
        for path in published:
            if path.is_dir():
                shutil.rmtree(path, ignore_errors=True)
            else:
                path.unlink(missing_ok=True)
        stage = "link" if isinstance(exc, SpecimenNotFound) else "publish"
        _fail(job, stage, exc, notifier, report)
        _move_into(jpeg_path, config.jpeg_failed_dir)
        return False


def _publish_assets(
    jpeg_path: Path, specimen_id: str, config: PipelineConfig, published: list[Path]
) -> tuple[Path, Path]:
    """Build the pyramid in a temp dir and rename into the publish dir;
    readers never see a partial pyramid."""
    image = load_image(jpeg_path)
    final_files = config.publish_dir / f"{specimen_id}_files"
    final_dzi = config.publish_dir / f"{specimen_id}.dzi"
    final_snapshot = config.publish_dir / f"{specimen_id}.jpg"

    with tempfile.TemporaryDirectory(
        dir=config.publish_dir, prefix=f".pub-{specimen_id}-"
    ) as tmp:
        build_pyramid(
            image,
            tmp,
            specimen_id,
            tile_size=config.dzi_tile_size,
            overlap=config.dzi_overlap,
            format="jpg",
        )
        shutil.copy2(jpeg_path, Path(tmp) / f"{specimen_id}.jpg")
        # stale assets from an earlier publish of the same id
        if final_files.exists():
            shutil.rmtree(final_files)
        final_dzi.unlink(missing_ok=True)
        os.replace(Path(tmp) / f"{specimen_id}_files", final_files)
        published.append(final_files)
        os.replace(Path(tmp) / f"{specimen_id}.jpg", final_snapshot)
        published.append(final_snapshot)
        # descriptor last: its appearance means the pyramid is complete
        os.replace(Path(tmp) / f"{specimen_id}.dzi", final_dzi)
        published.append(final_dzi)
    return final_snapshot, final_dzi


# ---------------------------------------------------------------------------
# requeue


def requeue_corrected(
    old_path: str | Path, corrected_name: str, config: PipelineConfig
) -> Path:
    """Rename a failed JPEG to its corrected specimen id and stage it
    for the next run."""
    old = Path(old_path)
    if not old.is_file():
        raise MissingFile(str(old))
    name = corrected_name[:-4] if corrected_name.endswith(".jpg") else corrected_name
    if not name or "/" in name or "\\" in name:
        raise ValueError(f"bad corrected name {corrected_name!r}")
    target = config.jpeg_processing_dir / f"{name}.jpg"
    if target.exists():
        raise NameCollision(f"{target} already staged")
    try:
        config.jpeg_processing_dir.mkdir(parents=True, exist_ok=True)
        os.replace(old, target)
    except OSError as exc:
        raise IoError(f"cannot requeue {old} as {target}: {exc}") from exc
    return target


def watch(config: PipelineConfig, interval: float, iterations: int | None = None):
    """Poll-and-run convenience loop around run_batch."""
    done = 0
    while iterations is None or done < iterations:
        yield run_batch(config)
        done += 1
        if iterations is None or done < iterations:
            time.sleep(interval)
