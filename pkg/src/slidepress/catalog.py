"""Embedded specimen catalog: a single-file sqlite store.

Stands in for the institutional cancer database the published images
link back to. Specimens are keyed by the slide identifier (the scan's
filename stem); the ``matched`` flag records that a published image has
been linked. Biomarkers are stored as normalized marker/status rows so
they are searchable rather than free text.
"""

from __future__ import annotations

import csv
import sqlite3
import threading
from dataclasses import dataclass, field
from pathlib import Path

from .errors import CatalogUnavailable, SpecimenNotFound, StoreError

MAX_PAGE_SIZE = 500

_SCHEMA = """
CREATE TABLE IF NOT EXISTS specimens (
    specimen_id   TEXT PRIMARY KEY,
    cancer_type   TEXT NOT NULL DEFAULT '',
    stain         TEXT NOT NULL DEFAULT '',
    matched       INTEGER NOT NULL DEFAULT 0,
    snapshot_path TEXT,
    dzi_path      TEXT,
    notes         TEXT NOT NULL DEFAULT ''
);
CREATE TABLE IF NOT EXISTS biomarkers (
    specimen_id TEXT NOT NULL REFERENCES specimens(specimen_id) ON DELETE CASCADE,
    marker      TEXT NOT NULL,
    status      TEXT NOT NULL,
    PRIMARY KEY (specimen_id, marker)
);
"""


@dataclass
class SpecimenRecord:
    specimen_id: str
    cancer_type: str = ""
    stain: str = ""
    biomarkers: dict[str, str] = field(default_factory=dict)
    matched: bool = False
    snapshot_path: str | None = None
    dzi_path: str | None = None
    notes: str = ""

    def validate(self) -> None:
        if not self.specimen_id:
            raise ValueError("specimen_id must be non-empty")
        if self.matched and not self.dzi_path:
            raise ValueError("matched specimens need a dzi_path")


@dataclass
class SearchQuery:
    cancer_type: str | None = None
    biomarkers: dict[str, str] = field(default_factory=dict)
    stain: str | None = None
    matched_only: bool = False
    offset: int = 0
    limit: int = 50


@dataclass
class SearchPage:
    items: list[SpecimenRecord]
    total: int
    offset: int
    limit: int


def parse_biomarkers(text: str) -> dict[str, str]:
    """Parse "ER=positive;PR=negative" into marker/status pairs."""
    result: dict[str, str] = {}
    for part in text.split(";"):
        part = part.strip()
        if not part:
            continue
        marker, sep, status = part.partition("=")
        if not sep or not marker.strip():
            raise ValueError(f"bad biomarker constraint {part!r}")
        result[marker.strip()] = status.strip()
    return result


class Catalog:
    """Thread-safe handle on the store; writes are serialized."""

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self._lock = threading.Lock()
        try:
            self._conn = sqlite3.connect(self.path, check_same_thread=False)
            self._conn.executescript(_SCHEMA)
            self._conn.commit()
        except sqlite3.Error as exc:
            raise CatalogUnavailable(f"cannot open store {self.path}: {exc}") from exc

    def close(self) -> None:
        self._conn.close()

    def __enter__(self) -> "Catalog":
        return self

    def __exit__(self, *exc) -> None:
        self.close()

    # -- writes --

    def upsert(self, record: SpecimenRecord) -> None:
        record.validate()
        with self._lock:
            try:
                self._conn.execute(
                    "INSERT OR REPLACE INTO specimens "
                    "(specimen_id, cancer_type, stain, matched, snapshot_path,"
                    " dzi_path, notes) VALUES (?, ?, ?, ?, ?, ?, ?)",
                    (
                        record.specimen_id,
                        record.cancer_type,
                        record.stain,
                        int(record.matched),
                        record.snapshot_path,
                        record.dzi_path,
                        record.notes,
                    ),
                )
                self._conn.execute(
                    "DELETE FROM biomarkers WHERE specimen_id = ?",
                    (record.specimen_id,),
                )
                self._conn.executemany(
                    "INSERT INTO biomarkers (specimen_id, marker, status)"
                    " VALUES (?, ?, ?)",
                    [
                        (record.specimen_id, m, s)
                        for m, s in record.biomarkers.items()
                    ],
                )
                self._conn.commit()
            except sqlite3.Error as exc:
                raise StoreError(str(exc)) from exc

    def link_assets(
        self, specimen_id: str, snapshot_path: str | None, dzi_path: str
    ) -> None:
        """Mark a specimen as matched and record its published assets.
        Idempotent; unknown ids raise SpecimenNotFound."""
        with self._lock:
            try:
                cur = self._conn.execute(
                    "UPDATE specimens SET matched = 1, snapshot_path = ?,"
                    " dzi_path = ? WHERE specimen_id = ?",
                    (snapshot_path, dzi_path, specimen_id),
                )
                self._conn.commit()
            except sqlite3.Error as exc:
                raise StoreError(str(exc)) from exc
        if cur.rowcount == 0:
            raise SpecimenNotFound(specimen_id)

    def unlink_assets(self, specimen_id: str) -> None:
        with self._lock:
            try:
                self._conn.execute(
                    "UPDATE specimens SET matched = 0, snapshot_path = NULL,"
                    " dzi_path = NULL WHERE specimen_id = ?",
                    (specimen_id,),
                )
                self._conn.commit()
            except sqlite3.Error as exc:
                raise StoreError(str(exc)) from exc

    # -- reads --

    def get(self, specimen_id: str) -> SpecimenRecord | None:
        with self._lock:
            try:
                row = self._conn.execute(
                    "SELECT specimen_id, cancer_type, stain, matched,"
                    " snapshot_path, dzi_path, notes FROM specimens"
                    " WHERE specimen_id = ?",
                    (specimen_id,),
                ).fetchone()
                if row is None:
                    return None
                markers = dict(
                    self._conn.execute(
                        "SELECT marker, status FROM biomarkers"
                        " WHERE specimen_id = ?",
                        (specimen_id,),
                    ).fetchall()
                )
            except sqlite3.Error as exc:
                raise StoreError(str(exc)) from exc
        return self._row_to_record(row, markers)

    def search(self, query: SearchQuery) -> SearchPage:
        """Specimens matching all supplied constraints, ordered by id."""
        clauses = []
        params: list = []
        if query.cancer_type is not None:
            clauses.append("cancer_type = ?")
            params.append(query.cancer_type)
        if query.stain is not None:
            clauses.append("stain = ?")
            params.append(query.stain)
        if query.matched_only:
            clauses.append("matched = 1")
        for marker, status in query.biomarkers.items():
            clauses.append(
                "EXISTS (SELECT 1 FROM biomarkers b WHERE"
                " b.specimen_id = specimens.specimen_id"
                " AND b.marker = ? AND b.status = ?)"
            )
            params.extend([marker, status])
        where = f" WHERE {' AND '.join(clauses)}" if clauses else ""
        offset = max(0, query.offset)
        limit = min(max(1, query.limit), MAX_PAGE_SIZE)
        with self._lock:
            try:
                (total,) = self._conn.execute(
                    f"SELECT COUNT(*) FROM specimens{where}", params
                ).fetchone()
                rows = self._conn.execute(
                    "SELECT specimen_id, cancer_type, stain, matched,"
                    f" snapshot_path, dzi_path, notes FROM specimens{where}"
                    " ORDER BY specimen_id LIMIT ? OFFSET ?",
                    params + [limit, offset],
                ).fetchall()
                markers_by_id: dict[str, dict[str, str]] = {}
                for sid, marker, status in self._conn.execute(
                    "SELECT specimen_id, marker, status FROM biomarkers"
                ).fetchall():
                    markers_by_id.setdefault(sid, {})[marker] = status
            except sqlite3.Error as exc:
                raise StoreError(str(exc)) from exc
        items = [
            self._row_to_record(row, markers_by_id.get(row[0], {})) for row in rows
        ]
        return SearchPage(items=items, total=total, offset=offset, limit=limit)

    def count(self) -> int:
        with self._lock:
            (n,) = self._conn.execute("SELECT COUNT(*) FROM specimens").fetchone()
        return n

    @staticmethod
    def _row_to_record(row, markers: dict[str, str]) -> SpecimenRecord:
        return SpecimenRecord(
            specimen_id=row[0],
            cancer_type=row[1],
            stain=row[2],
            matched=bool(row[3]),
            snapshot_path=row[4],
            dzi_path=row[5],
            notes=row[6],
            biomarkers=markers,
        )


def link_to_catalog(
    specimen_id: str, asset_paths: dict[str, str], catalog: Catalog
) -> None:
    """Record published asset paths on the specimen and set matched."""
    catalog.link_assets(
        specimen_id, asset_paths.get("snapshot"), asset_paths["dzi"]
    )


CSV_COLUMNS = ("specimen_id", "cancer_type", "stain", "biomarkers", "notes")


def import_csv(catalog: Catalog, path: str | Path) -> int:
    """Load specimens from CSV (biomarkers semicolon-separated)."""
    count = 0
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        missing = set(CSV_COLUMNS) - set(reader.fieldnames or ())
        if missing:
            raise ValueError(f"{path}: missing CSV columns {sorted(missing)}")
        for row in reader:
            catalog.upsert(
                SpecimenRecord(
                    specimen_id=row["specimen_id"].strip(),
                    cancer_type=row["cancer_type"].strip(),
                    stain=row["stain"].strip(),
                    biomarkers=parse_biomarkers(row["biomarkers"]),
                    notes=row["notes"].strip(),
                )
            )
            count += 1
    return count
