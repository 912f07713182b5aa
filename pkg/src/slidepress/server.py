"""HTTP front end: specimen search API plus published-image delivery.

Descriptor and tile routes stream the exact bytes the publisher wrote;
nothing is re-encoded at request time. Tile requests outside the
pyramid plan 404 even if a stray file exists, and all static responses
carry a content-hash ETag so conditional requests are cheap.
"""

from __future__ import annotations

import hashlib
import re
import threading
from pathlib import Path

from fastapi import FastAPI, Request, Response
from fastapi.exceptions import RequestValidationError
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import HTMLResponse, JSONResponse

from .catalog import (
    Catalog,
    SearchPage,
    SearchQuery,
    SpecimenRecord,
    parse_biomarkers,
)
from .deepzoom import parse_descriptor
from .errors import CatalogUnavailable, NotAPyramid, SlidepressError, StoreError

_SAFE_ID = re.compile(r"^[A-Za-z0-9][A-Za-z0-9._-]*$")

_MEDIA_TYPES = {
    ".dzi": "application/xml",
    ".jpg": "image/jpeg",
    ".png": "image/png",
}


def _record_to_json(record: SpecimenRecord) -> dict:
    data = {
        "specimen_id": record.specimen_id,
        "cancer_type": record.cancer_type,
        "stain": record.stain,
        "biomarkers": record.biomarkers,
        "matched": record.matched,
        "snapshot_path": record.snapshot_path,
        "dzi_path": record.dzi_path,
        "notes": record.notes,
    }
    if record.matched:
        data["dzi_url"] = f"/images/{record.specimen_id}.dzi"
        data["snapshot_url"] = f"/snapshots/{record.specimen_id}.jpg"
    return data


def _page_to_json(page: SearchPage) -> dict:
    return {
        "total": page.total,
        "offset": page.offset,
        "limit": page.limit,
        "items": [_record_to_json(r) for r in page.items],
    }


def _error(status: int, error: str, detail: str) -> JSONResponse:
    return JSONResponse(
        status_code=status, content={"error": error, "detail": detail}
    )


class _LazyCatalog:
    """Opens the store on first use; failures surface as 503."""

    def __init__(self, path: Path):
        self._path = path
        self._catalog: Catalog | None = None
        self._lock = threading.Lock()

    def get(self) -> Catalog:
        with self._lock:
            if self._catalog is None:
                self._catalog = Catalog(self._path)
            return self._catalog

    def close(self) -> None:
        with self._lock:
            if self._catalog is not None:
                self._catalog.close()
                self._catalog = None


def create_app(
    publish_dir: str | Path,
    store_path: str | Path,
    cors_origins: tuple[str, ...] = ("*",),
    frontend_dist: str | Path | None = None,
) -> FastAPI:
    publish_dir = Path(publish_dir)
    store = _LazyCatalog(Path(store_path))

    app = FastAPI(title="slidepress catalog", docs_url=None, redoc_url=None)
    app.state.catalog = store
    app.add_middleware(
        CORSMiddleware,
        allow_origins=list(cors_origins),
        allow_methods=["GET", "POST"],
        allow_headers=["*"],
    )

    @app.exception_handler(RequestValidationError)
    async def _validation_handler(request: Request, exc: RequestValidationError):
        return _error(400, "malformed query", str(exc))

    @app.exception_handler(SlidepressError)
    async def _domain_handler(request: Request, exc: SlidepressError):
        if isinstance(exc, (CatalogUnavailable, StoreError)):
            return _error(503, "store unavailable", str(exc))
        return _error(400, type(exc).__name__, str(exc))

    def _serve_file(path: Path, request: Request) -> Response:
        if not path.is_file():
            return _error(404, "not found", str(path.name))
        data = path.read_bytes()
        etag = f'"{hashlib.sha256(data).hexdigest()}"'
        if request.headers.get("if-none-match") == etag:
            return Response(status_code=304, headers={"ETag": etag})
        return Response(
            content=data,
            media_type=_MEDIA_TYPES.get(path.suffix, "application/octet-stream"),
            headers={"ETag": etag},
        )

    # -- specimen API --

    @app.get("/api/specimens")
    def search_specimens(request: Request):
        params = request.query_params
        try:
            query = SearchQuery(
                cancer_type=params.get("cancer_type"),
                stain=params.get("stain"),
                matched_only=params.get("matched_only", "false").lower()
                in ("1", "true", "yes"),
                offset=int(params.get("offset", 0)),
                limit=int(params.get("limit", 50)),
                biomarkers={
                    k: v
                    for item in params.getlist("biomarker")
                    for k, v in parse_biomarkers(item).items()
                },
            )
        except ValueError as exc:
            return _error(400, "malformed query", str(exc))
        if query.limit > 500 or query.limit < 1 or query.offset < 0:
            return _error(400, "malformed query", "offset/limit out of range")
        return _page_to_json(store.get().search(query))

    @app.get("/api/specimens/{specimen_id}")
    def get_specimen(specimen_id: str):
        record = store.get().get(specimen_id)
        if record is None:
            return _error(404, "not found", specimen_id)
        return _record_to_json(record)

    @app.post("/api/specimens")
    def upsert_specimen(payload: dict):
        try:
            record = SpecimenRecord(
                specimen_id=str(payload.get("specimen_id", "")),
                cancer_type=str(payload.get("cancer_type", "")),
                stain=str(payload.get("stain", "")),
                biomarkers=dict(payload.get("biomarkers", {})),
                notes=str(payload.get("notes", "")),
            )
            record.validate()
        except (TypeError, ValueError) as exc:
            return _error(400, "invalid specimen", str(exc))
        store.get().upsert(record)
        return _record_to_json(store.get().get(record.specimen_id))

    # -- published images --

    @app.get("/images/{filename}")
    def get_descriptor(filename: str, request: Request):
        if not filename.endswith(".dzi") or not _SAFE_ID.match(filename[:-4]):
            return _error(404, "not found", filename)
        return _serve_file(publish_dir / filename, request)

    @app.get("/images/{dirname}/{level}/{tilename}")
    def get_tile(dirname: str, level: str, tilename: str, request: Request):
        if not dirname.endswith("_files"):
            return _error(404, "not found", dirname)
        specimen_id = dirname[: -len("_files")]
        if not _SAFE_ID.match(specimen_id):
            return _error(404, "not found", dirname)
        descriptor = publish_dir / f"{specimen_id}.dzi"
        if not descriptor.is_file():
            return _error(404, "not found", f"{specimen_id}.dzi")
        try:
            pyramid = parse_descriptor(descriptor.read_text(encoding="utf-8"))
        except NotAPyramid as exc:
            return _error(503, "bad descriptor", str(exc))
        tile_match = re.fullmatch(r"(\d+)_(\d+)\.([a-z]+)", tilename)
        if tile_match is None or not level.isdigit():
            return _error(404, "not found", tilename)
        lvl, col, row = int(level), int(tile_match[1]), int(tile_match[2])
        if tile_match[3] != pyramid.format or lvl > pyramid.max_level:
            return _error(404, "not found", tilename)
        cols, rows = pyramid.level_tiles(lvl)
        if col >= cols or row >= rows:
            return _error(404, "outside pyramid plan", f"{lvl}/{col}_{row}")
        return _serve_file(publish_dir / dirname / level / tilename, request)

    @app.get("/snapshots/{filename}")
    def get_snapshot(filename: str, request: Request):
        if not filename.endswith(".jpg") or not _SAFE_ID.match(filename[:-4]):
            return _error(404, "not found", filename)
        return _serve_file(publish_dir / filename, request)

    # -- optional viewer hosting --

    if frontend_dist is not None:
        frontend_dist = Path(frontend_dist)

        @app.get("/static/{filename}")
        def get_static(filename: str, request: Request):
            if not _SAFE_ID.match(filename):
                return _error(404, "not found", filename)
            target = frontend_dist / filename
            if not target.is_file():
                return _error(404, "not found", filename)
            data = target.read_bytes()
            media = "text/javascript" if filename.endswith(".js") else "text/plain"
            return Response(content=data, media_type=media)

        @app.get("/view/{specimen_id}")
        def view_specimen(specimen_id: str):
            if not _SAFE_ID.match(specimen_id):
                return _error(404, "not found", specimen_id)
            return HTMLResponse(_viewer_page(specimen_id))

        @app.get("/")
        def index():
            return HTMLResponse(_search_page())

    return app


def _viewer_page(specimen_id: str) -> str:
    return f"""<!doctype html>
<html>
<head><meta charset="utf-8"><title>{specimen_id}</title>
<style>html,body{{margin:0;height:100%;background:#111}}</style></head>
<body>
<canvas id="viewer" style="width:100%;height:100%"></canvas>
<script type="module">
import {{ mountViewer }} from "/static/viewer.js";
mountViewer(document.getElementById("viewer"), "/images/{specimen_id}.dzi");
</script>
</body>
</html>"""


def _search_page() -> str:
    return """<!doctype html>
<html>
<head><meta charset="utf-8"><title>specimen search</title></head>
<body>
<div id="app"></div>
<script type="module">
import { mountSearch } from "/static/search.js";
mountSearch(document.getElementById("app"));
</script>
</body>
</html>"""


def serve(
    publish_dir: str | Path,
    store_path: str | Path,
    host: str = "127.0.0.1",
    port: int = 8077,
    frontend_dist: str | Path | None = None,
) -> None:  # pragma: no cover - exercised manually via the CLI
    import uvicorn

    app = create_app(publish_dir, store_path, frontend_dist=frontend_dist)
    uvicorn.run(app, host=host, port=port, log_level="warning")
