"""slidepress command line: inspect, split, dzi, pipeline, serve, specimen."""

from __future__ import annotations

import sys
from pathlib import Path

import click

from . import deepzoom, pipeline, splitter
from .catalog import Catalog, import_csv
from .errors import SlidepressError
from .jpegcodec import load_image
from .slide import Region, open_slide


@click.group()
def main():
    """Toolkit for tiling, snapshotting and publishing large slides."""


def _die(exc: Exception) -> None:
    raise click.ClickException(f"{type(exc).__name__}: {exc}")


@main.command()
@click.argument("slide", type=click.Path(path_type=Path))
def inspect(slide: Path):
    """Print slide dimensions, levels and magnification as key=value."""
    try:
        with open_slide(slide) as src:
            click.echo(f"path={src.path}")
            click.echo(f"base_width={src.base_width}")
            click.echo(f"base_height={src.base_height}")
            click.echo(f"objective_power={src.objective_power}")
            if src.mpp_x is not None:
                click.echo(f"mpp_x={src.mpp_x}")
            if src.mpp_y is not None:
                click.echo(f"mpp_y={src.mpp_y}")
            click.echo(f"levels={len(src.levels)}")
            for lv in src.levels:
                click.echo(
                    f"level{lv.index}={lv.width}x{lv.height} "
                    f"tile={lv.tile_width}x{lv.tile_height} "
                    f"downsample={lv.downsample:g}"
                )
            for warning in src.warnings:
                click.echo(f"warning={warning}")
    except SlidepressError as exc:
        _die(exc)


@main.command()
@click.option(
    "--config",
    "config_path",
    type=click.Path(path_type=Path),
    default=None,
    help="NDPIsplitter.properties-style settings file.",
)
@click.argument("slides", nargs=-1, required=True, type=click.Path(path_type=Path))
def split(config_path: Path | None, slides: tuple[Path, ...]):
    """Split slides into tiles, filtering empty ones per the config."""
    try:
        settings = (
            splitter.load_split_settings(config_path)
            if config_path
            else splitter.SplitSettings()
        )
        for slide_path in slides:
            with open_slide(slide_path) as src:
                request = splitter.SplitRequest(
                    source=src,
                    output_dir=settings.output_dir,
                    tile_width=settings.tile_width,
                    tile_height=settings.tile_height,
                    magnification=settings.magnification,
                    policy=settings.policy,
                )
                records = splitter.split_slide(request)
            kept = sum(1 for r in records if r.verdict is splitter.Verdict.KEPT)
            click.echo(
                f"{slide_path.name}: {len(records)} tiles, "
                f"{kept} kept, {len(records) - kept} empty"
            )
    except SlidepressError as exc:
        _die(exc)


@main.command()
@click.argument("input_path", type=click.Path(path_type=Path))
@click.option("--out", "out_dir", required=True, type=click.Path(path_type=Path))
@click.option("--tile-size", default=deepzoom.DEFAULT_TILE_SIZE, show_default=True)
@click.option("--overlap", default=deepzoom.DEFAULT_OVERLAP, show_default=True)
@click.option(
    "--format",
    "tile_format",
    type=click.Choice(["jpg", "png"]),
    default="jpg",
    show_default=True,
)
@click.option("--quality", default=deepzoom.DEFAULT_JPEG_QUALITY, show_default=True)
def dzi(input_path: Path, out_dir: Path, tile_size: int, overlap: int,
        tile_format: str, quality: int):
    """Build a Deep Zoom pyramid from an image or slide."""
    try:
        if input_path.suffix.lower() in pipeline.SLIDE_SUFFIXES:
            with open_slide(input_path) as src:
                image = src.read_region(
                    Region(0, 0, src.base_width, src.base_height,
                           src.objective_power)
                )
        else:
            image = load_image(input_path)
        out_dir.mkdir(parents=True, exist_ok=True)
        pyramid = deepzoom.build_pyramid(
            image,
            out_dir,
            input_path.stem,
            tile_size=tile_size,
            overlap=overlap,
            format=tile_format,
            jpeg_quality=quality,
        )
        click.echo(
            f"{input_path.stem}.dzi: {pyramid.image_width}x{pyramid.image_height}, "
            f"levels 0..{pyramid.max_level}"
        )
    except SlidepressError as exc:
        _die(exc)


@main.group(name="pipeline")
def pipeline_group():
    """Batch processing of inbox folders."""


@pipeline_group.command(name="run")
@click.option("--config", "config_path", required=True, type=click.Path(path_type=Path))
@click.option("--watch", "watch_mode", is_flag=True, help="Poll and re-run.")
@click.option("--interval", default=60.0, show_default=True, help="Watch poll seconds.")
def pipeline_run(config_path: Path, watch_mode: bool, interval: float):
    """Process new slides and staged JPEGs once (or repeatedly)."""
    try:
        config = pipeline.load_config(config_path)
        runs = pipeline.watch(config, interval) if watch_mode else iter(
            [pipeline.run_batch(config)]
        )
        for report in runs:
            click.echo(
                f"published={report.published} failed={report.failed} "
                f"jobs={len(report.jobs)}"
            )
            for line in report.notification_failures:
                click.echo(f"notification-failure: {line}", err=True)
            if not watch_mode:
                break
    except KeyboardInterrupt:  # pragma: no cover
        pass
    except SlidepressError as exc:
        _die(exc)


@pipeline_group.command(name="requeue")
@click.argument("old", type=click.Path(path_type=Path))
@click.argument("new_id")
@click.option("--config", "config_path", required=True, type=click.Path(path_type=Path))
def pipeline_requeue(old: Path, new_id: str, config_path: Path):
    """Rename a failed JPEG and stage it for the next run."""
    try:
        config = pipeline.load_config(config_path)
        target = pipeline.requeue_corrected(old, new_id, config)
        click.echo(f"staged {target}")
    except SlidepressError as exc:
        _die(exc)


@main.command()
@click.option("--publish-dir", required=True, type=click.Path(path_type=Path))
@click.option("--store", "store_path", required=True, type=click.Path(path_type=Path))
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8077, show_default=True)
@click.option("--frontend-dist", type=click.Path(path_type=Path), default=None)
def serve(publish_dir: Path, store_path: Path, host: str, port: int,
          frontend_dist: Path | None):  # pragma: no cover - blocking server
    """Serve the specimen API and published pyramids over HTTP."""
    from .server import serve as run_server

    run_server(publish_dir, store_path, host=host, port=port,
               frontend_dist=frontend_dist)


@main.group()
def specimen():
    """Catalog maintenance."""


@specimen.command(name="import")
@click.argument("csv_path", type=click.Path(path_type=Path))
@click.option("--store", "store_path", required=True, type=click.Path(path_type=Path))
def specimen_import(csv_path: Path, store_path: Path):
    """Load specimen rows from CSV into the catalog store."""
    try:
        with Catalog(store_path) as catalog:
            count = import_csv(catalog, csv_path)
        click.echo(f"imported {count} specimens into {store_path}")
    except (SlidepressError, ValueError) as exc:
        _die(exc)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
