"""Shared parser for key=value properties files (# comments allowed)."""

from __future__ import annotations

from pathlib import Path

from .errors import MissingFile, ParseError


def parse_properties(path: str | Path) -> dict[str, str]:
    path = Path(path)
    if not path.is_file():
        raise MissingFile(str(path))
    result: dict[str, str] = {}
    for lineno, line in enumerate(
        path.read_text(encoding="utf-8").splitlines(), start=1
    ):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        key, sep, value = stripped.partition("=")
        key = key.strip()
        if not sep or not key:
            raise ParseError(f"{path}: line {lineno}: expected key=value")
        if key in result:
            raise ParseError(f"{path}: line {lineno}: duplicate key {key!r}")
        result[key] = value.strip()
    return result
