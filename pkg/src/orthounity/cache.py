"""On-disk coefficient cache.

Layout: one JSON header line, then the engine's own CSV.  The header records
engine, n_max, precision, format version and the sha256 of the CSV payload,
so a truncated or edited file is rejected rather than silently reused.
"""

from __future__ import annotations

import hashlib
import io
import json
import os
from pathlib import Path

from . import ball, exact
from .ball import BallCoefficientTable
from .exact import ExactCoefficientTable

FORMAT_VERSION = 1
MAGIC = "orthounity-cache"
CACHE_DIR_ENV = "ORTHOUNITY_CACHE_DIR"


class CacheError(ValueError):
    """Unreadable, corrupt or incompatible cache file."""


def default_cache_dir() -> Path:
    env = os.environ.get(CACHE_DIR_ENV)
    return Path(env) if env else Path.home() / ".cache" / "orthounity"


def cache_filename(engine: str, n_max: int, precision_bits: int | None = None) -> str:
    if engine == "exact":
        return f"exact-{n_max}.csv"
    return f"ball-{n_max}-p{precision_bits}.csv"


def _payload(table) -> str:
    buf = io.StringIO()
    if isinstance(table, BallCoefficientTable):
        ball.write_csv(table, buf)
    else:
        exact.write_csv(table, buf)
    return buf.getvalue()


def dumps(table: ExactCoefficientTable | BallCoefficientTable) -> str:
    payload = _payload(table)
    header = {
        "magic": MAGIC,
        "format_version": FORMAT_VERSION,
        "engine": table.engine,
        "n_max": table.n_max,
        "precision_bits": getattr(table, "precision_bits", None),
        "sha256": hashlib.sha256(payload.encode()).hexdigest(),
    }
    return json.dumps(header, sort_keys=True) + "\n" + payload


def loads(text: str, expect_engine: str | None = None) -> ExactCoefficientTable | BallCoefficientTable:
    first, sep, payload = text.partition("\n")
    if not sep:
        raise CacheError("missing cache header")
    try:
        header = json.loads(first)
    except json.JSONDecodeError as exc:
        raise CacheError(f"malformed cache header: {exc}") from None
    if not isinstance(header, dict) or header.get("magic") != MAGIC:
        raise CacheError("not an orthounity cache file")
    if header.get("format_version") != FORMAT_VERSION:
        raise CacheError(f"unsupported cache format version {header.get('format_version')!r}")
    if hashlib.sha256(payload.encode()).hexdigest() != header.get("sha256"):
        raise CacheError("checksum mismatch (truncated or modified cache)")
    engine = header.get("engine")
    if expect_engine is not None and engine != expect_engine and not (
        expect_engine == "ball" and engine == "exact"
    ):
        raise CacheError(f"cache holds a {engine} table, {expect_engine} required")
    try:
        if engine == "exact":
            table = exact.read_csv(io.StringIO(payload))
        elif engine == "ball":
            table = ball.read_csv(io.StringIO(payload))
        else:
            raise CacheError(f"unknown engine {engine!r}")
    except (ValueError, TypeError) as exc:
        if isinstance(exc, CacheError):
            raise
        raise CacheError(f"bad cache payload: {exc}") from None
    if table.n_max != header.get("n_max"):
        raise CacheError("row count disagrees with header")
    if engine == "ball" and table.precision_bits != header.get("precision_bits"):
        raise CacheError("precision disagrees with header")
    return table


def cache_store(path: str | os.PathLike, table: ExactCoefficientTable | BallCoefficientTable) -> Path:
    """Write atomically (temp file + rename)."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(dumps(table), encoding="utf-8")
    os.replace(tmp, path)
    return path


def cache_load(
    path: str | os.PathLike, expect_engine: str | None = None
) -> ExactCoefficientTable | BallCoefficientTable:
    """Load and validate a cache file.

    A ball cache is never returned when ``expect_engine="exact"``; an exact
    cache is accepted for ``"ball"`` (the caller promotes it).
    """
    try:
        text = Path(path).read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as exc:
        raise CacheError(f"cannot read cache {path}: {exc}") from None
    return loads(text, expect_engine)
