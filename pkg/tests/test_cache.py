import json

import pytest

from orthounity import cache
from orthounity.ball import ball_coefficients
from orthounity.cache import CacheError, cache_load, cache_store
from orthounity.exact import exact_coefficients


def test_exact_round_trip(tmp_path):
    table = exact_coefficients(100)
    path = cache_store(tmp_path / "e.csv", table)
    back = cache_load(path)
    assert back == table
    assert back.coeffs[100] == table.coeffs[100]


def test_ball_round_trip_is_bit_exact(tmp_path):
    table = ball_coefficients(400)
    back = cache_load(cache_store(tmp_path / "b.csv", table))
    assert back.precision_bits == table.precision_bits
    for a, b in zip(back.coeffs, table.coeffs):
        assert a.midpoint == b.midpoint and a.radius == b.radius
    assert back == table


def test_header_fields(tmp_path):
    path = cache_store(tmp_path / "b.csv", ball_coefficients(10))
    header = json.loads(path.read_text().splitlines()[0])
    assert header["engine"] == "ball" and header["n_max"] == 10 and header["precision_bits"] == 128
    assert header["format_version"] == cache.FORMAT_VERSION and len(header["sha256"]) == 64


def test_truncated_file_fails_checksum(tmp_path):
    path = cache_store(tmp_path / "e.csv", exact_coefficients(50))
    text = path.read_text()
    path.write_text(text[: len(text) - 40])
    with pytest.raises(CacheError, match="checksum"):
        cache_load(path)


def test_edited_value_fails_checksum(tmp_path):
    path = cache_store(tmp_path / "e.csv", exact_coefficients(5))
    path.write_text(path.read_text().replace("5,24", "5,23"))
    with pytest.raises(CacheError):
        cache_load(path)


def test_version_mismatch(tmp_path):
    path = cache_store(tmp_path / "e.csv", exact_coefficients(5))
    lines = path.read_text().split("\n", 1)
    header = json.loads(lines[0])
    header["format_version"] = 99
    path.write_text(json.dumps(header) + "\n" + lines[1])
    with pytest.raises(CacheError, match="version"):
        cache_load(path)


@pytest.mark.parametrize("content", ["", "garbage\n", '{"magic": "other"}\n'])
def test_not_a_cache(tmp_path, content):
    path = tmp_path / "x.csv"
    path.write_text(content)
    with pytest.raises(CacheError):
        cache_load(path)


def test_missing_file(tmp_path):
    with pytest.raises(CacheError):
        cache_load(tmp_path / "absent.csv")


def test_ball_never_masquerades_as_exact(tmp_path):
    path = cache_store(tmp_path / "b.csv", ball_coefficients(10))
    with pytest.raises(CacheError):
        cache_load(path, expect_engine="exact")
    # exact may serve a ball request; the caller promotes it
    exact_path = cache_store(tmp_path / "e.csv", exact_coefficients(10))
    assert cache_load(exact_path, expect_engine="ball").engine == "exact"


def test_cache_dir_env(monkeypatch, tmp_path):
    monkeypatch.setenv(cache.CACHE_DIR_ENV, str(tmp_path))
    assert cache.default_cache_dir() == tmp_path
