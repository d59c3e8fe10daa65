"""JSON documents, newline-delimited record streams and content hashing.

All configs and reports are JSON key-value trees. Non-finite floats are stored
as the strings ``"inf"``, ``"-inf"`` and ``"nan"`` so files stay strict JSON.
"""
from __future__ import annotations

import hashlib
import json
import math
import os
import tempfile
from pathlib import Path
from typing import Any, Iterable, Iterator

HASH_ALGORITHM = "sha256"

_NONFINITE = {"inf": math.inf, "-inf": -math.inf, "nan": math.nan}


def encode_float(x: float) -> float | str:
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return x


def decode_float(x: Any) -> float:
    if isinstance(x, str):
        try:
            return _NONFINITE[x]
        except KeyError:
            raise ValueError(f"not a number: {x!r}") from None
    return float(x)


def canonical_dumps(doc: Any) -> str:
    """Sorted keys, no whitespace, shortest round-trip float repr."""
    return json.dumps(doc, sort_keys=True, separators=(",", ":"),
                      ensure_ascii=False, allow_nan=False)


def content_hash(doc: Any) -> str:
    return hashlib.new(HASH_ALGORITHM, canonical_dumps(doc).encode("utf-8")).hexdigest()


def file_hash(path: str | os.PathLike) -> str:
    return hashlib.new(HASH_ALGORITHM, Path(path).read_bytes()).hexdigest()


def _atomic_write_text(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_json(path: str | os.PathLike, doc: Any) -> None:
    _atomic_write_text(Path(path), json.dumps(doc, indent=2, sort_keys=True,
                                              allow_nan=False) + "\n")


def read_json(path: str | os.PathLike) -> Any:
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def write_jsonl(path: str | os.PathLike, docs: Iterable[Any]) -> int:
    lines = [json.dumps(d, sort_keys=True, allow_nan=False) for d in docs]
    _atomic_write_text(Path(path), "".join(line + "\n" for line in lines))
    return len(lines)


def append_jsonl(path: str | os.PathLike, doc: Any) -> None:
    with open(path, "a", encoding="utf-8") as fh:
        fh.write(json.dumps(doc, sort_keys=True, allow_nan=False) + "\n")


def iter_jsonl(path: str | os.PathLike) -> Iterator[Any]:
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            try:
                yield json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValueError(f"{path}:{lineno}: {exc.msg}") from exc


def read_jsonl(path: str | os.PathLike) -> list[Any]:
    return list(iter_jsonl(path))
