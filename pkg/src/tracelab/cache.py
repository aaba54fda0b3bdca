"""On-disk cache of character tables with atomic writes and a version guard."""

from __future__ import annotations

import hashlib
import json
import os
import re
import tempfile
from pathlib import Path

from .chartable import FORMAT_VERSION, CharacterTable, character_table
from .groups import build_group, parse_descriptor


def _filename(descriptor: str) -> str:
    key = re.sub(r"[^a-z0-9]+", "_", str(parse_descriptor(descriptor))).strip("_")
    return f"{key}.v{FORMAT_VERSION}.json"


class TableCache:
    """Directory of JSON tables, one file per group descriptor.

    Unreadable or mismatched files are moved aside (``*.corrupt``) and treated
    as misses, so a damaged cache only ever costs a recomputation.
    """

    def __init__(self, root: str | Path):
        self.root = Path(root)
        self.hits = 0
        self.misses = 0

    def path(self, descriptor: str) -> Path:
        return self.root / _filename(descriptor)

    def get(self, descriptor: str) -> CharacterTable | None:
        p = self.path(descriptor)
        if not p.exists():
            self.misses += 1
            return None
        try:
            data = json.loads(p.read_text())
            if data.get("format_version") != FORMAT_VERSION:
                self.misses += 1
                return None
            if data.pop("checksum", None) != _checksum(data):
                raise ValueError("checksum mismatch")
            table = CharacterTable.from_dict(data)
            if table.descriptor != str(parse_descriptor(descriptor)):
                raise ValueError("descriptor mismatch")
            _sanity(table)
        except Exception:
            self._quarantine(p)
            self.misses += 1
            return None
        self.hits += 1
        return table

    def put(self, table: CharacterTable) -> Path:
        self.root.mkdir(parents=True, exist_ok=True)
        p = self.path(table.descriptor)
        fd, tmp = tempfile.mkstemp(dir=self.root, prefix=".tmp-", suffix=".json")
        with os.fdopen(fd, "w") as fh:
            data = table.to_dict()
            data["checksum"] = _checksum(data)
            fh.write(json.dumps(data, sort_keys=True, separators=(",", ":")))
        os.replace(tmp, p)
        return p

    def get_or_compute(self, descriptor: str, group=None, **kwargs) -> CharacterTable:
        table = self.get(descriptor)
        if table is None:
            group = build_group(descriptor) if group is None else group
            table = character_table(group, **kwargs)
            self.put(table)
        return table

    def _quarantine(self, p: Path) -> None:
        try:
            os.replace(p, p.with_suffix(p.suffix + ".corrupt"))
        except OSError:
            pass


def _checksum(data: dict) -> str:
    text = json.dumps(data, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(text.encode()).hexdigest()


def _sanity(table: CharacterTable) -> None:
    """Cheap structural checks that catch truncated or edited files."""
    k = table.k
    if len(table.values) != k or any(len(r) != k for r in table.values):
        raise ValueError("table is not square")
    if len(table.degrees) != k or int(table.class_sizes.sum()) != table.order:
        raise ValueError("class data inconsistent")
    if sum(int(d) ** 2 for d in table.degrees) != table.order:
        raise ValueError("degrees inconsistent with order")
    for row, d in zip(table.values, table.degrees):
        if row[0].terms != ((0, int(d)),):
            raise ValueError("identity column does not match degrees")
        if any(v.order != table.exponent for v in row):
            raise ValueError("value orders inconsistent")
    if any(v.terms != ((0, 1),) for v in table.values[0]):
        raise ValueError("first row is not trivial")
