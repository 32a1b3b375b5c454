"""Phonetic-similarity classification for equal-length substitutions.

Readings are toneless lowercase pinyin loaded from a plain table file, so a
tiny fixture table can stand in for a full dictionary. Two characters count
as phonetically similar when some pair of readings has edit distance <= 1.
A multi-character span is phonetic only when every position is; characters
missing from the table make the span non-phonetic with a warning instead of
aborting a batch run.
"""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass
from pathlib import Path

from .char_align import CharOp, OpKind
from .errors import DataError, MissingCharacterError

logger = logging.getLogger(__name__)

_READING_RE = re.compile(r"^[a-z]+$")


@dataclass(frozen=True)
class PinyinTable:
    """Map from a single character to its non-empty set of toneless readings."""

    readings: dict[str, frozenset[str]]

    def __contains__(self, char: str) -> bool:
        return char in self.readings

    def readings_of(self, char: str) -> frozenset[str]:
        try:
            return self.readings[char]
        except KeyError:
            raise MissingCharacterError(char) from None


def load_pinyin_table(path: str | Path) -> PinyinTable:
    """Parse a table file: one entry per line, "char<TAB>reading1,reading2"."""
    path = Path(path)
    readings: dict[str, frozenset[str]] = {}
    with path.open(encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.rstrip("\n")
            if not line.strip():
                continue
            parts = line.split("\t")
            if len(parts) != 2:
                raise DataError(f"{path}:{lineno}: expected 'char<TAB>readings'")
            char, reading_field = parts
            if len(char) != 1:
                raise DataError(f"{path}:{lineno}: key {char!r} is not a single character")
            entry = frozenset(r.strip() for r in reading_field.split(",") if r.strip())
            if not entry:
                raise DataError(f"{path}:{lineno}: no readings for {char!r}")
            for r in entry:
                if not _READING_RE.match(r):
                    raise DataError(f"{path}:{lineno}: invalid reading {r!r}")
            # repeated lines for one character merge their reading sets
            readings[char] = readings.get(char, frozenset()) | entry
    return PinyinTable(readings)


def edit_distance(a: str, b: str) -> int:
    """Plain unit-cost Levenshtein distance between two short reading strings."""
    if len(a) < len(b):
        a, b = b, a
    prev = list(range(len(b) + 1))
    for i, ca in enumerate(a, 1):
        cur = [i]
        for j, cb in enumerate(b, 1):
            cur.append(min(prev[j] + 1, cur[-1] + 1, prev[j - 1] + (ca != cb)))
        prev = cur
    return prev[-1]


def chars_phonetically_similar(a: str, b: str, table: PinyinTable) -> bool:
    """True iff some reading of a and some reading of b are within edit distance 1.

    Both characters must be present in the table; otherwise
    MissingCharacterError identifies the offending character.
    """
    readings_a = table.readings_of(a)
    readings_b = table.readings_of(b)
    return any(edit_distance(ra, rb) <= 1 for ra in readings_a for rb in readings_b)


def span_phonetic_flags(op: CharOp, source: str, table: PinyinTable) -> list[bool]:
    """Per-position similarity flags for an equal-length substitution.

    Positions whose characters are unmapped get False, with a warning.
    """
    if op.kind != OpKind.SUBST_EQUAL:
        raise DataError(f"phonetic check requires an equal-length substitution, got {op.kind.value}")
    flags: list[bool] = []
    for offset in range(op.span_len):
        a = source[op.src_start + offset]
        b = op.replacement[offset]
        try:
            flags.append(chars_phonetically_similar(a, b, table))
        except MissingCharacterError as exc:
            logger.warning(
                "treating %r -> %r at position %d as non-phonetic: %s",
                a, b, op.src_start + offset, exc,
            )
            flags.append(False)
    return flags


def subst_is_phonetic(op: CharOp, source: str, table: PinyinTable) -> bool:
    """True iff every substituted position in the span is phonetically similar."""
    return all(span_phonetic_flags(op, source, table))
