"""Evaluation triples: loading, validation, serialization.

One record is (id, source, reference, prediction). Source and reference
must have equal character length; the prediction may have any length.
All positions in the toolkit are 0-based Unicode code point indices with
half-open [start, end) spans; byte offsets never appear anywhere.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator

from .errors import CorpusError
from .ioutil import write_text_atomic

FORMATS = ("tsv", "jsonl")

_FIELDS = ("id", "source", "reference", "prediction")


@dataclass(frozen=True)
class EvalSample:
    """One (source, reference, prediction) triple with a stable id."""

    id: str
    source: str
    reference: str
    prediction: str

    def __post_init__(self):
        if len(self.source) != len(self.reference):
            raise CorpusError(
                f"sample {self.id!r}: source length {len(self.source)} != "
                f"reference length {len(self.reference)}"
            )


@dataclass(frozen=True)
class Corpus:
    """Ordered, immutable collection of samples with unique ids."""

    samples: tuple[EvalSample, ...]

    def __post_init__(self):
        seen: set[str] = set()
        for sample in self.samples:
            if sample.id in seen:
                raise CorpusError(f"duplicate sample id {sample.id!r}")
            seen.add(sample.id)

    def __iter__(self) -> Iterator[EvalSample]:
        return iter(self.samples)

    def __len__(self) -> int:
        return len(self.samples)

    def by_id(self, sample_id: str) -> EvalSample:
        for sample in self.samples:
            if sample.id == sample_id:
                return sample
        raise CorpusError(f"unknown sample id {sample_id!r}")


def load_corpus(path: str | Path, fmt: str = "tsv") -> Corpus:
    """Load a corpus file.

    TSV: one record per line, 4 tab-separated columns id, source, reference,
    prediction. JSON-lines: one object per line with those four string keys.
    Raises CorpusError with a line number on malformed records and on
    invariant violations (length mismatch, duplicate id, empty file).
    """
    if fmt not in FORMATS:
        raise CorpusError(f"unknown corpus format {fmt!r}, expected one of {FORMATS}")
    path = Path(path)
    samples: list[EvalSample] = []
    with path.open(encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.rstrip("\n")
            if fmt == "tsv":
                if not line:
                    raise CorpusError(f"{path}:{lineno}: blank line in TSV corpus")
                parts = line.split("\t")
                if len(parts) != 4:
                    raise CorpusError(
                        f"{path}:{lineno}: expected 4 tab-separated columns, got {len(parts)}"
                    )
                record = dict(zip(_FIELDS, parts))
            else:
                if not line.strip():
                    continue
                try:
                    record = json.loads(line)
                except json.JSONDecodeError as exc:
                    raise CorpusError(f"{path}:{lineno}: invalid JSON: {exc}") from exc
                if not isinstance(record, dict):
                    raise CorpusError(f"{path}:{lineno}: expected a JSON object")
                missing = [k for k in _FIELDS if k not in record]
                if missing:
                    raise CorpusError(f"{path}:{lineno}: missing keys {missing}")
                bad = [k for k in _FIELDS if not isinstance(record[k], str)]
                if bad:
                    raise CorpusError(f"{path}:{lineno}: non-string values for {bad}")
            try:
                samples.append(EvalSample(**{k: record[k] for k in _FIELDS}))
            except CorpusError as exc:
                raise CorpusError(f"{path}:{lineno}: {exc}") from exc
    if not samples:
        raise CorpusError(f"{path}: empty corpus")
    return Corpus(tuple(samples))


def save_corpus(corpus: Corpus, path: str | Path, fmt: str = "tsv") -> None:
    """Serialize a corpus so that load_corpus round-trips it field-by-field."""
    if fmt not in FORMATS:
        raise CorpusError(f"unknown corpus format {fmt!r}, expected one of {FORMATS}")
    lines = []
    for s in corpus:
        if fmt == "tsv":
            fields = (s.id, s.source, s.reference, s.prediction)
            for value in fields:
                if "\t" in value or "\n" in value:
                    raise CorpusError(
                        f"sample {s.id!r}: field contains tab/newline, not representable as TSV"
                    )
            lines.append("\t".join(fields))
        else:
            lines.append(
                json.dumps(
                    {k: getattr(s, k) for k in _FIELDS}, ensure_ascii=False
                )
            )
    write_text_atomic(path, "\n".join(lines) + "\n")
