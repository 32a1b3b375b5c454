"""Reference-sentence word segmentation and its projection onto the source.

The built-in segmenter is forward maximum matching over a user-supplied
lexicon: deterministic, dependency-free, and easy to override. Output of an
external segmenter can be injected per sample through a segmentation file,
which takes precedence over the built-in one.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

from .corpus import Corpus
from .errors import SegmentationError


@dataclass(frozen=True)
class Segmentation:
    """Word boundaries as a strictly increasing index list starting at 0."""

    boundaries: tuple[int, ...]

    def __post_init__(self):
        b = self.boundaries
        if not b:
            raise SegmentationError("empty boundary list")
        if b[0] != 0:
            raise SegmentationError(f"boundaries must start at 0, got {b[0]}")
        for prev, cur in zip(b, b[1:]):
            if cur <= prev:
                raise SegmentationError(f"boundaries not strictly increasing: {list(b)}")

    @property
    def n_words(self) -> int:
        return len(self.boundaries) - 1

    def spans(self) -> list[tuple[int, int]]:
        b = self.boundaries
        return [(b[i], b[i + 1]) for i in range(len(b) - 1)]

    def words(self, sentence: str) -> list[str]:
        return [sentence[s:e] for s, e in self.spans()]

    def validate_for(self, sentence: str) -> None:
        if self.boundaries[-1] != len(sentence):
            raise SegmentationError(
                f"last boundary {self.boundaries[-1]} != sentence length {len(sentence)}"
            )


class Lexicon:
    """Dictionary of multi-character words for the built-in segmenter."""

    def __init__(self, words: Iterable[str]):
        entries = set()
        for w in words:
            if not w:
                raise SegmentationError("empty lexicon entry")
            entries.add(w)
        self.words = frozenset(entries)
        self.max_len = max((len(w) for w in entries), default=1)

    def __len__(self) -> int:
        return len(self.words)

    def __contains__(self, word: str) -> bool:
        return word in self.words


def load_lexicon(path: str | Path) -> Lexicon:
    """One word per line, UTF-8; blank lines ignored."""
    with Path(path).open(encoding="utf-8") as fh:
        return Lexicon(line.strip() for line in fh if line.strip())


def segment_reference(reference: str, lexicon: Lexicon) -> Segmentation:
    """Forward maximum matching; any unmatched character becomes its own word."""
    boundaries = [0]
    i = 0
    n = len(reference)
    while i < n:
        step = 1
        for length in range(min(lexicon.max_len, n - i), 1, -1):
            if reference[i : i + length] in lexicon:
                step = length
                break
        i += step
        boundaries.append(i)
    return Segmentation(tuple(boundaries))


def project_to_source(seg_ref: Segmentation) -> Segmentation:
    """Source-side segmentation; the identity because source and reference
    have equal length by corpus invariant."""
    return Segmentation(seg_ref.boundaries)


def load_segmentations(path: str | Path, corpus: Corpus) -> dict[str, Segmentation]:
    """Load externally supplied segmentations: JSON-lines {id, boundaries:[int]}.

    Every id must exist in the corpus and the boundary list must be valid for
    that sample's reference.
    """
    path = Path(path)
    ids = {s.id: s for s in corpus}
    out: dict[str, Segmentation] = {}
    with path.open(encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.strip()
            if not line:
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise SegmentationError(f"{path}:{lineno}: invalid JSON: {exc}") from exc
            if not isinstance(record, dict) or "id" not in record or "boundaries" not in record:
                raise SegmentationError(f"{path}:{lineno}: expected {{id, boundaries}}")
            sample_id = record["id"]
            if sample_id not in ids:
                raise SegmentationError(f"{path}:{lineno}: unknown sample id {sample_id!r}")
            if sample_id in out:
                raise SegmentationError(f"{path}:{lineno}: duplicate segmentation for {sample_id!r}")
            bounds = record["boundaries"]
            if not isinstance(bounds, list) or not all(isinstance(x, int) for x in bounds):
                raise SegmentationError(f"{path}:{lineno}: boundaries must be a list of ints")
            try:
                seg = Segmentation(tuple(bounds))
                seg.validate_for(ids[sample_id].reference)
            except SegmentationError as exc:
                raise SegmentationError(f"{path}:{lineno}: {exc}") from exc
            out[sample_id] = seg
    return out
