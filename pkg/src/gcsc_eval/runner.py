"""Per-sample analysis pipeline shared by the CLI commands.

Analysis is pure per sample, so it parallelizes trivially; results come back
in corpus order regardless of the worker count, keeping reports
byte-identical across parallelism degrees.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Mapping

from .char_align import CharOp, extract_char_ops
from .corpus import Corpus, EvalSample
from .metrics import error_words
from .segment import Lexicon, Segmentation, project_to_source, segment_reference
from .word_ops import WordOp, extract_word_ops, merge_boundaries


@dataclass(frozen=True)
class SampleAnalysis:
    """Everything derived from one sample before judging."""

    sample_id: str
    char_ops: tuple[CharOp, ...]
    seg_merged: Segmentation
    word_ops: tuple[WordOp, ...]
    error_spans: frozenset[tuple[int, int]]


def analyze_sample(sample: EvalSample, seg_ref: Segmentation) -> SampleAnalysis:
    ops = extract_char_ops(sample.source, sample.prediction)
    merged = merge_boundaries(seg_ref, ops)
    word_ops = extract_word_ops(sample, seg_ref, ops)
    spans = error_words(sample, project_to_source(merged))
    return SampleAnalysis(
        sample_id=sample.id,
        char_ops=tuple(ops),
        seg_merged=merged,
        word_ops=tuple(word_ops),
        error_spans=frozenset(spans),
    )


def analyze_corpus(
    corpus: Corpus,
    lexicon: Lexicon | None = None,
    seg_overrides: Mapping[str, Segmentation] | None = None,
    jobs: int = 1,
) -> list[SampleAnalysis]:
    """Analyze every sample, in corpus order.

    Segmentations from `seg_overrides` take precedence over the built-in
    segmenter; without a lexicon every character becomes its own word.
    """
    lexicon = lexicon or Lexicon(())
    seg_overrides = seg_overrides or {}

    def job(sample: EvalSample) -> SampleAnalysis:
        seg = seg_overrides.get(sample.id) or segment_reference(sample.reference, lexicon)
        return analyze_sample(sample, seg)

    if jobs <= 1:
        return [job(sample) for sample in corpus]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(job, corpus))


def word_ops_by_sample(analyses: list[SampleAnalysis]) -> dict[str, tuple[WordOp, ...]]:
    return {a.sample_id: a.word_ops for a in analyses}


def char_ops_by_sample(analyses: list[SampleAnalysis]) -> dict[str, tuple[CharOp, ...]]:
    return {a.sample_id: a.char_ops for a in analyses}


def error_spans_by_sample(analyses: list[SampleAnalysis]) -> dict[str, frozenset[tuple[int, int]]]:
    return {a.sample_id: a.error_spans for a in analyses}
