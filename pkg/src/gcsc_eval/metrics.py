"""Score aggregation: the word-level semantic metric, the traditional
character-level baseline, operation statistics, judge correlation, and
threshold sweeps.

Degenerate denominators follow one convention everywhere: 0/0 scores 0.0,
with the raw counts always exposed so such corpora stay diagnosable.
Percentages are reported in [0, 100].
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from .char_align import CharOp, OpKind
from .corpus import Corpus, EvalSample
from .errors import DataError
from .judge import EmbeddingStore, Judgment, cosine, reassemble
from .phonics import PinyinTable, span_phonetic_flags
from .segment import Segmentation
from .word_ops import WordOp

EVAL_GCSC = "eval_gcsc"
EVAL_CSC = "eval_csc"


def _ratio(numerator: int, denominator: int) -> float:
    return 100.0 * numerator / denominator if denominator else 0.0


def _f1(precision: float, recall: float) -> float:
    return 2 * precision * recall / (precision + recall) if precision + recall > 0 else 0.0


@dataclass(frozen=True)
class MetricReport:
    """Sentence- and character-level P/R/F1 plus every raw count behind them.

    For the character-level baseline the "ops" counts hold changed character
    positions and the "error words" counts hold error character positions.
    """

    metric: str
    sentence_precision: float
    sentence_recall: float
    sentence_f1: float
    char_precision: float
    char_recall: float
    char_f1: float
    ops_total: int
    ops_correct: int
    error_words_total: int
    error_words_fixed: int
    sentences_changed: int
    sentences_changed_all_correct: int
    sentences_with_errors: int
    sentences_fully_fixed: int
    ops_unjudged: int
    sentences_unjudged: int = 0
    length_mismatched: int = 0

    def scores(self) -> dict[str, float]:
        return {
            "sentence_precision": self.sentence_precision,
            "sentence_recall": self.sentence_recall,
            "sentence_f1": self.sentence_f1,
            "char_precision": self.char_precision,
            "char_recall": self.char_recall,
            "char_f1": self.char_f1,
        }

    def counts(self) -> dict[str, int]:
        return {
            "ops_total": self.ops_total,
            "ops_correct": self.ops_correct,
            "error_words_total": self.error_words_total,
            "error_words_fixed": self.error_words_fixed,
            "sentences_changed": self.sentences_changed,
            "sentences_changed_all_correct": self.sentences_changed_all_correct,
            "sentences_with_errors": self.sentences_with_errors,
            "sentences_fully_fixed": self.sentences_fully_fixed,
            "ops_unjudged": self.ops_unjudged,
            "sentences_unjudged": self.sentences_unjudged,
            "length_mismatched": self.length_mismatched,
        }


def error_words(sample: EvalSample, seg_merged: Segmentation) -> set[tuple[int, int]]:
    """Word spans (under the merged segmentation) where source != reference."""
    seg_merged.validate_for(sample.reference)
    return {
        (start, end)
        for start, end in seg_merged.spans()
        if sample.source[start:end] != sample.reference[start:end]
    }


def _judgment_map(judgments: Iterable[Judgment]) -> dict[tuple[str, int], Judgment]:
    out: dict[tuple[str, int], Judgment] = {}
    for j in judgments:
        key = (j.sample_id, j.op_index)
        if key in out:
            raise DataError(f"duplicate judgment for op {key}")
        out[key] = j
    return out


def _covered(span: tuple[int, int], op_span: tuple[int, int]) -> bool:
    # intersection test; degenerate (empty) op spans touch nothing
    return op_span[0] < span[1] and span[0] < op_span[1]


def compute_gcsc(
    corpus: Corpus,
    word_ops_by_sample: Mapping[str, Sequence[WordOp]],
    error_spans_by_sample: Mapping[str, Iterable[tuple[int, int]]],
    judgments: Iterable[Judgment],
) -> MetricReport:
    """Aggregate per-op verdicts into the word-level metric.

    Character-level precision counts judged-correct ops over judged ops;
    recall counts error words covered by at least one correct op over all
    error words. A sentence with changes scores at sentence level when every
    op is judged correct and, if the source had typos, every error word was
    fixed; sources without typos are exempt from the error-word condition.
    Sentences containing unjudged ops are excluded from sentence-level
    numerators and denominators and reported separately.
    """
    jmap = _judgment_map(judgments)
    universe = {
        (sample_id, op.op_index)
        for sample_id, ops in word_ops_by_sample.items()
        for op in ops
    }
    unknown = sorted(set(jmap) - universe)
    if unknown:
        raise DataError(f"judgments reference unknown ops: {unknown[:20]}")

    ops_total = 0
    ops_judged = 0
    ops_correct = 0
    error_total = 0
    error_fixed = 0
    sentences_changed = 0
    sentences_changed_all_correct = 0
    sentences_with_errors = 0
    sentences_fully_fixed = 0
    sentences_unjudged = 0

    for sample in corpus:
        ops = word_ops_by_sample.get(sample.id, ())
        spans = set(error_spans_by_sample.get(sample.id, ()))
        verdicts = [jmap.get((sample.id, op.op_index)) for op in ops]

        ops_total += len(ops)
        ops_judged += sum(1 for v in verdicts if v is not None)
        ops_correct += sum(1 for v in verdicts if v is not None and v.verdict)

        correct_op_spans = [
            op.ref_span
            for op, v in zip(ops, verdicts)
            if v is not None and v.verdict
        ]
        fixed = {
            span
            for span in spans
            if any(_covered(span, op_span) for op_span in correct_op_spans)
        }
        error_total += len(spans)
        error_fixed += len(fixed)

        has_unjudged = any(v is None for v in verdicts)
        if has_unjudged:
            sentences_unjudged += 1
            continue
        all_correct = all(v.verdict for v in verdicts)
        all_fixed = len(fixed) == len(spans)
        if ops:
            sentences_changed += 1
            if all_correct and (not spans or all_fixed):
                sentences_changed_all_correct += 1
        if spans:
            sentences_with_errors += 1
            if all_correct and all_fixed:
                sentences_fully_fixed += 1

    char_p = _ratio(ops_correct, ops_judged)
    char_r = _ratio(error_fixed, error_total)
    sent_p = _ratio(sentences_changed_all_correct, sentences_changed)
    sent_r = _ratio(sentences_fully_fixed, sentences_with_errors)
    return MetricReport(
        metric=EVAL_GCSC,
        sentence_precision=sent_p,
        sentence_recall=sent_r,
        sentence_f1=_f1(sent_p, sent_r),
        char_precision=char_p,
        char_recall=char_r,
        char_f1=_f1(char_p, char_r),
        ops_total=ops_total,
        ops_correct=ops_correct,
        error_words_total=error_total,
        error_words_fixed=error_fixed,
        sentences_changed=sentences_changed,
        sentences_changed_all_correct=sentences_changed_all_correct,
        sentences_with_errors=sentences_with_errors,
        sentences_fully_fixed=sentences_fully_fixed,
        ops_unjudged=ops_total - ops_judged,
        sentences_unjudged=sentences_unjudged,
    )


def compute_csc(corpus: Corpus) -> MetricReport:
    """Traditional character-level baseline (correction subtask).

    Character level is computable only for equal-length predictions: a
    position counts as changed when prediction != source and as correct when
    additionally prediction == reference. Predictions whose length differs
    from the source contribute no true positives; they count as wrongly
    changed sentences, their error positions stay in the recall denominator,
    and their number is reported separately.
    """
    changes = 0
    correct_changes = 0
    error_positions = 0
    fixed_positions = 0
    sentences_changed = 0
    sentences_changed_correct = 0
    sentences_with_errors = 0
    sentences_fixed = 0
    length_mismatched = 0

    for sample in corpus:
        src, ref, pred = sample.source, sample.reference, sample.prediction
        equal = len(pred) == len(src)
        if not equal:
            length_mismatched += 1
        else:
            for i in range(len(src)):
                if pred[i] != src[i]:
                    changes += 1
                    if pred[i] == ref[i]:
                        correct_changes += 1
        for i in range(len(src)):
            if src[i] != ref[i]:
                error_positions += 1
                if equal and pred[i] == ref[i]:
                    fixed_positions += 1
        if pred != src:
            sentences_changed += 1
            if pred == ref:
                sentences_changed_correct += 1
        if src != ref:
            sentences_with_errors += 1
            if pred == ref:
                sentences_fixed += 1

    char_p = _ratio(correct_changes, changes)
    char_r = _ratio(fixed_positions, error_positions)
    sent_p = _ratio(sentences_changed_correct, sentences_changed)
    sent_r = _ratio(sentences_fixed, sentences_with_errors)
    return MetricReport(
        metric=EVAL_CSC,
        sentence_precision=sent_p,
        sentence_recall=sent_r,
        sentence_f1=_f1(sent_p, sent_r),
        char_precision=char_p,
        char_recall=char_r,
        char_f1=_f1(char_p, char_r),
        ops_total=changes,
        ops_correct=correct_changes,
        error_words_total=error_positions,
        error_words_fixed=fixed_positions,
        sentences_changed=sentences_changed,
        sentences_changed_all_correct=sentences_changed_correct,
        sentences_with_errors=sentences_with_errors,
        sentences_fully_fixed=sentences_fixed,
        ops_unjudged=0,
        length_mismatched=length_mismatched,
    )


@dataclass(frozen=True)
class OpStatsReport:
    """Operation-category counts and shares.

    Insert/delete/substitution shares are percentages of all operations; the
    non-phonetic share is relative to equal-length substitutions. Because it
    is unsettled whether non-phonetic substitutions should be counted per
    merged span or per character, both counts are reported.
    """

    ops_total: int
    inserts: int
    deletes: int
    subst_unequal: int
    subst_equal: int
    subst_equal_nonphonetic: int
    subst_equal_nonphonetic_chars: int
    pct_inserts: float
    pct_deletes: float
    pct_subst_unequal: float
    pct_subst_equal: float
    pct_nonphonetic_of_equal: float
    unequal_correct_pct: float | None = None
    nonphonetic_correct_pct: float | None = None

    def to_dict(self) -> dict:
        return {
            "ops_total": self.ops_total,
            "inserts": self.inserts,
            "deletes": self.deletes,
            "subst_unequal": self.subst_unequal,
            "subst_equal": self.subst_equal,
            "subst_equal_nonphonetic": self.subst_equal_nonphonetic,
            "subst_equal_nonphonetic_chars": self.subst_equal_nonphonetic_chars,
            "pct_inserts": self.pct_inserts,
            "pct_deletes": self.pct_deletes,
            "pct_subst_unequal": self.pct_subst_unequal,
            "pct_subst_equal": self.pct_subst_equal,
            "pct_nonphonetic_of_equal": self.pct_nonphonetic_of_equal,
            "unequal_correct_pct": self.unequal_correct_pct,
            "nonphonetic_correct_pct": self.nonphonetic_correct_pct,
        }


def op_statistics(
    corpus: Corpus,
    char_ops_by_sample: Mapping[str, Sequence[CharOp]],
    table: PinyinTable,
    judgments: Iterable[Judgment] | None = None,
) -> OpStatsReport:
    """Category counts, with judged-correct shares when judgments are given.

    The correct shares use judged ops only: the share of inserts, deletes,
    and unequal-length substitutions judged correct, and the share of
    non-phonetic equal-length substitutions judged correct.
    """
    jmap = _judgment_map(judgments) if judgments is not None else None
    if jmap is not None:
        universe = {
            (sample_id, k)
            for sample_id, ops in char_ops_by_sample.items()
            for k in range(len(ops))
        }
        unknown = sorted(set(jmap) - universe)
        if unknown:
            raise DataError(f"judgments reference unknown ops: {unknown[:20]}")

    counts = {kind: 0 for kind in OpKind}
    nonphonetic_spans = 0
    nonphonetic_chars = 0
    ne_judged = ne_correct = 0
    enp_judged = enp_correct = 0

    for sample in corpus:
        for k, op in enumerate(char_ops_by_sample.get(sample.id, ())):
            counts[op.kind] += 1
            span_nonphonetic = False
            if op.kind == OpKind.SUBST_EQUAL:
                flags = span_phonetic_flags(op, sample.source, table)
                span_nonphonetic = not all(flags)
                if span_nonphonetic:
                    nonphonetic_spans += 1
                nonphonetic_chars += sum(1 for f in flags if not f)
            if jmap is None:
                continue
            judgment = jmap.get((sample.id, k))
            if judgment is None:
                continue
            if op.kind in (OpKind.INSERT, OpKind.DELETE, OpKind.SUBST_UNEQUAL):
                ne_judged += 1
                ne_correct += judgment.verdict
            elif span_nonphonetic:
                enp_judged += 1
                enp_correct += judgment.verdict

    total = sum(counts.values())
    return OpStatsReport(
        ops_total=total,
        inserts=counts[OpKind.INSERT],
        deletes=counts[OpKind.DELETE],
        subst_unequal=counts[OpKind.SUBST_UNEQUAL],
        subst_equal=counts[OpKind.SUBST_EQUAL],
        subst_equal_nonphonetic=nonphonetic_spans,
        subst_equal_nonphonetic_chars=nonphonetic_chars,
        pct_inserts=_ratio(counts[OpKind.INSERT], total),
        pct_deletes=_ratio(counts[OpKind.DELETE], total),
        pct_subst_unequal=_ratio(counts[OpKind.SUBST_UNEQUAL], total),
        pct_subst_equal=_ratio(counts[OpKind.SUBST_EQUAL], total),
        pct_nonphonetic_of_equal=_ratio(nonphonetic_spans, counts[OpKind.SUBST_EQUAL]),
        unequal_correct_pct=_ratio(ne_correct, ne_judged) if jmap is not None else None,
        nonphonetic_correct_pct=_ratio(enp_correct, enp_judged) if jmap is not None else None,
    )


def jaccard(
    judgments_a: Mapping[tuple[str, int], bool],
    judgments_b: Mapping[tuple[str, int], bool],
) -> float:
    """Jaccard coefficient over the sets of ops judged correct.

    Both inputs must cover the same op universe. When both correct sets are
    empty the coefficient is 1.
    """
    if set(judgments_a) != set(judgments_b):
        only_a = sorted(set(judgments_a) - set(judgments_b))
        only_b = sorted(set(judgments_b) - set(judgments_a))
        raise DataError(
            f"judgment sets cover different ops (a-only {only_a[:5]}, b-only {only_b[:5]})"
        )
    true_a = {k for k, v in judgments_a.items() if v}
    true_b = {k for k, v in judgments_b.items() if v}
    union = true_a | true_b
    if not union:
        return 1.0
    return len(true_a & true_b) / len(union)


@dataclass(frozen=True)
class CorrelationReport:
    """Judge agreement at each threshold, plus the threshold that peaks."""

    points: tuple[tuple[float, float], ...] = field(default_factory=tuple)
    peak_threshold: float = 0.0

    def to_dict(self) -> dict:
        return {
            "points": [{"threshold": t, "jaccard": j} for t, j in self.points],
            "peak_threshold": self.peak_threshold,
        }


def threshold_sweep(
    corpus: Corpus,
    word_ops_by_sample: Mapping[str, Sequence[WordOp]],
    store: EmbeddingStore,
    thresholds: Iterable[float],
    reference_judgments: Mapping[tuple[str, int], bool],
) -> CorrelationReport:
    """Agreement between thresholded embedding verdicts and a reference judge.

    Cosine scores are computed once and re-thresholded per sweep point, so
    the verdicts at threshold t match judge_embedding at t op-for-op. On a
    tie the lowest peak threshold is reported.
    """
    levels = sorted(set(float(t) for t in thresholds))
    if not levels:
        raise DataError("no thresholds to sweep")
    scores: dict[tuple[str, int], float] = {}
    for sample in corpus:
        for op in word_ops_by_sample.get(sample.id, ()):
            scores[(sample.id, op.op_index)] = cosine(
                store.get(sample.reference),
                store.get(reassemble(sample.reference, op)),
            )
    points = []
    best: tuple[float, float] | None = None
    for level in levels:
        verdicts = {key: score >= level for key, score in scores.items()}
        agreement = jaccard(verdicts, reference_judgments)
        points.append((level, agreement))
        if best is None or agreement > best[1]:
            best = (level, agreement)
    return CorrelationReport(points=tuple(points), peak_threshold=best[0])
