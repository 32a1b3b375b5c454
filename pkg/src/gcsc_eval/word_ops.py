"""Lifting character edits to word-level operation triples.

Word spans come from the reference segmentation after boundary merging: any
boundary strictly inside an edit span is removed, then prediction-side
boundaries are derived by shifting every boundary from the edited word's end
onward by the edit's length change, accumulating across edits left to right.
Each character op yields exactly one word op; no op is ever dropped,
whatever its length change.
"""

from __future__ import annotations

import bisect
import json
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from .char_align import CharOp, OpKind, validate_ops
from .corpus import EvalSample
from .errors import DataError
from .segment import Segmentation


@dataclass(frozen=True)
class WordOp:
    """A character op together with its word spans on both sides.

    ref_span indexes the reference (and, spans being shared, the source);
    pred_span indexes the prediction. Within one sample the pred spans are
    ordered and non-overlapping.
    """

    op_index: int
    char_op: CharOp
    ref_span: tuple[int, int]
    pred_span: tuple[int, int]
    src_word: str
    ref_word: str
    pred_word: str


def merge_boundaries(seg_ref: Segmentation, ops: Sequence[CharOp]) -> Segmentation:
    """Remove every boundary strictly inside an op span.

    The interval is open on both ends: a boundary exactly at an op's start or
    end separates the edit from an untouched neighboring word and must stay.
    """
    kept = tuple(
        x
        for x in seg_ref.boundaries
        if not any(op.src_start < x < op.src_end for op in ops)
    )
    return Segmentation(kept)


def _containing_word_index(boundaries: tuple[int, ...], op: CharOp) -> int | None:
    """Index of the merged word containing the op's source span.

    An insert sitting exactly on a word boundary attaches to the preceding
    word, except at position 0 where it attaches to the following word.
    Returns None only for a wordless (empty) sentence.
    """
    n_words = len(boundaries) - 1
    if n_words == 0:
        return None
    if op.src_start == op.src_end:
        pos = op.src_start
        if pos == 0:
            return 0
        k = bisect.bisect_left(boundaries, pos)
        if k < len(boundaries) and boundaries[k] == pos:
            return k - 1
        return bisect.bisect_right(boundaries, pos) - 1
    w = bisect.bisect_right(boundaries, op.src_start) - 1
    if w >= n_words or boundaries[w + 1] < op.src_end:
        raise DataError(
            f"op span [{op.src_start},{op.src_end}) crosses a word boundary; "
            "merge boundaries before deriving word spans"
        )
    return w


def derive_pred_boundaries(
    merged: Segmentation,
    ops: Sequence[CharOp],
    prediction_length: int | None = None,
) -> tuple[int, ...]:
    """Prediction-side boundary list derived from the merged segmentation.

    Processing ops left to right, every boundary from the containing word's
    end onward shifts by len(replacement) - span_len. The result is returned
    as a plain index tuple: a deletion can empty a word, so the list may be
    only non-decreasing rather than strictly increasing. When
    prediction_length is given, a final-boundary mismatch raises DataError
    (it signals an alignment/segmentation inconsistency).
    """
    boundaries = merged.boundaries
    shifted = list(boundaries)
    for op in ops:
        w = _containing_word_index(boundaries, op)
        delta = len(op.replacement) - op.span_len
        # for a wordless sentence the single boundary tracks the prediction end
        start = 0 if w is None else w + 1
        for j in range(start, len(shifted)):
            shifted[j] += delta
    if prediction_length is not None and shifted[-1] != prediction_length:
        raise DataError(
            f"derived boundaries end at {shifted[-1]} but prediction has "
            f"{prediction_length} characters"
        )
    return tuple(shifted)


def extract_word_ops(
    sample: EvalSample, seg_ref: Segmentation, ops: Sequence[CharOp]
) -> list[WordOp]:
    """One WordOp per CharOp, in op order.

    When boundary merging leaves several ops inside one word, they share the
    ref span and partition the predicted word into consecutive chunks, cut at
    each later op's replacement start, so that splicing all chunks in order
    reproduces the predicted word.
    """
    ops = list(ops)
    validate_ops(len(sample.source), ops)
    seg_ref.validate_for(sample.reference)
    merged = merge_boundaries(seg_ref, ops)
    b = merged.boundaries
    pred_b = derive_pred_boundaries(merged, ops, len(sample.prediction))

    # start of each op's replacement in prediction coordinates
    repl_starts: list[int] = []
    shift = 0
    for op in ops:
        repl_starts.append(op.src_start + shift)
        shift += len(op.replacement) - op.span_len

    word_of = [_containing_word_index(b, op) for op in ops]
    groups: dict[int | None, list[int]] = {}
    for k, w in enumerate(word_of):
        groups.setdefault(w, []).append(k)

    out: list[WordOp] = []
    for k, op in enumerate(ops):
        w = word_of[k]
        if w is None:
            ref_span = (0, 0)
            pred_span = (0, len(sample.prediction))
        else:
            ref_span = (b[w], b[w + 1])
            ks = groups[w]
            if len(ks) == 1:
                pred_span = (pred_b[w], pred_b[w + 1])
            else:
                i = ks.index(k)
                lo = pred_b[w] if i == 0 else repl_starts[k]
                hi = pred_b[w + 1] if i == len(ks) - 1 else repl_starts[ks[i + 1]]
                pred_span = (lo, hi)
        out.append(
            WordOp(
                op_index=k,
                char_op=op,
                ref_span=ref_span,
                pred_span=pred_span,
                src_word=sample.source[ref_span[0] : ref_span[1]],
                ref_word=sample.reference[ref_span[0] : ref_span[1]],
                pred_word=sample.prediction[pred_span[0] : pred_span[1]],
            )
        )
    return out


def word_op_record(sample_id: str, op: WordOp) -> dict:
    """Flat JSON-friendly view of one WordOp, used by the debug dump."""
    return {
        "sample_id": sample_id,
        "op_index": op.op_index,
        "kind": op.char_op.kind.value,
        "src_start": op.char_op.src_start,
        "src_end": op.char_op.src_end,
        "replacement": op.char_op.replacement,
        "ref_start": op.ref_span[0],
        "ref_end": op.ref_span[1],
        "pred_start": op.pred_span[0],
        "pred_end": op.pred_span[1],
        "src_word": op.src_word,
        "ref_word": op.ref_word,
        "pred_word": op.pred_word,
    }


def dump_word_ops(word_ops_by_sample: Mapping[str, Iterable[WordOp]]) -> str:
    """JSON-lines dump of all word ops, for fixture diffing and the exporter."""
    lines = []
    for sample_id, ops in word_ops_by_sample.items():
        for op in ops:
            lines.append(json.dumps(word_op_record(sample_id, op), ensure_ascii=False))
    return "\n".join(lines) + ("\n" if lines else "")


def record_to_word_op(record: Mapping) -> tuple[str, WordOp]:
    """Inverse of word_op_record; returns (sample_id, WordOp)."""
    char_op = CharOp(
        OpKind(record["kind"]),
        record["src_start"],
        record["src_end"],
        record["replacement"],
    )
    op = WordOp(
        op_index=record["op_index"],
        char_op=char_op,
        ref_span=(record["ref_start"], record["ref_end"]),
        pred_span=(record["pred_start"], record["pred_end"]),
        src_word=record["src_word"],
        ref_word=record["ref_word"],
        pred_word=record["pred_word"],
    )
    return record["sample_id"], op
