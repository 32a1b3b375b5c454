"""Character-level edit extraction between a source sentence and a prediction.

Alignment is a unit-cost Levenshtein DP. On cost ties the backtrace prefers
substitution, then deletion, then insertion, so output is deterministic
across platforms and replacements stay span-aligned (the common case in
spelling correction is a substitution). Maximal runs of edited positions
collapse into one operation; an insert adjacent to an edited run is absorbed
by it, while an insert between two untouched characters stays its own op.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Sequence

from .errors import DataError


class OpKind(str, Enum):
    INSERT = "insert"
    DELETE = "delete"
    SUBST_EQUAL = "subst_equal"
    SUBST_UNEQUAL = "subst_unequal"


def classify(span_len: int, replacement_len: int) -> OpKind:
    """Operation kind as a pure function of span length vs replacement length."""
    if span_len == 0 and replacement_len > 0:
        return OpKind.INSERT
    if span_len > 0 and replacement_len == 0:
        return OpKind.DELETE
    if span_len > 0 and replacement_len == span_len:
        return OpKind.SUBST_EQUAL
    if span_len > 0 and replacement_len > 0:
        return OpKind.SUBST_UNEQUAL
    raise DataError("empty span with empty replacement is not an operation")


@dataclass(frozen=True)
class CharOp:
    """A contiguous edit: replace source[src_start:src_end] by `replacement`."""

    kind: OpKind
    src_start: int
    src_end: int
    replacement: str

    def __post_init__(self):
        if not 0 <= self.src_start <= self.src_end:
            raise DataError(f"bad span [{self.src_start},{self.src_end})")
        if self.kind != classify(self.span_len, len(self.replacement)):
            raise DataError(
                f"kind {self.kind.value} inconsistent with span length "
                f"{self.span_len} and replacement length {len(self.replacement)}"
            )

    @property
    def span_len(self) -> int:
        return self.src_end - self.src_start

    @property
    def edit_units(self) -> int:
        """Single-character edits implied by this op under unit costs."""
        return max(self.span_len, len(self.replacement))

    @classmethod
    def from_span(cls, src_start: int, src_end: int, replacement: str) -> "CharOp":
        return cls(classify(src_end - src_start, len(replacement)), src_start, src_end, replacement)


def validate_ops(source_len: int, ops: Sequence[CharOp]) -> None:
    """Check span range, ordering, non-overlap, and insert-position uniqueness."""
    prev: CharOp | None = None
    for op in ops:
        if op.src_end > source_len:
            raise DataError(
                f"op span [{op.src_start},{op.src_end}) exceeds source length {source_len}"
            )
        if prev is not None:
            if op.src_start < prev.src_end:
                raise DataError(
                    f"ops overlap or are unsorted: [{prev.src_start},{prev.src_end}) "
                    f"then [{op.src_start},{op.src_end})"
                )
            if (
                prev.kind == OpKind.INSERT
                and op.kind == OpKind.INSERT
                and prev.src_start == op.src_start
            ):
                raise DataError(f"two inserts share position {op.src_start}")
        prev = op


def extract_char_ops(source: str, prediction: str) -> list[CharOp]:
    """Edit operations turning `source` into `prediction`.

    Applying the result to `source` reproduces `prediction` exactly, and the
    total number of implied single-character edits equals the Levenshtein
    distance between the two strings.
    """
    n, m = len(source), len(prediction)
    # dp[i][j] = distance between source[:i] and prediction[:j]
    dp = [[0] * (m + 1) for _ in range(n + 1)]
    for i in range(1, n + 1):
        dp[i][0] = i
    dp[0] = list(range(m + 1))
    for i in range(1, n + 1):
        ch = source[i - 1]
        row = dp[i]
        prev = dp[i - 1]
        for j in range(1, m + 1):
            cost = 0 if ch == prediction[j - 1] else 1
            best = prev[j - 1] + cost
            if prev[j] + 1 < best:
                best = prev[j] + 1
            if row[j - 1] + 1 < best:
                best = row[j - 1] + 1
            row[j] = best

    # Backtrace, preferring diagonal, then up (delete), then left (insert).
    moves: list[tuple[str, int, int]] = []
    i, j = n, m
    while i > 0 or j > 0:
        if (
            i > 0
            and j > 0
            and dp[i][j] == dp[i - 1][j - 1] + (0 if source[i - 1] == prediction[j - 1] else 1)
        ):
            moves.append(("diag", i - 1, j - 1))
            i -= 1
            j -= 1
        elif i > 0 and dp[i][j] == dp[i - 1][j] + 1:
            moves.append(("del", i - 1, -1))
            i -= 1
        else:
            moves.append(("ins", i, j - 1))
            j -= 1
    moves.reverse()

    ops: list[CharOp] = []
    cur: list | None = None  # [start, end, replacement chars]

    def flush():
        nonlocal cur
        if cur is not None:
            ops.append(CharOp.from_span(cur[0], cur[1], "".join(cur[2])))
            cur = None

    for kind, si, pj in moves:
        if kind == "diag" and source[si] == prediction[pj]:
            flush()
            continue
        if kind == "diag":
            s0, s1, add = si, si + 1, prediction[pj]
        elif kind == "del":
            s0, s1, add = si, si + 1, None
        else:
            s0, s1, add = si, si, prediction[pj]
        if cur is None:
            cur = [s0, s1, []]
        else:
            cur[1] = max(cur[1], s1)
        if add is not None:
            cur[2].append(add)
    flush()
    return ops


def apply_ops(source: str, ops: Iterable[CharOp]) -> str:
    """Reconstruct the edited string, splicing right-to-left so indices stay valid."""
    ops = list(ops)
    validate_ops(len(source), ops)
    out = source
    for op in reversed(ops):
        out = out[: op.src_start] + op.replacement + out[op.src_end :]
    return out
