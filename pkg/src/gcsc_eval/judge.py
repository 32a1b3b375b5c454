"""Correctness judging for word-level operations.

Every operation is judged by splicing its predicted word into the reference
sentence and asking a backend whether the meaning survived: exact string
match, cosine similarity over a precomputed embedding store, a
chat-completion endpoint asked for a 0/1 answer at temperature 0, or a human
annotation file. LLM responses are cached on disk keyed by a hash of the
full prompt, so reruns are free and reproducible.
"""

from __future__ import annotations

import hashlib
import json
import logging
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Collection, Iterable, Mapping, Sequence

import numpy as np
import requests

from .corpus import Corpus
from .errors import (
    AnnotationError,
    ConfigError,
    DataError,
    ExternalServiceError,
    JudgeParseError,
    MissingEmbeddingError,
)
from .ioutil import write_text_atomic
from .word_ops import WordOp

logger = logging.getLogger(__name__)

BACKENDS = ("exact", "embedding", "llm", "human")

JUDGE_PROMPT_INSTRUCTION = (
    "比较以下两个句子的含义并判断它们是否一致，若一致输出1，若不一致输出0，只输出数字。"
)


def render_judge_prompt(sentence1: str, sentence2: str) -> str:
    """The semantic-comparison prompt sent to the LLM judge, rendered verbatim."""
    return (
        JUDGE_PROMPT_INSTRUCTION + "\n"
        "{\n"
        '"task": "semantic_comparison",\n'
        '"sentences":\n'
        "    {\n"
        f'    "sentence1": "{sentence1}",\n'
        f'    "sentence2": "{sentence2}"\n'
        "    }\n"
        "}"
    )


@dataclass(frozen=True)
class Judgment:
    """Per-operation correctness verdict."""

    sample_id: str
    op_index: int
    verdict: bool
    score: float | None = None
    backend: str = "exact"


@dataclass(frozen=True)
class UnjudgedOp:
    """An op the active backend could not decide, with the reason."""

    sample_id: str
    op_index: int
    reason: str


def reassemble(reference: str, word_op: WordOp) -> str:
    """Reference with the predicted word spliced in at the op's word span."""
    start, end = word_op.ref_span
    return reference[:start] + word_op.pred_word + reference[end:]


def judge_exact(
    reference: str, reassembled: str, sample_id: str = "", op_index: int = 0
) -> Judgment:
    """Strict baseline: correct iff the splice left the reference unchanged."""
    return Judgment(sample_id, op_index, verdict=(reassembled == reference), backend="exact")


class EmbeddingStore:
    """Sentence -> vector map with a fixed dimension, keyed by exact string."""

    def __init__(self, vectors: Mapping[str, Sequence[float]]):
        self._vectors: dict[str, np.ndarray] = {}
        self.dim: int | None = None
        for text, vec in vectors.items():
            arr = np.asarray(vec, dtype=np.float64)
            if arr.ndim != 1:
                raise DataError(f"vector for {text!r} is not one-dimensional")
            if self.dim is None:
                self.dim = int(arr.shape[0])
            elif arr.shape[0] != self.dim:
                raise DataError(
                    f"vector for {text!r} has dimension {arr.shape[0]}, expected {self.dim}"
                )
            self._vectors[text] = arr

    def __len__(self) -> int:
        return len(self._vectors)

    def __contains__(self, text: str) -> bool:
        return text in self._vectors

    def get(self, text: str) -> np.ndarray:
        try:
            return self._vectors[text]
        except KeyError:
            raise MissingEmbeddingError(text) from None


def load_embedding_store(path: str | Path) -> EmbeddingStore:
    """Load a store file: JSON-lines {text: string, vector: [real]}."""
    path = Path(path)
    vectors: dict[str, list[float]] = {}
    with path.open(encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.strip()
            if not line:
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DataError(f"{path}:{lineno}: invalid JSON: {exc}") from exc
            if not isinstance(record, dict) or "text" not in record or "vector" not in record:
                raise DataError(f"{path}:{lineno}: expected {{text, vector}}")
            if record["text"] in vectors:
                raise DataError(f"{path}:{lineno}: duplicate text {record['text']!r}")
            vectors[record["text"]] = record["vector"]
    return EmbeddingStore(vectors)


def cosine(a: np.ndarray, b: np.ndarray) -> float:
    """Cosine similarity; the single normalization site (stores are unnormalized)."""
    denom = float(np.linalg.norm(a)) * float(np.linalg.norm(b))
    if denom == 0.0:
        return 0.0
    return float(np.dot(a, b) / denom)


def judge_embedding(
    reference: str,
    reassembled: str,
    store: EmbeddingStore,
    threshold: float,
    sample_id: str = "",
    op_index: int = 0,
) -> Judgment:
    """Correct iff cosine similarity of the two sentences reaches the threshold."""
    score = cosine(store.get(reference), store.get(reassembled))
    return Judgment(
        sample_id, op_index, verdict=(score >= threshold), score=score, backend="embedding"
    )


def parse_verdict(text: str) -> bool | None:
    """Map a judge response to a verdict; None when it is neither 0 nor 1."""
    stripped = text.strip()
    if stripped == "1":
        return True
    if stripped == "0":
        return False
    return None


class LlmClient:
    """Chat-completion client with disk cache, retries, and rate limiting.

    The cache is one JSON record per file, keyed by the SHA-256 of the full
    prompt, so any cached exchange can be audited directly.
    """

    def __init__(
        self,
        endpoint: str,
        model: str = "gpt-4",
        cache_dir: str | Path | None = None,
        api_key: str | None = None,
        timeout: float = 30.0,
        max_attempts: int = 3,
        backoff_base: float = 0.5,
        requests_per_second: float | None = None,
        max_in_flight: int = 4,
    ):
        self.endpoint = endpoint
        self.model = model
        self.cache_dir = Path(cache_dir) if cache_dir else None
        self.api_key = api_key
        self.timeout = timeout
        self.max_attempts = max(1, max_attempts)
        self.backoff_base = backoff_base
        self.max_in_flight = max(1, max_in_flight)
        self._interval = 1.0 / requests_per_second if requests_per_second else 0.0
        self._throttle_lock = threading.Lock()
        self._next_slot = 0.0

    def _cache_path(self, prompt: str) -> Path | None:
        if self.cache_dir is None:
            return None
        digest = hashlib.sha256(prompt.encode("utf-8")).hexdigest()
        return self.cache_dir / f"{digest}.json"

    def _throttle(self) -> None:
        if self._interval <= 0.0:
            return
        with self._throttle_lock:
            now = time.monotonic()
            wait = self._next_slot - now
            self._next_slot = max(now, self._next_slot) + self._interval
        if wait > 0:
            time.sleep(wait)

    def _post(self, prompt: str) -> requests.Response:
        body = {
            "model": self.model,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": 0,
        }
        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        last_error: Exception | None = None
        for attempt in range(self.max_attempts):
            if attempt:
                time.sleep(min(self.backoff_base * 2 ** (attempt - 1), 8.0))
            self._throttle()
            try:
                response = requests.post(
                    self.endpoint, json=body, headers=headers, timeout=self.timeout
                )
            except requests.RequestException as exc:
                last_error = exc
                logger.warning("judge request failed (attempt %d): %s", attempt + 1, exc)
                continue
            if response.status_code >= 500 or response.status_code == 429:
                last_error = ExternalServiceError(
                    f"judge endpoint returned HTTP {response.status_code}"
                )
                logger.warning(
                    "judge endpoint HTTP %d (attempt %d)", response.status_code, attempt + 1
                )
                continue
            if response.status_code != 200:
                raise ExternalServiceError(
                    f"judge endpoint returned HTTP {response.status_code}"
                )
            return response
        raise ExternalServiceError(
            f"judge endpoint unreachable after {self.max_attempts} attempts"
        ) from last_error

    def complete(self, prompt: str) -> str:
        """Response content for a prompt, served from cache when possible."""
        cache_path = self._cache_path(prompt)
        if cache_path is not None and cache_path.exists():
            record = json.loads(cache_path.read_text(encoding="utf-8"))
            return record["response"]
        response = self._post(prompt)
        try:
            payload = response.json()
            content = payload["choices"][0]["message"]["content"]
        except (ValueError, KeyError, IndexError, TypeError) as exc:
            raise JudgeParseError(f"unexpected response shape from judge endpoint: {exc}") from exc
        if not isinstance(content, str):
            raise JudgeParseError("judge response content is not a string")
        if cache_path is not None:
            write_text_atomic(
                cache_path,
                json.dumps({"prompt": prompt, "response": content}, ensure_ascii=False) + "\n",
            )
        return content


def judge_llm(
    reference: str,
    reassembled: str,
    client: LlmClient,
    sample_id: str = "",
    op_index: int = 0,
) -> Judgment:
    """Ask the LLM judge for a 0/1 semantic-consistency verdict.

    Raises JudgeParseError when the response violates the 0/1 format; batch
    callers record such ops as unjudged instead of aborting.
    """
    prompt = render_judge_prompt(reference, reassembled)
    content = client.complete(prompt)
    verdict = parse_verdict(content)
    if verdict is None:
        raise JudgeParseError(f"judge returned {content!r}, expected '0' or '1'")
    return Judgment(sample_id, op_index, verdict=verdict, backend="llm")


@dataclass(frozen=True)
class JudgeConfig:
    """Which backend decides correctness, plus its backend-specific inputs."""

    backend: str
    threshold: float | None = None
    store: EmbeddingStore | None = None
    llm: LlmClient | None = None
    judgments_path: str | None = None

    def __post_init__(self):
        if self.backend not in BACKENDS:
            raise ConfigError(f"unknown judge backend {self.backend!r}, expected one of {BACKENDS}")
        if self.backend == "embedding":
            if self.threshold is None:
                raise ConfigError("embedding judge requires a threshold")
            if not 0.0 <= self.threshold <= 1.0:
                raise ConfigError(f"threshold {self.threshold} outside [0, 1]")
            if self.store is None:
                raise ConfigError("embedding judge requires an embedding store")
        elif self.threshold is not None:
            raise ConfigError(f"threshold is only meaningful for the embedding judge")
        if self.backend == "llm" and self.llm is None:
            raise ConfigError("llm judge requires a configured client")
        if self.backend == "human" and self.judgments_path is None:
            raise ConfigError("human judge requires a judgments file")


def judge_word_ops(
    corpus: Corpus,
    word_ops_by_sample: Mapping[str, Sequence[WordOp]],
    config: JudgeConfig,
) -> tuple[list[Judgment], list[UnjudgedOp]]:
    """Judge every op in corpus order with the configured backend.

    Returns the judgments plus the ops the backend could not decide (LLM
    parse failures, missing embeddings). Results are deterministic: ordered
    by (sample position, op_index) regardless of request completion order.
    """
    tasks: list[tuple[str, str, WordOp]] = []
    for sample in corpus:
        for op in word_ops_by_sample.get(sample.id, ()):
            tasks.append((sample.id, sample.reference, op))

    judgments: list[Judgment] = []
    unjudged: list[UnjudgedOp] = []

    if config.backend == "human":
        universe = [(sid, op.op_index) for sid, _, op in tasks]
        verdicts = load_human_judgments(config.judgments_path, expected=universe)
        for sid, _, op in tasks:
            judgments.append(
                Judgment(sid, op.op_index, verdicts[(sid, op.op_index)], backend="human")
            )
        return judgments, unjudged

    if config.backend == "llm":
        with ThreadPoolExecutor(max_workers=config.llm.max_in_flight) as pool:
            futures = [
                pool.submit(judge_llm, ref, reassemble(ref, op), config.llm, sid, op.op_index)
                for sid, ref, op in tasks
            ]
            for (sid, _, op), future in zip(tasks, futures):
                try:
                    judgments.append(future.result())
                except JudgeParseError as exc:
                    logger.warning("op (%s, %d) unjudged: %s", sid, op.op_index, exc)
                    unjudged.append(UnjudgedOp(sid, op.op_index, str(exc)))
        return judgments, unjudged

    for sid, ref, op in tasks:
        reassembled = reassemble(ref, op)
        if config.backend == "exact":
            judgments.append(judge_exact(ref, reassembled, sid, op.op_index))
        else:
            try:
                judgments.append(
                    judge_embedding(ref, reassembled, config.store, config.threshold, sid, op.op_index)
                )
            except MissingEmbeddingError as exc:
                logger.warning("op (%s, %d) unjudged: %s", sid, op.op_index, exc)
                unjudged.append(UnjudgedOp(sid, op.op_index, str(exc)))
    return judgments, unjudged


def load_human_judgments(
    path: str | Path,
    expected: Collection[tuple[str, int]] | None = None,
) -> dict[tuple[str, int], bool]:
    """Load a TSV judgment file: sample_id, op_index, verdict(0/1).

    With `expected` given, every expected op must appear exactly once;
    unknown references, duplicates, and gaps all raise AnnotationError.
    """
    path = Path(path)
    out: dict[tuple[str, int], bool] = {}
    with path.open(encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.rstrip("\n")
            if not line.strip():
                continue
            parts = line.split("\t")
            if len(parts) != 3:
                raise AnnotationError(f"{path}:{lineno}: expected 3 tab-separated columns")
            sample_id, idx_text, verdict_text = parts
            try:
                op_index = int(idx_text)
            except ValueError:
                raise AnnotationError(f"{path}:{lineno}: bad op index {idx_text!r}") from None
            if verdict_text not in ("0", "1"):
                raise AnnotationError(f"{path}:{lineno}: verdict must be 0 or 1, got {verdict_text!r}")
            key = (sample_id, op_index)
            if key in out:
                raise AnnotationError(f"{path}:{lineno}: duplicate judgment for {key}")
            out[key] = verdict_text == "1"
    if expected is not None:
        expected_set = set(expected)
        unknown = sorted(set(out) - expected_set)
        if unknown:
            raise AnnotationError(f"{path}: judgments reference unknown ops: {unknown[:20]}")
        missing = sorted(expected_set - set(out))
        if missing:
            raise AnnotationError(
                f"{path}: incomplete annotation, {len(missing)} ops never judged: {missing}"
            )
    return out


def save_judgments(judgments: Iterable[Judgment], path: str | Path) -> None:
    """Write judgments as the 3-column TSV consumed by load_human_judgments."""
    lines = [
        f"{j.sample_id}\t{j.op_index}\t{1 if j.verdict else 0}"
        for j in judgments
    ]
    write_text_atomic(path, "\n".join(lines) + ("\n" if lines else ""))


_TEMPLATE_HEADER = "#### "


def emit_annotation_templates(
    corpus: Corpus, word_ops_by_sample: Mapping[str, Sequence[WordOp]], path: str | Path
) -> int:
    """Write one annotation block per sample that has operations.

    Blocks are ordered by sample id. Annotators fill the two number lines
    with comma-separated operation numbers; the filled file is read back by
    parse_annotation_templates. Returns the number of blocks written.
    """
    blocks: list[str] = []
    for sample in sorted(corpus, key=lambda s: s.id):
        ops = word_ops_by_sample.get(sample.id, ())
        if not ops:
            continue
        lines = [
            f"{_TEMPLATE_HEADER}{sample.id}",
            f"原始：{sample.source}",
            f"参考：{sample.reference}",
            "模型修正操作：",
        ]
        for op in ops:
            lines.append(f"{op.op_index + 1}: {op.src_word} -> {op.pred_word}")
        lines.append("正确的修改编号：")
        lines.append("错误的修改编号：")
        blocks.append("\n".join(lines))
    write_text_atomic(path, "\n\n".join(blocks) + ("\n" if blocks else ""))
    return len(blocks)


def _parse_number_list(text: str, context: str) -> list[int]:
    numbers = []
    for token in text.replace("，", ",").replace(" ", ",").split(","):
        token = token.strip()
        if not token:
            continue
        if not token.isdigit():
            raise AnnotationError(f"{context}: {token!r} is not an operation number")
        numbers.append(int(token))
    return numbers


def parse_annotation_templates(
    path: str | Path,
    corpus: Corpus,
    word_ops_by_sample: Mapping[str, Sequence[WordOp]],
) -> dict[tuple[str, int], bool]:
    """Read a filled annotation template back into per-op verdicts.

    Every op must be numbered in exactly one of the correct/incorrect lines
    of its block; gaps and double annotations raise AnnotationError.
    """
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    out: dict[tuple[str, int], bool] = {}
    seen_ids: set[str] = set()
    blocks = [b for b in text.split(_TEMPLATE_HEADER) if b.strip()]
    for block in blocks:
        lines = block.splitlines()
        sample_id = lines[0].strip()
        if sample_id in seen_ids:
            raise AnnotationError(f"{path}: duplicate block for sample {sample_id!r}")
        seen_ids.add(sample_id)
        ops = word_ops_by_sample.get(sample_id)
        if ops is None:
            raise AnnotationError(f"{path}: block for unknown sample {sample_id!r}")
        correct: list[int] = []
        incorrect: list[int] = []
        for line in lines[1:]:
            if line.startswith("正确的修改编号："):
                correct = _parse_number_list(line.split("：", 1)[1], f"sample {sample_id}")
            elif line.startswith("错误的修改编号："):
                incorrect = _parse_number_list(line.split("：", 1)[1], f"sample {sample_id}")
        both = set(correct) & set(incorrect)
        if both:
            raise AnnotationError(
                f"{path}: sample {sample_id!r}: ops {sorted(both)} marked both correct and incorrect"
            )
        valid = {op.op_index + 1 for op in ops}
        for number in set(correct) | set(incorrect):
            if number not in valid:
                raise AnnotationError(
                    f"{path}: sample {sample_id!r}: no operation numbered {number}"
                )
        for op in ops:
            number = op.op_index + 1
            if number in correct:
                out[(sample_id, op.op_index)] = True
            elif number in incorrect:
                out[(sample_id, op.op_index)] = False
    expected = [
        (sample.id, op.op_index)
        for sample in corpus
        for op in word_ops_by_sample.get(sample.id, ())
    ]
    missing = sorted(set(expected) - set(out))
    if missing:
        raise AnnotationError(
            f"{path}: incomplete annotation, {len(missing)} ops never judged: {missing}"
        )
    return out
