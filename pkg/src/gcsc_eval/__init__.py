"""Evaluation toolkit for Chinese spelling correction outputs.

Extracts word-level edit operations from (source, reference, prediction)
triples, judges each operation's semantic correctness with a pluggable
backend, and aggregates scores; also ships the traditional character-level
baseline, operation statistics, judge correlation, and threshold sweeps.
"""

__version__ = "0.1.0"

from .char_align import CharOp, OpKind, apply_ops, extract_char_ops
from .corpus import Corpus, EvalSample, load_corpus, save_corpus
from .errors import (
    AnnotationError,
    ConfigError,
    CorpusError,
    DataError,
    ExternalServiceError,
    GcscEvalError,
    JudgeParseError,
    MissingCharacterError,
    MissingEmbeddingError,
    SegmentationError,
)
from .judge import (
    EmbeddingStore,
    JudgeConfig,
    Judgment,
    LlmClient,
    UnjudgedOp,
    cosine,
    judge_embedding,
    judge_exact,
    judge_llm,
    judge_word_ops,
    load_embedding_store,
    load_human_judgments,
    reassemble,
    render_judge_prompt,
)
from .metrics import (
    CorrelationReport,
    MetricReport,
    OpStatsReport,
    compute_csc,
    compute_gcsc,
    error_words,
    jaccard,
    op_statistics,
    threshold_sweep,
)
from .phonics import PinyinTable, chars_phonetically_similar, load_pinyin_table, subst_is_phonetic
from .runner import SampleAnalysis, analyze_corpus, analyze_sample
from .segment import (
    Lexicon,
    Segmentation,
    load_lexicon,
    load_segmentations,
    project_to_source,
    segment_reference,
)
from .word_ops import WordOp, derive_pred_boundaries, extract_word_ops, merge_boundaries

__all__ = [
    "__version__",
    "AnnotationError",
    "CharOp",
    "ConfigError",
    "CorrelationReport",
    "Corpus",
    "CorpusError",
    "DataError",
    "EmbeddingStore",
    "EvalSample",
    "ExternalServiceError",
    "GcscEvalError",
    "JudgeConfig",
    "JudgeParseError",
    "Judgment",
    "Lexicon",
    "LlmClient",
    "MetricReport",
    "MissingCharacterError",
    "MissingEmbeddingError",
    "OpKind",
    "OpStatsReport",
    "PinyinTable",
    "SampleAnalysis",
    "Segmentation",
    "SegmentationError",
    "UnjudgedOp",
    "WordOp",
    "analyze_corpus",
    "analyze_sample",
    "apply_ops",
    "chars_phonetically_similar",
    "compute_csc",
    "compute_gcsc",
    "cosine",
    "derive_pred_boundaries",
    "error_words",
    "extract_char_ops",
    "extract_word_ops",
    "jaccard",
    "judge_embedding",
    "judge_exact",
    "judge_llm",
    "judge_word_ops",
    "load_corpus",
    "load_embedding_store",
    "load_human_judgments",
    "load_lexicon",
    "load_pinyin_table",
    "load_segmentations",
    "merge_boundaries",
    "op_statistics",
    "project_to_source",
    "reassemble",
    "render_judge_prompt",
    "save_corpus",
    "segment_reference",
    "subst_is_phonetic",
    "threshold_sweep",
]
