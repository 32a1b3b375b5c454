"""Exception hierarchy shared across the toolkit.

The CLI maps these onto exit codes: ConfigError -> 1, DataError -> 2,
ExternalServiceError -> 3.
"""


class GcscEvalError(Exception):
    """Base class for all toolkit errors."""


class ConfigError(GcscEvalError):
    """Bad or inconsistent run configuration."""


class DataError(GcscEvalError):
    """Malformed or inconsistent input data."""


class ExternalServiceError(GcscEvalError):
    """A remote dependency (the LLM judge endpoint) failed."""


class CorpusError(DataError):
    """Corpus file cannot be parsed or violates corpus invariants."""


class SegmentationError(DataError):
    """Segmentation or lexicon input is invalid."""


class MissingCharacterError(DataError):
    """A character has no entry in the pinyin table."""

    def __init__(self, char: str):
        super().__init__(f"character {char!r} not present in pinyin table")
        self.char = char


class MissingEmbeddingError(DataError):
    """A sentence needed by the embedding judge is absent from the store."""

    def __init__(self, sentence: str):
        super().__init__(f"no embedding stored for sentence {sentence!r}")
        self.sentence = sentence


class AnnotationError(DataError):
    """A human judgment file is malformed, duplicated, or incomplete."""


class JudgeParseError(GcscEvalError):
    """The LLM judge replied with something that is neither 0 nor 1."""
