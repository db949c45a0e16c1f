"""Exception hierarchy shared by the pipeline and the CLI"""
from typing import Optional


class ReviewSummError(Exception):
    """Base class for every error raised on purpose by this package"""


class InputError(ReviewSummError, ValueError):
    """Bad user input: corpus lines, taxonomy files, config values, CLI usage"""


class CorpusError(InputError):
    """A corpus line could not be turned into a Review"""

    def __init__(self, line_no: int, message: str):
        self.line_no = line_no
        self.message = message
        super().__init__(f"line {line_no}: {message}")


class TemplateError(ReviewSummError, ValueError):
    """A prompt template was rendered with missing or excess variables"""


class BudgetError(ReviewSummError):
    """A token budget (backend context or summariser context length) was exceeded"""


class BackendError(ReviewSummError):
    """The generation backend failed"""


class TransportError(BackendError):
    """Network or service failure; eligible for one retry"""


class ContentError(BackendError):
    """The backend answered but the answer is unusable; never retried"""


class EmbeddingError(ReviewSummError):
    """The embedding provider failed or returned malformed vectors"""

    def __init__(self, message: str, texts: Optional[list] = None):
        self.texts = texts or []
        super().__init__(message)
