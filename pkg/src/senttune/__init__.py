"""Desk-scale sentiment-model customization for niche comment domains.

The package covers the whole loop: ingest raw social comments, normalize
and tokenize them, train a small transformer classifier from scratch,
adapt it to a new domain by unfreezing only the top layers, label data
with a pluggable assistant backend, and report metrics and n-gram
insights.
"""

__version__ = "0.1.0"

from .errors import (
    BackendError,
    CheckpointError,
    ConfigError,
    ContaminationError,
    ParseError,
    QuotaError,
    SentTuneError,
    TapeError,
    ValidationError,
)
from .labeling import SentimentLabel

__all__ = [
    "BackendError",
    "SentimentLabel",
    "CheckpointError",
    "ConfigError",
    "ContaminationError",
    "ParseError",
    "QuotaError",
    "SentTuneError",
    "TapeError",
    "ValidationError",
    "__version__",
]
