"""Typed errors shared across the pipeline."""

from __future__ import annotations


class D3Error(Exception):
    """Base class for all errors raised by this package."""


class TooFewFramesError(D3Error):
    """A clip is too short for the requested feature chain.

    Carries the minimum frame count that would have been required.
    """

    def __init__(self, message: str, *, required: int, actual: int):
        super().__init__(message)
        self.required = required
        self.actual = actual


class ShapeError(D3Error):
    """Array dimensions do not match the operation's contract."""


class DegenerateVectorError(D3Error):
    """A zero-norm embedding vector makes cosine similarity undefined."""

    def __init__(self, message: str, *, frame_index: int):
        super().__init__(message)
        self.frame_index = frame_index


class UndefinedMetricError(D3Error):
    """A ranking metric is undefined for the given label multiset."""


class DecodeError(D3Error):
    """A video file or frame image could not be decoded."""


class EmptySourceError(D3Error):
    """The source contains no frames."""


class FrameTooSmallError(D3Error):
    """A frame is too small to survive cropping."""


class ModelError(D3Error):
    """An external encoder model is missing or has an incompatible interface."""


class EncoderNumericError(D3Error):
    """An encoder produced non-finite feature values."""


class ConfigError(D3Error):
    """Invalid run or component configuration."""


class ManifestError(ConfigError):
    """A manifest file failed validation; message names the offending line."""


class EntryError(D3Error):
    """A manifest entry failed during detection; names the entry id."""

    def __init__(self, entry_id: str, cause: Exception):
        super().__init__(f"entry '{entry_id}': {cause}")
        self.entry_id = entry_id
