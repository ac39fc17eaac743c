"""Blinded real-vs-fake perception study: persistent store plus HTTP service."""

from .store import (  # noqa: F401
    ConflictError,
    NotFoundError,
    PreconditionError,
    StudyError,
    StudyStore,
)
