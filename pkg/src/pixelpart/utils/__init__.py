"""Structural validation helpers."""

from .validation import ensure_valid_model_backend, validate_model_backend

__all__ = ["validate_model_backend", "ensure_valid_model_backend"]
