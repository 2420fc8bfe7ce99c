"""Configuration module for the CVD store."""

from .settings import settings, Settings

__all__ = ["settings", "Settings"]
