"""Tests for the CVD store."""
