"""Unit tests for cde."""
