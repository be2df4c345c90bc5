"""Integration tests for cde."""
