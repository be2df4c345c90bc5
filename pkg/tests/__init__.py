"""Test suite for cde."""
