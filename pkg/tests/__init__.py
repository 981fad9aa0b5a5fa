"""Tests for the warm-freeze toolkit."""
