"""Test suite for relaxfree."""
