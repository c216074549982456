"""
Tests for Artiphon.

This package contains unit, platform, feature and integration tests.
"""
