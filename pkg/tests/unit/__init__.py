"""
Unit Tests Package

Contains unit tests for individual components.
Tests are seeded and run at small scale.

Markers:
    @pytest.mark.unit - Unit test marker
"""
