"""
Tests Package

This package contains all tests for brwre-lab:
- unit/: Fast seeded tests for individual modules and experiments
- integration/: Acceptance-scale runs
- fixtures/: Model description builders shared by the tests
"""
