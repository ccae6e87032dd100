"""
Test Fixtures Package

Contains shared model descriptions for the canonical offspring laws.
"""
