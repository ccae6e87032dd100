"""
Integration Tests Package

Contains acceptance-scale experiment runs.

Markers:
    @pytest.mark.integration - Integration test marker
    @pytest.mark.slow - Tests that take longer to run
"""
