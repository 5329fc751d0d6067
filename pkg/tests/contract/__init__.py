"""Contract tests for the drrm CLI commands."""
