"""Integration tests for registration and the pipeline."""
