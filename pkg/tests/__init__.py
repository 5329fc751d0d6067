"""Retino-DRRM test suite."""
