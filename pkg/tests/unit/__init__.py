"""Unit tests for Retino-DRRM."""
