"""Domain models for retinotopic map registration."""
