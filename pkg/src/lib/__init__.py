"""Shared helpers: configuration, logging, errors, hashing and text I/O."""
