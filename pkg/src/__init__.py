"""Retino-DRRM: diffeomorphic registration of retinotopic maps."""

__version__ = "0.1.0"
