"""Command-line interface of the registration toolkit."""

