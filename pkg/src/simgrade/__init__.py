"""Similarity-aware assignment and ordering of code submissions for human graders."""

__version__ = "0.1.0"
