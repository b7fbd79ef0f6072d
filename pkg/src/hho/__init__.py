"""Homological lower bounds for pattern rewriting systems over simply typed λ-terms."""

__version__ = "0.1.0"
