"""stml: learned transformation strategies for a rule-based C rewriter."""

__version__ = "0.1.0"
