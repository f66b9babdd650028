"""Basis Expanding SVM."""
__version__ = "0.1.0"
