"""Classifier training on incomplete features through simultaneous sparse coding."""

__version__ = "0.1.0"
