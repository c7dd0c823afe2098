"""Compile-time feature extraction and ML-based fuzzing target selection."""

__version__ = "0.1.0"
