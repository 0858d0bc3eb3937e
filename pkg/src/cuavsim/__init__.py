"""Cognitive-UAV joint spectrum sensing and access with independent learners."""

__version__ = "0.1.0"
