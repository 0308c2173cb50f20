"""Fixed-time observer-based sliding-mode control of a single-link flexible manipulator."""

__version__ = "0.1.0"
