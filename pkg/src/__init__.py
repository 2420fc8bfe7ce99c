"""CVD store - dataset version control with partitioned record storage."""

__version__ = "0.1.0"
