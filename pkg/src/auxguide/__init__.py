"""Joint human/camera trajectory generation with auxiliary framing guidance."""

__version__ = "0.1.0"
