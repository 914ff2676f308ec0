"""Web robot detection from access logs with topic-coherence session features."""

__version__ = "0.1.0"
