"""Service bus, video-source registry and differentiated-services scheduler."""

__version__ = "0.1.0"
