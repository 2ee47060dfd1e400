"""Capacity of backscatter links with dependent forward/backward fading."""

__version__ = "0.1.0"
