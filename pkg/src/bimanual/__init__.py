"""Planar bimanual manipulation: simulator, learned stabilizing/acting stack, harness."""

__version__ = "0.1.0"
