"""Wrist-driven robot teleoperation: gesture recognition, pose-to-velocity
mapping, a differential-drive simulator, and the wire protocol tying them
together."""

__all__ = ["__version__"]
__version__ = "0.1.0"
