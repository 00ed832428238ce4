"""Deterministic motion-cueing simulator for a compact 3-DOF driving rig."""

from cuesim.errors import InvariantViolation, ValidationError

__version__ = "0.1.0"

__all__ = ["InvariantViolation", "ValidationError", "__version__"]
