"""Figure scripts for plateaulab artifacts: rendering only, no simulation."""

__version__ = "0.1.0"

from .schema import SchemaError, read_milestones, read_sweep, read_trajectory

__all__ = ["SchemaError", "read_milestones", "read_sweep", "read_trajectory"]
