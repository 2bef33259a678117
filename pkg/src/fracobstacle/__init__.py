"""Numerical laboratory for the parabolic obstacle problem with a fractional Laplacian."""

from .grid import (
    FracParams,
    ObstacleSpec,
    ParabolicCylinder,
    SpaceGrid,
    SpaceTimeField,
    TimeGrid,
    cylinder_indices,
    sup_on_cylinder,
)

__version__ = "0.1.0"
