"""Heading estimation by Hough voting over great circles on the unit sphere."""

from ._core import (
    FlightConfig,
    angular_error_deg,
    bin_radius,
    estimate,
    fibonacci_lattice,
    foe_hough,
    maa,
    pn,
    pn_star,
    synthetic_scene,
    two_point,
)

__all__ = [
    "FlightConfig",
    "angular_error_deg",
    "bin_radius",
    "estimate",
    "fibonacci_lattice",
    "foe_hough",
    "maa",
    "pn",
    "pn_star",
    "synthetic_scene",
    "two_point",
]
