"""Polyhedral approximation of Nash equilibrium sets for convex games."""

from .game import (
    ConvexityWarning,
    Game,
    GameError,
    IndependentConvex,
    PlayerConstraint,
    Polynomial,
    SharedPolytope,
    SliceIndex,
    estimate_lipschitz,
)
from .geometry import (
    EmptyPolytopeError,
    FaceDescriptor,
    GeometryError,
    Halfspace,
    Polytope,
    enumerate_faces,
    intersect,
    l1_distance_to_polytope,
    minkowski_l1_ball,
    to_hrep,
    to_vrep,
)

__version__ = "0.1.0"

__all__ = [
    "ConvexityWarning",
    "EmptyPolytopeError",
    "FaceDescriptor",
    "Game",
    "GameError",
    "GeometryError",
    "Halfspace",
    "IndependentConvex",
    "PlayerConstraint",
    "Polynomial",
    "Polytope",
    "SharedPolytope",
    "SliceIndex",
    "enumerate_faces",
    "estimate_lipschitz",
    "intersect",
    "l1_distance_to_polytope",
    "minkowski_l1_ball",
    "to_hrep",
    "to_vrep",
]
