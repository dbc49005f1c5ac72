"""Half-translation surfaces: polygon gluings, saddle connections,
cylinder decompositions and affine automorphisms, all in exact arithmetic."""

from .surface import (
    HalfTranslationSurface, InvalidSurfaceError, AffineAuto,
    build_double_polygon, unit_square_torus, surface_invariants,
    identity_automorphism, rotation_automorphism,
)
from .tracing import (
    Direction, SaddleConnection, AnnularDecomposition, CylinderCore,
    NotPeriodicDirectionError, enumerate_saddle_connections,
    cylinder_decomposition, is_flat_geodesic, has_bad_singularity,
    contains_spine_component, cores_intersect, apply_affine,
)

__all__ = [
    "HalfTranslationSurface", "InvalidSurfaceError", "AffineAuto",
    "build_double_polygon", "unit_square_torus", "surface_invariants",
    "identity_automorphism", "rotation_automorphism",
    "Direction", "SaddleConnection", "AnnularDecomposition", "CylinderCore",
    "NotPeriodicDirectionError", "enumerate_saddle_connections",
    "cylinder_decomposition", "is_flat_geodesic", "has_bad_singularity",
    "contains_spine_component", "cores_intersect", "apply_affine",
]
