"""Hyperbolic structures, integer cohomology classes, and geodesic
ray-cast weight images on ideally triangulated cusped 3-manifolds."""

__version__ = "0.1.0"
